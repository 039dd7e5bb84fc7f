"""REINFORCE training loop for the one-step SNP-selection MDP.

One iteration samples a class-balanced mini-batch, encodes it into the
state, draws an interaction set from the policy, scores it with the MDR
reward on the full dataset, and takes one Adam step on J1 + J2 + J3.
"""

import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..data import encode_genotypes, read_key_value_config, sample_minibatch
from ..exceptions import NumericFailureError, PreconditionError
from ..report import TrialReport
from ..reward import reward
from .networks import PolicyNetwork, ValueNetwork
from .optim import Adam
from .policy import (
    grad_entropy_logits,
    grad_policy_logits,
    grad_value_baseline,
    loss_entropy,
    loss_policy,
    loss_value,
    select_action_set,
)


@dataclass
class TrainConfig:
    batch_size: int = 32
    n_max: int = 4
    entropy_weight: float = 0.01
    learning_rate: float = 1e-3
    max_iterations: int = 5000
    seed: int = 0
    encoder: str = "identity"
    encoding: str = "raw_codes"
    hidden_size: int = 64
    conv_width: int = 5
    conv_channels: int = 8
    init_scale: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    resample_batch: bool = True
    top_k: int = 10

    def __post_init__(self):
        if self.batch_size < 2 or self.batch_size % 2:
            raise PreconditionError(f"batch_size must be even and >= 2, got {self.batch_size}")
        if self.n_max < 2:
            raise PreconditionError(f"n_max must be >= 2, got {self.n_max}")
        if self.entropy_weight < 0:
            raise PreconditionError("entropy_weight must be >= 0")
        if self.learning_rate <= 0:
            raise PreconditionError("learning_rate must be > 0")
        if self.max_iterations < 1:
            raise PreconditionError("max_iterations must be >= 1")
        if self.encoder not in ("identity", "conv"):
            raise PreconditionError(f"unknown encoder {self.encoder!r}")
        if self.encoding not in ("raw_codes", "one_hot"):
            raise PreconditionError(f"unknown encoding {self.encoding!r}")

    @classmethod
    def from_file(cls, path, **overrides):
        """Build a config from a ``key = value`` file; keys are the field names."""
        raw = read_key_value_config(path)
        types = {f.name: f.type for f in fields(cls)}
        unknown = set(raw) - set(types)
        if unknown:
            raise PreconditionError(f"unknown train config keys: {sorted(unknown)}")
        values = {}
        for key, text in raw.items():
            kind = types[key]
            if kind is bool:
                values[key] = text.strip().lower() in ("1", "true", "yes", "on")
            elif kind is int:
                values[key] = int(text)
            elif kind is float:
                values[key] = float(text)
            else:
                values[key] = text.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self):
        return asdict(self)


@dataclass
class StepRecord:
    iteration: int
    action_set: tuple
    reward: object  # RewardValue
    baseline: float
    j1: float
    j2: float
    j3: float

    def to_dict(self):
        return {
            "iteration": self.iteration,
            "action_set": list(self.action_set),
            **self.reward._asdict(),
            "baseline": self.baseline,
            "j1": self.j1,
            "j2": self.j2,
            "j3": self.j3,
        }


class Agent:
    """Policy network, value network and their shared Adam state."""

    def __init__(self, policy, value, cfg):
        self.policy = policy
        self.value = value
        self.cfg = cfg
        self.optimizer = Adam(
            self.named_params(), lr=cfg.learning_rate,
            beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.epsilon,
        )

    @classmethod
    def build(cls, n_snps, cfg, rng):
        one_hot = cfg.encoding == "one_hot"
        policy = PolicyNetwork(
            n_inputs=3 * n_snps if one_hot else n_snps,
            n_actions=n_snps,
            hidden=cfg.hidden_size,
            encoder=cfg.encoder,
            in_channels=3 if one_hot else 1,
            conv_width=cfg.conv_width,
            conv_channels=cfg.conv_channels,
            rng=rng,
            init_scale=cfg.init_scale,
        )
        value = ValueNetwork(
            policy.encoder.out_dim, cfg.hidden_size, rng=rng, init_scale=cfg.init_scale
        )
        return cls(policy, value, cfg)

    def named_params(self):
        out = {f"policy.{k}": v for k, v in self.policy.params.items()}
        out.update({f"value.{k}": v for k, v in self.value.params.items()})
        return out

    def snapshot(self):
        return {k: v.copy() for k, v in self.named_params().items()}

    def encode(self, batch):
        return encode_genotypes(batch, self.cfg.encoding)


def _update(agent, p, state, cache, chosen, reward_total):
    """Losses and one optimiser step; the value net sees ``state`` as data."""
    lam = agent.cfg.entropy_weight
    baseline, vcache = agent.value.forward(state)
    j1 = loss_policy(reward_total, baseline, p, chosen)
    j2 = loss_value(reward_total, baseline)
    j3 = loss_entropy(p, lam)

    dlogits = grad_policy_logits(reward_total, baseline, p, chosen)
    dlogits += grad_entropy_logits(p, lam)
    pgrads, _ = agent.policy.backward(cache, dlogits)
    vgrads = agent.value.backward(vcache, grad_value_baseline(reward_total, baseline))

    grads = {f"policy.{k}": g for k, g in pgrads.items()}
    grads.update({f"value.{k}": g for k, g in vgrads.items()})
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericFailureError(f"non-finite gradient for {name}", agent.snapshot())
    agent.optimizer.step(grads)
    return baseline, j1, j2, j3


def train_step(agent, data, rng, batch=None, iteration=0):
    """Run one REINFORCE iteration; ``batch`` pins the mini-batch if given."""
    cfg = agent.cfg
    try:
        if batch is None:
            batch = sample_minibatch(data, cfg.batch_size, rng)
        x = agent.encode(batch)
        p, state, cache = agent.policy.forward(x)
        chosen = select_action_set(p, cfg.n_max, "sample", rng)
        rv = reward(data, chosen)
        baseline, j1, j2, j3 = _update(agent, p, state, cache, chosen, rv.total)
    except NumericFailureError as exc:
        raise NumericFailureError(
            f"iteration {iteration}: {exc}", exc.snapshot, iteration
        ) from exc
    return StepRecord(iteration, chosen, rv, baseline, j1, j2, j3)


def apply_update(agent, x, chosen, reward_total):
    """Replay a fixed transition (encoded batch, chosen set, reward) for one step."""
    p, state, cache = agent.policy.forward(x)
    return _update(agent, p, state, cache, tuple(chosen), reward_total)


def _rank_sets(seen, top_k):
    ranked = sorted(seen.items(), key=lambda kv: (-kv[1].total, kv[0]))
    return ranked[:top_k]


def train(data, cfg, ground_truth=None, agent=None, on_step=None):
    """Train one agent and return its :class:`~epirl.report.TrialReport`.

    With ``ground_truth`` the run stops at the first iteration whose sampled
    set equals it. ``on_step`` receives every :class:`StepRecord`.
    """
    rng = np.random.default_rng(cfg.seed)
    if agent is None:
        agent = Agent.build(data.n_snps, cfg, rng)
    truth = frozenset(ground_truth) if ground_truth is not None else None
    batch = None if cfg.resample_batch else sample_minibatch(data, cfg.batch_size, rng)

    seen = {}
    trajectory = []
    hit = None
    start = time.perf_counter()
    for it in range(1, cfg.max_iterations + 1):
        rec = train_step(agent, data, rng, batch=batch, iteration=it)
        trajectory.append(rec.reward.total)
        seen.setdefault(rec.action_set, rec.reward)
        if on_step is not None:
            on_step(rec)
        if truth is not None and frozenset(rec.action_set) == truth:
            hit = it
            break
    elapsed = time.perf_counter() - start

    report = TrialReport(
        seed=cfg.seed,
        success=hit is not None,
        iterations_to_hit=hit,
        iterations_run=len(trajectory),
        elapsed_seconds=elapsed,
        best_sets=_rank_sets(seen, cfg.top_k),
        reward_trajectory=trajectory,
        max_iterations=cfg.max_iterations,
        agent=agent,
    )
    return report


# -- gradient verification --------------------------------------------------


def policy_objective(policy, x, chosen, advantage, lam):
    """J1 + J3 as a function of the policy alone, with the advantage frozen."""
    p, _, _ = policy.forward(x)
    return advantage * float(-np.log(p[list(chosen)]).sum()) + loss_entropy(p, lam)


def analytic_gradients(policy, value, x, chosen, reward_total, lam):
    """Gradients of J1 + J2 + J3 for every parameter, plus d/d input."""
    p, state, cache = policy.forward(x)
    baseline, vcache = value.forward(state)
    dlogits = grad_policy_logits(reward_total, baseline, p, chosen)
    dlogits += grad_entropy_logits(p, lam)
    pgrads, dx = policy.backward(cache, dlogits)
    vgrads = value.backward(vcache, grad_value_baseline(reward_total, baseline))
    return pgrads, vgrads, dx


def _central_difference(f, arr, step):
    grad = np.zeros_like(arr)
    for i in np.ndindex(arr.shape):
        orig = arr[i]
        arr[i] = orig + step
        hi = f()
        arr[i] = orig - step
        lo = f()
        arr[i] = orig
        grad[i] = (hi - lo) / (2 * step)
    return grad


def relative_error(a, b, floor=1e-8):
    """Normwise relative difference ``|a - b| / max(|a| + |b|, floor)``."""
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), floor))


def gradient_check(policy, value, x, chosen, reward_total, lam=0.01, step=1e-5,
                   return_details=False):
    """Compare analytic gradients of J1 + J2 + J3 with central differences.

    Every policy and value parameter is perturbed in turn. The baseline used
    in J1's advantage and the state fed to the value network are frozen at
    their unperturbed values, matching the stop-gradient used in training.
    Returns the largest per-array relative error.
    """
    chosen = tuple(chosen)
    pgrads, vgrads, _ = analytic_gradients(policy, value, x, chosen, reward_total, lam)
    _, state0, _ = policy.forward(x)
    advantage = reward_total - value.forward(state0)[0]

    errors = {}
    for name, arr in policy.params.items():
        numeric = _central_difference(
            lambda: policy_objective(policy, x, chosen, advantage, lam), arr, step
        )
        errors[f"policy.{name}"] = relative_error(pgrads[name], numeric)
    for name, arr in value.params.items():
        numeric = _central_difference(
            lambda: loss_value(reward_total, value.forward(state0)[0]), arr, step
        )
        errors[f"value.{name}"] = relative_error(vgrads[name], numeric)
    worst = max(errors.values())
    return (worst, errors) if return_details else worst
