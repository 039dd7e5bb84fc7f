"""Action selection and the three training objectives.

* advantage policy gradient   J1 = (R - R_hat) * sum_{t in I} -log p_t
* baseline regression         J2 = (R - R_hat)**2
* entropy regulariser         J3 = lam * sum_t p_t log p_t

J1 treats the baseline as a constant and J2 only reaches the value network.
Gradients are returned with respect to the policy logits, which is all the
backward pass of :class:`~epirl.agent.networks.PolicyNetwork` needs.
"""

import numpy as np

from .._validation import check_random_state
from ..exceptions import NumericFailureError, PreconditionError


def action_set_size(p, n_max):
    """Number of entries strictly above 1/n_max, clamped to [2, n_max]."""
    count = int(np.count_nonzero(p > 1.0 / n_max))
    return min(max(count, 2), n_max)


def select_action_set(p, n_max, mode="sample", rng=None):
    """Choose the interaction set for probability vector ``p``.

    In ``sample`` mode the n indices are drawn one at a time from ``p``
    renormalised over the indices not yet taken; ``greedy`` takes the n most
    probable (lower index first on ties). The result is sorted.
    """
    if n_max < 2:
        raise PreconditionError(f"n_max must be >= 2, got {n_max}")
    p = np.asarray(p, dtype=float)
    n = min(action_set_size(p, n_max), len(p))
    if mode == "greedy":
        order = np.lexsort((np.arange(len(p)), -p))
        return tuple(sorted(int(i) for i in order[:n]))
    if mode != "sample":
        raise PreconditionError(f"unknown selection mode {mode!r}")

    return tuple(sorted(draw_without_replacement(p, n, rng)))


def draw_without_replacement(p, n, rng=None):
    """Sequential categorical draws from ``p``, renormalising after each pick.

    Returns indices in draw order.
    """
    rng = check_random_state(rng)
    weights = np.array(p, dtype=float)
    chosen = []
    for _ in range(n):
        cdf = np.cumsum(weights)
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        # u * total can round up to total; fall back to the last live slot
        if i >= len(weights):
            i = int(np.flatnonzero(weights)[-1])
        chosen.append(i)
        weights[i] = 0.0
    return chosen


def loss_policy(reward_total, baseline, p, chosen):
    chosen_p = np.asarray(p)[list(chosen)]
    if np.any(chosen_p <= 0):
        raise NumericFailureError(f"chosen action with probability {chosen_p.min()}")
    return (reward_total - baseline) * float(-np.log(chosen_p).sum())


def loss_value(reward_total, baseline):
    return (reward_total - baseline) ** 2


def loss_entropy(p, lam):
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return lam * float(np.sum(nz * np.log(nz)))


def grad_policy_logits(reward_total, baseline, p, chosen):
    """d J1 / d logits with the baseline held constant."""
    counts = np.zeros_like(p)
    np.add.at(counts, list(chosen), 1.0)
    return (reward_total - baseline) * (len(chosen) * p - counts)


def grad_entropy_logits(p, lam):
    """d J3 / d logits = lam * p * (log p - sum p log p)."""
    logp = np.log(np.where(p > 0, p, 1.0))
    return lam * p * (logp - np.dot(p, logp))


def grad_value_baseline(reward_total, baseline):
    """d J2 / d R_hat."""
    return -2.0 * (reward_total - baseline)
