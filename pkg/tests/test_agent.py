import math

import numpy as np
import pytest

import oracles
from conftest import PLANTED
from epirl.agent import (
    Adam,
    Agent,
    PolicyNetwork,
    TrainConfig,
    ValueNetwork,
    apply_update,
    gradient_check,
    loss_entropy,
    loss_policy,
    loss_value,
    select_action_set,
    train,
    train_step,
)
from epirl.agent.policy import (
    draw_without_replacement,
    grad_entropy_logits,
    grad_policy_logits,
    grad_value_baseline,
)
from epirl.agent.training import (
    _central_difference,
    analytic_gradients,
    policy_objective,
    relative_error,
)
from epirl.data import encode_genotypes, sample_minibatch
from epirl.exceptions import NumericFailureError, PreconditionError


def small_nets(seed, l=10, encoder="identity", in_channels=1, hidden=8, scale=0.5):
    rng = np.random.default_rng(seed)
    policy = PolicyNetwork(in_channels * l, l, hidden, encoder, in_channels=in_channels,
                           conv_width=3, conv_channels=4, rng=rng, init_scale=scale)
    value = ValueNetwork(policy.encoder.out_dim, hidden, rng=rng, init_scale=scale)
    return policy, value


def random_batch(seed, K=4, l=10, scheme="raw_codes"):
    rows = np.random.default_rng(seed).integers(0, 3, size=(K, l))
    return encode_genotypes(rows, scheme)


class TestForward:
    def test_zero_weights_uniform(self):
        policy, _ = small_nets(0)
        for arr in policy.params.values():
            arr[...] = 0.0
        p, _, _ = policy.forward(random_batch(0))
        assert np.all(p == 0.1)

    @pytest.mark.parametrize("encoder, scheme, channels",
                             [("identity", "raw_codes", 1), ("identity", "one_hot", 3),
                              ("conv", "raw_codes", 1), ("conv", "one_hot", 3)])
    def test_simplex(self, encoder, scheme, channels):
        for seed in range(20):
            policy, _ = small_nets(seed, encoder=encoder, in_channels=channels, scale=3.0)
            p, _, _ = policy.forward(random_batch(seed, K=6, scheme=scheme))
            assert p.shape == (10,)
            assert np.all(p > 0)
            assert abs(p.sum() - 1.0) <= 1e-9

    def test_state_is_mean_pooled(self):
        policy, _ = small_nets(1)
        x = random_batch(1, K=8)
        _, state, _ = policy.forward(x)
        np.testing.assert_allclose(state, x.mean(axis=0))

    @pytest.mark.parametrize("encoder", ["identity", "conv"])
    def test_input_gradient_matches_finite_differences(self, encoder):
        policy, _ = small_nets(2, encoder=encoder)
        x = random_batch(2)
        chosen, advantage, lam = (1, 7), 0.8, 0.05
        p, _, cache = policy.forward(x)
        dlogits = grad_policy_logits(advantage, 0.0, p, chosen) + grad_entropy_logits(p, lam)
        _, dx = policy.backward(cache, dlogits)
        numeric = np.zeros_like(x)
        h = 1e-5
        for idx in np.ndindex(x.shape):
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            numeric[idx] = (policy_objective(policy, xp, chosen, advantage, lam)
                            - policy_objective(policy, xm, chosen, advantage, lam)) / (2 * h)
        assert relative_error(dx, numeric) < 1e-4

    def test_non_finite_raises_with_snapshot(self):
        policy, _ = small_nets(0)
        policy.params["w2"][0, 0] = np.inf
        with pytest.raises(NumericFailureError) as info:
            policy.forward(random_batch(0) + 1.0)
        assert "w2" in info.value.snapshot


class TestSelection:
    def test_size_rule(self):
        p = [0.3, 0.3, 0.2, 0.1, 0.1]
        assert len(select_action_set(p, 4, "greedy")) == 2
        assert len(select_action_set(p, 4, "sample", np.random.default_rng(0))) == 2

    def test_uniform_falls_back_to_two(self):
        p = np.full(100, 0.01)
        assert len(select_action_set(p, 4, "sample", np.random.default_rng(0))) == 2

    def test_greedy_top_three(self):
        assert select_action_set([0.30, 0.28, 0.27, 0.10, 0.05], 4, "greedy") == (0, 1, 2)

    def test_greedy_ties_lower_index(self):
        assert select_action_set([0.1, 0.35, 0.1, 0.35, 0.1], 2, "greedy") == (1, 3)

    def test_size_capped_at_n_max(self):
        p = np.full(5, 0.2)  # all exceed 1/6
        assert len(select_action_set(p, 6, "greedy")) == 5
        assert len(select_action_set(p, 3, "greedy")) == 2  # none exceed 1/3

    def test_sample_distinct(self):
        rng = np.random.default_rng(3)
        p = np.array([0.9, 0.05, 0.03, 0.02])
        for _ in range(200):
            chosen = select_action_set(p, 2, "sample", rng)
            assert len(set(chosen)) == 2

    def test_first_draw_marginal(self):
        rng = np.random.default_rng(11)
        p = np.array([0.35, 0.25, 0.2, 0.1, 0.06, 0.04])
        n = 100_000
        first = np.array([draw_without_replacement(p, 2, rng)[0] for _ in range(n)])
        freq = np.bincount(first, minlength=len(p)) / n
        se = np.sqrt(p * (1 - p) / n)
        assert np.all(np.abs(freq - p) < 5 * se)

    def test_second_draw_renormalised(self):
        rng = np.random.default_rng(12)
        p = np.array([0.5, 0.3, 0.2])
        n = 40_000
        pairs = [draw_without_replacement(p, 2, rng) for _ in range(n)]
        second_given_first0 = [b for a, b in pairs if a == 0]
        freq = np.mean(np.array(second_given_first0) == 1)
        assert freq == pytest.approx(0.3 / 0.5, abs=5 * math.sqrt(0.24 / len(second_given_first0)))

    def test_bad_arguments(self):
        with pytest.raises(PreconditionError):
            select_action_set([0.5, 0.5], 1)
        with pytest.raises(PreconditionError):
            select_action_set([0.5, 0.5], 2, "boltzmann")


class TestLosses:
    def test_policy_zero_advantage(self):
        assert loss_policy(1.3, 1.3, np.array([0.2, 0.8]), (0, 1)) == 0.0

    def test_policy_direct(self):
        p = np.array([0.5, 0.25, 0.25])
        expected = 0.2 * (-math.log(0.5) - math.log(0.25))
        assert loss_policy(1.2, 1.0, p, (0, 1)) == pytest.approx(expected, abs=1e-12)
        assert loss_policy(1.2, 1.0, p, (0, 1)) == pytest.approx(0.41589, abs=1e-5)

    def test_policy_negative_advantage(self):
        p = np.array([0.5, 0.3, 0.2])
        assert loss_policy(0.5, 1.0, p, (1, 2)) < 0

    def test_policy_zero_probability(self):
        with pytest.raises(NumericFailureError):
            loss_policy(1.0, 0.0, np.array([0.0, 1.0]), (0,))

    def test_value(self):
        assert loss_value(1.2, 1.0) == pytest.approx(0.04, abs=1e-15)
        assert loss_value(0.7, 0.7) == 0.0

    def test_value_gradient_finite_difference(self):
        for R, b in [(1.2, 1.0), (0.3, 0.9), (2.0, -1.5)]:
            numeric = oracles.central_difference(lambda v: loss_value(R, v), b)
            assert abs(grad_value_baseline(R, b) - numeric) <= 1e-6 * abs(numeric)

    def test_entropy_uniform(self):
        value = loss_entropy(np.full(100, 0.01), 0.01)
        assert value == pytest.approx(0.01 * math.log(0.01), abs=1e-12)
        assert value == pytest.approx(-0.046052, abs=1e-6)

    def test_entropy_one_hot(self):
        assert loss_entropy(np.array([0.0, 1.0, 0.0]), 0.5) == 0.0

    def test_entropy_matches_oracle(self):
        p = np.random.default_rng(0).dirichlet(np.ones(7))
        assert loss_entropy(p, 0.3) == pytest.approx(oracles.entropy_term(p, 0.3), abs=1e-14)

    def test_entropy_minimised_at_uniform(self):
        rng = np.random.default_rng(1)
        uniform = loss_entropy(np.full(8, 1 / 8), 0.1)
        for _ in range(200):
            p = rng.dirichlet(np.ones(8) * rng.uniform(0.2, 5))
            assert loss_entropy(p, 0.1) > uniform

    def test_entropy_gradient_zero_at_uniform(self):
        assert np.all(grad_entropy_logits(np.full(10, 0.1), 0.7) == 0.0)


class TestGradientCheck:
    @pytest.mark.parametrize("encoder, scheme, channels",
                             [("identity", "raw_codes", 1), ("conv", "raw_codes", 1),
                              ("conv", "one_hot", 3)])
    def test_random_nets(self, encoder, scheme, channels):
        for trial in range(3):
            policy, value = small_nets(trial, encoder=encoder, in_channels=channels)
            x = random_batch(trial, scheme=scheme)
            err = gradient_check(policy, value, x, (2, 5, 9), 1.4, lam=0.05)
            assert err < 1e-4

    def test_zero_nets_entropy_stationary(self):
        policy, value = small_nets(0)
        for arr in [*policy.params.values(), *value.params.values()]:
            arr[...] = 0.0
        x = random_batch(0)
        p, _, cache = policy.forward(x)
        dlogits = grad_entropy_logits(p, 1.0)
        assert np.all(dlogits == 0.0)
        grads, _ = policy.backward(cache, dlogits)
        assert all(np.all(g == 0.0) for g in grads.values())
        # relative error is meaningless at an exact zero; compare absolutely
        numeric = _central_difference(
            lambda: policy_objective(policy, x, (0, 1), 0.0, 1.0), policy.params["b2"], 1e-5
        )
        assert np.max(np.abs(numeric)) < 1e-9

    def test_baseline_isolation(self):
        policy, value = small_nets(4)
        x = random_batch(4)
        chosen, R = (3, 6), 1.1
        pg, _, _ = analytic_gradients(policy, value, x, chosen, R, lam=0.0)
        _, state, _ = policy.forward(x)
        b0 = value.forward(state)[0]
        value.params["b2"] += 0.25
        pg2, vg2, _ = analytic_gradients(policy, value, x, chosen, R, lam=0.0)
        b1 = value.forward(state)[0]
        # policy gradients only rescale by the change in the constant advantage
        for name in pg:
            np.testing.assert_allclose(pg2[name], pg[name] * (R - b1) / (R - b0), rtol=1e-12)
        # value gradients come from J2 alone
        np.testing.assert_allclose(vg2["b2"], [grad_value_baseline(R, b1)])


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0, -2.0])}
        opt = Adam(params, lr=0.01)
        opt.step({"w": np.array([3.0, -0.5])})
        np.testing.assert_allclose(params["w"], [0.99, -1.99], rtol=1e-6)
        assert opt.t == 1

    def test_reference_trajectory(self):
        # scalar Adam written out longhand
        theta, m, v = 0.5, 0.0, 0.0
        params = {"x": np.array([0.5])}
        opt = Adam(params, lr=0.1, beta1=0.8, beta2=0.9, eps=1e-8)
        for t in range(1, 6):
            g = 2 * theta
            m = 0.8 * m + 0.2 * g
            v = 0.9 * v + 0.1 * g * g
            theta -= 0.1 * (m / (1 - 0.8**t)) / (math.sqrt(v / (1 - 0.9**t)) + 1e-8)
            opt.step({"x": 2 * params["x"]})
            assert params["x"][0] == pytest.approx(theta, abs=1e-14)


class TestTrainStep:
    def test_determinism(self, planted):
        def run():
            cfg = TrainConfig(seed=5, max_iterations=30)
            rng = np.random.default_rng(cfg.seed)
            agent = Agent.build(planted.n_snps, cfg, rng)
            return [train_step(agent, planted, rng, iteration=i).to_dict() for i in range(30)]

        assert run() == run()

    def test_record_fields(self, planted):
        cfg = TrainConfig(seed=1)
        rng = np.random.default_rng(1)
        agent = Agent.build(planted.n_snps, cfg, rng)
        rec = train_step(agent, planted, rng, iteration=1)
        assert 2 <= len(rec.action_set) <= cfg.n_max
        assert rec.j2 == pytest.approx((rec.reward.total - rec.baseline) ** 2)
        assert agent.optimizer.t == 1

    def test_entropy_dominance_pins_uniform(self, planted):
        cfg = TrainConfig(seed=3, entropy_weight=1e3, max_iterations=2000)
        rep = train(planted, cfg)
        agent = rep.agent
        batch = sample_minibatch(planted, cfg.batch_size, np.random.default_rng(0))
        p, _, _ = agent.policy.forward(agent.encode(batch))
        assert p.max() - 1 / planted.n_snps < 0.01

    def test_replayed_positive_advantage_increases_mass(self, planted):
        cfg = TrainConfig(seed=2, entropy_weight=0.0)
        rng = np.random.default_rng(2)
        agent = Agent.build(planted.n_snps, cfg, rng)
        x = agent.encode(sample_minibatch(planted, cfg.batch_size, rng))
        chosen = (5, 17)
        history = []
        for _ in range(100):
            p, _, _ = agent.policy.forward(x)
            history.append(p[list(chosen)].sum())
            baseline, *_ = apply_update(agent, x, chosen, 10.0)
            assert 10.0 - baseline > 0
        assert all(b > a for a, b in zip(history, history[1:]))

    def test_numeric_failure_reports_iteration(self, planted):
        cfg = TrainConfig(seed=0)
        rng = np.random.default_rng(0)
        agent = Agent.build(planted.n_snps, cfg, rng)
        agent.policy.params["b1"][:] = np.nan
        with pytest.raises(NumericFailureError, match="iteration 7") as info:
            train_step(agent, planted, rng, iteration=7)
        assert info.value.iteration == 7


class TestTrain:
    def test_immediate_hit_from_primed_policy(self, planted):
        cfg = TrainConfig(seed=0, max_iterations=50)
        agent = Agent.build(planted.n_snps, cfg, np.random.default_rng(0))
        agent.policy.params["b2"][list(PLANTED)] = 20.0
        rep = train(planted, cfg, ground_truth=PLANTED, agent=agent)
        assert rep.success
        assert rep.iterations_to_hit == 1
        assert rep.iterations_run == 1

    def test_without_truth_runs_full_budget(self, planted):
        rep = train(planted, TrainConfig(seed=1, max_iterations=120, top_k=5))
        assert not rep.success and rep.iterations_to_hit is None
        assert rep.iterations_run == len(rep.reward_trajectory) == 120
        totals = [rv.total for _, rv in rep.best_sets]
        assert totals == sorted(totals, reverse=True)
        assert len({frozenset(s) for s, _ in rep.best_sets}) == len(rep.best_sets) <= 5

    def test_finds_planted_pair(self, planted):
        rep = train(planted, TrainConfig(seed=0), ground_truth=PLANTED)
        assert rep.success
        assert rep.best_sets[0][0] == PLANTED

    def test_fixed_batch_mode(self, planted):
        rep = train(planted, TrainConfig(seed=0, resample_batch=False, max_iterations=50))
        assert rep.iterations_run == 50

    def test_conv_encoder_trains(self, planted):
        cfg = TrainConfig(seed=0, encoder="conv", encoding="one_hot", max_iterations=50)
        rep = train(planted, cfg)
        assert np.all(np.isfinite(rep.reward_trajectory))

    def test_on_step_stream(self, planted):
        seen = []
        train(planted, TrainConfig(seed=0, max_iterations=10), on_step=seen.append)
        assert [r.iteration for r in seen] == list(range(1, 11))

    def test_config_validation(self):
        with pytest.raises(PreconditionError):
            TrainConfig(batch_size=3)
        with pytest.raises(PreconditionError):
            TrainConfig(n_max=1)
        with pytest.raises(PreconditionError):
            TrainConfig(entropy_weight=-1)
        with pytest.raises(PreconditionError):
            TrainConfig(learning_rate=0)

    def test_config_file(self, tmp_path):
        path = tmp_path / "train.cfg"
        path.write_text("batch_size = 16\nentropy_weight = 0.5\nencoder = conv\n"
                        "resample_batch = false\n")
        cfg = TrainConfig.from_file(path, seed=9)
        assert (cfg.batch_size, cfg.entropy_weight, cfg.encoder) == (16, 0.5, "conv")
        assert cfg.resample_batch is False and cfg.seed == 9
        path.write_text("bogus = 1\n")
        with pytest.raises(PreconditionError):
            TrainConfig.from_file(path)
