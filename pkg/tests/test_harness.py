import json

import numpy as np
import pytest

from conftest import PLANTED, random_dataset
from epirl.agent import TrainConfig
from epirl.exceptions import PreconditionError
from epirl.harness import compare_baseline, recall_at_k, run_trials
from epirl.report import RecallReport, TrialReport
from epirl.reward import reward
from epirl.search import combination_count


@pytest.fixture(scope="module")
def trials(planted):
    cfg = TrainConfig(max_iterations=400)
    return run_trials(planted, cfg, seeds=[0, 1, 2, 3], ground_truth=PLANTED)


class TestRunTrials:
    def test_summary_arithmetic(self, trials):
        s = trials.summary
        assert s["trials"] == 4 and s["failed"] == 0
        assert s["success_rate"] == s["successes"] / 4

    def test_summary_recomputable_from_json(self, trials):
        emitted = json.loads(json.dumps(trials.to_dict()))
        per_trial = emitted["trials"]
        hits = [t["iterations_to_hit"] for t in per_trial if t["success"]]
        assert emitted["summary"]["successes"] == len(hits)
        assert emitted["summary"]["mean_iterations_to_hit_successful"] == (
            float(np.mean(hits)) if hits else None
        )
        assert emitted["summary"]["success_rate"] == len(hits) / len(per_trial)

    def test_seed_order_and_parallel_agree(self, planted, trials):
        cfg = TrainConfig(max_iterations=400)
        again = run_trials(planted, cfg, seeds=[0, 1, 2, 3], ground_truth=PLANTED, n_jobs=2)
        assert [r.seed for r in again.reports] == [0, 1, 2, 3]
        assert again.to_dict() == trials.to_dict()

    def test_primed_single_trial(self, planted):
        # with two SNPs the only selectable set is the truth
        rng = np.random.default_rng(0)
        data = random_dataset(rng, max_snps=2, min_snps=2, max_rows=50)
        result = run_trials(data, TrainConfig(batch_size=2, max_iterations=5), [0],
                            ground_truth=(0, 1))
        assert result.summary["success_rate"] == 1.0
        assert result.summary["mean_iterations_to_hit_successful"] == 1.0

    def test_errors_recorded_not_fatal(self, planted):
        small = random_dataset(np.random.default_rng(1), max_rows=10)
        result = run_trials(small, TrainConfig(batch_size=64, max_iterations=5), [0, 1])
        assert result.summary["failed"] == 2
        assert "PreconditionError" in result.errors[0]

    def test_seed_validation(self, planted):
        with pytest.raises(PreconditionError):
            run_trials(planted, TrainConfig(), [])
        with pytest.raises(PreconditionError):
            run_trials(planted, TrainConfig(), [1, 1])

    def test_timing_kept_out_of_report(self, trials):
        text = json.dumps(trials.to_dict())
        assert "elapsed" not in text
        assert set(trials.timing["per_trial"]) == {"0", "1", "2", "3"}


class TestRecall:
    def test_single_dataset_hit(self, planted):
        rep = recall_at_k([planted], [PLANTED], TrainConfig(max_iterations=800), top_k=5)
        assert rep.C == 1 and rep.L == 1 and rep.recall == 1.0

    def test_reported_counts(self):
        assert RecallReport(C=50, L=34, top_k=1).recall == 0.68

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            RecallReport(C=3, L=4, top_k=1)

    def test_exhaustive_full_k_always_recalls(self):
        rng = np.random.default_rng(2)
        datasets = [random_dataset(rng, max_snps=6, min_snps=6, max_rows=30) for _ in range(4)]
        truths = [tuple(sorted(rng.choice(6, 2, replace=False))) for _ in datasets]
        rep = recall_at_k(datasets, truths, TrainConfig(), top_k=combination_count(6, 2),
                          backend="exhaustive")
        assert rep.recall == 1.0

    def test_mismatched_lengths(self, planted):
        with pytest.raises(PreconditionError):
            recall_at_k([planted], [], TrainConfig(), top_k=1)

    def test_unknown_backend(self, planted):
        with pytest.raises(PreconditionError):
            recall_at_k([planted], [PLANTED], TrainConfig(), top_k=1, backend="beam")


class TestCompare:
    def test_record(self, planted):
        rec = compare_baseline(planted, TrainConfig(), order=2, ground_truth=PLANTED,
                               seeds=[0, 1])
        assert rec["exhaustive_evaluated"] == 4950
        assert rec["agent_seconds"] > 0 and rec["exhaustive_seconds"] > 0
        assert rec["speedup"] == rec["exhaustive_seconds"] / rec["agent_seconds"]
        assert rec["agent_best"]["snps"] == list(PLANTED)
        assert rec["agent_best"]["total"] == rec["agent_best_exhaustive_reward"]
        assert rec["agent_best_recomputed_reward"] == reward(planted, PLANTED).total


def test_trial_report_invariant():
    with pytest.raises(ValueError):
        TrialReport(seed=0, success=True, iterations_to_hit=None, iterations_run=3,
                    elapsed_seconds=0.0, best_sets=[], reward_trajectory=[],
                    max_iterations=5)
    with pytest.raises(ValueError):
        TrialReport(seed=0, success=True, iterations_to_hit=9, iterations_run=9,
                    elapsed_seconds=0.0, best_sets=[], reward_trajectory=[],
                    max_iterations=5)
