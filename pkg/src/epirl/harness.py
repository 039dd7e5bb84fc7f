"""Multi-trial experiments: success rates, R@K recall and the exhaustive
timing comparison.

Trials run in a bounded joblib pool; each worker builds its own agent and
random stream from its seed, and results come back in seed order.
"""

from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .agent.training import train
from .exceptions import EpirlError, PreconditionError
from .report import RecallReport
from .reward import reward
from .search import exhaustive_topk


def _run_one(data, cfg, seed, ground_truth):
    try:
        report = train(data, replace(cfg, seed=seed), ground_truth=ground_truth)
    except EpirlError as exc:
        return seed, None, f"{type(exc).__name__}: {exc}"
    report.agent = None  # keep worker results small
    return seed, report, None


def _mean(values):
    return float(np.mean(values)) if values else None


@dataclass
class TrialsResult:
    reports: list
    errors: dict  # seed -> message

    @property
    def summary(self):
        """Seed-determined statistics; means over successful trials mirror the
        reporting convention, all-trial means are labelled separately."""
        ok = [r for r in self.reports if r.success]
        n = len(self.reports) + len(self.errors)
        return {
            "trials": n,
            "completed": len(self.reports),
            "failed": len(self.errors),
            "successes": len(ok),
            "success_rate": len(ok) / n if n else 0.0,
            "mean_iterations_to_hit_successful": _mean([r.iterations_to_hit for r in ok]),
            "mean_iterations_run_all": _mean([r.iterations_run for r in self.reports]),
        }

    @property
    def timing(self):
        ok = [r for r in self.reports if r.success]
        return {
            "mean_elapsed_seconds_successful": _mean([r.elapsed_seconds for r in ok]),
            "mean_elapsed_seconds_all": _mean([r.elapsed_seconds for r in self.reports]),
            "mean_seconds_per_iteration": _mean(
                [r.elapsed_seconds / r.iterations_run for r in self.reports]
            ),
            "per_trial": {str(r.seed): r.elapsed_seconds for r in self.reports},
        }

    def to_dict(self, include_trajectory=True):
        return {
            "summary": self.summary,
            "errors": {str(k): v for k, v in self.errors.items()},
            "trials": [r.to_dict(include_trajectory=include_trajectory) for r in self.reports],
        }


def run_trials(data, cfg, seeds, ground_truth=None, n_jobs=1):
    """Train one agent per seed on the same dataset.

    A trial that raises a package error is recorded in ``errors`` rather
    than aborting the batch.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise PreconditionError("at least one trial is required")
    if len(set(seeds)) != len(seeds):
        raise PreconditionError("trial seeds must be distinct")
    jobs = (delayed(_run_one)(data, cfg, s, ground_truth) for s in seeds)
    if n_jobs == 1:
        results = [f(*a, **kw) for f, a, kw in jobs]
    else:
        results = Parallel(n_jobs=n_jobs)(jobs)
    reports = [r for _, r, _ in results if r is not None]
    errors = {s: e for s, _, e in results if e is not None}
    return TrialsResult(reports, errors)


def recall_at_k(datasets, truths, cfg, top_k, backend="agent", order=2, n_jobs=1):
    """Fraction of datasets whose true interaction is among the top-K sets.

    ``backend="agent"`` trains one agent per dataset (seed ``cfg.seed``) for
    the full iteration budget and ranks the distinct sets it sampled;
    ``backend="exhaustive"`` ranks every ``order``-combination.
    """
    if len(datasets) != len(truths):
        raise PreconditionError(
            f"{len(datasets)} datasets but {len(truths)} ground-truth sets"
        )
    if not datasets:
        raise PreconditionError("at least one dataset is required")
    if top_k < 1:
        raise PreconditionError("top_k must be >= 1")

    if backend == "agent":
        run_cfg = replace(cfg, top_k=top_k)
        jobs = (delayed(_run_one)(d, run_cfg, cfg.seed, None) for d in datasets)
        if n_jobs == 1:
            outs = [f(*a, **kw) for f, a, kw in jobs]
        else:
            outs = Parallel(n_jobs=n_jobs)(jobs)
        ranked = []
        trials = []
        for _, rep, err in outs:
            if err is not None:
                raise EpirlError(err)
            ranked.append([s for s, _ in rep.best_sets])
            trials.append(rep.to_dict(include_trajectory=False))
    elif backend == "exhaustive":
        ranked = []
        trials = []
        for d in datasets:
            res = exhaustive_topk(d, order, top_k, n_jobs=n_jobs)
            ranked.append([s for s, _ in res.ranked])
            trials.append({"evaluated": res.evaluated,
                           "ranked": [list(s) for s, _ in res.ranked]})
    else:
        raise PreconditionError(f"unknown backend {backend!r}")

    hits = [frozenset(t) in {frozenset(s) for s in sets} for t, sets in zip(truths, ranked)]
    return RecallReport(C=len(datasets), L=sum(hits), top_k=top_k, hits=hits, trials=trials)


def compare_baseline(data, cfg, order=2, ground_truth=None, seeds=None, n_jobs=1):
    """Time the agent against the exhaustive scan on the same dataset.

    With ``ground_truth`` the agent time is the mean time-to-hit over
    successful trials; otherwise the mean full-run time. Nothing about the
    absolute times is asserted.
    """
    seeds = [cfg.seed] if seeds is None else list(seeds)
    trials = run_trials(data, cfg, seeds, ground_truth=ground_truth, n_jobs=n_jobs)
    exhaustive = exhaustive_topk(data, order, max(cfg.top_k, 1), n_jobs=n_jobs)

    timing = trials.timing
    agent_seconds = (
        timing["mean_elapsed_seconds_successful"]
        if ground_truth is not None
        else timing["mean_elapsed_seconds_all"]
    )
    best = max(
        (r.best_sets[0] for r in trials.reports if r.best_sets),
        key=lambda item: (item[1].total, [-i for i in item[0]]),
        default=None,
    )
    exhaustive_lookup = {frozenset(s): rv for s, rv in exhaustive.ranked}
    record = {
        "order": order,
        "agent": {**trials.summary, **timing},
        "agent_seconds": agent_seconds,
        "exhaustive_seconds": exhaustive.elapsed,
        "exhaustive_evaluated": exhaustive.evaluated,
        "exhaustive_best": {"snps": list(exhaustive.ranked[0][0]),
                            **exhaustive.ranked[0][1]._asdict()},
        "speedup": (exhaustive.elapsed / agent_seconds) if agent_seconds else None,
    }
    if best is not None:
        snps, rv = best
        ex_rv = exhaustive_lookup.get(frozenset(snps))
        record["agent_best"] = {"snps": list(snps), **rv._asdict()}
        record["agent_best_exhaustive_reward"] = None if ex_rv is None else ex_rv.total
        record["agent_best_recomputed_reward"] = reward(data, snps).total
    return record
