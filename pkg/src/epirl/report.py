"""Per-run and multi-run report records and their JSON/CSV serialisation.

Reports are split into a deterministic part (everything derived from data,
config and seed) and wall-clock timings, which are kept apart so that two
runs with identical inputs produce byte-identical report files.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class TrialReport:
    seed: int
    success: bool
    iterations_to_hit: int | None
    iterations_run: int
    elapsed_seconds: float
    best_sets: list  # [(tuple of int, RewardValue)], best first
    reward_trajectory: list
    max_iterations: int
    agent: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.success and (
            self.iterations_to_hit is None or self.iterations_to_hit > self.max_iterations
        ):
            raise ValueError("a successful trial needs iterations_to_hit <= max_iterations")

    def to_dict(self, include_timing=False, include_trajectory=True):
        out = {
            "seed": self.seed,
            "success": self.success,
            "iterations_to_hit": self.iterations_to_hit,
            "iterations_run": self.iterations_run,
            "max_iterations": self.max_iterations,
            "best_sets": [
                {"snps": list(s), **rv._asdict()} for s, rv in self.best_sets
            ],
        }
        if include_trajectory:
            out["reward_trajectory"] = list(self.reward_trajectory)
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out


@dataclass
class RecallReport:
    C: int
    L: int
    top_k: int
    hits: list = field(default_factory=list)
    trials: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.L <= self.C:
            raise ValueError(f"need 0 <= L <= C, got L={self.L}, C={self.C}")

    @property
    def recall(self):
        return self.L / self.C

    def to_dict(self):
        return {
            "C": self.C,
            "L": self.L,
            "top_k": self.top_k,
            "recall": self.recall,
            "hits": self.hits,
            "trials": self.trials,
        }


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


def write_trials_csv(reports, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "success", "iterations_to_hit", "iterations_run",
                         "best_snps", "best_total"])
        for r in reports:
            best, rv = r.best_sets[0] if r.best_sets else ((), None)
            writer.writerow([
                r.seed, int(r.success),
                "" if r.iterations_to_hit is None else r.iterations_to_hit,
                r.iterations_run,
                " ".join(map(str, best)),
                "" if rv is None else repr(rv.total),
            ])
