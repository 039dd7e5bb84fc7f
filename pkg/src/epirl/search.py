"""Exhaustive k-locus scan over every SNP combination.

Combinations are enumerated in colexicographic order so that a contiguous
rank range can be unranked directly; the scan is split into disjoint rank
ranges, each range keeps a bounded top-K heap, and the heaps are merged with
a total order (reward descending, then SNP indices ascending). The ranking
is therefore identical for any number of workers.
"""

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from .data import GenotypeMatrix
from .exceptions import CombinationOverflowError, PreconditionError
from .reward import reward

INT64_MAX = 2**63 - 1


def combination_count(l, k):
    """Exact C(l, k), refusing results that do not fit a signed 64-bit counter."""
    if not 0 <= k <= l:
        raise PreconditionError(f"need 0 <= k <= l, got l={l}, k={k}")
    count = math.comb(l, k)
    if count > INT64_MAX:
        raise CombinationOverflowError(
            f"C({l}, {k}) = {count:.3e} exceeds the 64-bit counter range"
        )
    return count


def colex_rank(combo):
    """Rank of a sorted combination in colexicographic order."""
    return sum(math.comb(c, i + 1) for i, c in enumerate(combo))


def colex_unrank(rank, k):
    """Inverse of :func:`colex_rank`."""
    combo = [0] * k
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= rank
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        combo[i - 1] = c
        rank -= math.comb(c, i)
    return tuple(combo)


def colex_range(start, stop, k):
    """Yield the combinations with colex ranks in ``[start, stop)``."""
    if start >= stop:
        return
    combo = list(colex_unrank(start, k))
    for _ in range(stop - start):
        yield tuple(combo)
        # successor: bump the lowest position that can move, reset those below
        i = 0
        while i < k - 1 and combo[i] + 1 == combo[i + 1]:
            i += 1
        combo[i] += 1
        for j in range(i):
            combo[j] = j


@dataclass
class SearchResult:
    ranked: list
    elapsed: float
    evaluated: int

    def to_dict(self, data=None):
        out = {
            "evaluated": self.evaluated,
            "elapsed_seconds": self.elapsed,
            "ranked": [],
        }
        for combo, rv in self.ranked:
            item = {"snps": list(combo), **rv._asdict()}
            if data is not None:
                item["names"] = [data.snp_names[j] for j in combo]
            out["ranked"].append(item)
        return out


def _ranking_key(item):
    combo, rv = item
    return (-rv.total, combo)


def _scan_range(data, k, start, stop, top):
    heap = []
    evaluated = 0
    for combo in colex_range(start, stop, k):
        rv = reward(data, combo)
        evaluated += 1
        # min-heap on "worseness": low reward first, then lexicographically later combo
        entry = (rv.total, tuple(-c for c in combo), combo, rv)
        if len(heap) < top:
            heapq.heappush(heap, entry)
        elif entry > heap[0]:
            heapq.heapreplace(heap, entry)
    return [(combo, rv) for _, _, combo, rv in heap], evaluated


def exhaustive_topk(data, k, top=10, n_jobs=1, n_chunks=None):
    """Score every k-combination of SNPs and return the ``top`` best.

    Parameters
    ----------
    data : GenotypeMatrix
    k : int
        Interaction order, at least 2.
    top : int
        Number of ranked sets to keep.
    n_jobs : int
        Worker processes; results do not depend on it.
    n_chunks : int, optional
        Number of disjoint rank ranges (defaults to ``4 * n_jobs``).
    """
    if k < 2:
        raise PreconditionError(f"interaction order must be >= 2, got {k}")
    if top < 1:
        raise PreconditionError(f"top must be >= 1, got {top}")
    total = combination_count(data.n_snps, k)
    n_chunks = n_chunks or max(1, 4 * n_jobs)
    bounds = np.linspace(0, total, min(n_chunks, total) + 1).astype(np.int64)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    start = time.perf_counter()
    if n_jobs == 1:
        parts = [_scan_range(data, k, a, b, top) for a, b in ranges]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_scan_range)(data, k, a, b, top) for a, b in ranges
        )
    merged = sorted((item for part, _ in parts for item in part), key=_ranking_key)
    elapsed = time.perf_counter() - start
    evaluated = sum(n for _, n in parts)
    return SearchResult(merged[:top], elapsed, evaluated)


class ExhaustiveSearch(SelectorMixin, BaseEstimator):
    """Feature selector that keeps the best-scoring k-SNP set.

    Parameters
    ----------
    order : int, default=2
        Interaction order k.
    top_k : int, default=10
        Number of ranked sets kept in ``result_``.
    n_jobs : int, default=1

    Attributes
    ----------
    result_ : SearchResult
    best_set_ : tuple of int
    best_reward_ : RewardValue
    """

    def __init__(self, order=2, top_k=10, n_jobs=1):
        self.order = order
        self.top_k = top_k
        self.n_jobs = n_jobs

    def fit(self, X, y):
        data = GenotypeMatrix.from_arrays(X, y)
        self.n_features_in_ = data.n_snps
        self.result_ = exhaustive_topk(data, self.order, self.top_k, self.n_jobs)
        self.best_set_, self.best_reward_ = self.result_.ranked[0]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "best_set_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.best_set_)] = True
        return mask

