"""MDR interaction reward for a selected SNP set.

The selected columns are collapsed into their 3**n joint-genotype cells, each
cell is labelled high- or low-risk by its case:control ratio, and the
resulting 2x2 table is scored by the correct classification rate (CCR) plus
the rule utility statistic. Cells are indexed in base 3 with the first
selected SNP as the most significant digit.
"""

from enum import IntEnum
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_genotypes, check_snp_set
from .data import GenotypeMatrix
from .exceptions import CapacityError

MAX_ORDER = 12
UTILITY_EPS = 1e-12


class Risk(IntEnum):
    EMPTY = -1
    LR = 0
    HR = 1


class CellCounts(NamedTuple):
    control: np.ndarray
    case: np.ndarray

    @property
    def order(self):
        return int(round(np.log(len(self.control)) / np.log(3)))


class ContingencyTable(NamedTuple):
    tp: int
    fp: int
    fn: int
    tn: int


class RewardValue(NamedTuple):
    ccr: float
    utility: float
    total: float


def cell_index(genotypes):
    """Base-3 cell index of each row of an (m, n) genotype block."""
    n = genotypes.shape[1]
    weights = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return genotypes.astype(np.int64) @ weights


def tabulate(data, snps):
    """Count controls and cases in every joint-genotype cell of ``snps``."""
    idx = check_snp_set(snps, data.n_snps)
    if len(idx) > MAX_ORDER:
        raise CapacityError(
            f"interaction order {len(idx)} exceeds the supported maximum {MAX_ORDER}"
        )
    n_cells = 3 ** len(idx)
    cells = cell_index(data.genotypes[:, idx])
    labels = data.labels
    control = np.bincount(cells[labels == 0], minlength=n_cells)
    case = np.bincount(cells[labels == 1], minlength=n_cells)
    return CellCounts(control, case)


def partition_risk(cells):
    """Label each cell HR (case/control >= 1), LR, or EMPTY (no rows)."""
    control, case = cells
    risk = np.where(case >= control, Risk.HR, Risk.LR).astype(np.int8)
    risk[(case == 0) & (control == 0)] = Risk.EMPTY
    return risk


def contingency(cells, partition):
    hr = partition == Risk.HR
    lr = partition == Risk.LR
    return ContingencyTable(
        tp=int(cells.case[hr].sum()),
        fp=int(cells.control[hr].sum()),
        fn=int(cells.case[lr].sum()),
        tn=int(cells.control[lr].sum()),
    )


def ccr(table):
    """Balanced accuracy of the HR/LR rule; an empty class contributes 0."""
    tp, fp, fn, tn = table
    sensitivity = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (fp + tn) if fp + tn else 0.0
    return 0.5 * (sensitivity + specificity)


def rule_utility(table):
    """Chi-square derived rule utility; degenerate tables score 0."""
    tp, fp, fn, tn = table
    if tp == 0 or tp + fn == 0:
        return 0.0
    ratio = (fp + tn) / (tp + fn)
    delta = fp / tp
    gamma = (tp + fp + tn + fn) / tp
    denom = (1 + delta) * (gamma - delta - 1)
    if denom <= UTILITY_EPS:
        return 0.0
    return (ratio - delta) ** 2 / denom


def score_table(table):
    c = ccr(table)
    u = rule_utility(table)
    return RewardValue(c, u, c + u)


def reward(data, snps):
    """CCR + rule utility of the SNP set ``snps`` on ``data``."""
    cells = tabulate(data, snps)
    return score_table(contingency(cells, partition_risk(cells)))


class MDRClassifier(ClassifierMixin, BaseEstimator):
    """Single-split MDR classifier over a fixed SNP set.

    Rows whose joint genotype falls in a high-risk cell are predicted as
    cases. Cells unseen during ``fit`` are predicted as controls.

    Parameters
    ----------
    snps : sequence of int
        Column indices of the interacting SNPs.
    """

    def __init__(self, snps=(0, 1)):
        self.snps = snps

    def fit(self, X, y):
        data = GenotypeMatrix.from_arrays(X, y)
        self.snps_ = check_snp_set(self.snps, data.n_snps)
        self.cells_ = tabulate(data, self.snps_)
        self.risk_ = partition_risk(self.cells_)
        self.table_ = contingency(self.cells_, self.risk_)
        self.reward_ = score_table(self.table_)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = data.n_snps
        return self

    def predict(self, X):
        check_is_fitted(self, "risk_")
        X = check_genotypes(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        cells = cell_index(X[:, list(self.snps_)])
        return (self.risk_[cells] == Risk.HR).astype(int)
