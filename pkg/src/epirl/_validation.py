"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d

from .exceptions import (
    ClassLabelError,
    EmptyClassError,
    GenotypeDomainError,
    PreconditionError,
)


def check_genotypes(X, y=None):
    """Validate a genotype matrix (and optional labels).

    Returns ``X`` as a C-contiguous int8 array and ``y`` as int8, raising the
    package's domain errors instead of generic ``ValueError``.
    """
    X = check_array(X, dtype=None, ensure_all_finite=True)
    if not np.issubdtype(X.dtype, np.integer):
        if np.any(X != np.round(X)):
            row, col = np.argwhere(X != np.round(X))[0]
            raise GenotypeDomainError(
                f"non-integer genotype {X[row, col]!r} at row {row}, column {col}"
            )
    bad = (X < 0) | (X > 2)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise GenotypeDomainError(
            f"genotype {X[row, col]!r} at row {row}, column {col} is not in {{0, 1, 2}}"
        )
    X = np.ascontiguousarray(X, dtype=np.int8)
    if y is None:
        return X

    y = column_or_1d(y)
    if y.shape[0] != X.shape[0]:
        raise PreconditionError(
            f"{X.shape[0]} genotype rows but {y.shape[0]} labels"
        )
    bad = (y != 0) & (y != 1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ClassLabelError(f"class {y[row]!r} at row {row} is not 0 or 1")
    y = y.astype(np.int8)
    if not (y == 0).any():
        raise EmptyClassError("dataset has no control rows (Class=0)")
    if not (y == 1).any():
        raise EmptyClassError("dataset has no case rows (Class=1)")
    return X, y


def check_snp_set(snps, n_snps, *, min_size=1):
    """Return ``snps`` as a tuple of distinct in-range column indices."""
    idx = tuple(int(s) for s in snps)
    if len(idx) < min_size:
        raise PreconditionError(f"need at least {min_size} SNPs, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise PreconditionError(f"SNP indices must be distinct, got {idx}")
    for s in idx:
        if not 0 <= s < n_snps:
            raise PreconditionError(f"SNP index {s} outside [0, {n_snps})")
    return idx


def check_random_state(seed):
    """Return a ``numpy.random.Generator`` for ``seed``.

    Unlike :func:`sklearn.utils.check_random_state` this hands out the new
    Generator API, which the samplers here rely on.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
