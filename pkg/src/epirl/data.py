"""Case/control genotype datasets: loading, writing, simulation and batching.

Genotypes are coded as the number of minor alleles (aa=0, Aa=1, AA=2) and
labels as 0 for controls and 1 for cases.
"""

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_genotypes, check_random_state
from .exceptions import (
    ClassLabelError,
    GenotypeDomainError,
    MalformedHeaderError,
    MissingValueError,
    PreconditionError,
    RaggedRowError,
    UnsatisfiableSimulationError,
)

CLASS_COLUMN = "Class"
_MISSING_TOKENS = {"", "na", "nan", "n/a", "?", "."}


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """Immutable (t1 + t2) x l genotype matrix with per-row class labels.

    Construct through :meth:`from_arrays` (or the loaders) so that the domain
    checks run; the arrays are made read-only afterwards.
    """

    genotypes: np.ndarray
    labels: np.ndarray
    snp_names: tuple
    control_rows: np.ndarray = field(repr=False)
    case_rows: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, genotypes, labels, snp_names=None):
        X, y = check_genotypes(genotypes, labels)
        if snp_names is None:
            snp_names = tuple(f"SNP{j}" for j in range(X.shape[1]))
        snp_names = tuple(str(s) for s in snp_names)
        if len(snp_names) != X.shape[1]:
            raise PreconditionError(
                f"{len(snp_names)} SNP names for {X.shape[1]} columns"
            )
        if len(set(snp_names)) != len(snp_names):
            raise PreconditionError("SNP names must be unique")
        X.setflags(write=False)
        y.setflags(write=False)
        controls = np.flatnonzero(y == 0)
        cases = np.flatnonzero(y == 1)
        controls.setflags(write=False)
        cases.setflags(write=False)
        return cls(X, y, snp_names, controls, cases)

    @property
    def t1(self):
        """Number of control rows."""
        return len(self.control_rows)

    @property
    def t2(self):
        """Number of case rows."""
        return len(self.case_rows)

    @property
    def n_snps(self):
        return self.genotypes.shape[1]

    @property
    def n_rows(self):
        return self.genotypes.shape[0]

    def resolve(self, identifiers):
        """Map SNP names or integer indices to a tuple of column indices."""
        lookup = {name: j for j, name in enumerate(self.snp_names)}
        out = []
        for ident in identifiers:
            ident = str(ident).strip()
            if ident in lookup:
                out.append(lookup[ident])
                continue
            try:
                j = int(ident)
            except ValueError:
                raise PreconditionError(f"unknown SNP {ident!r}") from None
            if not 0 <= j < self.n_snps:
                raise PreconditionError(f"SNP index {j} outside [0, {self.n_snps})")
            out.append(j)
        return tuple(out)


# -- GAMETES-style TSV ------------------------------------------------------


def load_dataset(path, format="gametes_tsv"):
    """Read a tab-delimited genotype file.

    The first line holds the SNP names followed by a final ``Class`` column;
    every following line holds one individual. Row order is preserved.
    """
    if format != "gametes_tsv":
        raise PreconditionError(f"unsupported dataset format {format!r}")
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeaderError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != CLASS_COLUMN:
            raise MalformedHeaderError(
                f"{path}: header must end with a {CLASS_COLUMN!r} column, "
                f"got {header[-1:]!r}"
            )
        names = header[:-1]
        if any(not n for n in names):
            raise MalformedHeaderError(f"{path}: blank SNP name in header")
        if len(set(names)) != len(names):
            raise MalformedHeaderError(f"{path}: duplicate SNP names in header")

        width = len(header)
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != width:
                raise RaggedRowError(
                    f"{path}:{lineno}: expected {width} fields, got {len(fields)}"
                )
            row = []
            for col, raw in enumerate(fields):
                token = raw.strip()
                column = header[col]
                if token.lower() in _MISSING_TOKENS:
                    raise MissingValueError(
                        f"{path}:{lineno}: missing value in column {column!r}"
                    )
                if col == width - 1:
                    if token not in ("0", "1"):
                        raise ClassLabelError(
                            f"{path}:{lineno}: class {token!r} is not 0 or 1"
                        )
                elif token not in ("0", "1", "2"):
                    raise GenotypeDomainError(
                        f"{path}:{lineno} (data row {lineno - 1}), column "
                        f"{column!r}: genotype {token!r} is not in {{0, 1, 2}}"
                    )
                row.append(int(token))
            rows.append(row)

    table = np.array(rows, dtype=np.int8).reshape(len(rows), width)
    return GenotypeMatrix.from_arrays(table[:, :-1], table[:, -1], names)


def write_dataset(data, path):
    """Write ``data`` in the format read by :func:`load_dataset`."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow([*data.snp_names, CLASS_COLUMN])
        for row, label in zip(data.genotypes.tolist(), data.labels.tolist()):
            writer.writerow([*row, label])


# -- simulation -------------------------------------------------------------


def hwe_genotype_probs(maf):
    """Hardy-Weinberg probabilities of genotypes 0, 1, 2 for a minor-allele frequency."""
    maf = np.asarray(maf, dtype=float)
    major = 1.0 - maf
    return np.stack([major**2, 2 * major * maf, maf**2], axis=-1)


@dataclass
class PenetranceModel:
    """Disease model with k interacting SNPs planted among background SNPs.

    ``penetrance`` holds P(case | joint genotype) for the 3**k joint genotypes,
    indexed in base 3 with the first interacting SNP as the most significant
    digit. ``background_maf`` is one frequency shared by every background
    SNP or one per background SNP; when it is ``None`` each background SNP
    gets a frequency drawn uniformly from ``background_maf_range``.
    Prevalence and heritability are descriptive only; they are not enforced.
    """

    interacting_snps: tuple
    maf: tuple
    penetrance: np.ndarray
    background_snps: int
    seed: int = 0
    background_maf: object = None
    background_maf_range: tuple = (0.05, 0.5)
    prevalence: float = None
    heritability: float = None

    def __post_init__(self):
        self.interacting_snps = tuple(int(j) for j in self.interacting_snps)
        self.maf = tuple(float(m) for m in self.maf)
        self.penetrance = np.asarray(self.penetrance, dtype=float).ravel()
        k = len(self.interacting_snps)
        if k < 1:
            raise PreconditionError("at least one interacting SNP is required")
        if len(self.maf) != k:
            raise PreconditionError(f"{len(self.maf)} MAFs for {k} interacting SNPs")
        if self.penetrance.shape != (3**k,):
            raise PreconditionError(
                f"penetrance table needs {3**k} entries, got {self.penetrance.size}"
            )
        if np.any((self.penetrance < 0) | (self.penetrance > 1)):
            raise PreconditionError("penetrance entries must lie in [0, 1]")
        for m in self.maf:
            if not 0 < m <= 0.5:
                raise PreconditionError(f"MAF {m} outside (0, 0.5]")
        if len(set(self.interacting_snps)) != k:
            raise PreconditionError("interacting SNP indices must be distinct")
        if self.background_maf is not None:
            bg = np.atleast_1d(np.asarray(self.background_maf, dtype=float))
            if bg.size not in (1, self.background_snps):
                raise PreconditionError(
                    f"background_maf needs 1 or {self.background_snps} values, got {bg.size}"
                )
            if np.any((bg <= 0) | (bg > 0.5)):
                raise PreconditionError("background MAFs must lie in (0, 0.5]")
        if self.background_snps < 0:
            raise PreconditionError("background_snps must be >= 0")
        for j in self.interacting_snps:
            if not 0 <= j < self.n_snps:
                raise PreconditionError(
                    f"interacting SNP {j} outside [0, {self.n_snps})"
                )

    @property
    def n_snps(self):
        return self.background_snps + len(self.interacting_snps)


def xor_penetrance(low=0.1, high=0.9):
    """Two-locus table: ``high`` when the genotypes differ, ``low`` otherwise."""
    g1, g2 = np.divmod(np.arange(9), 3)
    return np.where(g1 != g2, high, low)


def simulate_dataset(model, n_case, n_control, *, max_draws=None):
    """Sample a case/control dataset from ``model``.

    Joint genotypes of the interacting SNPs are drawn under Hardy-Weinberg
    equilibrium and each draw becomes a case with probability equal to its
    penetrance. Draws are accepted until both class quotas are full; rows keep
    acceptance order. Background SNPs are independent of status, so they are
    drawn afterwards, one MAF per SNP.

    ``max_draws`` bounds the rejection sampler (default ``1000 * (n_case +
    n_control)``).
    """
    if n_case < 1 or n_control < 1:
        raise PreconditionError("n_case and n_control must both be >= 1")
    n_total = n_case + n_control
    if max_draws is None:
        max_draws = 1000 * n_total
    rng = np.random.default_rng(model.seed)
    k = len(model.interacting_snps)
    geno_probs = hwe_genotype_probs(model.maf)

    accepted = []
    labels = []
    need = {0: n_control, 1: n_case}
    drawn = 0
    block = max(64, n_total)
    while need[0] or need[1]:
        if drawn >= max_draws:
            raise UnsatisfiableSimulationError(
                f"rejection budget of {max_draws} draws exhausted with "
                f"{need[1]} cases and {need[0]} controls still missing"
            )
        size = min(block, max_draws - drawn)
        joint = np.stack(
            [rng.choice(3, size=size, p=geno_probs[i]) for i in range(k)], axis=1
        )
        cell = joint @ (3 ** np.arange(k - 1, -1, -1))
        is_case = rng.random(size) < model.penetrance[cell]
        drawn += size
        for g, c in zip(joint, is_case.astype(int)):
            if need[c]:
                need[c] -= 1
                accepted.append(g)
                labels.append(c)
                if not (need[0] or need[1]):
                    break

    X = np.empty((n_total, model.n_snps), dtype=np.int8)
    X[:, list(model.interacting_snps)] = np.array(accepted, dtype=np.int8)
    background = [j for j in range(model.n_snps) if j not in set(model.interacting_snps)]
    if model.background_maf is None:
        low, high = model.background_maf_range
        bg_maf = rng.uniform(low, high, size=len(background))
    else:
        bg_maf = np.broadcast_to(np.asarray(model.background_maf, float), len(background))
    for j, m in zip(background, bg_maf):
        X[:, j] = rng.choice(3, size=n_total, p=hwe_genotype_probs(m))
    return GenotypeMatrix.from_arrays(X, labels)


# -- simulator config -------------------------------------------------------

_SIM_KEYS = {
    "n_snps", "n_case", "n_control", "interacting", "maf", "penetrance",
    "background_maf", "background_maf_range", "seed", "prevalence", "heritability", "max_draws",
}


def _floats(text):
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def read_key_value_config(path):
    """Parse a section-less ``key = value`` file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None
    )
    parser.optionxform = str
    parser.read_string("[config]\n" + Path(path).read_text())
    return dict(parser["config"])


def load_simulation_config(path):
    """Read a simulator config and return ``(model, n_case, n_control, max_draws)``.

    Keys::

        n_snps         = 100            # total columns l
        n_case         = 300
        n_control      = 300
        interacting    = 10, 42         # planted column indices
        maf            = 0.2, 0.2       # one per interacting SNP
        penetrance     = 0.1,0.9,0.9, 0.9,0.1,0.9, 0.9,0.9,0.1
        background_maf = 0.25           # optional: one value, or one per background SNP
        background_maf_range = 0.05, 0.5  # used when background_maf is absent
        seed           = 7
        prevalence     = 0.7            # optional, metadata
        heritability   = 0.2            # optional, metadata
        max_draws      = 600000         # optional rejection budget
    """
    raw = read_key_value_config(path)
    unknown = set(raw) - _SIM_KEYS
    if unknown:
        raise PreconditionError(f"unknown simulator config keys: {sorted(unknown)}")
    missing = {"n_snps", "n_case", "n_control", "interacting", "maf", "penetrance"} - set(raw)
    if missing:
        raise PreconditionError(f"missing simulator config keys: {sorted(missing)}")
    interacting = [int(v) for v in _floats(raw["interacting"])]
    bg = _floats(raw["background_maf"]) if "background_maf" in raw else None
    model = PenetranceModel(
        interacting_snps=interacting,
        maf=_floats(raw["maf"]),
        penetrance=_floats(raw["penetrance"]),
        background_snps=int(raw["n_snps"]) - len(interacting),
        seed=int(raw.get("seed", 0)),
        background_maf=bg if bg is None or len(bg) > 1 else bg[0],
        background_maf_range=tuple(_floats(raw.get("background_maf_range", "0.05, 0.5"))),
        prevalence=float(raw["prevalence"]) if "prevalence" in raw else None,
        heritability=float(raw["heritability"]) if "heritability" in raw else None,
    )
    max_draws = int(raw["max_draws"]) if "max_draws" in raw else None
    return model, int(raw["n_case"]), int(raw["n_control"]), max_draws


# -- minibatches ------------------------------------------------------------


@dataclass(frozen=True)
class Minibatch:
    """K genotype rows, the first K/2 from cases and the rest from controls."""

    rows: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    @property
    def K(self):
        return self.rows.shape[0]


def sample_minibatch(data, K, rng):
    """Draw K/2 case rows and K/2 control rows, without replacement within the batch."""
    if K < 2 or K % 2:
        raise PreconditionError(f"batch size K must be even and >= 2, got {K}")
    half = K // 2
    if half > data.t2 or half > data.t1:
        raise PreconditionError(
            f"K/2 = {half} exceeds class sizes (cases={data.t2}, controls={data.t1})"
        )
    rng = check_random_state(rng)
    cases = rng.choice(data.case_rows, size=half, replace=False)
    controls = rng.choice(data.control_rows, size=half, replace=False)
    idx = np.concatenate([cases, controls])
    return Minibatch(data.genotypes[idx], data.labels[idx], idx)


def encode_genotypes(batch, scheme="raw_codes"):
    """Encode batch rows as floats.

    ``raw_codes`` gives a K x l array of 0.0/1.0/2.0; ``one_hot`` gives
    K x 3l where columns 3j..3j+2 are the indicator vector of SNP j.
    """
    rows = batch.rows if isinstance(batch, Minibatch) else np.asarray(batch)
    if rows.ndim != 2:
        raise PreconditionError(f"expected a 2-D batch, got shape {rows.shape}")
    if scheme == "raw_codes":
        return rows.astype(np.float64)
    if scheme == "one_hot":
        K, l = rows.shape
        out = np.zeros((K, l, 3))
        out[np.arange(K)[:, None], np.arange(l)[None, :], rows] = 1.0
        return out.reshape(K, 3 * l)
    raise PreconditionError(f"unknown encoding scheme {scheme!r}")
