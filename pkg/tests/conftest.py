import numpy as np
import pytest

from epirl.data import GenotypeMatrix, PenetranceModel, simulate_dataset, xor_penetrance

PLANTED = (10, 42)


@pytest.fixture(scope="session")
def planted():
    """100 SNPs, 300 cases / 300 controls, XOR pair planted at columns 10 and 42."""
    model = PenetranceModel(
        interacting_snps=PLANTED,
        maf=(0.2, 0.2),
        penetrance=xor_penetrance(0.1, 0.9),
        background_snps=98,
        seed=7,
        prevalence=0.7,
        heritability=0.2,
    )
    return simulate_dataset(model, n_case=300, n_control=300)


@pytest.fixture
def toy():
    """Six rows on two SNPs: (0,0) x2 case + 1 control, (1,1) x2 control + 1 case."""
    X = [[0, 0], [0, 0], [0, 0], [1, 1], [1, 1], [1, 1]]
    y = [1, 1, 0, 0, 0, 1]
    return GenotypeMatrix.from_arrays(X, y)


def random_dataset(rng, max_snps=10, max_rows=200, min_snps=2):
    n_snps = int(rng.integers(min_snps, max_snps + 1))
    n_rows = int(rng.integers(4, max_rows + 1))
    X = rng.integers(0, 3, size=(n_rows, n_snps))
    y = rng.integers(0, 2, size=n_rows)
    y[0], y[1] = 0, 1
    return GenotypeMatrix.from_arrays(X, y)


_CRITERIA = {}


@pytest.fixture
def record():
    """Log an acceptance outcome so the terminal summary can list it."""

    def _record(number, name, passed, detail=""):
        _CRITERIA[number] = (name, bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        name, passed, detail = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {name}: {detail}")
