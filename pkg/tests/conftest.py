import numpy as np
import pytest
from hypothesis import strategies as st

from maxtrust.maxplus import EPS

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
scalars = st.one_of(st.just(EPS), finite)

# integer-valued doubles keep ⊗ exact so laws can be checked with ==
exact = st.one_of(st.just(EPS), st.integers(-1000, 1000).map(float))


@st.composite
def matrices(draw, rows=None, cols=None, elements=exact, max_side=5):
    n = rows if rows is not None else draw(st.integers(1, max_side))
    m = cols if cols is not None else draw(st.integers(1, max_side))
    return np.array(draw(st.lists(st.lists(elements, min_size=m, max_size=m), min_size=n, max_size=n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def rankings_agree(values, oracle, tie_tol=1e-9):
    """Every agent pair the oracle separates by more than ``tie_tol`` must be
    ordered the same way by ``values``."""
    values, oracle = np.asarray(values), np.asarray(oracle)
    with np.errstate(invalid="ignore"):
        do = oracle[:, None] - oracle[None, :]
    with np.errstate(invalid="ignore"):
        dv = values[:, None] - values[None, :]
    # ε − ε is nan: two ε entries tie, ε against a finite value is ordered
    do = np.where(np.isnan(do), 0.0, do)
    dv = np.where(np.isnan(dv), 0.0, dv)
    clear = np.abs(do) > tie_tol
    return bool(np.all(np.sign(dv[clear]) == np.sign(do[clear])))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance(pytestconfig):
    """``report(criterion, passed, detail)`` records one summary line."""
    lines = pytestconfig.stash.setdefault(_ACCEPTANCE, [])

    def report(criterion, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}"
        lines.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)
