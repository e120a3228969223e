import numpy as np
import pytest

from maxcon.dataio import GeneratorSpec, generate_synthetic
from maxcon.model import ProblemInstance


def line_instance(bs, eps=0.1, a=None):
    """d=1 instance with regressors ``a`` (all ones by default) and responses ``bs``."""
    bs = np.asarray(bs, dtype=float)
    A = np.ones((bs.size, 1)) if a is None else np.asarray(a, dtype=float).reshape(-1, 1)
    return ProblemInstance.linear(A, bs, eps)


def small_instance(seed, d=2, n=None, o=None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 16)) if n is None else n
    o = int(rng.integers(0, 5)) if o is None else o
    inst, _ = generate_synthetic(GeneratorSpec(n=n, d=d, o=o, seed=seed))
    return inst


@pytest.fixture
def two_point():
    return line_instance([0.0, 2.0])


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
