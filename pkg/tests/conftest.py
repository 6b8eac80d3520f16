import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hurwitz_poly(rng, degree, lo=0.2, hi=5.0):
    """Monic polynomial with roots drawn in the open left half-plane (real parts in [-hi, -lo])."""
    roots = []
    while len(roots) < degree:
        if degree - len(roots) >= 2 and rng.random() < 0.5:
            re, im = -rng.uniform(lo, hi), rng.uniform(0.1, 5.0)
            roots += [complex(re, im), complex(re, -im)]
        else:
            roots.append(-rng.uniform(lo, hi))
    return np.real(np.poly(roots))


def random_hurwitz_matrix(rng, n):
    # similarity transform of a stable block-diagonal matrix
    d = np.diag(-rng.uniform(0.5, 5.0, n))
    for i in range(0, n - 1, 2):
        if rng.random() < 0.5:
            w = rng.uniform(0.1, 3.0)
            d[i, i + 1], d[i + 1, i] = w, -w
    t = rng.normal(size=(n, n)) + n * np.eye(n)
    return t @ d @ np.linalg.inv(t)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
