import numpy as np
import pytest

from moreau_slab.linmodel import Dataset, HyperState

ACCEPTANCE_LINES = []


def philox(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def small_instance(seed, d=None, n=None):
    """Random small regression problem with a random elastic-net hyperstate."""
    rng = philox(seed)
    d = int(rng.integers(1, 4)) if d is None else d
    n = int(rng.integers(8, 20)) if n is None else n
    X = rng.standard_normal((n, d))
    if d > 1:
        X[:, 1] = 0.5 * X[:, 0] + X[:, 1]
    theta = np.where(rng.random(d) < 0.5, rng.normal(0, 1.5, d), 0.0)
    z = X @ theta + rng.standard_normal(n)
    data = Dataset(X, z, float(rng.uniform(0.5, 2.0)))
    phi = HyperState(
        q=float(rng.uniform(0.2, 0.7)),
        lam1=float(rng.uniform(0.3, 2.0)),
        lam2=float(rng.uniform(0.3, 2.0)),
        alpha=float(rng.choice([1.0, rng.uniform(0.3, 1.0)])),
    )
    return data, phi


@pytest.fixture
def rng():
    return philox(12345)


@pytest.fixture
def acceptance():
    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
