import numpy as np
import pytest

from liftlqr.model import PeriodicSystem

GOLDEN = (1 + np.sqrt(5)) / 2


def scalar_system(a, b, q, r) -> PeriodicSystem:
    """Periodic scalar system from per-phase sequences (or scalars for p=1)."""
    a, b, q, r = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, b, q, r))
    return PeriodicSystem(a[:, None, None], b[:, None, None], q[:, None, None], r[:, None, None])


def rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture
def golden():
    return scalar_system(1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def ones2():
    return scalar_system([1, 1], [1, 1], [1, 1], [1, 1])
