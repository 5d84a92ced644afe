import numpy as np
import pytest

from dgk import SpatialDetectorParams


def random_spd(rng, n, lo=0.5, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def random_sym(rng, n, scale=0.5):
    M = rng.standard_normal((n, n)) * scale
    return 0.5 * (M + M.T)


def random_state(rng, n):
    return SpatialDetectorParams(
        q=rng.standard_normal(n),
        A=random_spd(rng, n),
        B=random_sym(rng, n),
        p=rng.standard_normal(n),
        phi=float(rng.uniform(-1, 1)),
    )


def state_dict(s):
    return {"q": s.q, "A": s.A, "B": s.B, "p": s.p, "phi": s.phi}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
