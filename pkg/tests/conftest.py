import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ggd", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ggd")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symmetric(rng, n, spectrum=None):
    """Symmetric matrix Q diag(spectrum) Q^T with a Haar-random Q."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q *= np.sign(np.diag(r))
    lam = rng.standard_normal(n) if spectrum is None else np.asarray(spectrum, dtype=float)
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)


def principal_angle(x, y):
    """Largest principal angle between the column spans of x and y (radians)."""
    qx, _ = np.linalg.qr(x)
    qy, _ = np.linalg.qr(y)
    # the sine form stays accurate for tiny angles, unlike arccos of the cosines
    rest = qy - qx @ (qx.T @ qy)
    return float(np.arcsin(min(1.0, np.linalg.norm(rest, 2))))
