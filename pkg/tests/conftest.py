import numpy as np
import pytest

from lie_estimate import groups as G


def series_expm(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Truncated matrix-exponential series, independent of the kernel."""
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


def series_left_jacobian(v: G.TangentVector, terms: int = 30) -> np.ndarray:
    """Left Jacobian via the ad-series sum ad^k / (k+1)!."""
    ad = adjoint_algebra(v)
    out = np.eye(ad.shape[0])
    term = np.eye(ad.shape[0])
    for k in range(1, terms + 1):
        term = term @ ad / (k + 1)
        out = out + term
    return out


def adjoint_algebra(v: G.TangentVector) -> np.ndarray:
    """Small adjoint ad_v, computed columnwise from the bracket."""
    p = v.tag.algebra_dim
    a = G.hat(v)
    out = np.zeros((p, p))
    for i in range(p):
        e = np.zeros(p)
        e[i] = 1.0
        b = G.hat(G.TangentVector(v.tag, e))
        out[:, i] = G.vee(a @ b - b @ a, v.tag).components
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ALL_TAGS = [
    G.SO3,
    G.SE3,
    G.SEk3(2),
    G.SEk3(3),
    G.Tn(3),
    G.Tn(6),
    G.composite(G.SEk3(2), G.SE3, G.Tn(6)),
]


def random_tangent(tag, rng, scale=1.0):
    return G.TangentVector(tag, rng.uniform(-scale, scale, tag.algebra_dim))


def random_element(tag, rng, scale=1.0):
    return G.exp(random_tangent(tag, rng, scale))
