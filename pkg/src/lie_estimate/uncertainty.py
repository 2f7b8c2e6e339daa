"""Concentrated Gaussian distributions on matrix Lie groups.

A distribution is a mean on the group plus a covariance on the algebra. The
``side`` tag records which side the perturbation multiplies on:

  LocalRight:  X = mean * exp(eps)
  GlobalLeft:  X = exp(eps) * mean

with eps ~ N(0, P). Default is LocalRight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import groups as G

_JITTER = 1e-12


class PerturbationSide(Enum):
    LOCAL_RIGHT = "local_right"
    GLOBAL_LEFT = "global_left"


class TransportDirection(Enum):
    # RIGHT_TO_LEFT: from the LocalRight convention to GlobalLeft.
    RIGHT_TO_LEFT = "right_to_left"
    LEFT_TO_RIGHT = "left_to_right"


@dataclass(frozen=True)
class GaussianOnGroup:
    mean: G.GroupElement
    covariance: np.ndarray
    side: PerturbationSide = PerturbationSide.LOCAL_RIGHT

    def __post_init__(self):
        p = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "covariance", p)
        d = self.mean.tag.algebra_dim
        if p.shape != (d, d):
            raise G.InvalidArgumentError(
                f"covariance shape {p.shape} does not match algebra dim {d}")
        if np.abs(p - p.T).max() > 1e-9:
            raise G.InvalidArgumentError("covariance is not symmetric")
        if np.linalg.eigvalsh((p + p.T) / 2.0).min() < -1e-9:
            raise G.InvalidArgumentError("covariance is not positive semidefinite")


def _chol_with_jitter(p: np.ndarray) -> np.ndarray:
    sym = (p + p.T) / 2.0
    try:
        return np.linalg.cholesky(sym + _JITTER * np.eye(p.shape[0]))
    except np.linalg.LinAlgError as e:
        raise G.InvalidArgumentError("covariance is not positive semidefinite") from e


def sample(dist: GaussianOnGroup, n: int, seed=None) -> list:
    """Draw n group elements; deterministic for a given seed or Generator."""
    if n < 1:
        raise G.InvalidArgumentError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chol = _chol_with_jitter(dist.covariance)
    p = dist.covariance.shape[0]
    out = []
    for _ in range(n):
        eps = chol @ rng.standard_normal(p)
        step = G.exp(G.TangentVector(dist.mean.tag, eps))
        if dist.side is PerturbationSide.LOCAL_RIGHT:
            out.append(G.compose(dist.mean, step))
        else:
            out.append(G.compose(step, dist.mean))
    return out


def transport_covariance(p: np.ndarray, x_hat: G.GroupElement,
                         direction: TransportDirection) -> np.ndarray:
    """Move a covariance between the LocalRight and GlobalLeft conventions.

    If X = X_hat exp(eps_r) = exp(eps_l) X_hat then eps_l = Adj(X_hat) eps_r,
    so RIGHT_TO_LEFT conjugates by Adj(X_hat) and LEFT_TO_RIGHT by
    Adj(X_hat^-1). The result is symmetrized to bound floating-point drift.
    """
    p = np.asarray(p, dtype=float)
    d = x_hat.tag.algebra_dim
    if p.shape != (d, d):
        raise G.InvalidArgumentError(
            f"covariance shape {p.shape} does not match algebra dim {d}")
    if direction is TransportDirection.RIGHT_TO_LEFT:
        adj = G.adjoint(x_hat)
    else:
        adj = G.adjoint(G.inverse(x_hat))
    out = adj @ p @ adj.T
    return (out + out.T) / 2.0
