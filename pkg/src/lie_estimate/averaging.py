"""Averaging and fusion of group-valued estimates.

Three flavors:

  * karcher_mean       - weighted intrinsic mean via fixed-step gradient
                         descent on the group.
  * bayesian_fuse      - Gauss-Newton fusion of several (mean, covariance)
                         estimates into one, with the final Hessian inverse
                         returned as the fused covariance.
  * landmark_pose_fusion - consensus base pose from landmark observations
                         seen both in the world and in the body frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import groups as G

_REG = 1e-12


class ConvergenceFailure(G.LieGroupError):
    """Iteration budget exhausted; carries the final residual norm."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class SingularFusion(G.LieGroupError):
    pass


@dataclass(frozen=True)
class AveragingConfig:
    step_size: float = 0.1
    tolerance: float = 1e-4
    max_iters: int = 100

    def __post_init__(self):
        if not 0.0 < self.step_size <= 1.0:
            raise G.InvalidArgumentError("step_size must be in (0, 1]")
        if self.tolerance <= 0.0:
            raise G.InvalidArgumentError("tolerance must be positive")
        if self.max_iters < 1:
            raise G.InvalidArgumentError("max_iters must be at least 1")


def _normalized_weights(weights, n):
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise G.InvalidArgumentError("weights length must match element count")
    if np.any(w < 0.0):
        raise G.InvalidArgumentError("weights must be nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise G.InvalidArgumentError("weights must not all be zero")
    return w / total


def karcher_mean(elements, weights=None, cfg: AveragingConfig = None) -> G.GroupElement:
    """Weighted intrinsic mean of group elements.

    Starting from the first element, repeatedly steps along the weighted
    average of the tangent residuals until its norm drops below the
    configured tolerance.
    """
    if len(elements) == 0:
        raise G.InvalidArgumentError("need at least one element")
    cfg = cfg or AveragingConfig()
    w = _normalized_weights(weights, len(elements))
    mean = elements[0]
    if len(elements) == 1:
        return mean
    residual = np.inf
    for _ in range(cfg.max_iters):
        r = np.zeros(mean.tag.algebra_dim)
        for wi, x in zip(w, elements):
            r += wi * G.logvee(G.compose(G.inverse(mean), x))
        residual = np.linalg.norm(r)
        if residual < cfg.tolerance:
            return mean
        mean = G.compose(mean, G.exp(G.TangentVector(mean.tag, cfg.step_size * r)))
    raise ConvergenceFailure(
        f"mean did not converge in {cfg.max_iters} iterations "
        f"(residual {residual:.3e})", residual)


def bayesian_fuse(estimates, cfg: AveragingConfig = None):
    """Fuse (mean, covariance) pairs into a single Gaussian on the group.

    Gauss-Newton on the sum of squared whitened log-residuals. Returns the
    fused mean plus the inverse of the final information matrix.
    """
    if len(estimates) == 0:
        raise G.InvalidArgumentError("need at least one estimate")
    cfg = cfg or AveragingConfig()
    tag = estimates[0][0].tag
    d = tag.algebra_dim
    infos = []
    for x, p in estimates:
        if x.tag != tag:
            raise G.InvalidArgumentError("all estimates must share one group")
        p = np.asarray(p, dtype=float)
        if p.shape != (d, d):
            raise G.InvalidArgumentError("covariance shape mismatch")
        infos.append(np.linalg.inv(p + _REG * np.eye(d)))

    mean = estimates[0][0]
    for _ in range(cfg.max_iters):
        hess = np.zeros((d, d))
        grad = np.zeros(d)
        for (x, _), info in zip(estimates, infos):
            eps = G.logvee(G.compose(G.inverse(mean), x))
            jinv = G.left_jacobian_inv(G.TangentVector(tag, eps))
            hess += jinv.T @ info @ jinv
            grad += jinv.T @ info @ eps
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as e:
            raise SingularFusion("information matrix is singular") from e
        if not np.all(np.isfinite(step)):
            raise SingularFusion("information matrix is singular")
        mean = G.compose(mean, G.exp(G.TangentVector(tag, step)))
        if np.linalg.norm(step) < cfg.tolerance:
            cov = np.linalg.inv(hess)
            return mean, (cov + cov.T) / 2.0
    raise ConvergenceFailure(
        f"fusion did not converge in {cfg.max_iters} iterations",
        float(np.linalg.norm(step)))


def landmark_pose_fusion(landmark_poses_world, landmark_poses_body,
                         cfg: AveragingConfig = None) -> G.GroupElement:
    """Base pose from landmark poses known in the world and seen from the body.

    Each pair yields a candidate base pose world_pose * body_pose^-1; the
    candidates are averaged with inverse-distance weights, nearer landmarks
    counting more.
    """
    if len(landmark_poses_world) == 0:
        raise G.InvalidArgumentError("need at least one landmark")
    if len(landmark_poses_world) != len(landmark_poses_body):
        raise G.InvalidArgumentError("landmark lists must have equal length")
    candidates = []
    inv_dist = []
    for hw, hb in zip(landmark_poses_world, landmark_poses_body):
        dist = np.linalg.norm(G.se3_translation(hb))
        if dist <= 1e-9:
            raise G.InvalidArgumentError("landmark at zero distance from body")
        candidates.append(G.compose(hw, G.inverse(hb)))
        inv_dist.append(1.0 / dist)
    if len(candidates) == 1:
        return candidates[0]
    return karcher_mean(candidates, inv_dist, cfg)
