"""Base estimator for a sensorized human walking with instrumented shoes.

State: base extended pose (rotation, position, velocity), eight candidate
contact points (four per shoe, left then right), the left-trivialized base
angular velocity, and both shoe orientations. The error lives on the left
of the mean (X = exp(err) * mean), 42 dims ordered:
position(3) rotation(3) velocity(3) contacts(24) angular-rate(3)
left-shoe rotation(3) right-shoe rotation(3).

Updates come in three flavors, dispatched to the matching engine:
contact-point position and both zero-velocity updates act on the raw state
columns; terrain height and the base gyro act on body-frame quantities and
wrap a covariance transport; foot rotation, contact plane, and the
non-invariant terrain variant are plain group-valued measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import filtercore as FC
from .. import groups as G
from .. import uncertainty as U
from .noise import NoiseConfig

N_VERTICES = 8
_TAG = G.composite(G.SEk3(10), G.Tn(3), G.SO3, G.SO3)
_DIM = 42        # algebra dimension
_MDIM = 23       # stacked matrix dimension

# error-vector slots
_P = slice(0, 3)
_R = slice(3, 6)
_V = slice(6, 9)
_W = slice(33, 36)
_ZL = slice(36, 39)
_ZR = slice(39, 42)

# homogeneous column positions inside the big state matrix
_COL_P = 3
_COL_V = 4
_COL_D0 = 5
_ROW_W = 13      # translation-block rows for the angular-rate slot
_COL_W_ONE = 16

HUMAN_NOISE = NoiseConfig(foot_linear=1e-3, foot_angular=1e-3)


def _vslot(i):
    if not 0 <= i < N_VERTICES:
        raise G.InvalidArgumentError(f"vertex index {i} out of range")
    return slice(9 + 3 * i, 12 + 3 * i)


@dataclass(frozen=True)
class HumanEkfState:
    element: G.GroupElement
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "covariance", np.asarray(self.covariance, float))
        if self.element.tag != _TAG:
            raise G.InvalidArgumentError("state element has the wrong group")
        if self.covariance.shape != (_DIM, _DIM):
            raise G.InvalidArgumentError("covariance must be 42x42")

    def _parts(self):
        return G.composite_parts(self.element)

    @property
    def base_rotation(self):
        return self._parts()[0].matrix[:3, :3]

    @property
    def base_position(self):
        return self._parts()[0].matrix[:3, 3]

    @property
    def base_velocity(self):
        return self._parts()[0].matrix[:3, 4]

    @property
    def base_pose(self):
        return G.se3_element(self.base_rotation, self.base_position)

    def vertex_position(self, i):
        _vslot(i)
        return self._parts()[0].matrix[:3, 5 + i]

    @property
    def angular_velocity(self):
        return self._parts()[1].matrix[:3, 3]

    def foot_rotation(self, side):
        return self._parts()[2 if side == "left" else 3].matrix


def human_initial_state(base_pose, velocity, vertex_positions,
                        angular_velocity, left_foot_rotation,
                        right_foot_rotation,
                        noise: NoiseConfig = HUMAN_NOISE) -> HumanEkfState:
    vertices = [np.asarray(v, float).reshape(3) for v in vertex_positions]
    if len(vertices) != N_VERTICES:
        raise G.InvalidArgumentError(f"need {N_VERTICES} vertex positions")
    r = base_pose.matrix[:3, :3]
    cols = [G.se3_translation(base_pose),
            np.asarray(velocity, float).reshape(3)] + vertices
    core = G.sek3_element(r, cols)
    element = G.composite_element(_TAG, [
        core, G.tn_element(np.asarray(angular_velocity, float).reshape(3)),
        G.so3_element(left_foot_rotation), G.so3_element(right_foot_rotation)])
    stds = np.concatenate([
        np.full(3, noise.prior_position), np.full(3, noise.prior_rotation),
        np.full(3, noise.prior_velocity),
        np.full(24, noise.prior_position),
        np.full(3, noise.prior_velocity),
        np.full(6, noise.prior_rotation)])
    return HumanEkfState(element, np.diag(stds ** 2))


def human_ekf_predict(state, dt, noise: NoiseConfig = HUMAN_NOISE,
                      foot_rotations_in_base=None,
                      contacts=None) -> HumanEkfState:
    """Constant-velocity prediction with first-order covariance propagation.

    foot_rotations_in_base optionally maps "left"/"right" to the base-to-shoe
    rotation used to lift the contact-point velocity noise. contacts
    optionally maps "left"/"right" to booleans; a swinging shoe gets its
    contact-point and orientation noise inflated so the next stance
    measurements can re-seat it.
    """
    if dt <= 0.0:
        raise G.InvalidArgumentError("dt must be positive")
    parts = G.composite_parts(state.element)
    r, p, v = state.base_rotation, state.base_position, state.base_velocity
    w = state.angular_velocity
    cols = [p + v * dt, v] + [state.vertex_position(i) for i in range(N_VERTICES)]
    core = G.sek3_element(r @ G.exp(G.TangentVector(G.SO3, w * dt)).matrix, cols)
    mean = G.composite_element(_TAG, [core, *parts[1:]])

    f_c = np.zeros((_DIM, _DIM))
    f_c[_P, _V] = np.eye(3)
    f_c[_P, _W] = G.skew(p) @ r
    f_c[_R, _W] = r
    f_c[_V, _W] = G.skew(v) @ r
    for i in range(N_VERTICES):
        f_c[_vslot(i), _W] = G.skew(state.vertex_position(i)) @ r

    q_c = np.zeros((_DIM, _DIM))
    q_c[_V, _V] = noise.base_linear_rate ** 2 * np.eye(3)
    q_c[_W, _W] = noise.base_angular_rate ** 2 * np.eye(3)
    vert_cov = noise.foot_linear ** 2 * np.eye(3)
    scales = {"left": 1.0, "right": 1.0}
    if contacts is not None:
        for side in scales:
            if not contacts.get(side, False):
                scales[side] = noise.swing_scale ** 2
    for i in range(N_VERTICES):
        side = "left" if i < 4 else "right"
        lift = np.eye(3)
        if foot_rotations_in_base is not None:
            lift = np.asarray(foot_rotations_in_base[side], float)
        q_c[_vslot(i), _vslot(i)] = scales[side] * lift @ vert_cov @ lift.T
    q_c[_ZL, _ZL] = scales["left"] * noise.foot_angular ** 2 * np.eye(3)
    q_c[_ZR, _ZR] = scales["right"] * noise.foot_angular ** 2 * np.eye(3)
    adj = G.adjoint(state.element)
    q_hat = adj @ q_c @ adj.T
    f_k = np.eye(_DIM) + f_c * dt
    cov = f_k @ state.covariance @ f_k.T + f_k @ (q_hat * dt) @ f_k.T
    return HumanEkfState(mean, (cov + cov.T) / 2.0)


def _invariant_update(state, z, b, h, n, side, rows, gate=None):
    """Raw-column update; 'left'-side observations transport the covariance
    into the local frame and back."""
    selector = np.zeros((3, _MDIM))
    selector[:, rows] = np.eye(3)
    cov = state.covariance
    if side == "left":
        cov = U.transport_covariance(cov, state.element,
                                     U.TransportDirection.LEFT_TO_RIGHT)
    belief = FC.invekf_update(FC.BeliefState(state.element, cov), z, b, h, n,
                              side, selector=selector, gate=gate)
    cov = belief.covariance
    if side == "left":
        cov = U.transport_covariance(cov, belief.mean,
                                     U.TransportDirection.RIGHT_TO_LEFT)
    return HumanEkfState(belief.mean, cov)


def human_update_relative_contact_position(state, vertex, rel_position,
                                           covariance, gate=None):
    """Contact-point position seen from the base via joint kinematics.

    rel_position is the base-frame vector to vertex i; covariance is its
    base-frame noise (typically the joint noise through the position rows of
    the relative Jacobian).
    """
    b = np.zeros(_MDIM)
    b[_COL_P] = 1.0
    _vslot(vertex)
    b[_COL_D0 + vertex] = -1.0
    z = b.copy()
    z[0:3] = np.asarray(rel_position, float).reshape(3)
    h = np.zeros((3, _DIM))
    h[:, _P] = np.eye(3)
    h[:, _vslot(vertex)] = -np.eye(3)
    r = state.base_rotation
    n = r @ np.asarray(covariance, float) @ r.T + 1e-12 * np.eye(3)
    return _invariant_update(state, z, b, h, n, "right", slice(0, 3), gate)


def human_update_zupt_linear(state, body_velocity, covariance, gate=None):
    """Zero-velocity information expressed as the measured body-frame base
    velocity (zero during flat-foot contact)."""
    b = np.zeros(_MDIM)
    b[_COL_V] = -1.0
    z = b.copy()
    z[0:3] = np.asarray(body_velocity, float).reshape(3)
    h = np.zeros((3, _DIM))
    h[:, _V] = -np.eye(3)
    r = state.base_rotation
    n = r @ np.asarray(covariance, float) @ r.T + 1e-12 * np.eye(3)
    return _invariant_update(state, z, b, h, n, "right", slice(0, 3), gate)


def human_update_zupt_angular(state, body_angular_velocity, covariance,
                              gate=None):
    """Angular-rate pseudo-measurement (zero during flat-foot contact)."""
    b = np.zeros(_MDIM)
    b[_COL_W_ONE] = 1.0
    z = b.copy()
    z[_ROW_W:_ROW_W + 3] = -np.asarray(body_angular_velocity, float).reshape(3)
    h = np.zeros((3, _DIM))
    h[:, _W] = np.eye(3)
    n = np.asarray(covariance, float)
    return _invariant_update(state, z, b, h, n, "right",
                             slice(_ROW_W, _ROW_W + 3), gate)


def human_update_base_gyro(state, gyro_in_base, covariance, gate=None):
    """Direct measurement of the angular-rate state from the base IMU."""
    b = np.zeros(_MDIM)
    b[_COL_W_ONE] = 1.0
    z = b.copy()
    z[_ROW_W:_ROW_W + 3] = np.asarray(gyro_in_base, float).reshape(3)
    h = np.zeros((3, _DIM))
    h[:, _W] = -np.eye(3)
    n = np.asarray(covariance, float)
    return _invariant_update(state, z, b, h, n, "left",
                             slice(_ROW_W, _ROW_W + 3), gate)


def human_update_terrain_height(state, vertex, height,
                                noise: NoiseConfig = HUMAN_NOISE,
                                invariant=True, gate=None):
    """Snap a contact point's height to a known ground elevation.

    Only the vertical component is informative; the horizontal components
    are copied from the estimate and carry inflated noise. The invariant
    flag switches between the body-frame update (with covariance transport)
    and the plain world-frame one.
    """
    d_hat = state.vertex_position(vertex)
    target = np.array([d_hat[0], d_hat[1], float(height)])
    cov = np.diag([1e6 * noise.terrain_height ** 2,
                   1e6 * noise.terrain_height ** 2,
                   noise.terrain_height ** 2])
    if invariant:
        b = np.zeros(_MDIM)
        b[_COL_D0 + vertex] = 1.0
        z = b.copy()
        z[0:3] = target
        h = np.zeros((3, _DIM))
        h[:, _vslot(vertex)] = -np.eye(3)
        r = state.base_rotation
        n = r.T @ cov @ r
        return _invariant_update(state, z, b, h, n, "left", slice(0, 3), gate)
    h = np.zeros((3, _DIM))
    h[:, _R] = -G.skew(d_hat)
    h[:, _vslot(vertex)] = np.eye(3)
    model = FC.GroupMeasurementModel(
        h=lambda x: G.tn_element(state.vertex_position(vertex)),
        jacobian=lambda x: h, noise=lambda x: cov)
    belief = FC.dlgekf_rie_update(
        FC.BeliefState(state.element, state.covariance), model,
        G.tn_element(target), gate=gate)
    return HumanEkfState(belief.mean, belief.covariance)


def human_update_relative_foot_rotation(state, side, measured_rotation,
                                        covariance, gate=None):
    """Base-to-shoe orientation from joint kinematics, as a rotation-group
    measurement."""
    z_f = state.foot_rotation(side)
    r = state.base_rotation
    h = np.zeros((3, _DIM))
    h[:, _R] = -z_f.T
    h[:, _ZL if side == "left" else _ZR] = z_f.T
    model = FC.GroupMeasurementModel(
        h=lambda x: G.so3_element(r.T @ z_f),
        jacobian=lambda x: h,
        noise=lambda x: np.asarray(covariance, float) + 1e-12 * np.eye(3))
    belief = FC.dlgekf_rie_update(
        FC.BeliefState(state.element, state.covariance), model,
        G.so3_element(measured_rotation), gate=gate)
    return HumanEkfState(belief.mean, belief.covariance)


def human_update_contact_plane(state, side, plane_rotation, covariance,
                               gate=None):
    """World orientation of the contact surface under a flat-foot shoe."""
    z_f = state.foot_rotation(side)
    h = np.zeros((3, _DIM))
    h[:, _ZL if side == "left" else _ZR] = z_f.T
    model = FC.GroupMeasurementModel(
        h=lambda x: G.so3_element(z_f),
        jacobian=lambda x: h,
        noise=lambda x: np.asarray(covariance, float))
    belief = FC.dlgekf_rie_update(
        FC.BeliefState(state.element, state.covariance), model,
        G.so3_element(plane_rotation), gate=gate)
    return HumanEkfState(belief.mean, belief.covariance)


def vertex_position_measurement(chain, joint_positions, vertex_frame,
                                noise: NoiseConfig = HUMAN_NOISE):
    """Relative base-to-vertex position and its base-frame covariance."""
    from .. import kinematics as K
    pose = K.relative_fk(chain, joint_positions, chain.base_link, vertex_frame)
    jac = K.relative_jacobian_left_trivialized(
        chain, joint_positions, chain.base_link, vertex_frame)
    rot = pose.matrix[:3, :3]
    j_lin = rot @ jac[:3]  # base-frame position rows
    cov = noise.joint_position ** 2 * (j_lin @ j_lin.T) + 1e-12 * np.eye(3)
    return G.se3_translation(pose), cov
