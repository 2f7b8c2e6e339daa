"""Contact inference from force/torque sensing.

Two layers: a Schmitt trigger with make/break thresholds and rise/fall
dwell times for debounced contact detection, and a center-of-pressure
decomposition of a 6D sole wrench into normal forces at the four corners
of a rectangular foot.

Wrenches are 6-vectors (fx, fy, fz, tx, ty, tz) in the sole frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import groups as G

ZERO_FORCE_THRESHOLD = 1.0  # N; below this the foot is treated as unloaded


@dataclass(frozen=True)
class SchmittParams:
    make_threshold: float
    break_threshold: float
    rise_time: float
    fall_time: float

    def __post_init__(self):
        if not self.make_threshold > self.break_threshold >= 0.0:
            raise G.InvalidArgumentError(
                "need make_threshold > break_threshold >= 0")
        if self.rise_time < 0.0 or self.fall_time < 0.0:
            raise G.InvalidArgumentError("dwell times must be nonnegative")


# Published tunings; none is a default.
ROBOT_FOOT_SCHMITT = SchmittParams(150.0, 120.0, 0.01, 0.01)
ROBOT_VERTEX_SCHMITT = SchmittParams(30.0, 15.0, 0.01, 0.01)
HUMAN_FOOT_SCHMITT = SchmittParams(65.0, 45.0, 0.02, 0.02)


@dataclass
class SchmittState:
    in_contact: bool = False
    pending_since: float = None
    last_time: float = None


def schmitt_update(state: SchmittState, force: float, timestamp: float,
                   params: SchmittParams) -> bool:
    """Advance the trigger one sample; returns the new contact flag.

    The output flips on only after the force stays above the make threshold
    for the rise time, and off only after it stays below the break threshold
    for the fall time. In the hysteresis band the state is held.
    """
    if state.last_time is not None and timestamp <= state.last_time:
        raise G.InvalidArgumentError("timestamps must be strictly increasing")
    state.last_time = timestamp
    if state.in_contact:
        crossing = force < params.break_threshold
        dwell = params.fall_time
    else:
        crossing = force > params.make_threshold
        dwell = params.rise_time
    if not crossing:
        state.pending_since = None
        return state.in_contact
    if state.pending_since is None:
        state.pending_since = timestamp
    if timestamp - state.pending_since >= dwell:
        state.in_contact = not state.in_contact
        state.pending_since = None
    return state.in_contact


@dataclass(frozen=True)
class FootGeometry:
    length: float
    width: float

    def __post_init__(self):
        if self.length <= 0.0 or self.width <= 0.0:
            raise G.InvalidArgumentError("foot dimensions must be positive")

    @property
    def vertices(self):
        """Corner positions in the sole frame: front-left, front-right,
        rear-left, rear-right."""
        l, d = self.length, self.width
        return np.array([[l / 2, d / 2, 0.0],
                         [l / 2, -d / 2, 0.0],
                         [-l / 2, d / 2, 0.0],
                         [-l / 2, -d / 2, 0.0]])


@dataclass(frozen=True)
class VertexContactState:
    forces: np.ndarray           # per-vertex normal force, N
    ratios: np.ndarray           # per-vertex share of the total normal force
    cop: np.ndarray              # center of pressure (x, y) in the sole frame
    in_contact: tuple = (False, False, False, False)
    strongest: int = None


def decompose_wrench(wrench, geometry: FootGeometry) -> VertexContactState:
    """Split a sole wrench into normal forces at the four foot corners.

    The center of pressure fixes three of the four shares; the remaining
    degree of freedom is resolved by taking the midpoint of its feasible
    interval. Below the zero-force threshold everything is zero.
    """
    w = np.asarray(wrench, dtype=float).reshape(6)
    fz, tx, ty = w[2], w[3], w[4]
    if fz < ZERO_FORCE_THRESHOLD:
        return VertexContactState(np.zeros(4), np.zeros(4), np.zeros(2))
    l, d = geometry.length, geometry.width
    cop = np.array([-ty / fz, tx / fz])
    cop[0] = np.clip(cop[0], -l / 2, l / 2)
    cop[1] = np.clip(cop[1], -d / 2, d / 2)
    x, y = cop[0] / l, cop[1] / d
    lo = max(0.0, -y - x)
    hi = min(0.5 - y, 0.5 - x)
    a4 = 0.5 * (lo + hi)
    alphas = np.array([a4 + x + y, -a4 + 0.5 - y, -a4 + 0.5 - x, a4])
    return VertexContactState(alphas * fz, alphas, cop)


def vertex_contact_states(wrench_stream, geometry: FootGeometry,
                          params: SchmittParams):
    """Run per-vertex triggers over (timestamp, wrench) samples.

    Returns one VertexContactState per sample, with the contact flags filled
    in and the strongest vertex chosen among those in contact (None when no
    vertex holds contact).
    """
    triggers = [SchmittState() for _ in range(4)]
    out = []
    for timestamp, wrench in wrench_stream:
        decomp = decompose_wrench(wrench, geometry)
        flags = tuple(schmitt_update(st, f, timestamp, params)
                      for st, f in zip(triggers, decomp.forces))
        strongest = None
        if any(flags):
            active = [i for i in range(4) if flags[i]]
            strongest = max(active, key=lambda i: decomp.forces[i])
        out.append(VertexContactState(decomp.forces, decomp.ratios,
                                      decomp.cop, flags, strongest))
    return out
