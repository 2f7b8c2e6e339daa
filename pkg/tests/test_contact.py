import numpy as np
import pytest

import lie_estimate.groups as G
import lie_estimate.contact as C


PARAMS = C.SchmittParams(30.0, 15.0, 0.01, 0.01)
GEOM = C.FootGeometry(0.2, 0.1)


def run_trigger(samples, params=PARAMS):
    state = C.SchmittState()
    return [C.schmitt_update(state, f, t, params) for t, f in samples]


def wrench(fz, tx=0.0, ty=0.0):
    return np.array([0.0, 0.0, fz, tx, ty, 0.0])


# --- Schmitt trigger -----------------------------------------------------------

def test_sustained_force_turns_on():
    samples = [(0.001 * k, 40.0) for k in range(30)]
    out = run_trigger(samples)
    assert out[0] is False          # dwell not yet served
    assert out[-1] is True


def test_sustained_release_turns_off():
    samples = [(0.001 * k, 40.0) for k in range(30)]
    samples += [(0.03 + 0.001 * k, 5.0) for k in range(30)]
    out = run_trigger(samples)
    assert out[29] is True
    assert out[-1] is False


def test_hysteresis_band_holds_state():
    # oscillation strictly inside (break, make) never flips the trigger
    rng = np.random.default_rng(5)
    samples = [(0.001 * k, rng.uniform(16.0, 29.0)) for k in range(200)]
    assert not any(run_trigger(samples))
    # same band after a confirmed make keeps contact on
    warm = [(0.001 * k, 50.0) for k in range(30)]
    tail = [(0.03 + 0.001 * k, rng.uniform(16.0, 29.0)) for k in range(200)]
    out = run_trigger(warm + tail)
    assert all(out[29:])


def test_short_spike_ignored():
    samples = [(0.0, 40.0), (0.002, 40.0), (0.004, 5.0), (0.006, 5.0),
               (0.02, 40.0)]
    out = run_trigger(samples)
    assert out == [False] * 5


def test_replay_is_bit_exact():
    rng = np.random.default_rng(11)
    samples = [(0.001 * k, rng.uniform(0.0, 60.0)) for k in range(500)]
    assert run_trigger(samples) == run_trigger(samples)


def test_non_monotone_time_rejected():
    state = C.SchmittState()
    C.schmitt_update(state, 0.0, 1.0, PARAMS)
    with pytest.raises(G.InvalidArgumentError):
        C.schmitt_update(state, 0.0, 1.0, PARAMS)


def test_param_validation():
    with pytest.raises(G.InvalidArgumentError):
        C.SchmittParams(10.0, 20.0, 0.01, 0.01)
    with pytest.raises(G.InvalidArgumentError):
        C.SchmittParams(20.0, 10.0, -0.01, 0.01)


def test_presets_exist():
    assert C.ROBOT_FOOT_SCHMITT.make_threshold == 150.0
    assert C.ROBOT_VERTEX_SCHMITT.break_threshold == 15.0
    assert C.HUMAN_FOOT_SCHMITT.rise_time == 0.02


# --- wrench decomposition --------------------------------------------------------

def test_centered_cop_equal_shares():
    out = C.decompose_wrench(wrench(100.0), GEOM)
    assert np.allclose(out.ratios, 0.25, atol=1e-12)
    assert np.allclose(out.forces, 25.0, atol=1e-12)
    assert np.allclose(out.cop, 0.0)


def test_cop_at_front_left_vertex():
    fz = 80.0
    out = C.decompose_wrench(
        wrench(fz, tx=fz * GEOM.width / 2, ty=-fz * GEOM.length / 2), GEOM)
    assert np.allclose(out.ratios, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_reconstruction_identities(rng):
    l, d = GEOM.length, GEOM.width
    for _ in range(50):
        fz = rng.uniform(5.0, 500.0)
        cop_x = rng.uniform(-l / 2, l / 2)
        cop_y = rng.uniform(-d / 2, d / 2)
        out = C.decompose_wrench(wrench(fz, tx=cop_y * fz, ty=-cop_x * fz), GEOM)
        f = out.forces
        assert abs(f.sum() - fz) < 1e-9
        assert abs((d / 2) * (f[0] + f[2] - f[1] - f[3]) - cop_y * fz) < 1e-9
        assert abs((l / 2) * (f[2] + f[3] - f[0] - f[1]) - (-cop_x * fz)) < 1e-9
        assert np.all(out.ratios >= -1e-12) and np.all(out.ratios <= 1.0 + 1e-12)
        x, y = out.cop[0] / l, out.cop[1] / d
        assert max(0.0, -y - x) - 1e-12 <= out.ratios[3]
        assert out.ratios[3] <= min(0.5 - y, 0.5 - x) + 1e-12


def test_low_normal_force_gives_zero():
    out = C.decompose_wrench(wrench(0.5, tx=3.0, ty=-2.0), GEOM)
    assert np.allclose(out.forces, 0.0)
    assert np.allclose(out.ratios, 0.0)


def test_cop_outside_rectangle_clamped():
    fz = 50.0
    out = C.decompose_wrench(wrench(fz, ty=-fz * GEOM.length), GEOM)  # CoP x = l
    assert abs(out.cop[0] - GEOM.length / 2) < 1e-12
    assert abs(out.forces.sum() - fz) < 1e-9


def test_geometry_validation():
    with pytest.raises(G.InvalidArgumentError):
        C.FootGeometry(0.0, 0.1)
    v = GEOM.vertices
    assert np.allclose(v[0], [0.1, 0.05, 0.0])
    assert np.allclose(v[3], [-0.1, -0.05, 0.0])


# --- per-vertex contact ----------------------------------------------------------

def test_all_vertices_on_with_centered_load():
    stream = [(0.001 * k, wrench(4 * 31.0)) for k in range(30)]
    out = C.vertex_contact_states(stream, GEOM, PARAMS)
    assert out[-1].in_contact == (True, True, True, True)
    assert out[-1].strongest in (0, 1, 2, 3)


def test_unloaded_foot_all_off():
    stream = [(0.001 * k, wrench(0.2, tx=1.0)) for k in range(30)]
    out = C.vertex_contact_states(stream, GEOM, PARAMS)
    assert all(s.in_contact == (False,) * 4 for s in out)
    assert out[-1].strongest is None


def test_heel_to_toe_sweep_releases_rear_first():
    # CoP travels from the heel to the toe under constant load; rear corners
    # must drop out before the front ones pick up full support
    fz = 200.0
    l = GEOM.length
    stream = []
    t = 0.0
    for cop_x in np.linspace(-0.45 * l, 0.45 * l, 200):
        stream.append((t, wrench(fz, ty=-cop_x * fz)))
        t += 0.005
    out = C.vertex_contact_states(stream, GEOM, PARAMS)
    rear_release = next(i for i, s in enumerate(out)
                        if not s.in_contact[2] and not s.in_contact[3]
                        and (s.in_contact[0] or s.in_contact[1]))
    assert rear_release is not None
    late = out[-1]
    assert late.in_contact[0] and late.in_contact[1]
    assert not late.in_contact[2] and not late.in_contact[3]
    early = out[10]
    assert early.in_contact[2] and early.in_contact[3]
    assert late.strongest in (0, 1)
