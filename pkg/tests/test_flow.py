import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morse_tower.flow import (
    BACKWARD,
    FORWARD,
    FlowSpec,
    Polyline,
    continuation_count,
    count_flow_lines,
    dump_trajectories,
    integrate,
    separatrices,
)
from morse_tower.geometry import MorseSmalePair, Plane, ScalarField, Sphere, Torus
from morse_tower.homotopy import Atomic
from morse_tower.ode import BatchResult, integrate_batch


@pytest.fixture(scope="module")
def sphere_z():
    s = Sphere()
    return MorseSmalePair(s, ScalarField(s, "z"), prefix="a")


@pytest.fixture(scope="module")
def torus(stock):
    return stock("tilted_torus").alpha


@pytest.fixture(scope="module")
def deformed(stock):
    return stock("deformed_sphere").alpha


# ---------------------------------------------------------------------------
# integrator


def test_integrator_matches_exponential_decay():
    p = Plane(10.0)

    def rhs(t, c, u, idx):
        return -u

    u0 = np.array([[1.0, -2.0], [0.5, 0.25]])
    res = integrate_batch(rhs, p, [0, 0], u0, 0.0, 3.0)
    assert (res.status == BatchResult.REACHED).all()
    assert np.allclose(res.u, u0 * np.exp(-3.0), rtol=1e-8)


def test_integrator_matches_rotation():
    p = Plane(10.0)

    def rhs(t, c, u, idx):
        return np.stack([-u[:, 1], u[:, 0]], axis=-1)

    res = integrate_batch(rhs, p, [0], [[1.0, 0.0]], 0.0, np.pi, rtol=1e-11, atol=1e-13)
    assert np.allclose(res.u, [[-1.0, 0.0]], atol=1e-9)


@settings(max_examples=20)
@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_per_point_end_times(t1, t2):
    p = Plane(10.0)
    res = integrate_batch(lambda t, c, u, i: np.ones_like(u), p, [0, 0], np.zeros((2, 2)), 0.0, [t1, t2])
    assert np.allclose(res.u[:, 0], [t1, t2], atol=1e-12)


def test_stop_condition_halts_each_point():
    p = Plane(10.0)

    def stop(t, c, u, idx):
        return u[:, 0] > 1.0

    # the condition is tested after each accepted step, so max_step bounds the overshoot
    res = integrate_batch(lambda t, c, u, i: np.ones_like(u), p, [0], [[0.0, 0.0]], 0.0, None, stop=stop,
                          max_step=0.05)
    assert res.status[0] == BatchResult.STOPPED
    assert 1.0 < res.u[0, 0] <= 1.05 + 1e-12


def test_recording_bounds_sample_spacing():
    p = Plane(10.0)
    res = integrate_batch(lambda t, c, u, i: np.ones_like(u), p, [0], [[0.0, 0.0]], 0.0, 1.0, record=True,
                          sample_dt=0.01)
    t = np.array(res.samples[0])[:, 0]
    assert np.max(np.diff(t)) <= 0.01 + 1e-12


# ---------------------------------------------------------------------------
# trajectories


def test_equator_point_flows_to_south_pole(sphere_z):
    s = sphere_z.surface
    c, u = s.locate(np.array([[1.0, 0.0, 0.0]]))
    tr = integrate(FlowSpec(s, pair=sphere_z), (c[0], u[0]), FORWARD, "eq")
    assert tr.end_label == "a0.0"
    assert np.allclose(tr.xyz(s)[-1], [0, 0, -1], atol=1e-5)


def test_critical_point_is_a_constant_trajectory(sphere_z):
    p = sphere_z.point("a2.0")
    tr = integrate(FlowSpec(sphere_z.surface, pair=sphere_z), (p.chart_id, p.u), FORWARD, p.id)
    assert tr.end_label == p.id
    assert np.allclose(tr.samples[:, 2:4], p.u[None], atol=1e-12)


def test_backward_flow_on_torus_reaches_maximum(torus):
    s = torus.surface
    c, u = s.spot_points(5)
    for k in range(5):
        tr = integrate(FlowSpec(s, pair=torus), (c[k], u[k]), BACKWARD)
        assert tr.end_label == "c2.0"


def test_autonomous_spec_is_time_independent(sphere_z):
    assert FlowSpec(sphere_z.surface, pair=sphere_z).check()["ok"]


def test_homotopy_spec_has_correct_ends(stock):
    sc = stock("sphere_pair")
    spec = FlowSpec(sc.surface, homotopy=sc.family("designed"), parameter=(0.3,))
    assert spec.check()["ok"]


def test_flow_spec_needs_one_driver(sphere_z):
    with pytest.raises(ValueError):
        FlowSpec(sphere_z.surface)


def test_csv_export(tmp_path, sphere_z):
    s = sphere_z.surface
    c, u = s.locate(np.array([[0.0, 1.0, 0.0]]))
    tr = integrate(FlowSpec(s, pair=sphere_z), (c[0], u[0]), FORWARD)
    paths = dump_trajectories([tr], str(tmp_path), "eq", s)
    lines = open(paths[0]).read().splitlines()
    assert lines[0] == "t,chart_id,u1,u2,x,y,z"
    assert len(lines) == len(tr.samples) + 1


# ---------------------------------------------------------------------------
# separatrices and flow-line counts


def test_torus_saddles_send_both_separatrices_to_the_minimum(torus):
    for p in torus.points_of_index(1):
        ends = [tr.end_label for tr in separatrices(torus, p)["unstable"]]
        assert ends == ["c0.0", "c0.0"]
        assert count_flow_lines(torus, p, torus.point("c0.0"))[0] == 0


def test_deformed_sphere_saddle_reaches_both_maxima(deformed):
    p = deformed.points_of_index(1)[0]
    ends = sorted(tr.end_label for tr in separatrices(deformed, p)["stable"])
    assert ends == ["a2.0", "a2.1"]
    for q in deformed.points_of_index(2):
        parity, wit = count_flow_lines(deformed, q, p)
        assert parity == 1 and len(wit) == 1


def test_separatrices_need_a_saddle(sphere_z):
    with pytest.raises(ValueError):
        separatrices(sphere_z, sphere_z.point("a0.0"))


@pytest.mark.parametrize("c", [2.0])
def test_flow_line_count_invariant_under_metric_scaling(deformed, c):
    scaled = deformed.rescaled(c)
    s0, s1 = deformed.points_of_index(1)[0], scaled.points_of_index(1)[0]
    for q0, q1 in zip(deformed.points_of_index(2), scaled.points_of_index(2)):
        assert count_flow_lines(deformed, q0, s0)[0] == count_flow_lines(scaled, q1, s1)[0]
    m0, m1 = deformed.point("a0.0"), scaled.point("a0.0")
    assert count_flow_lines(deformed, s0, m0)[0] == count_flow_lines(scaled, s1, m1)[0]


def test_constant_homotopy_counts_are_identity(torus):
    h = Atomic(torus, torus)
    for p in torus.critical_points:
        for q in torus.points_of_index(p.index):
            assert continuation_count(h, p, q) == int(p.id == q.id)


def test_rotated_sphere_min_to_min(stock):
    sc = stock("sphere")
    h = sc.family("rotate")
    assert continuation_count(h, sc.alpha.point("a0.0"), sc.beta.point("b0.0")) == 1


def test_continuation_count_needs_equal_index(sphere_z):
    h = Atomic(sphere_z, sphere_z)
    with pytest.raises(ValueError):
        continuation_count(h, sphere_z.point("a0.0"), sphere_z.point("a2.0"))


# ---------------------------------------------------------------------------
# signed distance


def test_signed_distance_changes_sign_across_a_meridian():
    s = Sphere()
    th = np.linspace(-1.2, 1.2, 400)
    curve = np.stack([np.cos(th), np.zeros_like(th), np.sin(th)], axis=-1)
    poly = Polyline(curve, s)
    pts = np.array([[np.cos(0.05), np.sin(0.05), 0], [np.cos(0.05), -np.sin(0.05), 0], [1.0, 0, 0]])
    d = poly.signed_distance(pts)
    assert np.sign(d[0]) == -np.sign(d[1])
    assert abs(d[0] + d[1]) < 1e-9
    assert abs(d[2]) < 1e-12


def test_far_point_with_normal_offset_reads_far():
    # from the outer equator of a torus, the nearest point of a curve around
    # the inner equator lies straight along the surface normal
    t = Torus(2.0, 1.0)
    a = np.linspace(-0.5, 0.5, 200)
    curve = np.stack([-np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)
    poly = Polyline(curve, t)
    d = poly.signed_distance(np.array([[-3.0, 0.0, 0.0]]))
    assert abs(abs(d[0]) - 2.0) < 1e-2
