from __future__ import annotations

import math

import numpy as np
import pytest

from unitfields import flowtrace, pendulum
from unitfields.charts import EUCLIDEAN, HYPERBOLIC, ChartId, ChartPoint
from unitfields.errors import DomainError
from unitfields.fieldlab import EuclidPendulum, EuclidRadialLine, Frame, HoroPQ, HParallel
from unitfields.flowtrace import Chirality

MIRROR = np.array([1.0, 1.0, -1.0])


def test_h_parallel_flow_is_exponential():
    line = flowtrace.trace(HParallel(), ChartPoint(ChartId.HYPERBOLIC_HALFSPACE, 0, 0, 1), 1e-3, 2000)
    assert np.max(np.abs(line.points[:, 2] - np.exp(line.s)) / np.exp(line.s)) < 1e-12
    assert not np.any(line.points[:, :2])


@pytest.mark.parametrize("spec", [Frame(1, HYPERBOLIC), Frame(2, HYPERBOLIC), Frame(3, HYPERBOLIC),
                                  Frame(1, EUCLIDEAN), Frame(3, EUCLIDEAN)], ids=str)
def test_frame_flows_match_closed_form(spec):
    start = (0.2, -0.1, 0.7)
    line = flowtrace.trace(spec, start, 1e-2, 300)
    exact = flowtrace.closed_form_streamline(spec, start, line.s)
    scale = np.maximum(1.0, np.abs(exact))
    # RK4 on dz/ds = z has relative error about s h^4 / 120
    assert np.max(np.abs(line.points - exact) / scale) < 1e-9


def test_closed_form_streamline_rejects_other_fields():
    with pytest.raises(ValueError):
        flowtrace.closed_form_streamline(HoroPQ(), (0, 0, 1), [0.0, 1.0])


def test_hyperbolic_tracing_limited_to_frames():
    with pytest.raises(ValueError):
        flowtrace.trace(HoroPQ(), (0, 0, 1), 1e-2, 10)


def test_arc_length_consistency():
    spec = EuclidPendulum(0.4, 1.3)
    line = flowtrace.trace(spec, (0.3, 0.2, 0.0), 1e-3, 5000)
    seg = np.linalg.norm(np.diff(line.points, axis=0), axis=1)
    assert np.max(np.abs(seg / 1e-3 - 1)) < 1e-6


def test_axis_trajectory_stays_on_axis():
    line = flowtrace.trace(EuclidPendulum(0.0, 2.0), (0.0, 0.0, -1.0), 1e-2, 500)
    assert not np.any(line.points[:, :2])
    assert np.allclose(line.points[:, 2], -1.0 + line.s, atol=1e-12)


def test_trace_errors():
    with pytest.raises(ValueError):
        flowtrace.trace(HParallel(), (0, 0, 1), 0.0, 10)
    with pytest.raises(ValueError):
        flowtrace.trace(HParallel(), (0, 0, 1), 1e-2, 0)
    with pytest.raises(DomainError):
        flowtrace.trace(EuclidRadialLine(), (0.0, 0.0, 0.0), 1e-2, 10)
    with pytest.raises(DomainError):
        # the reversed radial field runs into the axis
        flowtrace.trace(EuclidRadialLine(math.pi), (0.5, 0.0, 0.0), 1e-2, 100)
    with pytest.raises(DomainError):
        flowtrace.trace(EuclidRadialLine(), ChartPoint(ChartId.HYPERBOLIC_HALFSPACE, 1, 0, 1), 1e-2, 5)


def test_streamline_rows():
    line = flowtrace.trace(HParallel(), (0, 0, 1), 0.01, 200)
    rows = line.rows()
    assert rows.shape == (201, 4) and rows[-1, 0] == 2.0
    assert line.chart_points()[-1].c3 == pytest.approx(math.exp(2.0), rel=1e-9)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
def test_helix_circle_on_crossing_cylinder(q):
    spec = EuclidPendulum(math.pi / 2, q)
    r_star = pendulum.crossing_radius(q)
    line = flowtrace.trace(spec, (r_star, 0.0, 0.0), 2 * math.pi * r_star / 4000, 4000)
    r = np.hypot(line.points[:, 0], line.points[:, 1])
    assert np.max(np.abs(r - r_star)) < 1e-6
    assert np.max(np.abs(line.points[:, 2])) < 1e-6
    assert np.allclose(line.points[-1], line.points[0], atol=1e-6)


def test_helix_diagnostics_q_positive():
    spec = EuclidPendulum(math.pi / 2, 1.0)
    r_star = pendulum.crossing_radius(1.0)
    radii = [1e-4, 1e-2, 0.5, 1.0, 1.9, r_star * (1 - 1e-6)]
    d = flowtrace.helix_diagnostics(spec, radii, steps_per_turn=1000)
    slopes = [m for _, m in d.slope_profile]
    assert slopes[0] > 1e3 and slopes[-1] < 1e-5
    assert all(a > b for a, b in zip(slopes, slopes[1:]))
    assert d.invariant_surface_error < 1e-6
    assert abs(d.crossing_radius - r_star) < 1e-8
    assert d.chirality is Chirality.RIGHT
    assert d.details["vertical_sign_near_axis"] == 1.0


def test_helix_diagnostics_q_negative_flips_chirality():
    pos = flowtrace.helix_diagnostics(EuclidPendulum(math.pi / 2, 1.0), [0.5], steps_per_turn=500)
    neg = flowtrace.helix_diagnostics(EuclidPendulum(math.pi / 2, -1.0), [0.5], steps_per_turn=500)
    assert neg.chirality is Chirality.LEFT and pos.chirality is Chirality.RIGHT
    assert neg.slope_profile == pos.slope_profile
    # reflecting the q > 0 helix in the plane z = 0 reverses its vertical motion; reversing
    # the flow afterwards restores it, so the q < 0 field climbs too
    assert neg.details["vertical_sign_near_axis"] == 1.0
    assert np.allclose(EuclidPendulum(math.pi / 2, -1.0)(0.5, 0.2, 0.0),
                       -MIRROR * EuclidPendulum(math.pi / 2, 1.0)(0.5, 0.2, 0.0))


def test_helix_diagnostics_errors():
    with pytest.raises(ValueError):
        flowtrace.helix_diagnostics(EuclidPendulum(0.0, 1.0), [0.5])
    with pytest.raises(ValueError):
        flowtrace.helix_diagnostics(EuclidPendulum(math.pi / 2, 1.0), [0.0])
    with pytest.raises(ValueError):
        flowtrace.helix_diagnostics(HParallel(), [0.5])


def test_fountain_short_run():
    spec = EuclidPendulum(0.0, 1.0)
    d = flowtrace.fountain_diagnostics(spec, [(0.1, 0.0, 0.0), (0.0, 1.0, 0.0)], step=1e-3, n=20000)
    assert d.invariant_surface_error < 1e-9
    assert len(d.details["crossings"]) == 2
    for c in d.details["crossings"]:
        assert abs(c["vertical_component"]) < 1e-6
        assert c["radial_component"] == pytest.approx(1.0, abs=1e-9)
        assert c["radius"] == pytest.approx(2.0, abs=1e-8)
        assert c["monotone_before"] and c["monotone_after"]
    assert d.crossing_radius == pytest.approx(d.details["profile_crossing_radius"], abs=1e-8)


def test_fountain_requires_p_zero():
    with pytest.raises(ValueError):
        flowtrace.fountain_diagnostics(EuclidPendulum(math.pi / 2, 1.0), [(0.1, 0, 0)], n=10)
    with pytest.raises(ValueError):
        flowtrace.fountain_diagnostics(EuclidPendulum(math.pi, 1.0), [(0.1, 0, 0)], n=10)


def test_fountain_negative_q_is_mirrored_and_reversed():
    n, step = 4000, 1e-3
    fwd = flowtrace.trace(EuclidPendulum(0.0, 1.0), (0.5, 0.0, 0.0), step, n).points
    back = flowtrace.trace(EuclidPendulum(0.0, -1.0), fwd[-1] * MIRROR, step, n).points
    assert np.max(np.abs(back[::-1] - fwd * MIRROR)) < 1e-9


def test_glide_symmetry():
    rng = np.random.default_rng(9)
    X = rng.uniform(-4, 4, (500, 3))
    for p, q in [(0.0, 1.0), (1.0, -2.0), (-0.5, 0.3)]:
        assert flowtrace.glide_symmetry_error(p, q, X) < 1e-12


def test_diagnostics_serialize():
    d = flowtrace.helix_diagnostics(EuclidPendulum(math.pi / 2, 2.0), [0.3], steps_per_turn=200)
    out = d.to_dict()
    assert out["chirality"] == "right" and out["slope_profile"][0][1] >= 0
