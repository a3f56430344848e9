import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blayer.nurbs import (GeometryError, KnotVector, NurbsPatch, circular_arc,
                          curve_inward_normal)
from blayer.offsets import (OffsetMethod, OffsetRequest,
                            average_patch_edge_normals,
                            minimum_curvature_radius, offset_error_metrics,
                            offset_interpolation, offset_optimization,
                            offset_patch, offset_polygon_translation)


def reference_curve():
    kv = KnotVector((0, 0, 0, 0.5, 1, 1, 1), 2)
    pts = np.array([[0, 0], [0.2, 1], [1, 1.3], [1.8, 0.8]], float)
    wts = np.array([1, 1 / np.sqrt(2), 1, 1 / np.sqrt(2)])
    return NurbsPatch((kv,), pts, wts)


def reference_surface():
    kv = KnotVector((0, 0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1, 1), 3)
    pts = np.array([
        [(-25, -25, -10), (-15, -25, -8), (-5, -25, -5),
         (5, -25, -3), (15, -25, -8), (25, -25, -10)],
        [(-25, -15, -5), (-15, -15, -4), (-5, -15, -3),
         (5, -15, -2), (15, -15, -4), (25, -15, -5)],
        [(-25, -5, 0), (-15, -5, -4), (-5, -5, -8),
         (5, -5, -8), (15, -5, -4), (25, -5, 2)],
        [(-25, 5, 0), (-15, 5, -4), (-5, 5, -8),
         (5, 5, -8), (15, 5, -4), (25, 5, 2)],
        [(-25, 15, -5), (-15, 15, -4), (-5, 15, -3),
         (5, 15, -2), (15, 15, -4), (25, 15, -5)],
        [(-25, 25, -10), (-15, 25, -8), (-5, 25, -5),
         (5, 25, -3), (15, 25, -8), (25, 25, -10)],
    ], float)
    return NurbsPatch((kv, kv), pts, np.ones((6, 6)))


# ---------------------------------------------------------------------------
# frozen regression values (curve at ell = 0.15)


CURVE_EXPECTED = {
    OffsetMethod.POLYGON_TRANSLATION: (3.5988e-2, 2.3196e-2),
    OffsetMethod.INTERPOLATION: (2.6462e-2, 1.0953e-2),
}


@pytest.mark.parametrize("method", list(CURVE_EXPECTED))
def test_curve_offset_regression(method):
    curve = reference_curve()
    res = offset_patch(OffsetRequest(curve, 0.15, method))
    e_inf, e_l2 = offset_error_metrics(curve, res.offset, 0.15)
    exp_inf, exp_l2 = CURVE_EXPECTED[method]
    assert e_inf == pytest.approx(exp_inf, rel=1e-3)
    assert e_l2 == pytest.approx(exp_l2, rel=1e-3)


def test_curve_optimization_beats_interpolation_globally():
    curve = reference_curve()
    res_i = offset_patch(OffsetRequest(curve, 0.15, OffsetMethod.INTERPOLATION))
    res_o = offset_patch(OffsetRequest(curve, 0.15, OffsetMethod.OPTIMIZATION))
    assert res_o.iterations > 0
    _, l2_i = offset_error_metrics(curve, res_i.offset, 0.15)
    _, l2_o = offset_error_metrics(curve, res_o.offset, 0.15)
    assert l2_o <= l2_i


def test_surface_offset_regression():
    surf = reference_surface()
    expected = {
        OffsetMethod.POLYGON_TRANSLATION: 7.021e-1,
        OffsetMethod.INTERPOLATION: 2.0821e-1,
    }
    for method, exp in expected.items():
        res = offset_patch(OffsetRequest(surf, 3.0, method))
        e_inf, _ = offset_error_metrics(surf, res.offset, 3.0,
                                        samples_per_span=20)
        assert e_inf == pytest.approx(exp, rel=5e-3)


# ---------------------------------------------------------------------------
# exactness and structure preservation


@pytest.mark.parametrize("method", [OffsetMethod.POLYGON_TRANSLATION,
                                    OffsetMethod.INTERPOLATION])
def test_arc_offset_is_exact(method):
    arc = circular_arc(np.zeros(2), 1.0, np.pi / 2, 0.0)
    res = offset_patch(OffsetRequest(arc, 0.25, method))
    e_inf, _ = offset_error_metrics(arc, res.offset, 0.25)
    assert e_inf <= 1e-10


def test_offset_preserves_parametric_structure():
    curve = reference_curve()
    for method in OffsetMethod:
        res = offset_patch(OffsetRequest(curve, 0.1, method))
        off = res.offset
        assert off.degrees == curve.degrees
        assert np.array_equal(off.weights, curve.weights)
        assert np.array_equal(off.knot_vectors[0].knots,
                              curve.knot_vectors[0].knots)


def test_interpolation_collocates_at_greville():
    curve = reference_curve()
    res = offset_interpolation(OffsetRequest(curve, 0.12,
                                             OffsetMethod.INTERPOLATION))
    for u in curve.knot_vectors[0].greville():
        target = curve.point(u) + 0.12 * curve_inward_normal(curve, u)
        assert np.allclose(res.offset.point(u), target, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(radius=st.floats(0.5, 4.0), frac=st.floats(0.05, 0.6))
def test_arc_offset_exact_property(radius, frac):
    arc = circular_arc(np.zeros(2), radius, np.pi / 2, 0.0)
    ell = frac * radius
    res = offset_polygon_translation(OffsetRequest(arc, ell,
                                                   OffsetMethod.POLYGON_TRANSLATION))
    e_inf, _ = offset_error_metrics(arc, res.offset, ell, samples_per_span=40)
    assert e_inf <= 1e-10


# ---------------------------------------------------------------------------
# validation


def test_offset_distance_bound_enforced():
    curve = reference_curve()
    rmin = minimum_curvature_radius(curve)
    assert 0.3 < rmin < 0.4
    with pytest.raises(GeometryError):
        OffsetRequest(curve, 0.4, OffsetMethod.INTERPOLATION)


def test_nonpositive_distance_rejected():
    curve = reference_curve()
    with pytest.raises(GeometryError):
        OffsetRequest(curve, -0.1, OffsetMethod.INTERPOLATION)


def test_optimization_warns_when_iteration_capped():
    curve = reference_curve()
    res = offset_optimization(OffsetRequest(
        curve, 0.15, OffsetMethod.OPTIMIZATION, max_iterations=1,
        gradient_tol=1e-16))
    assert res.warning is not None


# ---------------------------------------------------------------------------
# multi-patch kink averaging


def test_edge_normal_averaging_makes_offsets_meet():
    # clockwise boundary of the first quadrant corner: both inward normals
    # at the shared origin point into the body
    from blayer.nurbs import line_curve
    a1 = line_curve(np.array([1.0, 0.0]), np.zeros(2), 2)
    a2 = line_curve(np.zeros(2), np.array([0.0, 1.0]), 2)
    overrides = average_patch_edge_normals([a1, a2])
    assert (1,) in overrides[0] and (-1,) in overrides[1]
    assert np.allclose(overrides[0][(1,)], overrides[1][(-1,)])
    assert np.allclose(overrides[0][(1,)], [np.sqrt(0.5), np.sqrt(0.5)])
    ell = 0.2
    o1 = offset_patch(OffsetRequest(a1, ell, OffsetMethod.INTERPOLATION,
                                    normal_overrides=overrides[0])).offset
    o2 = offset_patch(OffsetRequest(a2, ell, OffsetMethod.INTERPOLATION,
                                    normal_overrides=overrides[1])).offset
    assert np.allclose(o1.point(1.0), o2.point(0.0), atol=1e-12)
