import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blayer.cutcell import (ElementLocator, classify_cells, clip_polygon,
                            interface_quadrature, inverse_isoparametric,
                            linearize_interface, material_area, polygon_area,
                            triangle_quadrature, triangulate_polygon)
from blayer.meshing import build_cartesian_mesh
from blayer.nurbs import circular_arc, line_curve


def test_polygon_area_signed():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert polygon_area(square) == pytest.approx(1.0)
    assert polygon_area(square[::-1]) == pytest.approx(-1.0)


def test_clip_polygon_oracle():
    subject = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float)
    clipper = np.array([[1, -1], [3, -1], [3, 3], [1, 3]], float)
    out = clip_polygon(subject, clipper)
    assert polygon_area(out) == pytest.approx(2.0)


def test_clip_disjoint_is_empty():
    a = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    b = a + 5.0
    assert len(clip_polygon(a, b)) == 0


@settings(max_examples=50, deadline=None)
@given(cx=st.floats(-0.4, 0.4), cy=st.floats(-0.4, 0.4),
       r=st.floats(0.1, 0.5))
def test_clip_contained_polygon_keeps_area(cx, cy, r):
    theta = np.linspace(0, 2 * np.pi, 13)[:-1]
    poly = np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)])
    box = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float)
    out = clip_polygon(poly, box)
    assert polygon_area(out) == pytest.approx(polygon_area(poly), rel=1e-12)


def test_triangulation_preserves_area():
    # non-convex polygon
    poly = np.array([[0, 0], [4, 0], [4, 3], [2, 1], [0, 3]], float)
    tris = triangulate_polygon(poly)
    area = sum(abs(polygon_area(poly[list(t)])) for t in tris)
    assert area == pytest.approx(abs(polygon_area(poly)), rel=1e-12)


def test_triangle_quadrature_integrates_linear_exactly():
    a, b, c = np.array([[0, 0], [2, 0], [0, 3]], float)
    pts, wts = triangle_quadrature(a, b, c)
    assert wts.sum() == pytest.approx(3.0)
    # integral of x over the triangle = area * centroid_x
    assert np.dot(wts, pts[:, 0]) == pytest.approx(3.0 * 2 / 3)
    assert np.dot(wts, pts[:, 1]) == pytest.approx(3.0 * 1.0)


def test_inverse_isoparametric_round_trip():
    from blayer.elasticity import shape_functions
    X = np.array([[0, 0], [2, 0.2], [2.2, 1.9], [-0.1, 1.7]], float)
    for ref in [(-0.3, 0.4), (0.9, -0.8), (0.0, 0.0)]:
        N, _ = shape_functions("quad4", *ref)
        x = N @ X
        back = inverse_isoparametric("quad4", X, x)
        assert np.allclose(back, ref, atol=1e-10)


def test_element_locator_finds_cells():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.25)
    loc = ElementLocator(mesh)
    hit = loc.locate(np.array([0.62, 0.13]))
    assert hit is not None
    bi, ei, ref = hit
    conn = mesh.blocks[bi].connectivity[ei]
    lo = mesh.nodes[conn].min(axis=0)
    hi = mesh.nodes[conn].max(axis=0)
    assert np.all(lo <= [0.62, 0.13]) and np.all(hi >= [0.62, 0.13])
    from blayer.nurbs import GeometryError
    with pytest.raises(GeometryError):
        loc.locate(np.array([2.0, 2.0]))


def test_classify_cells_statuses_and_fractions():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.25)
    # material below the diagonal line y = x
    poly = np.array([[0, 0], [1, 0], [1, 1]], float)
    data = classify_cells(mesh, poly)
    statuses = set(data.status.values())
    assert statuses == {"material", "void", "cut"}
    for key, frac in data.fractions.items():
        assert -1e-12 <= frac <= 1 + 1e-12
        if data.status[key] == "cut":
            assert 0 < frac < 1
            assert data.rules[key] is not None


def test_cut_cell_area_conservation():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 1 / 3)
    poly = np.array([[0.1, 0.1], [0.9, 0.2], [0.8, 0.85], [0.15, 0.7]])
    data = classify_cells(mesh, poly)
    assert material_area(data, mesh) == pytest.approx(
        polygon_area(poly), rel=1e-12)


def test_cut_quadrature_integrates_area_and_moments():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.5)
    poly = np.array([[0.1, 0.1], [0.9, 0.1], [0.9, 0.9], [0.1, 0.9]])
    data = classify_cells(mesh, poly)
    # cut rules carry physical weights at reference points
    total, mx = 0.0, 0.0
    from blayer.elasticity import shape_functions
    for (bi, ei), rule in data.rules.items():
        if rule is None:
            continue
        pts, wts = rule
        conn = mesh.blocks[bi].connectivity[ei]
        X = mesh.nodes[conn]
        for (xi, eta), w in zip(pts, wts):
            N, _ = shape_functions("quad4", xi, eta)
            total += w
            mx += w * (N @ X)[0]
    assert total == pytest.approx(0.64, rel=1e-12)
    assert mx == pytest.approx(0.64 * 0.5, rel=1e-12)


def test_interface_quadrature_weights_sum_to_length():
    mesh = build_cartesian_mesh((0, 0), (2, 1), 0.25)
    curve = line_curve((1.9, 0.53), (0.1, 0.53), degree=2)
    pts = interface_quadrature([curve], ElementLocator(mesh))
    assert sum(p.weight for p in pts) == pytest.approx(1.8, rel=1e-12)
    for p in pts:
        assert p.point[1] == pytest.approx(0.53)


def test_interface_quadrature_arc_length():
    mesh = build_cartesian_mesh((-1.2, -0.2), (1.2, 1.4), 0.3)
    arc = circular_arc((0.0, 0.0), 1.0, np.deg2rad(30), np.deg2rad(150))
    pts = interface_quadrature([arc], ElementLocator(mesh),
                               segments_per_span=8)
    length = sum(p.weight for p in pts)
    assert length == pytest.approx(np.deg2rad(120), rel=1e-6)


def test_interface_quadrature_splits_at_cell_boundaries():
    # every quadrature point must evaluate inside the element it is
    # attributed to, even when chords cross several cells
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.2)
    curve = line_curve((0.95, 0.07), (0.03, 0.93), degree=2)
    pts = interface_quadrature([curve], ElementLocator(mesh))
    for p in pts:
        conn = mesh.blocks[p.bg_block].connectivity[p.bg_element]
        lo = mesh.nodes[conn].min(axis=0) - 1e-9
        hi = mesh.nodes[conn].max(axis=0) + 1e-9
        assert np.all(p.point >= lo) and np.all(p.point <= hi)


def test_linearize_interface_chords_cover_curve():
    curve = line_curve((1, 0), (0, 1), degree=2)
    chords = linearize_interface([curve], segments_per_span=4)
    assert len(chords) == 4
    assert chords[0].xi_a == 0.0 and chords[-1].xi_b == 1.0
