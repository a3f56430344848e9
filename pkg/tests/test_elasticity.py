import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blayer.elasticity import (Material, _edge_basis, assemble_internal,
                               boundary_load, default_quadrature,
                               element_cauchy_stress, shape_functions)
from blayer.meshing import build_boundary_layer, build_cartesian_mesh
from blayer.nurbs import line_curve

TECHNOLOGIES = ["quad4", "quad8", "tri3", "nurbs9"]


@pytest.mark.parametrize("technology", TECHNOLOGIES)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_shape_partition_of_unity(technology, data):
    if technology == "tri3":
        xi = data.draw(st.floats(0, 1))
        eta = data.draw(st.floats(0, 1).filter(lambda e: True))
        eta = min(eta, 1 - xi)
    else:
        xi = data.draw(st.floats(-1, 1))
        eta = data.draw(st.floats(-1, 1))
    w = np.linspace(0.8, 1.2, 9) if technology == "nurbs9" else None
    N, dN = shape_functions(technology, xi, eta, w)
    assert abs(N.sum() - 1.0) < 1e-12
    assert np.abs(dN.sum(axis=0)).max() < 1e-10


@pytest.mark.parametrize("technology", TECHNOLOGIES)
def test_shape_derivative_matches_finite_difference(technology):
    w = np.linspace(0.7, 1.3, 9) if technology == "nurbs9" else None
    xi, eta = (0.31, 0.27) if technology == "tri3" else (0.3, -0.4)
    h = 1e-6
    _, dN = shape_functions(technology, xi, eta, w)
    fd_xi = (shape_functions(technology, xi + h, eta, w)[0] -
             shape_functions(technology, xi - h, eta, w)[0]) / (2 * h)
    fd_eta = (shape_functions(technology, xi, eta + h, w)[0] -
              shape_functions(technology, xi, eta - h, w)[0]) / (2 * h)
    assert np.allclose(dN[:, 0], fd_xi, atol=1e-8)
    assert np.allclose(dN[:, 1], fd_eta, atol=1e-8)


def test_quadrature_integrates_constant():
    for tech in TECHNOLOGIES:
        pts, wts = default_quadrature(tech)
        ref_area = 0.5 if tech == "tri3" else 4.0
        assert abs(wts.sum() - ref_area) < 1e-12


def test_material_validation():
    from blayer.nurbs import GeometryError
    with pytest.raises(GeometryError):
        Material(-1.0, 0.3)
    with pytest.raises(GeometryError):
        Material(1.0, 0.5)
    lam, mu = Material(1.0, 0.25).lame
    assert mu == pytest.approx(0.4)
    assert lam == pytest.approx(0.4)


def test_boundary_load_constant_traction_line2():
    # straight edge of length 2, traction (0, -p): total force -2p split
    # equally between the two nodes
    f = boundary_load(np.array([[0.0, 1.0], [2.0, 1.0]]),
                      lambda x: np.array([0.0, -3.0]), "line2")
    assert np.allclose(f, [[0, -3], [0, -3]])


def test_boundary_load_quadratic_edge_total_force():
    f = boundary_load(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
                      lambda x: np.array([0.0, -1.0]), "bez3",
                      weights=np.ones(3))
    assert f[:, 1].sum() == pytest.approx(-2.0)
    # each quadratic Bernstein integrates to a third of the edge length
    assert np.allclose(f[:, 1], [-2 / 3, -2 / 3, -2 / 3])


@pytest.mark.parametrize("kinematics", ["linear", "finite"])
def test_stiffness_symmetric_with_rigid_translation_nullspace(kinematics):
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.5)
    mat = Material(2.0, 0.3)
    d = np.zeros((mesh.n_nodes, 2))
    f, K = assemble_internal(mesh, d, mat, kinematics)
    K = K.toarray()
    assert np.abs(K - K.T).max() < 1e-12
    tx = np.tile([1.0, 0.0], mesh.n_nodes)
    ty = np.tile([0.0, 1.0], mesh.n_nodes)
    assert np.abs(K @ tx).max() < 1e-12
    assert np.abs(K @ ty).max() < 1e-12
    assert np.abs(f).max() == 0.0


def test_finite_kinematics_tangent_matches_finite_difference():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.5)
    mat = Material(2.0, 0.3)
    rng = np.random.default_rng(3)
    d = 0.05 * rng.normal(size=(mesh.n_nodes, 2))
    f0, K = assemble_internal(mesh, d, mat, "finite")
    K = K.toarray()
    h = 1e-7
    for k in range(0, 2 * mesh.n_nodes, 5):
        dp = d.copy().reshape(-1)
        dm = d.copy().reshape(-1)
        dp[k] += h
        dm[k] -= h
        fp, _ = assemble_internal(mesh, dp.reshape(-1, 2), mat, "finite")
        fm, _ = assemble_internal(mesh, dm.reshape(-1, 2), mat, "finite")
        col = (fp - fm) / (2 * h)
        scale = max(1.0, np.abs(K[:, k]).max())
        assert np.abs(col - K[:, k]).max() / scale < 1e-6


def test_uniaxial_stress_oracle():
    # linear kinematics, nu = 0: uniform strain eps_yy gives
    # sigma_yy = E * eps_yy and zero other components
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.5)
    mat = Material(3.0, 0.0)
    d = np.zeros((mesh.n_nodes, 2))
    d[:, 1] = -0.01 * mesh.nodes[:, 1]
    stress = element_cauchy_stress(mesh, d, mat, "linear")[0]
    assert np.allclose(stress[:, 1], -0.03, atol=1e-14)
    assert np.abs(stress[:, [0, 2]]).max() < 1e-14


def test_small_strain_finite_matches_linear():
    mesh = build_cartesian_mesh((0, 0), (1, 1), 0.25)
    mat = Material(5.0, 0.3)
    rng = np.random.default_rng(7)
    rels = []
    for scale in (1e-4, 1e-6):
        d = scale * rng.normal(size=(mesh.n_nodes, 2))
        f_lin, _ = assemble_internal(mesh, d, mat, "linear")
        f_fin, _ = assemble_internal(mesh, d, mat, "finite")
        rels.append(np.abs(f_lin - f_fin).max() / np.abs(f_lin).max())
    assert rels[1] < 1e-4
    # the geometric correction vanishes linearly with the amplitude
    assert rels[1] < 1e-1 * rels[0]


def test_edge_basis_partition_of_unity():
    for t in np.linspace(-1, 1, 9):
        for tech in ("line2", "line3", "bez3"):
            w = np.ones(3) if tech == "bez3" else None
            psi, _ = _edge_basis(tech, t, w)
            assert abs(psi.sum() - 1.0) < 1e-12


def test_nurbs9_element_stress_on_layer():
    base = line_curve((1, 0), (0, 0), degree=2)
    off = line_curve((1, 0.5), (0, 0.5), degree=2)
    layer = build_boundary_layer([base], [off], refine_tangent=1)
    mesh = layer.mesh
    mat = Material(2.0, 0.0)
    d = np.zeros((mesh.n_nodes, 2))
    d[:, 0] = 0.02 * mesh.nodes[:, 0]
    stress = element_cauchy_stress(mesh, d, mat, "linear")[0]
    assert np.allclose(stress[:, 0], 0.04, atol=1e-13)
