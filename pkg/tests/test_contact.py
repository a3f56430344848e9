import numpy as np
import pytest

from blayer.contact import (RigidPlane, _edge_mortar, active_set_update,
                            assemble_contact, contact_tractions,
                            dual_basis_coefficients)
from blayer.meshing import build_boundary_layer
from blayer.nurbs import GeometryError, circular_arc, line_curve
from blayer.offsets import OffsetMethod, OffsetRequest, offset_patch


def _flat_layer(spans=4, y0=0.0, thickness=0.2):
    from blayer.bench import refine_spans
    b = refine_spans(line_curve((1, y0), (0, y0), degree=2), spans)
    o = refine_spans(line_curve((1, y0 + thickness), (0, y0 + thickness),
                                degree=2), spans)
    return build_boundary_layer([b], [o])


def test_rigid_plane_gap_and_validation():
    plane = RigidPlane((0.0, 1.0), (0.0, 1.0))
    assert plane.gap(np.array([3.0, 2.5])) == pytest.approx(1.5)
    assert plane.gap(np.array([[0.0, 0.0]])) == pytest.approx([-1.0])
    with pytest.raises(GeometryError):
        RigidPlane((0, 0), (0, 2))


def test_dual_basis_biorthogonality():
    # duals Phi_q = A Psi satisfy int Phi_q Psi_a ds = delta_qa * De_q
    Xe = np.array([[0.0, 0.0], [0.7, 0.0], [1.5, 0.0]])
    we = np.ones(3)
    ue = np.zeros((3, 2))
    master = RigidPlane((0, -1.0), (0, 1.0))
    _, De = _edge_mortar(Xe, we, ue, master)
    from blayer.elasticity import _edge_basis
    G_T, G_W = np.polynomial.legendre.leggauss(4)
    Me = np.zeros((3, 3))
    for t, w in zip(G_T, G_W):
        psi, dpsi = _edge_basis("bez3", t, we)
        j = np.linalg.norm(dpsi @ Xe)
        Me += np.outer(psi, psi) * j * w
    A = dual_basis_coefficients(Me, De)
    D = A @ Me
    assert np.abs(D - np.diag(De)).max() < 1e-10
    # duals still form a partition of unity in the weighted sense:
    # sum_q Phi_q = 1 pointwise because A^T 1 solves Me x = De
    for t in np.linspace(-1, 1, 7):
        psi, _ = _edge_basis("bez3", t, we)
        assert (A.T @ np.ones(3)) @ psi == pytest.approx(1.0, abs=1e-10)


def test_weighted_gaps_of_flat_layer():
    layer = _flat_layer(spans=4, y0=0.3)
    d = np.zeros((layer.mesh.n_nodes, 2))
    asm = assemble_contact(layer, d, RigidPlane((0, 0), (0, 1)))
    # uniform gap 0.3: weighted gaps equal 0.3 * support
    assert np.abs(asm.gaps - 0.3 * asm.support).max() < 1e-12
    assert asm.support.sum() == pytest.approx(1.0, rel=1e-12)


def test_gap_gradient_matches_finite_difference():
    layer = _flat_layer(spans=2, y0=0.1)
    rng = np.random.default_rng(1)
    d = 0.02 * rng.normal(size=(layer.mesh.n_nodes, 2))
    master = RigidPlane((0, 0), (0, 1))
    asm = assemble_contact(layer, d, master)
    C = asm.C.toarray()
    h = 1e-7
    rel_max = 0.0
    for k in range(2 * layer.mesh.n_nodes):
        dp = d.copy().reshape(-1)
        dm = d.copy().reshape(-1)
        dp[k] += h
        dm[k] -= h
        gp = assemble_contact(layer, dp.reshape(-1, 2), master).gaps
        gm = assemble_contact(layer, dm.reshape(-1, 2), master).gaps
        col = (gp - gm) / (2 * h)
        denom = max(np.abs(C[:, k]).max(), 1e-3)
        rel_max = max(rel_max, np.abs(col - C[:, k]).max() / denom)
    assert rel_max < 1e-6


def test_geometric_stiffness_symmetric_and_fd_consistent():
    layer = _flat_layer(spans=2, y0=0.05)
    rng = np.random.default_rng(2)
    d = 0.01 * rng.normal(size=(layer.mesh.n_nodes, 2))
    master = RigidPlane((0, 0), (0, 1))
    asm = assemble_contact(layer, d, master)
    lam = rng.uniform(0.1, 1.0, size=len(asm.slave_nodes))
    Kg = asm.geometric_stiffness(lam, master).toarray()
    # finite difference of the contact force C(u)^T lam
    h = 1e-6
    n = 2 * layer.mesh.n_nodes
    rel = 0.0
    scale = max(1.0, np.abs(Kg).max())
    for k in range(0, n, 3):
        dp = d.copy().reshape(-1)
        dm = d.copy().reshape(-1)
        dp[k] += h
        dm[k] -= h
        fp = assemble_contact(layer, dp.reshape(-1, 2), master).force(lam)
        fm = assemble_contact(layer, dm.reshape(-1, 2), master).force(lam)
        col = (fp - fm) / (2 * h)
        rel = max(rel, np.abs(col - Kg[:, k]).max() / scale)
    assert rel < 1e-5


def test_active_set_update_rule():
    lam = np.array([0.0, 0.5, 0.0, 0.2])
    gaps = np.array([0.1, -0.01, -0.2, 0.3])
    active = active_set_update(lam, gaps, c_n=10.0)
    assert active.tolist() == [False, True, True, False]


def test_contact_tractions_recover_uniform_pressure():
    # quarter arc pressed flat against the plane through its lowest point:
    # displace every contact node straight down by its height
    arc = circular_arc((0.0, 1.0), 1.0, np.deg2rad(-60), np.deg2rad(-120))
    res = offset_patch(OffsetRequest(arc, 0.2, OffsetMethod.INTERPOLATION))
    layer = build_boundary_layer([arc], [res.offset], refine_tangent=2)
    mesh = layer.mesh
    d = np.zeros((mesh.n_nodes, 2))
    asm = assemble_contact(layer, d, RigidPlane((0, 0), (0, 1)))
    lam = np.full(len(asm.slave_nodes), 2.5)
    trac = contact_tractions(asm, lam)
    # dual multipliers are themselves the nodal pressure values
    assert np.allclose(trac, 2.5)
    total = asm.force(lam)
    assert abs(total.reshape(-1, 2)[:, 1].sum()) > 0.0
