import numpy as np
import pytest

from blayer.coupling import MortarCoupling, assemble_embedded_mortar
from blayer.cutcell import ElementLocator, interface_quadrature
from blayer.meshing import build_boundary_layer, build_cartesian_mesh
from blayer.nurbs import GeometryError, line_curve


def _strip_pair(y_interface=0.53, spans=3, bg_h=0.25):
    from blayer.bench import refine_spans
    b = refine_spans(line_curve((2, 0), (0, 0), degree=2), spans)
    o = refine_spans(line_curve((2, y_interface), (0, y_interface),
                                degree=2), spans)
    layer = build_boundary_layer([b], [o])
    bg = build_cartesian_mesh((0, 0), (2, 1), bg_h, "quad4")
    pts = interface_quadrature(layer.interfaces, ElementLocator(bg))
    mortar = assemble_embedded_mortar(layer, bg, pts)
    return layer, bg, mortar


def test_row_sums_match_support_measure():
    layer, bg, m = _strip_pair()
    # integrating the partitions of unity: sum_c D[r, c] = kappa[r] and
    # sum_d M[r, d] = kappa[r]
    assert np.abs(m.D.sum(axis=1) - m.kappa).max() < 1e-10
    assert np.abs(m.M.sum(axis=1) - m.kappa).max() < 1e-10
    assert m.kappa.sum() == pytest.approx(2.0, rel=1e-12)
    assert np.all(m.kappa > 0)


def test_constant_jump_gap_and_force():
    layer, bg, m = _strip_pair()
    d_l = np.zeros((layer.mesh.n_nodes, 2))
    d_b = np.zeros((bg.n_nodes, 2))
    jump = np.array([0.3, -0.2])
    d_l[:] = jump
    g = m.gap(d_l, d_b)
    # weighted gap of a constant jump is kappa * jump
    assert np.abs(g - m.kappa[:, None] * jump).max() < 1e-12
    eps = 10.0
    f_l, f_b = m.force(d_l, d_b, eps)
    # equal and opposite total force, consistent with eps * jump * length
    assert np.allclose(f_l.sum(axis=0), -f_b.sum(axis=0), atol=1e-12)
    assert np.allclose(f_l.sum(axis=0), eps * jump * 2.0, rtol=1e-12)


def test_zero_gap_for_matching_fields():
    layer, bg, m = _strip_pair()
    # same linear field on both sides: weighted mismatch vanishes
    def field(x):
        return np.column_stack([0.1 * x[:, 0] - 0.02 * x[:, 1],
                                0.03 * x[:, 1] + 0.01])
    d_l = field(layer.mesh.nodes)
    d_b = field(bg.nodes)
    assert np.abs(m.gap(d_l, d_b)).max() < 1e-12


def test_stiffness_blocks_match_force():
    layer, bg, m = _strip_pair()
    rng = np.random.default_rng(5)
    d_l = rng.normal(size=(layer.mesh.n_nodes, 2))
    d_b = rng.normal(size=(bg.n_nodes, 2))
    eps = 3.5
    f_l, f_b = m.force(d_l, d_b, eps)
    K_ll, K_lb, K_bb = m.stiffness_blocks(eps)
    ul = d_l[m.layer_nodes]
    ub = d_b[m.bg_nodes]
    # the penalty force is linear: f = K u per component
    for comp in (0, 1):
        assert np.allclose(K_ll @ ul[:, comp] + K_lb.T @ ub[:, comp],
                           f_l[:, comp], atol=1e-10)
        assert np.allclose(K_lb @ ul[:, comp] + K_bb @ ub[:, comp],
                           f_b[:, comp], atol=1e-10)


def test_coupling_energy_nonnegative():
    layer, bg, m = _strip_pair()
    K_ll, K_lb, K_bb = m.stiffness_blocks(1.0)
    n_l, n_b = K_ll.shape[0], K_bb.shape[0]
    K = np.block([[K_ll, K_lb.T], [K_lb, K_bb]])
    evals = np.linalg.eigvalsh(0.5 * (K + K.T))
    assert evals.min() > -1e-10


def test_empty_quadrature_rejected():
    layer, bg, _ = _strip_pair()
    with pytest.raises(GeometryError):
        assemble_embedded_mortar(layer, bg, [])


def test_gap_scales_with_epsilon_independent_interface_length():
    layer, bg, m = _strip_pair(spans=5, bg_h=0.2)
    assert m.kappa.sum() == pytest.approx(2.0, rel=1e-12)
    assert np.abs(m.D.sum(axis=1) - m.kappa).max() < 1e-10
    assert np.abs(m.M.sum(axis=1) - m.kappa).max() < 1e-10
