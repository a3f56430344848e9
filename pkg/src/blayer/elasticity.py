"""Plane-strain St. Venant-Kirchhoff elasticity on mixed-technology meshes.

Element technologies: quad4, quad8 (serendipity), nurbs9 (rational
biquadratic Bezier) and tri3.  Assembly is total Lagrangian; a linear
kinematics path shares the same code with F frozen at identity.  All
routines accept complex displacement entries so tangents can be verified
with complex-step differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .nurbs import GeometryError


@dataclass(frozen=True)
class Material:
    youngs_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise GeometryError("Young's modulus must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise GeometryError("Poisson ratio must be in (-1, 0.5)")

    @property
    def lame(self):
        E, nu = self.youngs_modulus, self.poisson_ratio
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        return lam, mu


# ---------------------------------------------------------------------------
# shape functions (VTK node ordering)


def _bernstein2(t):
    """Quadratic Bernstein basis and derivative on [-1, 1]."""
    s = 0.5 * (t + 1.0)
    vals = np.array([(1 - s) ** 2, 2 * s * (1 - s), s ** 2])
    ders = 0.5 * np.array([-2 * (1 - s), 2 - 4 * s, 2 * s])
    return vals, ders

_N9_IDX = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (2, 1), (1, 2), (0, 1), (1, 1)]


def shape_functions(technology: str, xi: float, eta: float,
                    weights: np.ndarray | None = None):
    """Values and reference-coordinate gradients of the element basis.

    Returns (N (n,), dN (n, 2)).  nurbs9 requires the 9 nodal weights.
    """
    if technology == "quad4":
        signs = np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)], float)
        N = 0.25 * (1 + signs[:, 0] * xi) * (1 + signs[:, 1] * eta)
        dN = 0.25 * np.column_stack([
            signs[:, 0] * (1 + signs[:, 1] * eta),
            signs[:, 1] * (1 + signs[:, 0] * xi)])
        return N, dN
    if technology == "quad8":
        s = np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)], float)
        Nc = 0.25 * (1 + s[:, 0] * xi) * (1 + s[:, 1] * eta) \
            * (s[:, 0] * xi + s[:, 1] * eta - 1)
        dNc = np.column_stack([
            0.25 * s[:, 0] * (1 + s[:, 1] * eta) * (2 * s[:, 0] * xi + s[:, 1] * eta),
            0.25 * s[:, 1] * (1 + s[:, 0] * xi) * (s[:, 0] * xi + 2 * s[:, 1] * eta)])
        Nm = np.array([0.5 * (1 - xi ** 2) * (1 - eta),
                       0.5 * (1 + xi) * (1 - eta ** 2),
                       0.5 * (1 - xi ** 2) * (1 + eta),
                       0.5 * (1 - xi) * (1 - eta ** 2)])
        dNm = np.array([[-xi * (1 - eta), -0.5 * (1 - xi ** 2)],
                        [0.5 * (1 - eta ** 2), -eta * (1 + xi)],
                        [-xi * (1 + eta), 0.5 * (1 - xi ** 2)],
                        [-0.5 * (1 - eta ** 2), -eta * (1 - xi)]])
        return np.concatenate([Nc, Nm]), np.vstack([dNc, dNm])
    if technology == "nurbs9":
        if weights is None:
            raise GeometryError("nurbs9 shape functions need nodal weights")
        bu, du = _bernstein2(xi)
        bv, dv = _bernstein2(eta)
        B = np.array([bu[i] * bv[j] for i, j in _N9_IDX])
        dB = np.array([[du[i] * bv[j], bu[i] * dv[j]] for i, j in _N9_IDX])
        wB = weights * B
        wdB = weights[:, None] * dB
        s = wB.sum()
        ds = wdB.sum(axis=0)
        N = wB / s
        dN = wdB / s - np.outer(wB, ds) / s ** 2
        return N, dN
    if technology == "tri3":
        N = np.array([1 - xi - eta, xi, eta])
        dN = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return N, dN
    raise GeometryError(f"unknown element technology {technology}")


def default_quadrature(technology: str):
    """Reference quadrature: 2x2 for quad4, 3x3 for quad8/nurbs9, 3 pt tri."""
    if technology == "quad4":
        g = np.array([-1, 1]) / np.sqrt(3)
        pts = np.array([(x, y) for y in g for x in g])
        return pts, np.ones(4)
    if technology in ("quad8", "nurbs9"):
        g = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
        w = np.array([5 / 9, 8 / 9, 5 / 9])
        pts = np.array([(x, y) for y in g for x in g])
        wts = np.array([wx * wy for wy in w for wx in w])
        return pts, wts
    if technology == "tri3":
        pts = np.array([(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)])
        return pts, np.full(3, 1 / 6)
    raise GeometryError(f"unknown element technology {technology}")


def _basis_tables(technology, pts, weights_block):
    """Shape values/gradients at quadrature points, batched over elements.

    Returns N (nq, nn) and dN (nq, nn, 2) for Lagrange technologies, or
    (ne, nq, nn)/(ne, nq, nn, 2) for nurbs9 where they depend on weights.
    """
    if technology != "nurbs9":
        rows = [shape_functions(technology, x, y) for x, y in pts]
        return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])
    # rational: evaluate polynomial Bernstein tables once, then weight
    Btab, dBtab = [], []
    for x, y in pts:
        bu, du = _bernstein2(x)
        bv, dv = _bernstein2(y)
        Btab.append([bu[i] * bv[j] for i, j in _N9_IDX])
        dBtab.append([[du[i] * bv[j], bu[i] * dv[j]] for i, j in _N9_IDX])
    B = np.asarray(Btab)                      # (nq, 9)
    dB = np.asarray(dBtab)                    # (nq, 9, 2)
    W = np.asarray(weights_block)             # (ne, 9)
    wB = W[:, None, :] * B[None]              # (ne, nq, 9)
    wdB = W[:, None, :, None] * dB[None]      # (ne, nq, 9, 2)
    s = wB.sum(axis=2)                        # (ne, nq)
    ds = wdB.sum(axis=2)                      # (ne, nq, 2)
    N = wB / s[..., None]
    dN = wdB / s[..., None, None] \
        - wB[..., None] * ds[:, :, None, :] / (s ** 2)[..., None, None]
    return N, dN


# ---------------------------------------------------------------------------
# stress


def svk_stress_tangent(E_green, material: Material):
    """Second Piola-Kirchhoff stress of SVK; E_green is (..., 2, 2)."""
    lam, mu = material.lame
    tr = E_green[..., 0, 0] + E_green[..., 1, 1]
    S = 2 * mu * E_green.copy()
    S[..., 0, 0] += lam * tr
    S[..., 1, 1] += lam * tr
    return S


def _material_matrix(material: Material, dtype=float):
    """Constant SVK tangent dS/dE in Voigt order (11, 22, 12)."""
    lam, mu = material.lame
    return np.array([[lam + 2 * mu, lam, 0],
                     [lam, lam + 2 * mu, 0],
                     [0, 0, mu]], dtype=dtype)


# ---------------------------------------------------------------------------
# element integration (batched)


def element_force_stiffness(technology: str, X, weights, d, material: Material,
                            kinematics: str = "finite", quadrature=None,
                            physical_weights: bool = False):
    """Internal force and consistent stiffness for a batch of elements.

    X, d: (ne, nn, 2) reference coordinates and displacements;
    weights: (ne, nn) nodal NURBS weights (ignored except nurbs9).
    DOF order per element: node-major interleaved (ux0, uy0, ux1, ...).
    With physical_weights=True the quadrature weights already carry the
    physical measure (cut-cell rules) and the Jacobian factor is skipped.
    """
    if kinematics not in ("finite", "linear"):
        raise GeometryError(f"unknown kinematics {kinematics}")
    X = np.asarray(X)
    d = np.asarray(d)
    ne, nn = X.shape[0], X.shape[1]
    if quadrature is None:
        pts, qw = default_quadrature(technology)
    else:
        pts, qw = quadrature
        pts = np.asarray(pts, float)
        qw = np.asarray(qw, float)
    N, dN = _basis_tables(technology, pts, weights)
    if technology != "nurbs9":
        dN = np.broadcast_to(dN[None], (ne,) + dN.shape)
    nq = len(pts)
    dtype = np.result_type(d.dtype, float)

    # geometry Jacobian J[i, j] = dx_i/dxi_j, its inverse, physical gradients
    J = np.einsum("eni,eqnj->eqij", X, dN)
    detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(np.real(detJ) <= 0):
        raise GeometryError("non-positive Jacobian in element batch")
    Jinv = np.empty_like(J)
    Jinv[..., 0, 0] = J[..., 1, 1]
    Jinv[..., 1, 1] = J[..., 0, 0]
    Jinv[..., 0, 1] = -J[..., 0, 1]
    Jinv[..., 1, 0] = -J[..., 1, 0]
    Jinv = Jinv / detJ[..., None, None]
    G = np.einsum("eqni,eqij->eqnj", dN, Jinv)  # dN/dX, (ne, nq, nn, 2)

    # deformation gradient F = I + du/dX
    H = np.einsum("eni,eqnj->eqij", d.astype(dtype), G)
    F = H.copy()
    if kinematics == "finite":
        F[..., 0, 0] += 1.0
        F[..., 1, 1] += 1.0
        Egr = 0.5 * (np.einsum("eqki,eqkj->eqij", F, F)
                     - np.eye(2)[None, None])
    else:
        Egr = 0.5 * (H + np.swapaxes(H, -1, -2))
        F = np.broadcast_to(np.eye(2, dtype=dtype)[None, None],
                            H.shape).copy()
    S = svk_stress_tangent(Egr, material)

    scale = qw[None, :] if physical_weights else qw[None, :] * detJ
    # internal force: f_a = int (F S) gradN_a
    P = np.einsum("eqik,eqkj->eqij", F, S)
    f = np.einsum("eqij,eqnj,eq->eni", P, G, scale)

    # material part: B_a^T C B_b, Voigt strain rows (E11, E22, 2 E12):
    # dE11 = F_i1 G_a1 dd_ai, dE22 = F_i2 G_a2 dd_ai,
    # 2 dE12 = (F_i1 G_a2 + F_i2 G_a1) dd_ai
    Bm = np.empty((ne, nq, 3, nn, 2), dtype=dtype)
    Bm[:, :, 0] = F[:, :, None, :, 0] * G[:, :, :, 0, None]
    Bm[:, :, 1] = F[:, :, None, :, 1] * G[:, :, :, 1, None]
    Bm[:, :, 2] = F[:, :, None, :, 0] * G[:, :, :, 1, None] \
        + F[:, :, None, :, 1] * G[:, :, :, 0, None]
    C = _material_matrix(material, dtype=dtype)
    K = np.einsum("eqrni,rs,eqsmj,eq->enimj", Bm, C, Bm, scale)
    if kinematics == "finite":
        # geometric part: G_a . S . G_b on the diagonal blocks
        kg = np.einsum("eqni,eqij,eqmj,eq->enm", G, S, G, scale)
        K[:, :, 0, :, 0] += kg
        K[:, :, 1, :, 1] += kg
    return f.reshape(ne, 2 * nn), K.reshape(ne, 2 * nn, 2 * nn)


# ---------------------------------------------------------------------------
# boundary loads


def _edge_basis(technology: str, t: float, weights=None):
    """1D edge basis on [-1, 1]: line2, line3 (Lagrange), bez3 (rational)."""
    if technology == "line2":
        return np.array([0.5 * (1 - t), 0.5 * (1 + t)]), \
            np.array([-0.5, 0.5])
    if technology == "line3":
        # order: end, mid, end (curve orientation)
        return np.array([0.5 * t * (t - 1), 1 - t ** 2, 0.5 * t * (t + 1)]), \
            np.array([t - 0.5, -2 * t, t + 0.5])
    if technology == "bez3":
        vals, ders = _bernstein2(t)
        w = np.asarray(weights)
        s = (w * vals).sum()
        ds = (w * ders).sum()
        N = w * vals / s
        dN = w * ders / s - w * vals * ds / s ** 2
        return N, dN
    raise GeometryError(f"unknown edge technology {technology}")


def boundary_load(edge_nodes_coords, traction, technology: str = "line2",
                  weights=None, n_gauss: int = 4):
    """Consistent nodal dead load on a reference edge.

    traction(x) returns the traction vector at reference position x; the
    edge measure is the reference arc length (dead load).  Returns the
    (nn, 2) nodal force array for one edge.
    """
    Xe = np.asarray(edge_nodes_coords, float)
    g, gw = np.polynomial.legendre.leggauss(n_gauss)
    f = np.zeros_like(Xe)
    for t, w in zip(g, gw):
        N, dN = _edge_basis(technology, t, weights)
        x = N @ Xe
        tang = dN @ Xe
        ds = np.linalg.norm(tang)
        f += np.outer(N, traction(x)) * ds * w
    return f


def edge_normal(edge_nodes_coords, t: float, technology: str = "line2",
                weights=None):
    """Unit normal of an edge at local coordinate t (tangent rotated -90).

    For counter-clockwise boundary traversal this points outward.
    """
    Xe = np.asarray(edge_nodes_coords, float)
    _, dN = _edge_basis(technology, t, weights)
    tang = dN @ Xe
    n = np.array([tang[1], -tang[0]])
    return n / np.linalg.norm(n)


# ---------------------------------------------------------------------------
# global assembly


def assemble_internal(mesh, d, material: Material, kinematics: str = "finite",
                      cut_rules: dict | None = None):
    """Global internal force vector and tangent stiffness (CSR).

    d: (n_nodes, 2).  cut_rules maps (block_index, element_index) to a
    (points, physical_weights) quadrature replacing the default rule;
    elements mapped to None are skipped entirely (void cells).
    """
    n = mesh.n_nodes
    dtype = np.result_type(np.asarray(d).dtype, float)
    f = np.zeros(2 * n, dtype=dtype)
    rows, cols, vals = [], [], []
    for bi, blk in enumerate(mesh.blocks):
        conn = blk.connectivity
        default_ids = []
        specials = []
        if cut_rules:
            for ei in range(len(conn)):
                key = (bi, ei)
                if key in cut_rules:
                    if cut_rules[key] is not None:
                        specials.append(ei)
                else:
                    default_ids.append(ei)
        else:
            default_ids = list(range(len(conn)))
        groups = []
        if default_ids:
            groups.append((np.array(default_ids), None))
        for ei in specials:
            groups.append((np.array([ei]), cut_rules[(bi, ei)]))
        for ids, quad in groups:
            c = conn[ids]
            X = mesh.nodes[c]
            W = mesh.weights[c]
            de = np.asarray(d)[c]
            fe, Ke = element_force_stiffness(
                blk.technology, X, W, de, material, kinematics,
                quadrature=quad, physical_weights=quad is not None)
            edofs = np.stack([2 * c, 2 * c + 1], axis=2).reshape(len(ids), -1)
            np.add.at(f, edofs.ravel(), fe.ravel())
            ne, nd = edofs.shape
            rows.append(np.repeat(edofs, nd, axis=1).ravel())
            cols.append(np.tile(edofs, (1, nd)).ravel())
            vals.append(Ke.ravel())
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * n, 2 * n)).tocsr()
    return f, K


def element_cauchy_stress(mesh, d, material: Material,
                          kinematics: str = "finite",
                          cut_rules: dict | None = None):
    """Element-average Cauchy stress, Voigt order (xx, yy, xy).

    Returns one (ne, 3) array per block.  Void elements of cut meshes are
    NaN.  Stresses are evaluated at the default quadrature points of the
    reference cell (also for cut elements, where the bulk field simply
    extends over the fictitious part).
    """
    out = []
    for bi, blk in enumerate(mesh.blocks):
        pts, _ = default_quadrature(blk.technology)
        conn = blk.connectivity
        c = conn
        X = mesh.nodes[c]
        de = np.asarray(d)[c]
        N, dN = _basis_tables(blk.technology, pts, mesh.weights[c])
        if blk.technology != "nurbs9":
            dN = np.broadcast_to(dN[None], (len(c),) + dN.shape)
        J = np.einsum("eni,eqnj->eqij", X, dN)
        G = np.einsum("eqni,eqij->eqnj", dN, np.linalg.inv(J))
        H = np.einsum("eni,eqnj->eqij", de, G)
        if kinematics == "finite":
            F = H + np.eye(2)[None, None]
            Egr = 0.5 * (np.einsum("eqki,eqkj->eqij", F, F)
                         - np.eye(2)[None, None])
            S = svk_stress_tangent(Egr, material)
            jdet = np.linalg.det(F)
            sig = np.einsum("eqik,eqkl,eqjl->eqij", F, S, F) \
                / jdet[..., None, None]
        else:
            eps = 0.5 * (H + np.swapaxes(H, -1, -2))
            S = svk_stress_tangent(eps, material)
            sig = S
        avg = sig.mean(axis=1)
        res = np.stack([avg[:, 0, 0], avg[:, 1, 1], avg[:, 0, 1]], axis=1)
        if cut_rules:
            for ei in range(len(conn)):
                if cut_rules.get((bi, ei), "keep") is None:
                    res[ei] = np.nan
        out.append(res)
    return out
