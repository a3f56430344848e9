"""Mortar contact of the layer's body boundary against rigid masters.

The slave boundary is the set of quadratic contact edges of a boundary
layer mesh.  Multipliers live at slave nodes and use dual shape functions
(biorthogonal to the slave trace basis), making the mortar matrix D
diagonal.  Everything is integrated in the current configuration; the
constraint gradient is obtained by complex-step differentiation and the
contact stiffness by central differences of that exact gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elasticity import _edge_basis
from .meshing import BoundaryLayerMesh
from .nurbs import GeometryError

_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class RigidPlane:
    """Rigid flat master; normal is unit length and points toward the slave."""
    point: tuple
    normal: tuple

    def __post_init__(self):
        n = np.asarray(self.normal, float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise GeometryError("master plane normal must be unit length")

    def gap(self, x):
        """Signed distance, positive when separated (dtype generic)."""
        n = np.asarray(self.normal)
        p = np.asarray(self.point)
        return (x[..., 0] - p[0]) * n[0] + (x[..., 1] - p[1]) * n[1]


def _cnorm(v):
    """Analytic 2-vector length (no conjugation) for complex-step inputs."""
    return np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2)


def dual_basis_coefficients(Me, De):
    """A with dual shapes Phi_q = sum_a A[q, a] Psi_a, D = A Me diagonal."""
    return np.diag(De) @ np.linalg.inv(Me)


def _edge_mortar(Xe, we, ue, master):
    """Weighted gaps and support measures of one slave edge (dtype generic).

    Returns (gtilde (3,), De (3,)) with De[a] = int Psi_a ds in the
    current configuration.
    """
    dtype = np.result_type(ue.dtype, float)
    xe = Xe + ue
    psis, gaps, js = [], [], []
    Me = np.zeros((3, 3), dtype=dtype)
    De = np.zeros(3, dtype=dtype)
    for t, w in zip(_GAUSS_T, _GAUSS_W):
        psi, dpsi = _edge_basis("bez3", t, we)
        x = psi @ xe
        j = _cnorm(dpsi @ xe)
        Me += np.outer(psi, psi) * (j * w)
        De += psi * (j * w)
        psis.append(psi)
        gaps.append(master.gap(x))
        js.append(j * w)
    A = dual_basis_coefficients(Me, De)
    gtilde = np.zeros(3, dtype=dtype)
    for psi, g, jw in zip(psis, gaps, js):
        gtilde += (A @ psi) * (g * jw)
    return gtilde, De


@dataclass
class ContactAssembly:
    """Current-configuration mortar contact operators (mesh-local node ids)."""
    slave_nodes: np.ndarray     # (nq,) multiplier node ids
    gaps: np.ndarray            # (nq,) weighted gaps
    support: np.ndarray         # (nq,) int Psi_q ds (diagonal mortar D)
    C: sp.csr_matrix            # (nq, 2 n_mesh_nodes) = d gaps / d u
    _edges: list
    _mesh_n: int

    def force(self, lam: np.ndarray) -> np.ndarray:
        """Contact nodal force C^T lam, shape (2 n_mesh_nodes,)."""
        return self.C.T @ lam

    def geometric_stiffness(self, lam: np.ndarray, master,
                            step: float = 1e-6) -> sp.csr_matrix:
        """d(C^T lam)/du by central differences of the exact gradient."""
        rows, cols, vals = [], [], []
        for Xe, we, ue, nodes, lidx in self._edges:
            lam_e = lam[lidx]
            if not np.any(lam_e):
                continue
            dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()
            h = step * max(1.0, float(np.abs(Xe).max()))
            for k in range(6):
                up = ue.copy().reshape(-1)
                um = ue.copy().reshape(-1)
                up[k] += h
                um[k] -= h
                gp = _edge_gradient(Xe, we, up.reshape(3, 2), master) @ lam_e
                gm = _edge_gradient(Xe, we, um.reshape(3, 2), master) @ lam_e
                col = (gp - gm) / (2 * h)
                rows.extend(dofs)
                cols.extend([dofs[k]] * 6)
                vals.extend(col)
        n = 2 * self._mesh_n
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _edge_gradient(Xe, we, ue, master, h: float = 1e-30):
    """d gtilde / d u_e via complex step: (6, 3) = (edge dof, multiplier)."""
    grad = np.empty((6, 3))
    base = ue.astype(complex)
    for k in range(6):
        uc = base.copy().reshape(-1)
        uc[k] += 1j * h
        gt, _ = _edge_mortar(Xe, we, uc.reshape(3, 2), master)
        grad[k] = np.imag(gt) / h
    return grad


def assemble_contact(layer: BoundaryLayerMesh, d: np.ndarray,
                     master) -> ContactAssembly:
    """Mortar contact state of all contact edges at displacement d."""
    mesh = layer.mesh
    slave_nodes = sorted({int(n) for e in layer.contact_edges for n in e.nodes})
    smap = {n: i for i, n in enumerate(slave_nodes)}
    nq = len(slave_nodes)
    gaps = np.zeros(nq)
    support = np.zeros(nq)
    rows, cols, vals = [], [], []
    edges = []
    for edge in layer.contact_edges:
        nodes = np.asarray(edge.nodes, int)
        Xe = mesh.nodes[nodes]
        we = mesh.weights[nodes]
        ue = np.asarray(d)[nodes].astype(float)
        lidx = np.array([smap[int(n)] for n in nodes])
        gt, De = _edge_mortar(Xe, we, ue, master)
        gaps[lidx] += np.real(gt)
        support[lidx] += np.real(De)
        grad = _edge_gradient(Xe, we, ue, master)   # (6, 3)
        dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()
        for q in range(3):
            rows.extend([lidx[q]] * 6)
            cols.extend(dofs)
            vals.extend(grad[:, q])
        edges.append((Xe, we, ue, nodes, lidx))
    C = sp.coo_matrix((vals, (rows, cols)),
                      shape=(nq, 2 * mesh.n_nodes)).tocsr()
    return ContactAssembly(np.array(slave_nodes), gaps, support, C,
                           edges, mesh.n_nodes)


def active_set_update(lam: np.ndarray, gaps: np.ndarray,
                      c_n: float) -> np.ndarray:
    """Primal-dual active set: active iff lam - c_n * gap > 0 (ties inactive)."""
    return (lam - c_n * gaps) > 0.0


def contact_tractions(assembly: ContactAssembly, lam: np.ndarray) -> np.ndarray:
    """Nodal contact pressures.

    The pressure field is p = sum_q lam_q Phi_q and the dual shapes form a
    partition of unity, so the multipliers are themselves nodal pressure
    values.  Nodal forces follow as lam * assembly.support.
    """
    return np.array(lam, float)
