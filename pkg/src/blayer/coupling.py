"""Embedded mortar coupling between a boundary layer and a background mesh.

The layer's offset interface carries a multiplier field discretized with
the standard trace basis of the layer elements.  Mortar matrices are
integrated in the reference configuration with the interface quadrature
pairs, and the multiplier is regularized by a penalty scaled with the
inverse of the multiplier support measure kappa.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .cutcell import InterfacePoint
from .elasticity import _edge_basis, shape_functions
from .meshing import BoundaryLayerMesh, Mesh
from .nurbs import GeometryError


@dataclass
class MortarCoupling:
    """Mortar operators on layer-local / background-local node numbering.

    D[r, c] = int Phi_r Psi_c ds   (layer trace x layer trace)
    M[r, d] = int Phi_r N_d ds     (layer trace x background)
    kappa[r] = int Phi_r ds        (multiplier support measure)
    """
    layer_nodes: np.ndarray
    bg_nodes: np.ndarray
    D: np.ndarray
    M: np.ndarray
    kappa: np.ndarray

    def gap(self, d_layer: np.ndarray, d_bg: np.ndarray) -> np.ndarray:
        """Weighted interface mismatch g* = D d_I - M d_C, shape (nl, 2)."""
        return self.D @ d_layer[self.layer_nodes] - self.M @ d_bg[self.bg_nodes]

    def force(self, d_layer: np.ndarray, d_bg: np.ndarray, epsilon: float):
        """Penalty coupling forces on (layer_nodes, bg_nodes), (n, 2) each."""
        lam = epsilon * self.gap(d_layer, d_bg) / self.kappa[:, None]
        return self.D.T @ lam, -self.M.T @ lam

    def stiffness_blocks(self, epsilon: float):
        """Constant penalty stiffness blocks (K_ll, K_lb, K_bb) per component."""
        Dk = self.D / self.kappa[:, None]
        return (epsilon * self.D.T @ Dk,
                -epsilon * self.M.T @ Dk,
                epsilon * self.M.T @ (self.M / self.kappa[:, None]))


class _EdgeIndex:
    """Parameter -> interface edge lookup per curve."""

    def __init__(self, edges):
        self.by_curve = {}
        for edge in edges:
            self.by_curve.setdefault(edge.curve_index, []).append(edge)
        for lst in self.by_curve.values():
            lst.sort(key=lambda e: e.span[0])
        self.starts = {ci: [e.span[0] for e in lst]
                       for ci, lst in self.by_curve.items()}

    def find(self, curve_index: int, xi: float):
        lst = self.by_curve[curve_index]
        k = bisect.bisect_right(self.starts[curve_index], xi) - 1
        k = min(max(k, 0), len(lst) - 1)
        edge = lst[k]
        a, b = edge.span
        t = 2.0 * (xi - a) / (b - a) - 1.0
        return edge, float(np.clip(t, -1.0, 1.0))


def assemble_embedded_mortar(layer: BoundaryLayerMesh, background: Mesh,
                             points: list[InterfacePoint]) -> MortarCoupling:
    """Integrate the mortar matrices over the interface quadrature pairs."""
    if not points:
        raise GeometryError("empty interface quadrature")
    index = _EdgeIndex(layer.interface_edges)
    layer_ids = sorted({int(n) for e in layer.interface_edges for n in e.nodes})
    bg_ids = sorted({int(n)
                     for p in points
                     for n in background.blocks[p.bg_block]
                     .connectivity[p.bg_element]})
    lmap = {n: i for i, n in enumerate(layer_ids)}
    bmap = {n: i for i, n in enumerate(bg_ids)}
    nl, nb = len(layer_ids), len(bg_ids)
    D = np.zeros((nl, nl))
    M = np.zeros((nl, nb))
    kappa = np.zeros(nl)
    lw = layer.mesh.weights
    for p in points:
        edge, t = index.find(p.curve_index, p.xi)
        psi, _ = _edge_basis("bez3", t, lw[edge.nodes])
        rows = [lmap[int(n)] for n in edge.nodes]
        blk = background.blocks[p.bg_block]
        conn = blk.connectivity[p.bg_element]
        N, _ = shape_functions(blk.technology, p.bg_ref[0], p.bg_ref[1],
                               background.weights[conn])
        cols = [bmap[int(n)] for n in conn]
        w = p.weight
        for a, r in enumerate(rows):
            kappa[r] += psi[a] * w
            for b, c in enumerate(rows):
                D[r, c] += psi[a] * psi[b] * w
            for b, c in enumerate(cols):
                M[r, c] += psi[a] * N[b] * w
    return MortarCoupling(np.array(layer_ids), np.array(bg_ids), D, M, kappa)
