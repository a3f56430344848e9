"""Mesh containers, boundary-layer mesh generation and Cartesian grids.

The boundary layer is a lofted NURBS strip between a base curve and its
offset.  It is decomposed into C0 rational Bezier elements ("nurbs9"),
so a mesh is always a flat node/element structure; background meshes use
classical quad4/quad8 (and tri3 where needed) technologies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .nurbs import (GeometryError, KnotVector, NurbsPatch,
                    elevate_linear_direction, insert_knot, refine_uniform)

TECHNOLOGIES = ("quad4", "quad8", "nurbs9", "tri3")

# VTK legacy cell ids
_VTK_CELL = {"quad4": 9, "quad8": 23, "nurbs9": 28, "tri3": 5}


@dataclass
class ElementBlock:
    technology: str
    connectivity: np.ndarray  # (n_el, nodes_per_el), int

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise GeometryError(f"unknown element technology {self.technology}")
        self.connectivity = np.asarray(self.connectivity, dtype=int)


@dataclass
class Mesh:
    nodes: np.ndarray                  # (n, 2)
    weights: np.ndarray                # (n,), 1.0 for Lagrange nodes
    blocks: list[ElementBlock]
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    edge_sets: dict[str, np.ndarray] = field(default_factory=dict)  # (ne, 2|3)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def aabb(self):
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    def diagonal(self) -> float:
        lo, hi = self.aabb()
        return float(np.linalg.norm(hi - lo))


@dataclass
class BoundaryEdge:
    """A quadratic mesh edge tied to a parameter interval of a curve."""
    nodes: np.ndarray          # 3 node ids, curve orientation
    curve_index: int           # which patch of the chain
    span: tuple[float, float]  # parameter interval on that patch


@dataclass
class BoundaryLayerMesh:
    mesh: Mesh
    bases: list[NurbsPatch]       # refined base curves (contact side)
    interfaces: list[NurbsPatch]  # refined offset curves (coupling side)
    contact_edges: list[BoundaryEdge]
    interface_edges: list[BoundaryEdge]


# ---------------------------------------------------------------------------
# C0 decomposition of a NURBS patch into nurbs9 elements


def _c0_refine(patch: NurbsPatch) -> NurbsPatch:
    """Raise every interior knot to multiplicity == degree (C0 patch)."""
    for direction, kv in enumerate(patch.knot_vectors):
        for b in kv.breakpoints()[1:-1]:
            p = patch.knot_vectors[direction].degree
            knots = patch.knot_vectors[direction].knots
            mult = int(np.sum(np.abs(knots - b) < 1e-12))
            if mult < p:
                patch = insert_knot(patch, direction, float(b), p - mult)
    return patch


def _patch_to_nurbs9(patch: NurbsPatch):
    """Flatten a biquadratic patch into nodes plus nurbs9 connectivity.

    Node ids follow the control grid, id = j * ni + i.  Element nodes are
    ordered VTK biquadratic-quad style: corners, edge midpoints, center.
    """
    if patch.degrees != (2, 2):
        raise GeometryError("nurbs9 extraction requires a biquadratic patch")
    patch = _c0_refine(patch)
    ni, nj = patch.weights.shape
    nodes = patch.points.transpose(1, 0, 2).reshape(-1, patch.sdim)  # id = j*ni+i
    weights = patch.weights.T.reshape(-1)
    nsx = (ni - 1) // 2
    nsy = (nj - 1) // 2
    gid = lambda i, j: j * ni + i
    conn = []
    for ey in range(nsy):
        for ex in range(nsx):
            i0, j0 = 2 * ex, 2 * ey
            conn.append([
                gid(i0, j0), gid(i0 + 2, j0), gid(i0 + 2, j0 + 2), gid(i0, j0 + 2),
                gid(i0 + 1, j0), gid(i0 + 2, j0 + 1), gid(i0 + 1, j0 + 2), gid(i0, j0 + 1),
                gid(i0 + 1, j0 + 1)])
    return patch, nodes, weights, np.array(conn, dtype=int), (nsx, nsy)


# ---------------------------------------------------------------------------
# boundary layer generation


def loft_layer(base: NurbsPatch, offset: NurbsPatch) -> NurbsPatch:
    """Loft base -> offset along eta (linear), then elevate to quadratic."""
    kv = base.knot_vectors[0]
    kvo = offset.knot_vectors[0]
    if base.degrees != offset.degrees or not np.array_equal(kv.knots, kvo.knots):
        raise GeometryError("base and offset must share degree and knots")
    if not np.allclose(base.weights, offset.weights):
        raise GeometryError("base and offset must share weights")
    pts = np.stack([base.points, offset.points], axis=1)     # (n, 2, sdim)
    wts = np.stack([base.weights, offset.weights], axis=1)   # (n, 2)
    thick = KnotVector((0.0, 0.0, 1.0, 1.0), 1)
    loft = NurbsPatch((kv, thick), pts, wts)
    return elevate_linear_direction(loft, 1)


def build_boundary_layer(bases, offsets, refine_tangent: int = 0,
                         refine_thickness: int = 0,
                         merge_tol: float | None = None) -> BoundaryLayerMesh:
    """Boundary layer mesh from conforming base/offset curve chains.

    bases/offsets are lists of degree-2 curves with identical knots and
    weights per pair.  The loft runs from the offset interface (eta = 0)
    to the body boundary (eta = 1, contact side); with the clockwise body
    traversal convention this keeps element parametrizations right-handed.
    Patches are refined uniformly, lofted, decomposed into nurbs9 elements
    and merged at shared ends.
    """
    if isinstance(bases, NurbsPatch):
        bases = [bases]
    if isinstance(offsets, NurbsPatch):
        offsets = [offsets]
    if len(bases) != len(offsets):
        raise GeometryError("need one offset per base curve")
    meshes = []
    contact_edges, interface_edges = [], []
    ref_bases, ref_interfaces = [], []
    for ci, (b, o) in enumerate(zip(bases, offsets)):
        for _ in range(refine_tangent):
            b = refine_uniform(b, 0)
            o = refine_uniform(o, 0)
        patch = loft_layer(o, b)
        for _ in range(refine_thickness):
            patch = refine_uniform(patch, 1)
        patch, nodes, weights, conn, (nsx, nsy) = _patch_to_nurbs9(patch)
        ni = patch.weights.shape[0]
        bps = b.knot_vectors[0].breakpoints()
        mesh = Mesh(nodes, weights, [ElementBlock("nurbs9", conn)])
        bottom = np.arange(ni)
        top = np.arange(ni) + (patch.weights.shape[1] - 1) * ni
        mesh.node_sets = {"contact": top, "interface": bottom,
                          "start": np.arange(patch.weights.shape[1]) * ni,
                          "end": np.arange(patch.weights.shape[1]) * ni + ni - 1}
        mesh.edge_sets = {
            "contact": np.array([top[[2 * e, 2 * e + 1, 2 * e + 2]]
                                 for e in range(nsx)], dtype=int),
            "interface": np.array([[2 * e, 2 * e + 1, 2 * e + 2]
                                   for e in range(nsx)], dtype=int)}
        for e in range(nsx):
            span = (float(bps[e]), float(bps[e + 1]))
            contact_edges.append(BoundaryEdge(
                mesh.edge_sets["contact"][e].copy(), ci, span))
            interface_edges.append(BoundaryEdge(
                mesh.edge_sets["interface"][e].copy(), ci, span))
        meshes.append(mesh)
        ref_bases.append(b)
        ref_interfaces.append(o)
    merged, offsets_ids = combine_meshes(meshes, merge_tol)
    for edges, per_mesh in ((contact_edges, offsets_ids),
                            (interface_edges, offsets_ids)):
        for edge in edges:
            edge.nodes = per_mesh[edge.curve_index][edge.nodes]
    return BoundaryLayerMesh(merged, ref_bases, ref_interfaces,
                             contact_edges, interface_edges)


# ---------------------------------------------------------------------------
# combination / merging


def combine_meshes(meshes: list[Mesh], merge_tol: float | None = None):
    """Concatenate meshes and merge geometrically coincident nodes.

    Returns the merged mesh and, per input mesh, the old->new node id map.
    Node sets with equal names are unioned; edge sets concatenated.
    """
    all_nodes = np.vstack([m.nodes for m in meshes])
    all_weights = np.concatenate([m.weights for m in meshes])
    if merge_tol is None:
        lo = all_nodes.min(axis=0)
        hi = all_nodes.max(axis=0)
        merge_tol = 1e-9 * max(float(np.linalg.norm(hi - lo)), 1.0)
    from scipy.spatial import cKDTree
    tree = cKDTree(all_nodes)
    pairs = tree.query_pairs(merge_tol)
    parent = np.arange(len(all_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            if abs(all_weights[ra] - all_weights[rb]) > 1e-9:
                raise GeometryError("coincident nodes with mismatched weights")
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(len(all_nodes))])
    uniq, new_ids = np.unique(roots, return_inverse=True)
    nodes = all_nodes[uniq]
    weights = all_weights[uniq]
    maps, blocks = [], []
    node_sets: dict[str, list] = {}
    edge_sets: dict[str, list] = {}
    base = 0
    for m in meshes:
        local = new_ids[base: base + m.n_nodes]
        maps.append(local)
        for blk in m.blocks:
            blocks.append(ElementBlock(blk.technology, local[blk.connectivity]))
        for name, ids in m.node_sets.items():
            node_sets.setdefault(name, []).append(local[ids])
        for name, conn in m.edge_sets.items():
            edge_sets.setdefault(name, []).append(local[conn])
        base += m.n_nodes
    merged = Mesh(nodes, weights, blocks,
                  {k: np.unique(np.concatenate(v)) for k, v in node_sets.items()},
                  {k: np.vstack(v) for k, v in edge_sets.items()})
    return merged, maps


# ---------------------------------------------------------------------------
# Cartesian background meshes


def build_cartesian_mesh(lo, hi, h: float, technology: str = "quad4") -> Mesh:
    """Axis-aligned background grid covering [lo, hi] with target size h."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo) or h <= 0:
        raise GeometryError("invalid background bounds or cell size")
    ncell = np.maximum(np.ceil((hi - lo) / h - 1e-12).astype(int), 1)
    nx, ny = int(ncell[0]), int(ncell[1])
    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    if technology == "quad4":
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        gid = lambda i, j: j * (nx + 1) + i
        conn = [[gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1)]
                for j in range(ny) for i in range(nx)]
        edge = {
            "bottom": [[gid(i, 0), gid(i + 1, 0)] for i in range(nx)],
            "top": [[gid(i, ny), gid(i + 1, ny)] for i in range(nx)],
            "left": [[gid(0, j), gid(0, j + 1)] for j in range(ny)],
            "right": [[gid(nx, j), gid(nx, j + 1)] for j in range(ny)],
        }
        nsets = {
            "bottom": np.array([gid(i, 0) for i in range(nx + 1)]),
            "top": np.array([gid(i, ny) for i in range(nx + 1)]),
            "left": np.array([gid(0, j) for j in range(ny + 1)]),
            "right": np.array([gid(nx, j) for j in range(ny + 1)]),
        }
    elif technology == "quad8":
        # serendipity grid: corner nodes plus edge midpoints
        ids = -np.ones((2 * nx + 1, 2 * ny + 1), dtype=int)
        coords = []
        for j in range(2 * ny + 1):
            for i in range(2 * nx + 1):
                if i % 2 == 1 and j % 2 == 1:
                    continue  # no interior center nodes
                ids[i, j] = len(coords)
                coords.append((lo[0] + 0.5 * i * (hi[0] - lo[0]) / nx,
                               lo[1] + 0.5 * j * (hi[1] - lo[1]) / ny))
        nodes = np.array(coords)
        conn = []
        for j in range(ny):
            for i in range(nx):
                a, b = 2 * i, 2 * j
                conn.append([ids[a, b], ids[a + 2, b], ids[a + 2, b + 2],
                             ids[a, b + 2], ids[a + 1, b], ids[a + 2, b + 1],
                             ids[a + 1, b + 2], ids[a, b + 1]])
        edge = {
            "bottom": [[ids[2 * i, 0], ids[2 * i + 1, 0], ids[2 * i + 2, 0]]
                       for i in range(nx)],
            "top": [[ids[2 * i, -1], ids[2 * i + 1, -1], ids[2 * i + 2, -1]]
                    for i in range(nx)],
            "left": [[ids[0, 2 * j], ids[0, 2 * j + 1], ids[0, 2 * j + 2]]
                     for j in range(ny)],
            "right": [[ids[-1, 2 * j], ids[-1, 2 * j + 1], ids[-1, 2 * j + 2]]
                      for j in range(ny)],
        }
        nsets = {
            "bottom": ids[:, 0][ids[:, 0] >= 0],
            "top": ids[:, -1][ids[:, -1] >= 0],
            "left": ids[0, :][ids[0, :] >= 0],
            "right": ids[-1, :][ids[-1, :] >= 0],
        }
    else:
        raise GeometryError(f"unsupported background technology {technology}")
    mesh = Mesh(np.asarray(nodes, float), np.ones(len(nodes)),
                [ElementBlock(technology, np.array(conn, dtype=int))],
                nsets, {k: np.array(v, dtype=int) for k, v in edge.items()})
    return mesh


# ---------------------------------------------------------------------------
# serialization


def save_mesh(mesh: Mesh, path: str) -> None:
    data = {
        "nodes": mesh.nodes.tolist(),
        "weights": mesh.weights.tolist(),
        "blocks": [{"technology": b.technology,
                    "connectivity": b.connectivity.tolist()}
                   for b in mesh.blocks],
        "node_sets": {k: np.asarray(v).tolist() for k, v in mesh.node_sets.items()},
        "edge_sets": {k: np.asarray(v).tolist() for k, v in mesh.edge_sets.items()},
    }
    with open(path, "w") as fh:
        json.dump(data, fh)


def read_mesh(path: str) -> Mesh:
    with open(path) as fh:
        data = json.load(fh)
    return Mesh(
        np.array(data["nodes"], float),
        np.array(data["weights"], float),
        [ElementBlock(b["technology"], np.array(b["connectivity"], int))
         for b in data["blocks"]],
        {k: np.array(v, int) for k, v in data["node_sets"].items()},
        {k: np.array(v, int) for k, v in data["edge_sets"].items()},
    )


def export_vtk(mesh: Mesh, path: str, point_data: dict | None = None,
               cell_data: dict | None = None, title: str = "mesh") -> None:
    """Legacy ASCII VTK unstructured-grid export.

    nurbs9 elements are written as biquadratic quads on their control
    points; this is a visualization approximation of the rational geometry.
    """
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g} 0")
    n_cells = sum(len(b.connectivity) for b in mesh.blocks)
    size = sum((b.connectivity.shape[1] + 1) * len(b.connectivity)
               for b in mesh.blocks)
    lines.append(f"CELLS {n_cells} {size}")
    for b in mesh.blocks:
        for row in b.connectivity:
            lines.append(str(len(row)) + " " + " ".join(map(str, row)))
    lines.append(f"CELL_TYPES {n_cells}")
    for b in mesh.blocks:
        lines.extend([str(_VTK_CELL[b.technology])] * len(b.connectivity))
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, arr in point_data.items():
            arr = np.asarray(arr, float)
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(f"{v:.17g}" for v in arr)
            else:
                lines.append(f"VECTORS {name} double")
                for row in arr:
                    v = np.zeros(3)
                    v[: len(row)] = row
                    lines.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    if cell_data:
        lines.append(f"CELL_DATA {n_cells}")
        for name, arr in cell_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.17g}" for v in np.asarray(arr, float))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
