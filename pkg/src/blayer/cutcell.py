"""Cut-cell integration of background meshes against an embedded interface.

The offset interface is linearized into chords, background cells are
classified as material / void / cut, and cut cells receive triangulated
quadrature rules restricted to the material region.  Interface quadrature
point pairs (layer edge parameter <-> background reference coordinates)
are produced here for the embedded mortar coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .elasticity import shape_functions
from .nurbs import GeometryError, NurbsPatch


# ---------------------------------------------------------------------------
# polygon utilities


def polygon_area(poly: np.ndarray) -> float:
    """Signed area, positive for counter-clockwise orientation."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def clip_polygon(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a convex CCW clipper."""
    out = [tuple(p) for p in subject]
    m = len(clipper)
    for k in range(m):
        a, b = clipper[k], clipper[(k + 1) % m]
        edge = b - a
        inp, out = out, []
        if not inp:
            break
        prev = inp[-1]
        prev_in = edge[0] * (prev[1] - a[1]) - edge[1] * (prev[0] - a[0]) >= -1e-14
        for cur in inp:
            cur_in = edge[0] * (cur[1] - a[1]) - edge[1] * (cur[0] - a[0]) >= -1e-14
            if cur_in != prev_in:
                d = np.array(cur) - np.array(prev)
                denom = edge[0] * d[1] - edge[1] * d[0]
                t = (edge[0] * (a[1] - prev[1]) - edge[1] * (a[0] - prev[0])) / denom
                out.append(tuple(np.array(prev) + t * d))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
    if not out:
        return np.empty((0, 2))
    # drop near-duplicate consecutive vertices
    poly = [out[0]]
    for p in out[1:]:
        if np.hypot(p[0] - poly[-1][0], p[1] - poly[-1][1]) > 1e-12:
            poly.append(p)
    if len(poly) > 1 and np.hypot(poly[0][0] - poly[-1][0],
                                  poly[0][1] - poly[-1][1]) <= 1e-12:
        poly.pop()
    return np.array(poly)


def _point_in_triangle(p, a, b, c, eps=1e-12):
    d1 = (p[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (p[1] - b[1])
    d2 = (p[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (p[1] - c[1])
    d3 = (p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])
    neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
    pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
    return not (neg and pos)


def triangulate_polygon(poly: np.ndarray) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a simple polygon (any orientation)."""
    n = len(poly)
    if n < 3:
        return []
    idx = list(range(n))
    if polygon_area(poly) < 0:
        idx.reverse()
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10 * n:
        guard += 1
        n_cur = len(idx)
        found = False
        for k in range(n_cur):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n_cur]
            a, b, c = poly[i0], poly[i1], poly[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 1e-14:
                continue  # reflex or degenerate corner
            others = [j for j in idx if j not in (i0, i1, i2)]
            if any(_point_in_triangle(poly[j], a, b, c) for j in others):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            found = True
            break
        if not found:
            # numerically stuck: drop the most degenerate corner
            areas = []
            for k in range(len(idx)):
                a = poly[idx[k - 1]]
                b = poly[idx[k]]
                c = poly[idx[(k + 1) % len(idx)]]
                areas.append(abs((b[0] - a[0]) * (c[1] - a[1])
                                 - (b[1] - a[1]) * (c[0] - a[0])))
            idx.pop(int(np.argmin(areas)))
    if len(idx) == 3:
        tris.append(tuple(idx))
    return tris


def triangle_quadrature(a, b, c):
    """Three-point second-order rule on the physical triangle (a, b, c)."""
    area = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2
    bary = [(2 / 3, 1 / 6, 1 / 6), (1 / 6, 2 / 3, 1 / 6), (1 / 6, 1 / 6, 2 / 3)]
    pts = np.array([l0 * np.asarray(a) + l1 * np.asarray(b) + l2 * np.asarray(c)
                    for l0, l1, l2 in bary])
    return pts, np.full(3, area / 3)


# ---------------------------------------------------------------------------
# inverse isoparametric map


def inverse_isoparametric(technology: str, X_elem, x_target, weights=None,
                          tol: float = 1e-12, max_iter: int = 50):
    """Reference coordinates of a physical point inside an element (Newton)."""
    X_elem = np.asarray(X_elem, float)
    x_target = np.asarray(x_target, float)
    if technology == "tri3":
        A = np.column_stack([X_elem[1] - X_elem[0], X_elem[2] - X_elem[0]])
        return np.linalg.solve(A, x_target - X_elem[0])
    scale = np.linalg.norm(X_elem.max(axis=0) - X_elem.min(axis=0))
    ref = np.zeros(2)
    for _ in range(max_iter):
        N, dN = shape_functions(technology, ref[0], ref[1], weights)
        r = N @ X_elem - x_target
        if np.linalg.norm(r) <= tol * max(scale, 1.0):
            return ref
        J = X_elem.T @ dN
        ref = ref - np.linalg.solve(J, r)
    raise GeometryError("inverse isoparametric map did not converge")


def point_in_reference(technology: str, ref, tol: float = 1e-9) -> bool:
    if technology == "tri3":
        return (ref[0] >= -tol and ref[1] >= -tol
                and ref[0] + ref[1] <= 1 + tol)
    return bool(np.all(np.abs(ref) <= 1 + tol))


class ElementLocator:
    """Point-to-element lookup over all blocks of a mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.keys = []
        cents, self.radius = [], 0.0
        for bi, blk in enumerate(mesh.blocks):
            for ei, conn in enumerate(blk.connectivity):
                xs = mesh.nodes[conn]
                cents.append(xs.mean(axis=0))
                self.radius = max(self.radius, float(
                    np.linalg.norm(xs.max(axis=0) - xs.min(axis=0))))
                self.keys.append((bi, ei))
        self.tree = cKDTree(np.array(cents))

    def locate(self, x, tol: float = 1e-9):
        """Containing (block, element, reference coords) of point x."""
        ids = self.tree.query_ball_point(np.asarray(x, float), self.radius)
        ids.sort(key=lambda k: np.linalg.norm(self.tree.data[k] - x))
        for k in ids:
            bi, ei = self.keys[k]
            blk = self.mesh.blocks[bi]
            conn = blk.connectivity[ei]
            corners = self.mesh.nodes[conn[:3 if blk.technology == "tri3" else 4]]
            lo, hi = corners.min(axis=0), corners.max(axis=0)
            pad = tol * max(self.radius, 1.0) + 1e-12
            if np.any(x < lo - self.radius) or np.any(x > hi + self.radius):
                continue
            try:
                ref = inverse_isoparametric(blk.technology,
                                            self.mesh.nodes[conn], x,
                                            self.mesh.weights[conn])
            except (GeometryError, np.linalg.LinAlgError):
                continue
            if point_in_reference(blk.technology, ref, tol):
                return bi, ei, ref
        raise GeometryError(f"point {x} not inside any element")


# ---------------------------------------------------------------------------
# interface linearization


@dataclass
class InterfaceChord:
    curve_index: int
    xi_a: float
    xi_b: float
    p_a: np.ndarray
    p_b: np.ndarray


def linearize_interface(curves, segments_per_span: int = 4) -> list[InterfaceChord]:
    """Chord subdivision of the interface curves, per knot span."""
    if isinstance(curves, NurbsPatch):
        curves = [curves]
    chords = []
    for ci, curve in enumerate(curves):
        bps = curve.knot_vectors[0].breakpoints()
        for a, b in zip(bps[:-1], bps[1:]):
            xs = np.linspace(a, b, segments_per_span + 1)
            pts = [curve.point(x) for x in xs]
            for k in range(segments_per_span):
                chords.append(InterfaceChord(ci, float(xs[k]), float(xs[k + 1]),
                                             pts[k], pts[k + 1]))
    return chords


# ---------------------------------------------------------------------------
# cell classification and cut quadrature


@dataclass
class CutCellData:
    status: dict = field(default_factory=dict)   # (bi, ei) -> material|void|cut
    rules: dict = field(default_factory=dict)    # (bi, ei) -> (ref pts, phys wts) or None
    fractions: dict = field(default_factory=dict)  # (bi, ei) -> material area fraction
    pruned: list = field(default_factory=list)


def _points_in_polygon(points, poly):
    """Vectorized even-odd containment test (edge points unspecified)."""
    pts = np.asarray(points, float).reshape(-1, 2)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    inside = np.zeros(len(pts), bool)
    dy = np.where(y1 != y0, y1 - y0, np.inf)
    for s in range(0, len(pts), 1024):
        x = pts[s:s + 1024, :1]
        y = pts[s:s + 1024, 1:2]
        cond = ((y0 <= y) & (y < y1)) | ((y1 <= y) & (y < y0))
        xc = x0 + (y - y0) * (x1 - x0) / dy
        inside[s:s + 1024] = (np.sum(cond & (x < xc), axis=1) % 2).astype(bool)
    return inside


def _cells_near_boundary(boxes_lo, boxes_hi, poly):
    """Cells whose bounding box overlaps any polygon edge bounding box."""
    p0 = poly
    p1 = np.roll(poly, -1, axis=0)
    e_lo = np.minimum(p0, p1)
    e_hi = np.maximum(p0, p1)
    pad = 1e-12 * max(1.0, float(np.abs(poly).max()))
    near = np.zeros(len(boxes_lo), bool)
    for s in range(0, len(e_lo), 256):
        lo = e_lo[s:s + 256]
        hi = e_hi[s:s + 256]
        hit = ((lo[:, None, 0] <= boxes_hi[None, :, 0] + pad) &
               (hi[:, None, 0] >= boxes_lo[None, :, 0] - pad) &
               (lo[:, None, 1] <= boxes_hi[None, :, 1] + pad) &
               (hi[:, None, 1] >= boxes_lo[None, :, 1] - pad))
        near |= hit.any(axis=0)
    return near


def classify_cells(mesh, material_polygon: np.ndarray,
                   prune_threshold: float = 0.0) -> CutCellData:
    """Classify background cells against a closed CCW material polygon.

    Cut cells get triangulated second-order quadrature over the material
    part (physical weights, reference points).  Cells with material
    fraction below prune_threshold are demoted to void.
    """
    if polygon_area(material_polygon) <= 0:
        raise GeometryError("material polygon must be counter-clockwise")
    data = CutCellData()

    # prefilter: only cells near the polygon boundary need exact clipping;
    # the rest are classified by a containment test of their centroid
    keys, corner_list = [], []
    for bi, blk in enumerate(mesh.blocks):
        ncorner = 3 if blk.technology == "tri3" else 4
        for ei, conn in enumerate(blk.connectivity):
            keys.append((bi, ei))
            corner_list.append(mesh.nodes[conn[:ncorner]])
    boxes_lo = np.array([c.min(axis=0) for c in corner_list])
    boxes_hi = np.array([c.max(axis=0) for c in corner_list])
    near = _cells_near_boundary(boxes_lo, boxes_hi, material_polygon)
    centers = np.array([c.mean(axis=0) for c in corner_list])
    inside = _points_in_polygon(centers, material_polygon)
    for k, key in enumerate(keys):
        if near[k]:
            continue
        if inside[k]:
            data.status[key] = "material"
            data.fractions[key] = 1.0
        else:
            data.status[key] = "void"
            data.fractions[key] = 0.0
            data.rules[key] = None

    for bi, blk in enumerate(mesh.blocks):
        ncorner = 3 if blk.technology == "tri3" else 4
        for ei, conn in enumerate(blk.connectivity):
            if (bi, ei) in data.status:
                continue
            corners = mesh.nodes[conn[:ncorner]]
            cell_area = abs(polygon_area(corners))
            clipped = clip_polygon(material_polygon, corners)
            mat_area = abs(polygon_area(clipped)) if len(clipped) >= 3 else 0.0
            frac = mat_area / cell_area
            key = (bi, ei)
            data.fractions[key] = frac
            if frac >= 1.0 - 1e-9:
                data.status[key] = "material"
            elif frac <= 1e-12:
                data.status[key] = "void"
                data.rules[key] = None
            elif frac < prune_threshold:
                data.status[key] = "void"
                data.rules[key] = None
                data.pruned.append(key)
            else:
                data.status[key] = "cut"
                pts, wts = [], []
                for i0, i1, i2 in triangulate_polygon(clipped):
                    p, w = triangle_quadrature(clipped[i0], clipped[i1],
                                               clipped[i2])
                    pts.append(p)
                    wts.append(w)
                phys = np.vstack(pts)
                ref = np.array([inverse_isoparametric(
                    blk.technology, mesh.nodes[conn], x, mesh.weights[conn])
                    for x in phys])
                data.rules[key] = (ref, np.concatenate(wts))
    return data


def material_area(data: CutCellData, mesh) -> float:
    """Total integrated material area implied by the classification."""
    total = 0.0
    for bi, blk in enumerate(mesh.blocks):
        ncorner = 3 if blk.technology == "tri3" else 4
        for ei, conn in enumerate(blk.connectivity):
            key = (bi, ei)
            if data.status[key] == "material":
                total += abs(polygon_area(mesh.nodes[conn[:ncorner]]))
            elif data.status[key] == "cut":
                total += float(data.rules[key][1].sum())
    return total


# ---------------------------------------------------------------------------
# interface quadrature pairs


@dataclass
class InterfacePoint:
    curve_index: int
    xi: float
    weight: float          # physical arc-length measure
    bg_block: int
    bg_element: int
    bg_ref: np.ndarray
    point: np.ndarray


def _split_chord_at_grid(chord: InterfaceChord, locator: ElementLocator,
                         curve: NurbsPatch, n_sub: int = 1):
    """Split a chord's parameter interval so sub-intervals stay in one cell.

    Cell-boundary crossings are found by bisection on element membership,
    so piecewise-smooth background shape functions are integrated exactly
    on each sub-interval.
    """

    def cell_of(xi):
        bi, ei, _ = locator.locate(curve.point(xi))
        return (bi, ei)

    def stays_in(xi, cell):
        # membership test against one known element: much cheaper than a
        # full search and exactly what the bisection needs
        bi, ei = cell
        blk = locator.mesh.blocks[bi]
        conn = blk.connectivity[ei]
        try:
            ref = inverse_isoparametric(blk.technology,
                                        locator.mesh.nodes[conn],
                                        curve.point(xi),
                                        locator.mesh.weights[conn])
        except (GeometryError, np.linalg.LinAlgError):
            return False
        return point_in_reference(blk.technology, ref)

    min_len = 1e-9 * abs(chord.xi_b - chord.xi_a)
    max_pieces = 64     # cap for degenerate interfaces lying on a grid line

    xs = np.linspace(chord.xi_a, chord.xi_b, n_sub + 1)
    out = []
    stack = list(zip(xs[:-1], xs[1:]))[::-1]
    while stack:
        a, b = stack.pop()
        if b - a <= min_len or len(out) + len(stack) >= max_pieces:
            out.append((a, b))
            continue
        ca = cell_of(a + 1e-3 * (b - a))
        cb = cell_of(b - 1e-3 * (b - a))
        if ca == cb:
            out.append((a, b))
            continue
        lo, hi = a, b
        while hi - lo > min_len:
            m = 0.5 * (lo + hi)
            if stays_in(m, ca):
                lo = m
            else:
                hi = m
        m = 0.5 * (lo + hi)
        if m - a <= min_len or b - m <= min_len:
            out.append((a, b))
            continue
        stack.append((m, b))
        stack.append((a, m))
    return out


def interface_quadrature(curves, locator: ElementLocator, n_gauss: int = 3,
                         segments_per_span: int = 4,
                         subdivisions: int = 4) -> list[InterfacePoint]:
    """Arc-length quadrature on the interface paired with background cells.

    Each chord parameter interval is subdivided, Gauss points are placed
    in the curve parameter, weights carry |C'(xi)| so that summing weights
    yields the interface length.  Every point is located in the background
    mesh and annotated with its reference coordinates.
    """
    if isinstance(curves, NurbsPatch):
        curves = [curves]
    g, gw = np.polynomial.legendre.leggauss(n_gauss)
    points = []
    chords = linearize_interface(curves, segments_per_span)
    for chord in chords:
        curve = curves[chord.curve_index]
        for a, b in _split_chord_at_grid(chord, locator, curve, subdivisions):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            # the whole sub-interval lies in one cell: search once at the
            # midpoint, then invert directly on that element
            bi, ei, _ = locator.locate(curve.point(mid))
            blk = locator.mesh.blocks[bi]
            conn = blk.connectivity[ei]
            for t, w in zip(g, gw):
                xi = mid + half * t
                pt, grads = curve.evaluate(xi)
                ds = np.linalg.norm(grads[0])
                try:
                    ref = inverse_isoparametric(
                        blk.technology, locator.mesh.nodes[conn], pt,
                        locator.mesh.weights[conn])
                    ok = point_in_reference(blk.technology, ref, tol=1e-6)
                except (GeometryError, np.linalg.LinAlgError):
                    ok = False
                if ok:
                    bq, eq, rq = bi, ei, ref
                else:
                    bq, eq, rq = locator.locate(pt)
                points.append(InterfacePoint(chord.curve_index, float(xi),
                                             float(w * half * ds), bq, eq,
                                             rq, pt))
    return points
