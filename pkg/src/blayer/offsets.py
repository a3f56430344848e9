"""Structure-preserving offsets of NURBS curves and surfaces.

Three methods are provided: control-polygon translation, Greville
interpolation, and a spring-energy optimization.  All of them keep the
degrees, knot vectors and weights of the base patch, only the control
points move.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .nurbs import (GeometryError, NurbsPatch, curve_inward_normal,
                    eval_nurbs_basis, surface_normal)


class OffsetMethod(enum.Enum):
    POLYGON_TRANSLATION = "polygon-translation"
    INTERPOLATION = "interpolation"
    OPTIMIZATION = "optimization"


@dataclass
class OffsetRequest:
    base: NurbsPatch
    distance: float
    method: OffsetMethod
    samples: int = 50              # optimization sampling points per direction
    step_size: float = 0.0         # 0 -> 1/Lipschitz estimate
    max_iterations: int = 2000
    gradient_tol: float = 1e-10    # relative to the initial gradient norm
    validate_curvature: bool = True
    # optional replacement normals at domain boundary samples, used for
    # multi-patch kink averaging: {(direction_key): normal}
    normal_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.distance <= 0:
            raise GeometryError("offset distance must be positive")
        if self.validate_curvature:
            rmin = minimum_curvature_radius(self.base)
            if self.distance >= rmin:
                raise GeometryError(
                    f"offset distance {self.distance} exceeds the minimum "
                    f"radius of curvature {rmin:.6g}")


@dataclass
class OffsetResult:
    offset: NurbsPatch
    iterations: int = 0
    energy: float = 0.0
    fallbacks: int = 0
    warning: str | None = None


# ---------------------------------------------------------------------------
# normals


def _normal(patch: NurbsPatch, params, overrides=None):
    if overrides:
        key = _override_key(patch, params)
        if key in overrides:
            return overrides[key]
    if patch.pdim == 1:
        return curve_inward_normal(patch, params[0])
    return surface_normal(patch, *params)


def _override_key(patch, params, tol=1e-12):
    """Map parameters sitting on the domain boundary to an endpoint key.

    Keys: per direction -1 (start), +1 (end) or 0 (interior).
    """
    key = []
    for kv, u in zip(patch.knot_vectors, params):
        lo, hi = kv.domain
        if abs(u - lo) <= tol:
            key.append(-1)
        elif abs(u - hi) <= tol:
            key.append(1)
        else:
            key.append(0)
    return tuple(key)


def minimum_curvature_radius(patch: NurbsPatch, per_span: int = 50) -> float:
    """Global minimum radius of curvature by dense normal-field sampling.

    kappa ~ |dn/ds| along parameter lines; robust enough for validating
    the offset-distance bound.
    """
    def line_min_radius(params_list):
        normals, points = [], []
        for prm in params_list:
            points.append(patch.point(*prm))
            normals.append(_normal(patch, prm))
        r = np.inf
        for a in range(len(points) - 1):
            ds = np.linalg.norm(points[a + 1] - points[a])
            dn = np.linalg.norm(normals[a + 1] - normals[a])
            if dn > 1e-14 and ds > 1e-14:
                r = min(r, ds / dn)
        return r

    if patch.pdim == 1:
        us = patch.sample(per_span)
        return line_min_radius([(u,) for u in us])
    rmin = np.inf
    us = patch.sample(per_span, 0)
    vs = patch.sample(per_span, 1)
    for v in vs[:: max(1, len(vs) // 8)]:
        rmin = min(rmin, line_min_radius([(u, v) for u in us]))
    for u in us[:: max(1, len(us) // 8)]:
        rmin = min(rmin, line_min_radius([(u, v) for v in vs]))
    return rmin


# ---------------------------------------------------------------------------
# method 1: control-polygon translation


def _segment_normal(d: np.ndarray) -> np.ndarray:
    n = np.array([d[1], -d[0]])
    norm = np.linalg.norm(n)
    if norm < 1e-14:
        raise GeometryError("degenerate control-polygon segment")
    return n / norm


def _line_intersection(p1, d1, p2, d2):
    """Intersection of two 2D lines; None when (near) parallel."""
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    scale = np.linalg.norm(d1) * np.linalg.norm(d2)
    if abs(cross) < 1e-10 * scale:
        return None
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / cross
    return p1 + t * d1


def _offset_polygon_curve(req: OffsetRequest) -> OffsetResult:
    P = req.base.points
    ell = req.distance
    n = len(P)
    dirs = P[1:] - P[:-1]
    normals = [_segment_normal(d) for d in dirs]
    new = np.empty_like(P)
    fallbacks = 0
    first = req.normal_overrides.get((-1,), normals[0])
    last = req.normal_overrides.get((1,), normals[-1])
    new[0] = P[0] + ell * first
    new[-1] = P[-1] + ell * last
    for i in range(1, n - 1):
        a = _line_intersection(P[i - 1] + ell * normals[i - 1], dirs[i - 1],
                               P[i] + ell * normals[i], dirs[i])
        if a is None:
            # parallel segments: translated lines coincide or are disjoint
            mid = 0.5 * ((P[i] + ell * normals[i - 1]) + (P[i] + ell * normals[i]))
            a = mid
            if np.linalg.norm(normals[i] - normals[i - 1]) > 1e-10:
                fallbacks += 1
        new[i] = a
    offset = NurbsPatch(req.base.knot_vectors, new, req.base.weights)
    return OffsetResult(offset, fallbacks=fallbacks)


def _facet_normals(P: np.ndarray):
    """Unit normals of the control-net facets, oriented like S_u x S_v."""
    ni, nj = P.shape[0], P.shape[1]
    normals = np.empty((ni - 1, nj - 1, 3))
    for i in range(ni - 1):
        for j in range(nj - 1):
            # cross of facet diagonals: robust for mildly non-planar facets
            d1 = P[i + 1, j + 1] - P[i, j]
            d2 = P[i, j + 1] - P[i + 1, j]
            nvec = np.cross(d1, d2)
            norm = np.linalg.norm(nvec)
            if norm < 1e-14:
                raise GeometryError(f"degenerate control facet ({i}, {j})")
            normals[i, j] = nvec / norm
    return normals


def _offset_polygon_surface(req: OffsetRequest) -> OffsetResult:
    """Facet-plane translation for surfaces.

    Each control point moves so that its displacement projects to the
    offset distance along every adjacent translated facet plane.  The
    per-point system n_f . (x - P) = ell is solved in the minimum-norm
    least-squares sense over all adjacent facets; for a single adjacent
    facet (corners) this degenerates to a direct translation, matching
    the endpoint treatment of the curve variant.
    """
    P = req.base.points
    ell = req.distance
    ni, nj = P.shape[0], P.shape[1]
    normals = _facet_normals(P)
    new = np.empty_like(P)
    for i in range(ni):
        for j in range(nj):
            fac = [(a, b)
                   for a in (i - 1, i) for b in (j - 1, j)
                   if 0 <= a < ni - 1 and 0 <= b < nj - 1]
            A = np.array([normals[a, b] for a, b in fac])
            new[i, j] = P[i, j] + np.linalg.pinv(A) @ (ell * np.ones(len(fac)))
    offset = NurbsPatch(req.base.knot_vectors, new, req.base.weights)
    return OffsetResult(offset)


def offset_polygon_translation(req: OffsetRequest) -> OffsetResult:
    if req.base.pdim == 1:
        return _offset_polygon_curve(req)
    if req.base.pdim == 2:
        return _offset_polygon_surface(req)
    raise GeometryError("polygon translation supports curves and surfaces")


# ---------------------------------------------------------------------------
# method 2: Greville interpolation


def _greville_grid(patch: NurbsPatch):
    axes = [kv.greville() for kv in patch.knot_vectors]
    if patch.pdim == 1:
        return [(u,) for u in axes[0]]
    return [(u, v) for u in axes[0] for v in axes[1]]


def _basis_row(patch: NurbsPatch, params) -> np.ndarray:
    """Full rational-basis row (flattened control-grid order) at params."""
    grid = patch.weights.shape
    per = [patch.knot_vectors[k].basis(u) for k, u in enumerate(params)]
    B = per[0][1]
    for _, v, _ in per[1:]:
        B = np.multiply.outer(B, v)
    sl = tuple(slice(s - kv.degree, s + 1)
               for (s, _, _), kv in zip(per, patch.knot_vectors))
    row = np.zeros(grid)
    row[sl] = B * patch.weights[sl]
    return row.reshape(-1) / row.sum()


def _offset_targets(patch: NurbsPatch, params_list, ell, overrides):
    return np.array([patch.point(*prm) + ell * _normal(patch, prm, overrides)
                     for prm in params_list])


def offset_interpolation(req: OffsetRequest) -> OffsetResult:
    base = req.base
    if base.pdim not in (1, 2):
        raise GeometryError("interpolation offset supports curves and surfaces")
    params_list = _greville_grid(base)
    N = np.array([_basis_row(base, prm) for prm in params_list])
    x_o = _offset_targets(base, params_list, req.distance, req.normal_overrides)
    try:
        ctrl = np.linalg.solve(N, x_o)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("singular Greville collocation matrix") from exc
    offset = NurbsPatch(base.knot_vectors,
                        ctrl.reshape(base.points.shape), base.weights)
    return OffsetResult(offset)


# ---------------------------------------------------------------------------
# method 3: spring-energy optimization


def _uniform_params(patch: NurbsPatch, m: int):
    axes = [np.linspace(*kv.domain, m) for kv in patch.knot_vectors]
    if patch.pdim == 1:
        return [(u,) for u in axes[0]]
    return [(u, v) for u in axes[0] for v in axes[1]]


def offset_optimization(req: OffsetRequest) -> OffsetResult:
    """Gradient descent on the spring energy E = 1/2 sum |x_o,i - C_o(xi_i)|^2.

    The candidate offset is seeded with the interpolation result; the
    sampling points are uniform in parameter.
    """
    base = req.base
    n_cp = int(np.prod(base.weights.shape))
    if req.samples < base.weights.shape[0]:
        raise GeometryError("need at least as many springs as control points")
    seed = offset_interpolation(req).offset
    params_list = _uniform_params(base, req.samples)
    A = np.array([_basis_row(base, prm) for prm in params_list])
    x_o = _offset_targets(base, params_list, req.distance, req.normal_overrides)

    P = seed.points.reshape(n_cp, -1).copy()
    r = x_o - A @ P
    energy = 0.5 * float(np.sum(r * r))
    grad = -A.T @ r
    g0 = np.linalg.norm(grad)
    tol = req.gradient_tol * g0
    if req.step_size > 0:
        step = req.step_size
    else:
        step = 1.0 / float(np.linalg.eigvalsh(A.T @ A)[-1])
    iterations = 0
    warning = None
    while g0 > 0 and np.linalg.norm(grad) > tol:
        if iterations >= req.max_iterations:
            warning = "gradient descent did not converge"
            break
        trial = P - step * grad
        r = x_o - A @ trial
        e_trial = 0.5 * float(np.sum(r * r))
        if e_trial > energy:
            step *= 0.5
            continue
        P, energy = trial, e_trial
        grad = -A.T @ r
        iterations += 1
    offset = NurbsPatch(base.knot_vectors, P.reshape(base.points.shape),
                        base.weights)
    return OffsetResult(offset, iterations=iterations, energy=energy,
                        warning=warning)


_DISPATCH = {
    OffsetMethod.POLYGON_TRANSLATION: offset_polygon_translation,
    OffsetMethod.INTERPOLATION: offset_interpolation,
    OffsetMethod.OPTIMIZATION: offset_optimization,
}


def offset_patch(req: OffsetRequest) -> OffsetResult:
    return _DISPATCH[req.method](req)


# ---------------------------------------------------------------------------
# error metrics


_GAUSS_N = 10


def _gauss_per_spans(kv, n=_GAUSS_N):
    x, w = np.polynomial.legendre.leggauss(n)
    bps = kv.breakpoints()
    pts, wts = [], []
    for a, b in zip(bps[:-1], bps[1:]):
        pts.append(0.5 * (b - a) * x + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(pts), np.concatenate(wts)


def _distance(base, approx, ell, params, overrides=None):
    exact = base.point(*params) + ell * _normal(base, params, overrides)
    return float(np.linalg.norm(approx.point(*params) - exact))


def offset_error_metrics(base: NurbsPatch, approx: NurbsPatch, ell: float,
                         samples_per_span: int = 200,
                         normal_overrides: dict | None = None):
    """Maximum and length/area-normalized L2 offset errors (e_inf, e_L2).

    e_inf is taken over dense uniform samples; e_L2 integrates d^2 over the
    approximation with composite Gauss quadrature per knot span and is
    normalized by the approximation's arc length (curves) or area (surfaces).
    """
    if base.pdim == 1:
        us = base.sample(samples_per_span)
        e_inf = max(_distance(base, approx, ell, (u,), normal_overrides)
                    for u in us)
        gp, gw = _gauss_per_spans(base.knot_vectors[0])
        num = 0.0
        length = 0.0
        for u, w in zip(gp, gw):
            _, grads = approx.evaluate(u)
            ds = np.linalg.norm(grads[0]) * w
            num += _distance(base, approx, ell, (u,), normal_overrides) ** 2 * ds
            length += ds
        return e_inf, float(np.sqrt(num / length))
    if base.pdim == 2:
        # e_inf on a coarser grid; d() is smooth so 50/span is ample
        dense = min(samples_per_span, 50)
        us = base.sample(dense, 0)
        vs = base.sample(dense, 1)
        e_inf = max(_distance(base, approx, ell, (u, v), normal_overrides)
                    for u in us for v in vs)
        gpu, gwu = _gauss_per_spans(base.knot_vectors[0], 6)
        gpv, gwv = _gauss_per_spans(base.knot_vectors[1], 6)
        num = 0.0
        area = 0.0
        for u, wu in zip(gpu, gwu):
            for v, wv in zip(gpv, gwv):
                _, grads = approx.evaluate(u, v)
                dA = np.linalg.norm(np.cross(grads[0], grads[1])) * wu * wv
                num += _distance(base, approx, ell, (u, v),
                                 normal_overrides) ** 2 * dA
                area += dA
        return e_inf, float(np.sqrt(num / area))
    raise GeometryError("error metrics support curves and surfaces")


# ---------------------------------------------------------------------------
# multi-patch kink handling


def average_patch_edge_normals(curves: list[NurbsPatch], tol: float = 1e-10):
    """Averaged normals at shared endpoints of a chain of planar curves.

    Returns one override dict per curve, mapping endpoint keys (-1,)/(1,)
    to the normalized average of the adjacent patch normals.  Offsetting
    with these overrides makes adjacent offset boundaries coincide.
    """
    ends = []  # (curve index, key, point, normal)
    for ci, c in enumerate(curves):
        lo, hi = c.knot_vectors[0].domain
        for key, u in (((-1,), lo), ((1,), hi)):
            ends.append((ci, key, c.point(u), curve_inward_normal(c, u)))
    overrides = [dict() for _ in curves]
    used = set()
    for a in range(len(ends)):
        for b in range(a + 1, len(ends)):
            if a in used or b in used:
                continue
            ci, ka, pa, na = ends[a]
            cj, kb, pb, nb = ends[b]
            if ci == cj or np.linalg.norm(pa - pb) > tol * max(1.0, np.linalg.norm(pa)):
                continue
            avg = na + nb
            norm = np.linalg.norm(avg)
            if norm < 1e-8:
                raise GeometryError(
                    f"opposite normals at shared point {pa}: degenerate kink")
            avg /= norm
            overrides[ci][ka] = avg
            overrides[cj][kb] = avg
            used.update((a, b))
    return overrides
