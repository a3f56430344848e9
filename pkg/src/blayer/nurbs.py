"""B-spline/NURBS evaluation and refinement kernel.

Patches are immutable tensor-product NURBS of parametric dimension 1, 2 or 3
with open knot vectors and strictly positive weights.  Basis evaluation
returns only the p+1 nonzero functions of a span; global indexing is left to
the caller.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

# absolute tolerance for "parameter sits on a knot" comparisons
KNOT_TOL = 1e-12


class DomainError(ValueError):
    """Parameter outside the patch's parametric domain."""


class GeometryError(ValueError):
    """Degenerate or inconsistent geometric data."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector of a degree-p B-spline basis."""

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 0:
            raise GeometryError("degree must be non-negative")
        if knots.ndim != 1 or len(knots) < 2 * (p + 1):
            raise GeometryError("knot vector too short for degree %d" % p)
        if np.any(np.diff(knots) < 0):
            raise GeometryError("knots must be non-decreasing")
        if not (np.allclose(knots[: p + 1], knots[0], atol=KNOT_TOL)
                and np.allclose(knots[-p - 1:], knots[-1], atol=KNOT_TOL)):
            raise GeometryError("knot vector is not in open form")

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values, in increasing order (element boundaries)."""
        uniq = [self.knots[0]]
        for u in self.knots[1:]:
            if u > uniq[-1] + KNOT_TOL:
                uniq.append(u)
        return np.array(uniq)

    def spans(self) -> list[int]:
        """Span index of each nonempty knot interval."""
        out = []
        for i in range(self.degree, self.n_basis):
            if self.knots[i + 1] > self.knots[i] + KNOT_TOL:
                out.append(i)
        return out

    def find_span(self, u: float) -> int:
        lo, hi = self.domain
        if u < lo - KNOT_TOL or u > hi + KNOT_TOL:
            raise DomainError(f"parameter {u} outside [{lo}, {hi}]")
        n = self.n_basis
        if u >= self.knots[n] - KNOT_TOL:
            return n - 1
        # binary search for i with knots[i] <= u < knots[i+1]
        lo_i, hi_i = self.degree, n
        while True:
            mid = (lo_i + hi_i) // 2
            if u < self.knots[mid]:
                hi_i = mid
            elif u >= self.knots[mid + 1]:
                lo_i = mid + 1
            else:
                return mid

    def basis(self, u: float):
        """Nonzero B-spline basis values and first derivatives at u.

        Returns (span, values, derivatives), each array of length p+1
        for functions N_{span-p} .. N_{span}.
        """
        span = self.find_span(u)
        p = self.degree
        U = self.knots
        # Cox-de Boor triangle, keeping the degree p-1 row for derivatives
        N = np.zeros(p + 1, dtype=np.result_type(u, float))
        N[0] = 1.0
        left = np.zeros(p + 1, dtype=N.dtype)
        right = np.zeros(p + 1, dtype=N.dtype)
        lower = np.zeros(p + 1, dtype=N.dtype)  # degree p-1 values
        for j in range(1, p + 1):
            left[j] = u - U[span + 1 - j]
            right[j] = U[span + j] - u
            if j == p:
                lower[:p] = N[:p]
            saved = 0.0
            for r in range(j):
                denom = right[r + 1] + left[j - r]
                temp = N[r] / denom
                N[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            N[j] = saved
        ders = np.zeros(p + 1, dtype=N.dtype)
        if p > 0:
            if p == 1:
                lower[0] = 1.0
            for r in range(p + 1):
                d = 0.0
                if r > 0:
                    denom = U[span + r] - U[span + r - p]
                    if denom > 0:
                        d += lower[r - 1] / denom
                if r < p:
                    denom = U[span + r + 1] - U[span + r + 1 - p]
                    if denom > 0:
                        d -= lower[r] / denom
                ders[r] = p * d
        return span, N, ders

    def greville(self) -> np.ndarray:
        """Greville abscissae: degree-averaged knot means."""
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        return np.array([self.knots[i + 1: i + p + 1].mean()
                         for i in range(self.n_basis)])


def eval_nurbs_basis(kv: KnotVector, weights, u):
    """Rational basis values/derivatives at u for the p+1 active functions.

    weights is the full length-n weight array; returns (span, R, dR).
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise GeometryError("weights must be strictly positive")
    span, B, dB = kv.basis(u)
    w = weights[span - kv.degree: span + 1]
    Bw = B * w
    dBw = dB * w
    W = Bw.sum()
    dW = dBw.sum()
    R = Bw / W
    dR = (dBw - R * dW) / W
    return span, R, dR


@dataclass(frozen=True)
class NurbsPatch:
    """Tensor-product NURBS curve (1D), surface (2D) or volume (3D)."""

    knot_vectors: tuple[KnotVector, ...]
    points: np.ndarray   # shape (*grid, d)
    weights: np.ndarray  # shape grid

    def __post_init__(self):
        kvs = tuple(self.knot_vectors)
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "knot_vectors", kvs)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        pdim = len(kvs)
        if pdim not in (1, 2, 3):
            raise GeometryError("parametric dimension must be 1, 2 or 3")
        grid = tuple(kv.n_basis for kv in kvs)
        if pts.shape[:-1] != grid or wts.shape != grid:
            raise GeometryError(
                f"control net shape {pts.shape[:-1]} does not match basis counts {grid}")
        if np.any(wts <= 0):
            raise GeometryError("weights must be strictly positive")

    @property
    def pdim(self) -> int:
        return len(self.knot_vectors)

    @property
    def sdim(self) -> int:
        return self.points.shape[-1]

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(kv.degree for kv in self.knot_vectors)

    def domain(self) -> list[tuple[float, float]]:
        return [kv.domain for kv in self.knot_vectors]

    def evaluate(self, *params):
        """Point and first partials at the given parameters.

        Returns (point, grads) with grads of shape (pdim, sdim).
        """
        if len(params) != self.pdim:
            raise DomainError(f"expected {self.pdim} parameters")
        per_dir = [kv.basis(u) for kv, u in zip(self.knot_vectors, params)]
        spans = [s for s, _, _ in per_dir]
        slices = tuple(slice(s - kv.degree, s + 1)
                       for s, kv in zip(spans, self.knot_vectors))
        w = self.weights[slices]
        pts = self.points[slices]
        vals = [v for _, v, _ in per_dir]
        ders = [d for _, _, d in per_dir]

        def outer(arrs):
            out = arrs[0]
            for a in arrs[1:]:
                out = np.multiply.outer(out, a)
            return out

        B = outer(vals)
        Bw = B * w
        W = Bw.sum()
        num = np.tensordot(Bw, pts, axes=(tuple(range(self.pdim)),
                                          tuple(range(self.pdim))))
        point = num / W
        grads = np.zeros((self.pdim, self.sdim))
        for k in range(self.pdim):
            arrs = [ders[j] if j == k else vals[j] for j in range(self.pdim)]
            dBw = outer(arrs) * w
            dW = dBw.sum()
            dnum = np.tensordot(dBw, pts, axes=(tuple(range(self.pdim)),
                                                tuple(range(self.pdim))))
            grads[k] = (dnum - point * dW) / W
        return point, grads

    def point(self, *params) -> np.ndarray:
        return self.evaluate(*params)[0]

    def sample(self, per_span: int = 10, direction: int = 0) -> np.ndarray:
        """Uniform parameter samples, per_span per knot span (curves: 1D)."""
        kv = self.knot_vectors[direction]
        bps = kv.breakpoints()
        out = []
        for a, b in zip(bps[:-1], bps[1:]):
            out.append(np.linspace(a, b, per_span + 1)[:-1])
        out.append([bps[-1]])
        return np.concatenate(out)


def curve_inward_normal(curve: NurbsPatch, u: float) -> np.ndarray:
    """Unit normal (y', -x')/|C'| of a planar curve.

    With the boundary traversed clockwise around the body this points
    into the body.
    """
    if curve.pdim != 1 or curve.sdim != 2:
        raise GeometryError("inward normal requires a planar curve")
    _, grads = curve.evaluate(u)
    dx, dy = grads[0]
    norm = float(np.hypot(dx, dy))
    if norm < 1e-14:
        raise GeometryError(f"vanishing tangent at u={u}")
    return np.array([dy, -dx]) / norm


def surface_normal(surface: NurbsPatch, u: float, v: float) -> np.ndarray:
    """Unit normal S_u x S_v / |...| of a surface in R^3."""
    if surface.pdim != 2 or surface.sdim != 3:
        raise GeometryError("surface normal requires a surface in R^3")
    _, grads = surface.evaluate(u, v)
    n = np.cross(grads[0], grads[1])
    norm = float(np.linalg.norm(n))
    if norm < 1e-14:
        raise GeometryError(f"degenerate parameterization at ({u}, {v})")
    return n / norm


def _insert_knot_1d(kv: KnotVector, ctrl_h: np.ndarray, u: float) -> tuple[KnotVector, np.ndarray]:
    """Single Boehm insertion on homogeneous control points (axis 0)."""
    p = kv.degree
    U = kv.knots
    lo, hi = kv.domain
    if not (lo + KNOT_TOL < u < hi - KNOT_TOL):
        raise DomainError("knot must be strictly inside the domain")
    k = kv.find_span(u)
    mult = int(np.sum(np.abs(U - u) <= KNOT_TOL))
    if mult >= p:
        raise GeometryError(f"multiplicity of {u} would exceed degree {p}")
    new_U = np.insert(U, k + 1, u)
    n = ctrl_h.shape[0]
    new_ctrl = np.empty((n + 1,) + ctrl_h.shape[1:], dtype=ctrl_h.dtype)
    new_ctrl[: k - p + 1] = ctrl_h[: k - p + 1]
    new_ctrl[k + 1:] = ctrl_h[k:]
    for i in range(k - p + 1, k + 1):
        denom = U[i + p] - U[i]
        alpha = (u - U[i]) / denom if denom > 0 else 0.0
        new_ctrl[i] = alpha * ctrl_h[i] + (1.0 - alpha) * ctrl_h[i - 1]
    return KnotVector(new_U, p), new_ctrl


def _homogeneous(patch: NurbsPatch) -> np.ndarray:
    w = patch.weights[..., None]
    return np.concatenate([patch.points * w, w], axis=-1)


def _from_homogeneous(kvs, ctrl_h) -> NurbsPatch:
    w = ctrl_h[..., -1]
    pts = ctrl_h[..., :-1] / w[..., None]
    return NurbsPatch(tuple(kvs), pts, w)


def insert_knot(patch: NurbsPatch, direction: int, u: float,
                multiplicity: int = 1) -> NurbsPatch:
    """Insert u into one knot vector, geometry preserved."""
    ctrl_h = np.moveaxis(_homogeneous(patch), direction, 0)
    kv = patch.knot_vectors[direction]
    for _ in range(multiplicity):
        kv, ctrl_h = _insert_knot_1d(kv, ctrl_h, u)
    kvs = list(patch.knot_vectors)
    kvs[direction] = kv
    return _from_homogeneous(kvs, np.moveaxis(ctrl_h, 0, direction))


def refine_uniform(patch: NurbsPatch, direction: int = 0,
                   levels: int = 1) -> NurbsPatch:
    """Halve every knot span `levels` times along one direction."""
    for _ in range(levels):
        kv = patch.knot_vectors[direction]
        bps = kv.breakpoints()
        for a, b in zip(bps[:-1], bps[1:]):
            patch = insert_knot(patch, direction, 0.5 * (a + b))
    return patch


def elevate_linear_direction(patch: NurbsPatch, direction: int) -> NurbsPatch:
    """Raise a single-span degree-1 direction to degree 2.

    Used to loft boundary layers so every element carries a quadratic basis.
    """
    kv = patch.knot_vectors[direction]
    if kv.degree != 1 or kv.n_basis != 2:
        raise GeometryError("direction must be single-span degree 1")
    ctrl_h = np.moveaxis(_homogeneous(patch), direction, 0)
    mid = 0.5 * (ctrl_h[0] + ctrl_h[1])
    new_ctrl = np.stack([ctrl_h[0], mid, ctrl_h[1]], axis=0)
    a, b = kv.domain
    new_kv = KnotVector(np.array([a, a, a, b, b, b]), 2)
    kvs = list(patch.knot_vectors)
    kvs[direction] = new_kv
    return _from_homogeneous(kvs, np.moveaxis(new_ctrl, 0, direction))


# ---------------------------------------------------------------------------
# plain-text serialization


def dump_patch(patch: NurbsPatch) -> str:
    """Serialize a patch to the plain-text record format.

    Layout: `pdim`, per-direction `degree`/`knots` lines, then one
    `x y [z] w` row per control point in C (row-major) grid order.
    Floats are written with 17 significant digits so decimal input
    round-trips bit-faithfully.
    """
    buf = io.StringIO()
    buf.write(f"pdim {patch.pdim}\n")
    buf.write(f"sdim {patch.sdim}\n")
    for kv in patch.knot_vectors:
        buf.write(f"degree {kv.degree}\n")
        buf.write("knots " + " ".join("%.17g" % k for k in kv.knots) + "\n")
    grid = patch.weights.shape
    buf.write("points " + " ".join(str(g) for g in grid) + "\n")
    pts = patch.points.reshape(-1, patch.sdim)
    wts = patch.weights.reshape(-1)
    for row, w in zip(pts, wts):
        buf.write(" ".join("%.17g" % v for v in row) + " %.17g\n" % w)
    return buf.getvalue()


def load_patch(text: str) -> NurbsPatch:
    """Parse the record format written by dump_patch."""
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.startswith("#")]
    it = iter(lines)

    def expect(key):
        ln = next(it)
        if not ln.startswith(key + " "):
            raise ValueError(f"expected '{key}' line, got: {ln}")
        return ln[len(key) + 1:].split()

    pdim = int(expect("pdim")[0])
    sdim = int(expect("sdim")[0])
    kvs = []
    for _ in range(pdim):
        degree = int(expect("degree")[0])
        knots = np.array([float(v) for v in expect("knots")])
        kvs.append(KnotVector(knots, degree))
    grid = tuple(int(v) for v in expect("points"))
    rows = [np.array([float(v) for v in next(it).split()])
            for _ in range(int(np.prod(grid)))]
    data = np.array(rows)
    pts = data[:, :sdim].reshape(grid + (sdim,))
    wts = data[:, sdim].reshape(grid)
    return NurbsPatch(tuple(kvs), pts, wts)


def save_patch(patch: NurbsPatch, path) -> None:
    with open(path, "w") as f:
        f.write(dump_patch(patch))


def read_patch(path) -> NurbsPatch:
    with open(path) as f:
        return load_patch(f.read())


# ---------------------------------------------------------------------------
# common constructions


def line_curve(a, b, degree: int = 2) -> NurbsPatch:
    """Straight segment from a to b as a degree-1 or degree-2 curve."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if degree == 1:
        kv = KnotVector(np.array([0.0, 0.0, 1.0, 1.0]), 1)
        pts = np.stack([a, b])
    elif degree == 2:
        kv = KnotVector(np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 2)
        pts = np.stack([a, 0.5 * (a + b), b])
    else:
        raise GeometryError("line_curve supports degree 1 or 2")
    return NurbsPatch((kv,), pts, np.ones(len(pts)))


def circular_arc(center, radius: float, theta0: float, theta1: float) -> NurbsPatch:
    """Exact rational-quadratic circular arc, sweep below pi.

    Oriented from theta0 to theta1 (decreasing angles traverse clockwise).
    """
    center = np.asarray(center, float)
    sweep = theta1 - theta0
    if not 0 < abs(sweep) < np.pi:
        raise GeometryError("arc sweep must be in (0, pi)")
    half = 0.5 * sweep
    w_mid = float(np.cos(half))
    tm = theta0 + half
    p0 = center + radius * np.array([np.cos(theta0), np.sin(theta0)])
    p2 = center + radius * np.array([np.cos(theta1), np.sin(theta1)])
    pm = center + (radius / w_mid) * np.array([np.cos(tm), np.sin(tm)])
    kv = KnotVector(np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 2)
    return NurbsPatch((kv,), np.stack([p0, pm, p2]),
                      np.array([1.0, w_mid, 1.0]))
