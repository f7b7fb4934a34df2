"""Surfaces given by parametric charts, Morse functions on them, and their
critical points.

Points on a surface are always handled in batches: an integer array of
chart ids of shape (N,) and chart coordinates of shape (N, 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from . import expressions
from .config import DEFAULT_TOLERANCES, Tolerances

U1, U2 = expressions.symbols(["u1", "u2"])
X, Y, Z = expressions.symbols(["x", "y", "z"])


class DegenerateCriticalPoint(ValueError):
    pass


@dataclass
class Chart:
    """An immersion sigma: U -> R^3 of a coordinate rectangle."""

    name: str
    sigma: tuple  # three sympy expressions in u1, u2
    domain: tuple  # ((lo1, hi1), (lo2, hi2)); leaving it triggers a chart switch
    period: tuple = (None, None)

    def __post_init__(self):
        jac = [[sp.diff(c, v) for v in (U1, U2)] for c in self.sigma]
        self._embed = expressions.compile_numeric(list(self.sigma), [U1, U2])
        self._jac = expressions.compile_numeric([e for row in jac for e in row], [U1, U2])
        first = [sp.simplify(sum(jac[k][i] * jac[k][j] for k in range(3))) for i, j in ((0, 0), (0, 1), (1, 1))]
        self._first = expressions.compile_numeric(first, [U1, U2])

    def embed(self, u: np.ndarray) -> np.ndarray:
        return np.stack(self._embed(u[:, 0], u[:, 1]), axis=-1)

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        parts = self._jac(u[:, 0], u[:, 1])
        return np.stack(parts, axis=-1).reshape(-1, 3, 2)

    def first_fundamental_form(self, u: np.ndarray) -> np.ndarray:
        a, b, d = self._first(u[:, 0], u[:, 1])
        return np.stack([np.stack([a, b], -1), np.stack([b, d], -1)], -2)

    def inside(self, u: np.ndarray) -> np.ndarray:
        ok = np.ones(len(u), dtype=bool)
        for k in range(2):
            if self.period[k] is None:
                lo, hi = self.domain[k]
                ok &= (u[:, k] >= lo) & (u[:, k] <= hi)
        return ok


class Surface:
    """A surface covered by one or two charts.

    ``locate`` maps ambient points to their canonical chart; ``normalize``
    wraps periodic coordinates and moves points that left their chart's
    rectangle into the canonical chart.
    """

    closed = True

    def __init__(self, name: str, charts: Sequence[Chart], params: Optional[dict] = None):
        self.name = name
        self.charts = list(charts)
        self.params = dict(params or {})

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params})"

    # batch helpers ---------------------------------------------------------
    def _per_chart(self, charts, u, fn, width):
        if len(self.charts) == 1:
            return fn(self.charts[0], u)
        out = np.empty((len(u),) + width)
        for cid, chart in enumerate(self.charts):
            mask = charts == cid
            if mask.any():
                out[mask] = fn(chart, u[mask])
        return out

    def embed(self, charts: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self._per_chart(charts, u, Chart.embed, (3,))

    def jacobian(self, charts: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self._per_chart(charts, u, Chart.jacobian, (3, 2))

    def induced_metric(self, charts: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self._per_chart(charts, u, Chart.first_fundamental_form, (2, 2))

    def normal(self, charts: np.ndarray, u: np.ndarray) -> np.ndarray:
        jac = self.jacobian(charts, u)
        n = np.cross(jac[:, :, 0], jac[:, :, 1])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def wrap(self, charts, u):
        u = u.copy()
        for cid, chart in enumerate(self.charts):
            mask = charts == cid
            for k in range(2):
                per = chart.period[k]
                if per is not None and mask.any():
                    u[mask, k] = np.mod(u[mask, k] + per / 2, per) - per / 2
        return u

    def normalize(self, charts: np.ndarray, u: np.ndarray):
        u = self.wrap(charts, u)
        outside = np.zeros(len(u), dtype=bool)
        for cid, chart in enumerate(self.charts):
            mask = charts == cid
            if mask.any():
                outside[mask] = ~chart.inside(u[mask])
        if outside.any():
            new_c, new_u = self.locate(self.embed(charts[outside], u[outside]))
            charts = charts.copy()
            charts[outside] = new_c
            u[outside] = new_u
        return charts, u

    def locate(self, xyz: np.ndarray):
        raise NotImplementedError

    def seed_grid(self, chart_id: int, k: int) -> np.ndarray:
        chart = self.charts[chart_id]
        axes = []
        for j in range(2):
            lo, hi = chart.domain[j]
            if chart.period[j] is not None:
                lo, hi = -chart.period[j] / 2, chart.period[j] / 2
                axes.append(lo + (np.arange(k) + 0.5) * (hi - lo) / k)
            else:
                axes.append(np.linspace(lo, hi, k + 2)[1:-1])
        g1, g2 = np.meshgrid(*axes, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)

    def spot_points(self, n: int = 12):
        """Deterministic, well-spread sample points (Fibonacci lattice)."""
        i = np.arange(n) + 0.5
        golden = math.pi * (3 - math.sqrt(5))
        zc = 1 - 2 * i / n
        rc = np.sqrt(1 - zc ** 2)
        dirs = np.stack([rc * np.cos(golden * i), rc * np.sin(golden * i), zc], axis=-1)
        return self.locate(self._spread(dirs))

    def _spread(self, dirs: np.ndarray) -> np.ndarray:
        # maps unit directions to surface points for the spot lattice
        return dirs


def _stereo(sign: int):
    # sign=-1: origin at the south pole (projection from the north pole)
    r2 = U1 ** 2 + U2 ** 2
    return (2 * U1 / (1 + r2), 2 * U2 / (1 + r2), sign * (1 - r2) / (1 + r2))


class Sphere(Surface):
    """Unit sphere with two stereographic charts.

    Chart 0 is centred on the south pole, chart 1 on the north pole; the
    transition map is inversion u -> u / |u|^2.
    """

    SWITCH = 1.5

    def __init__(self):
        box = ((-self.SWITCH, self.SWITCH), (-self.SWITCH, self.SWITCH))
        super().__init__("sphere", [Chart("south", _stereo(-1), box), Chart("north", _stereo(1), box)])

    def locate(self, xyz):
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        xyz = xyz / np.linalg.norm(xyz, axis=1, keepdims=True)
        charts = (xyz[:, 2] > 0).astype(int)
        denom = np.where(charts == 0, 1 - xyz[:, 2], 1 + xyz[:, 2])
        u = xyz[:, :2] / denom[:, None]
        return charts, u

    def _spread(self, dirs):
        return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    def seed_grid(self, chart_id, k):
        # each chart only needs to cover its own closed hemisphere (|u| <= 1)
        ax = np.linspace(-1.05, 1.05, k)
        g1, g2 = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)


class Torus(Surface):
    """Embedded torus of revolution around the z axis, one periodic chart."""

    def __init__(self, R: float = 2.0, r: float = 1.0):
        if not R > r > 0:
            raise ValueError("torus needs R > r > 0")
        self.R, self.r = float(R), float(r)
        sigma = ((R + r * sp.cos(U2)) * sp.cos(U1), (R + r * sp.cos(U2)) * sp.sin(U1), r * sp.sin(U2))
        per = 2 * math.pi
        super().__init__("torus", [Chart("angles", sigma, ((-math.pi, math.pi),) * 2, (per, per))],
                         {"R": self.R, "r": self.r})

    def locate(self, xyz):
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        u1 = np.arctan2(xyz[:, 1], xyz[:, 0])
        rho = np.hypot(xyz[:, 0], xyz[:, 1]) - self.R
        u2 = np.arctan2(xyz[:, 2], rho)
        return np.zeros(len(xyz), dtype=int), np.stack([u1, u2], axis=-1)

    def _spread(self, dirs):
        u1 = np.arctan2(dirs[:, 1], dirs[:, 0])
        u2 = np.arccos(np.clip(dirs[:, 2], -1, 1)) * 2
        c = self.charts[0]
        return c.embed(np.stack([u1, u2], axis=-1))


class Plane(Surface):
    """A Euclidean coordinate rectangle embedded as z = 0 (not closed)."""

    closed = False

    def __init__(self, half_width: float = 2.0):
        box = ((-half_width, half_width),) * 2
        super().__init__("plane", [Chart("xy", (U1, U2, sp.Integer(0) * U1), box)], {"half_width": half_width})

    def locate(self, xyz):
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        return np.zeros(len(xyz), dtype=int), xyz[:, :2].copy()

    def _spread(self, dirs):
        out = dirs.copy()
        out[:, 2] = 0
        return out


def make_surface(spec: dict) -> Surface:
    spec = dict(spec)
    name = spec.pop("name")
    if name == "sphere":
        if spec:
            raise ValueError(f"sphere takes no parameters, got {sorted(spec)}")
        return Sphere()
    if name == "torus":
        unknown = set(spec) - {"R", "r"}
        if unknown:
            raise ValueError(f"unknown torus parameters {sorted(unknown)}")
        return Torus(**spec)
    if name == "plane":
        unknown = set(spec) - {"half_width"}
        if unknown:
            raise ValueError(f"unknown plane parameters {sorted(unknown)}")
        return Plane(**spec)
    raise ValueError(f"unknown surface {name!r}")


class Metric:
    """Riemannian metric: a multiple of the induced first fundamental form,
    or an explicit symmetric matrix field in chart coordinates (single-chart
    surfaces only)."""

    def __init__(self, surface: Surface, mode: str = "induced", scale: float = 1.0,
                 matrix: Optional[Sequence[Sequence[str]]] = None):
        self.surface = surface
        self.mode = mode
        self.scale = float(scale)
        self.matrix = matrix
        if scale <= 0:
            raise ValueError("metric scale must be positive")
        if mode == "matrix":
            if len(surface.charts) != 1:
                raise ValueError("explicit metric matrices need a single-chart surface")
            rows = [[expressions.parse(e, ["u1", "u2"]) for e in row] for row in matrix]
            if len(rows) != 2 or any(len(r) != 2 for r in rows):
                raise ValueError("metric matrix must be 2x2")
            if sp.simplify(rows[0][1] - rows[1][0]) != 0:
                raise ValueError("metric matrix must be symmetric")
            self._eval = expressions.compile_numeric([rows[0][0], rows[0][1], rows[1][1]], [U1, U2])
        elif mode != "induced":
            raise ValueError(f"unknown metric mode {mode!r}")

    def __call__(self, charts: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.mode == "induced":
            g = self.surface.induced_metric(charts, u)
        else:
            a, b, d = self._eval(u[:, 0], u[:, 1])
            g = np.stack([np.stack([a, b], -1), np.stack([b, d], -1)], -2)
        return self.scale * g

    def rescaled(self, c: float) -> "Metric":
        return Metric(self.surface, self.mode, self.scale * c, self.matrix)

    def describe(self):
        if self.mode == "induced":
            return {"mode": "induced", "scale": self.scale}
        return {"mode": "matrix", "scale": self.scale, "matrix": self.matrix}


class ChartFunction:
    """f(params..., sigma(u)) compiled per chart with chart derivatives.

    ``expr`` is written in ambient coordinates x, y, z plus extra parameter
    symbols; derivatives in u are closed form (sympy). Without ``hessian``
    the function is differentiated in ambient coordinates only and pulled
    back through the chart Jacobian numerically, which keeps compilation of
    long expressions cheap.
    """

    def __init__(self, surface: Surface, expr: sp.Expr, param_names: Sequence[str] = (),
                 hessian: bool = True):
        self.surface = surface
        self.expr = expr
        self.param_names = tuple(param_names)
        params = expressions.symbols(self.param_names)
        self._value, self._grad, self._hess = [], [], []
        self._ambient = None
        if not hessian:
            grad = [sp.diff(expr, v) for v in (X, Y, Z)]
            self._ambient = expressions.compile_numeric([expr] + grad, params + [X, Y, Z], cse=False)
            return
        for chart in surface.charts:
            sub = {X: chart.sigma[0], Y: chart.sigma[1], Z: chart.sigma[2]}
            e = expr.xreplace(sub)
            g = [sp.diff(e, v) for v in (U1, U2)]
            args = params + [U1, U2]
            self._value.append(expressions.compile_numeric([e], args))
            self._grad.append(expressions.compile_numeric([e] + g, args))
            if hessian:
                h = [sp.diff(g[0], U1), sp.diff(g[0], U2), sp.diff(g[1], U2)]
                self._hess.append(expressions.compile_numeric(h, args))

    def _dispatch(self, table, charts, u, params, width):
        n = len(u)
        if n and (len(table) == 1 or np.all(charts == charts[0])):
            args = list(params) + [u[:, 0], u[:, 1]]
            return np.stack(table[int(charts[0]) if len(table) > 1 else 0](*args), axis=-1)
        out = np.empty((n, width))
        for cid in range(len(self.surface.charts)):
            mask = charts == cid
            if not mask.any():
                continue
            args = [p[mask] for p in params] + [u[mask, 0], u[mask, 1]]
            out[mask] = np.stack(table[cid](*args), axis=-1)
        return out

    def _ambient_eval(self, charts, u, params):
        xyz = self.surface.embed(charts, u)
        out = self._ambient(*params, xyz[:, 0], xyz[:, 1], xyz[:, 2])
        return out[0], np.stack(out[1:], axis=-1)

    def value(self, charts, u, params=()):
        if self._ambient is not None:
            return self._ambient_eval(charts, u, params)[0]
        return self._dispatch(self._value, charts, u, params, 1)[:, 0]

    def value_grad(self, charts, u, params=()):
        if self._ambient is not None:
            val, dxyz = self._ambient_eval(charts, u, params)
            return val, np.einsum("ni,nij->nj", dxyz, self.surface.jacobian(charts, u))
        out = self._dispatch(self._grad, charts, u, params, 3)
        return out[:, 0], out[:, 1:]

    def hessian(self, charts, u, params=()):
        if self._ambient is not None:
            raise ValueError("compiled without a Hessian")
        a, b, d = self._dispatch(self._hess, charts, u, params, 3).T
        return np.stack([np.stack([a, b], -1), np.stack([b, d], -1)], -2)


class ScalarField(ChartFunction):
    """A function on a surface, from an ambient-coordinate expression."""

    derivative_mode = "closed-form"

    def __init__(self, surface: Surface, text: str):
        self.text = text
        super().__init__(surface, expressions.parse(text, ["x", "y", "z"]))

    def __repr__(self) -> str:
        return f"ScalarField({self.text!r})"

    def fd_check(self, charts, u, h: float = 1e-5) -> float:
        """Largest relative gap between closed-form and central-difference
        gradients at the given points."""
        _, grad = self.value_grad(charts, u)
        fd = np.empty_like(grad)
        for k in range(2):
            step = np.zeros(2)
            step[k] = h
            fd[:, k] = (self.value(charts, u + step) - self.value(charts, u - step)) / (2 * h)
        scale = np.maximum(np.abs(grad), 1.0)
        return float(np.max(np.abs(fd - grad) / scale))


def solve2(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Batched solve of 2x2 systems g x = v."""
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    x0 = (g[:, 1, 1] * v[:, 0] - g[:, 0, 1] * v[:, 1]) / det
    x1 = (g[:, 0, 0] * v[:, 1] - g[:, 1, 0] * v[:, 0]) / det
    return np.stack([x0, x1], axis=-1)


def gradient(metric: Metric, f: ScalarField, charts, u) -> np.ndarray:
    """Chart components g^{ij} df_j of the gradient vector field."""
    charts = np.asarray(charts, dtype=int).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    g = metric(charts, u)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    if np.any(det <= 0):
        raise ValueError("metric is singular or indefinite at a query point")
    _, df = f.value_grad(charts, u)
    return solve2(g, df)


def grad_norm(metric: Metric, f: ScalarField, charts, u) -> np.ndarray:
    g = metric(charts, u)
    _, df = f.value_grad(charts, u)
    v = solve2(g, df)
    return np.sqrt(np.maximum(np.einsum("ni,ni->n", df, v), 0.0))


def morse_index(hessian, nondegen_tol: float = DEFAULT_TOLERANCES.nondegen_tol) -> int:
    eig = np.linalg.eigvalsh(np.asarray(hessian, dtype=float))
    if np.any(np.abs(eig) < nondegen_tol):
        raise DegenerateCriticalPoint(f"Hessian eigenvalues {eig.tolist()} include a near-zero value")
    return int(np.sum(eig < 0))


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    chart_id: int
    coords: tuple
    value: float
    index: int
    hessian_eigs: tuple
    xyz: tuple
    # eigenvectors of g^{-1} Hess in chart components, g-unit length,
    # ordered like hessian_eigs (ascending)
    directions: tuple = field(default=(), compare=False)

    @property
    def u(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def as_dict(self) -> dict:
        return {"id": self.id, "chart": self.chart_id, "coords": list(self.coords),
                "value": self.value, "index": self.index, "hessian_eigs": list(self.hessian_eigs),
                "xyz": list(self.xyz)}


def linearization(metric: Metric, f: ScalarField, chart_id: int, u: np.ndarray):
    """Eigen-decomposition of g^{-1} Hess f at a point.

    Returns ascending eigenvalues and g-orthonormal eigenvectors (columns).
    """
    charts = np.array([chart_id])
    uu = np.asarray(u, dtype=float).reshape(1, 2)
    g = metric(charts, uu)[0]
    hess = f.hessian(charts, uu)[0]
    chol = np.linalg.cholesky(g)
    inv = np.linalg.inv(chol)
    sym = inv @ hess @ inv.T
    eig, w = np.linalg.eigh(sym)
    vecs = inv.T @ w
    return eig, vecs, hess


def find_critical_points(surface: Surface, f: ScalarField, metric: Optional[Metric] = None,
                         seeds_per_chart: int = 12, tol: Tolerances = DEFAULT_TOLERANCES,
                         prefix: str = "c") -> list[CriticalPoint]:
    """Newton's method on df = 0 from a seed grid in every chart.

    Converged points are merged by ambient distance, classified by the signs
    of the Hessian eigenvalues, and sorted by (index, value). Ids are
    ``<prefix><index>.<j>``.
    """
    metric = metric or Metric(surface)
    seeds_c, seeds_u = [], []
    for cid in range(len(surface.charts)):
        grid = surface.seed_grid(cid, seeds_per_chart)
        seeds_c.append(np.full(len(grid), cid))
        seeds_u.append(grid)
    charts = np.concatenate(seeds_c)
    u = np.concatenate(seeds_u)
    alive = np.ones(len(u), dtype=bool)
    for _ in range(80):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        _, df = f.value_grad(charts[idx], u[idx])
        hess = f.hessian(charts[idx], u[idx])
        det = hess[:, 0, 0] * hess[:, 1, 1] - hess[:, 0, 1] ** 2
        good = np.abs(det) > 1e-14
        step = np.zeros_like(df)
        step[good] = np.linalg.solve(hess[good], df[good][..., None])[..., 0]
        # cap the step so Newton cannot jump across the surface
        norm = np.linalg.norm(step, axis=1)
        cap = np.minimum(1.0, 0.5 / np.maximum(norm, 1e-300))
        u[idx] -= step * cap[:, None]
        alive[idx[~good]] = False
        bad = ~np.all(np.isfinite(u[idx]), axis=1)
        alive[idx[bad]] = False
        c2, u2 = surface.normalize(charts[idx[~bad]], u[idx[~bad]])
        charts[idx[~bad]], u[idx[~bad]] = c2, u2
    ok = np.all(np.isfinite(u), axis=1)
    if not surface.closed:
        for cid, chart in enumerate(surface.charts):
            m = charts == cid
            ok[m] &= chart.inside(u[m])
    gn = np.full(len(u), np.inf)
    gn[ok] = grad_norm(metric, f, charts[ok], u[ok])
    conv = ok & (gn < tol.grad_tol)
    pts = []
    xyz_all = surface.embed(charts[conv], u[conv]) if conv.any() else np.zeros((0, 3))
    # deterministic merge: visit candidates in lexicographic ambient order
    order = np.lexsort(np.round(xyz_all, 9).T[::-1]) if len(xyz_all) else []
    kept = []
    for i in order:
        p = xyz_all[i]
        if any(np.linalg.norm(p - q) < tol.dedup_tol for q in kept):
            continue
        kept.append(p)
    for p in kept:
        c, uu = surface.locate(p[None, :])
        c, uu = surface.normalize(c, uu)
        uu = _polish(f, metric, surface, int(c[0]), uu[0], tol)
        eig, vecs, hess = linearization(metric, f, int(c[0]), uu)
        if np.any(np.abs(eig) < tol.nondegen_tol):
            raise DegenerateCriticalPoint(
                f"degenerate critical point at {surface.embed(c, uu[None])[0].tolist()} "
                f"(eigenvalues {eig.tolist()})")
        index = int(np.sum(eig < 0))
        val = float(f.value(c, uu[None])[0])
        xyz = tuple(float(v) for v in surface.embed(c, uu[None])[0])
        pts.append(dict(chart_id=int(c[0]), coords=(float(uu[0]), float(uu[1])), value=val,
                        index=index, hessian_eigs=(float(eig[0]), float(eig[1])), xyz=xyz,
                        directions=(tuple(vecs[:, 0]), tuple(vecs[:, 1]))))
    pts.sort(key=lambda d: (d["index"], d["value"], d["xyz"]))
    counts: dict[int, int] = {}
    out = []
    for d in pts:
        j = counts.get(d["index"], 0)
        counts[d["index"]] = j + 1
        out.append(CriticalPoint(id=f"{prefix}{d['index']}.{j}", **d))
    return out


def _polish(f, metric, surface, cid, u, tol, iters: int = 6):
    charts = np.array([cid])
    u = np.array(u, dtype=float)
    for _ in range(iters):
        _, df = f.value_grad(charts, u[None])
        if grad_norm(metric, f, charts, u[None])[0] < 1e-3 * tol.grad_tol:
            break
        hess = f.hessian(charts, u[None])[0]
        u = u - np.linalg.solve(hess, df[0])
    return u


def euler_characteristic(points: Sequence[CriticalPoint]) -> int:
    return sum((-1) ** p.index for p in points)


class MorseSmalePair:
    """A surface with a Morse function and a metric; critical points are
    located once on first use."""

    def __init__(self, surface: Surface, f: ScalarField, metric: Optional[Metric] = None,
                 prefix: str = "c", tol: Tolerances = DEFAULT_TOLERANCES, seeds_per_chart: int = 12):
        self.surface = surface
        self.f = f
        self.metric = metric or Metric(surface)
        self.prefix = prefix
        self.tol = tol
        self.seeds_per_chart = seeds_per_chart
        self._points: Optional[list] = None
        # memo tables filled by the flow and msw modules, keyed by tolerances
        self.cache: dict = {}

    def __repr__(self) -> str:
        return f"MorseSmalePair({self.surface!r}, {self.f!r}, prefix={self.prefix!r})"

    @property
    def critical_points(self) -> list:
        if self._points is None:
            self._points = find_critical_points(self.surface, self.f, self.metric,
                                                self.seeds_per_chart, self.tol, self.prefix)
        return self._points

    def points_of_index(self, k: int) -> list:
        return [p for p in self.critical_points if p.index == k]

    def point(self, label: str) -> CriticalPoint:
        for p in self.critical_points:
            if p.id == label:
                return p
        raise KeyError(f"no critical point {label!r}; have {[p.id for p in self.critical_points]}")

    def gradient(self, charts, u) -> np.ndarray:
        return gradient(self.metric, self.f, charts, u)

    def vector_field(self, sign: float = -1.0):
        def rhs(t, charts, u, idx):
            return sign * gradient(self.metric, self.f, charts, u)
        return rhs

    def nearest(self, charts, u):
        """Index into ``critical_points`` of the nearest point, and distance."""
        xyz = self.surface.embed(charts, u)
        cps = np.array([p.xyz for p in self.critical_points])
        d = np.linalg.norm(xyz[:, None, :] - cps[None, :, :], axis=-1)
        j = np.argmin(d, axis=1)
        return j, d[np.arange(len(j)), j]

    def rescaled(self, c: float) -> "MorseSmalePair":
        return MorseSmalePair(self.surface, self.f, self.metric.rescaled(c), self.prefix, self.tol,
                              self.seeds_per_chart)
