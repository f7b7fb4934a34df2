"""Non-generic parameter loci of homotopy families and the boundary of
one-dimensional parametrized moduli spaces.

For a level-1 family and critical points p (of f^a) and c' (of f^b) with
ind c' = ind p + 1, connections from p to c' only exist at isolated
parameters. They are located as sign changes of a miss function m(s):

* p a minimum: signed distance at t=T of the transported point p to the
  stable curve of the saddle c';
* p a saddle: signed distance at t=-T of the maximum c', transported
  backward, to the unstable curve of p.

Both are one transported point per parameter value, so a whole scan grid
is a single batch.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .flow import (BACKWARD, FORWARD, NonGenericError, UnstableArc, _check_reached, continuation_column,
                   count_flow_lines, find_sign_changes, stable_curve, transport)
from .geometry import CriticalPoint
from .homotopy import Homotopy

log = logging.getLogger(__name__)


class LocusError(NonGenericError):
    pass


def expected_dimension(ind_p: int, ind_q: int, level: int) -> int:
    """Dimension of the parametrized moduli space of flow lines p -> q."""
    return ind_p - ind_q + level


@dataclass
class NonGenericLocus:
    pair: tuple
    level: int
    points: list  # level 1: [{"s", "parity", "miss"}]; level 2 isolated: [{"s": [s2, s1], ...}]
    curves: list = field(default_factory=list)  # level 2, gap 1: list of segments [[s2,s1],[s2,s1]]
    grid: int = 0
    warnings: list = field(default_factory=list)

    @property
    def roots(self) -> list:
        return [pt["s"] for pt in self.points]

    @property
    def parity(self) -> int:
        return sum(pt["parity"] for pt in self.points) % 2

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "level": self.level, "grid": self.grid,
                "roots": self.points, "curves": self.curves, "warnings": self.warnings}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# miss functions


class MissFunction:
    """m(s) for one (p, c') pair of a family; vectorized over s values."""

    def __init__(self, h: Homotopy, p: CriticalPoint, cp: CriticalPoint, tol: Tolerances):
        if cp.index != p.index + 1:
            raise ValueError(f"{p.id} -> {cp.id} does not raise the index by one")
        self.h, self.p, self.cp, self.tol = h, p, cp, tol
        if p.index == 0:
            self.curve = stable_curve(h.beta, cp, tol)
            self.start, self.direction = p, FORWARD
        else:
            self.curve = UnstableArc(h.alpha, p, tol).poly
            self.start, self.direction = cp, BACKWARD

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float).reshape(-1, self.h.level)
        n = len(s)
        res = transport(self.h, s, np.full(n, self.start.chart_id), np.tile(self.start.u, (n, 1)),
                        self.direction, self.tol)
        _check_reached(res, "locus scan")
        return self.curve.signed_distance(self.h.alpha.surface.embed(res.charts, res.u))


def scan_nongeneric(h: Homotopy, p: CriticalPoint, cp: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                    grid: Optional[int] = None, miss: Optional[MissFunction] = None) -> NonGenericLocus:
    """Parameters s in [0, 1] of a level-1 family at which a flow line from
    p to c' (one index up) exists."""
    if h.level != 1:
        raise ValueError("scan_nongeneric takes a level-1 family; use scan_locus_2d for level 2")
    n = grid or tol.scan_grid
    miss = miss or MissFunction(h, p, cp, tol)
    s = np.linspace(0.0, 1.0, n)
    vals = miss(s[:, None])

    def f(x):
        return float(miss(np.array([[x]]))[0])

    try:
        roots = find_sign_changes(vals, s, f, tol, what=f"locus {p.id}->{cp.id}")
    except NonGenericError as exc:
        raise LocusError(f"loci are not isolated transverse crossings, perturb homotopy: {exc}") from None
    roots.sort()
    for a, b in zip(roots, roots[1:]):
        if b[0] - a[0] <= tol.locus_sep:
            raise LocusError(f"roots {a[0]:.3g} and {b[0]:.3g} of {p.id}->{cp.id} are closer than locus_sep; "
                             "the loci are not isolated, perturb homotopy")
    points = [{"s": r, "parity": 1, "miss": m} for r, m in roots]
    return NonGenericLocus(pair=(p.id, cp.id), level=1, points=points, grid=n)


def _transport_points(h, s, p, tol):
    n = len(s)
    res = transport(h, s, np.full(n, p.chart_id), np.tile(p.u, (n, 1)), FORWARD, tol)
    _check_reached(res, "locus scan")
    return h.alpha.surface.embed(res.charts, res.u)


def _segments(values: np.ndarray, axis: np.ndarray, genuine) -> list:
    """Marching-squares segments of the zero set of a 2-d grid function.

    ``genuine(i, j, k, l)`` vets the sign change between nodes (i,j) and
    (k,l) and returns the crossing point or None.
    """
    n = len(axis)
    segs = []
    for i in range(n - 1):
        for j in range(n - 1):
            pts = []
            for (a, b), (c, d) in (((i, j), (i + 1, j)), ((i + 1, j), (i + 1, j + 1)),
                                   ((i + 1, j + 1), (i, j + 1)), ((i, j + 1), (i, j))):
                if np.sign(values[a, b]) != np.sign(values[c, d]):
                    pt = genuine(a, b, c, d)
                    if pt is not None:
                        pts.append(pt)
            for k in range(0, len(pts) - 1, 2):
                segs.append([list(map(float, pts[k])), list(map(float, pts[k + 1]))])
    return segs


def scan_locus_2d(h: Homotopy, p: CriticalPoint, cp: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                  grid: int = 25) -> NonGenericLocus:
    """Level-2 loci on a grid over [0,1]^2 (columns: s2, s1).

    Index gap 1 gives curves (marching-squares segments). Index gap 2 (a
    minimum of f^a to a maximum of f^b) gives isolated points where the
    transported minimum lands exactly on the maximum; these are found by
    Newton's method from every grid cell whose displacement range contains
    zero, and are what the level-2 homotopy counts.
    """
    if h.level != 2:
        raise ValueError("scan_locus_2d takes a level-2 family")
    axis = np.linspace(0.0, 1.0, grid)
    mesh = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    gap = cp.index - p.index
    if gap == 1:
        miss = MissFunction(h, p, cp, tol)
        vals = miss(mesh).reshape(grid, grid)

        def genuine(a, b, c, d):
            va, vc = vals[a, b], vals[c, d]
            w = va / (va - vc)
            pt = (1 - w) * np.array([axis[a], axis[b]]) + w * np.array([axis[c], axis[d]])
            mid = float(miss(pt[None, :])[0])
            return pt if abs(mid) < 0.25 * (abs(va) + abs(vc)) else None

        segs = _segments(vals, axis, genuine)
        return NonGenericLocus(pair=(p.id, cp.id), level=2, points=[], curves=segs, grid=grid)
    if gap != 2:
        raise ValueError("level-2 loci need an index gap of 1 or 2")
    surface = h.alpha.surface
    target = np.array(cp.xyz)
    jac = surface.jacobian(np.array([cp.chart_id]), cp.u[None])[0]

    def disp(s):
        x = _transport_points(h, s, p, tol)
        return (x - target) @ jac, np.linalg.norm(x - target, axis=1)

    d, dist = disp(mesh)
    d = d.reshape(grid, grid, 2)
    zeros = []
    for i in range(grid - 1):
        for j in range(grid - 1):
            block = d[i:i + 2, j:j + 2].reshape(-1, 2)
            if not np.all((block.min(0) <= 0) & (block.max(0) >= 0)):
                continue
            s0 = np.array([axis[i] + axis[i + 1], axis[j] + axis[j + 1]]) / 2
            z = _newton2(disp, s0, tol)
            if z is None:
                continue
            if all(np.linalg.norm(z - w) > tol.locus_sep for w in zeros):
                zeros.append(z)
    zeros.sort(key=lambda z: (z[0], z[1]))
    pts = []
    for z in zeros:
        _, dz = disp(z[None, :])
        pts.append({"s": [float(z[0]), float(z[1])], "parity": 1, "miss": float(dz[0])})

    def genuine(a, b, c, e):
        va, vc = d0[a, b], d0[c, e]
        w = va / (va - vc)
        return (1 - w) * np.array([axis[a], axis[b]]) + w * np.array([axis[c], axis[e]])

    d0 = d[:, :, 0]
    curves = _segments(d0, axis, genuine)
    return NonGenericLocus(pair=(p.id, cp.id), level=2, points=pts, curves=curves, grid=grid)


def _newton2(disp, s0, tol, iters: int = 30):
    s = s0.astype(float)
    h = 1e-6
    for _ in range(iters):
        probe = np.array([s, s + [h, 0.0], s + [0.0, h]])
        dv, dist = disp(probe)
        if dist[0] < 1e-11:
            break
        jac = np.stack([(dv[1] - dv[0]) / h, (dv[2] - dv[0]) / h], axis=1)
        try:
            step = np.linalg.solve(jac, dv[0])
        except np.linalg.LinAlgError:
            return None
        s = s - step
        if np.any(s < -1e-9) or np.any(s > 1 + 1e-9):
            return None
    dv, dist = disp(s[None, :])
    if dist[0] > 1e-8:
        return None
    return np.clip(s, 0.0, 1.0)


# ---------------------------------------------------------------------------
# boundary strata


@dataclass
class BoundaryReport:
    pair: tuple
    level: int
    facet0: list
    facet1: list
    broken_beta: list  # (s, c') with a connection p -> c' then a flow line c' -> q of f^b
    broken_alpha: list  # (c, s) with a flow line p -> c of f^a then a connection c -> q
    total_parity: int

    def to_json(self) -> dict:
        return {"pair": list(self.pair), "level": self.level, "facet_s0": self.facet0, "facet_s1": self.facet1,
                "broken_after": self.broken_beta, "broken_before": self.broken_alpha,
                "total_parity": self.total_parity}


def _facet_solutions(facet: Homotopy, p, q, tol, cache) -> list:
    """Points of the zero-dimensional moduli space of the facet (one level down)."""
    if facet.level == 0:
        col = continuation_column(facet, p, tol)
        return [{"target": q.id}] * (col.get(q.id, 0) % 2)
    key = (id(facet), p.id, q.id)
    if key not in cache:
        cache[key] = scan_nongeneric(facet, p, q, tol)
    return [{"target": q.id, "s": r} for r in cache[key].roots]


def _roots(h, p, cp, tol, cache):
    key = (id(h), p.id, cp.id)
    if key not in cache:
        cache[key] = scan_nongeneric(h, p, cp, tol) if h.level == 1 else scan_locus_2d(h, p, cp, tol)
    return cache[key].roots


def boundary_strata(h: Homotopy, p: CriticalPoint, q: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                    cache: Optional[dict] = None) -> BoundaryReport:
    """The four boundary types of the compactified one-dimensional moduli
    space of the family h from p (of f^a) to q (of f^b):
    the two leading facets, and the broken configurations through an
    intermediate critical point after or before a non-generic connection."""
    if h.level < 1:
        raise ValueError("boundary strata need a family with at least one parameter")
    dim = expected_dimension(p.index, q.index, h.level)
    if dim != 1:
        raise ValueError(f"moduli space {p.id}->{q.id} has dimension {dim}, not 1")
    cache = {} if cache is None else cache
    f0 = _facet_solutions(h.facet(0.0), p, q, tol, cache)
    f1 = _facet_solutions(h.facet(1.0), p, q, tol, cache)
    broken_b, broken_a = [], []
    gap = h.level  # index rise across the non-generic connection
    for cp in h.beta.points_of_index(p.index + gap):
        if cp.index - q.index != 1:
            continue
        _, lines = count_flow_lines(h.beta, cp, q, tol)
        if lines:
            broken_b += [{"s": r, "via": cp.id, "lines": len(lines)} for r in _roots(h, p, cp, tol, cache)]
    for c in h.alpha.points_of_index(p.index - 1):
        if q.index != c.index + gap:
            continue
        _, lines = count_flow_lines(h.alpha, p, c, tol)
        if lines:
            broken_a += [{"s": r, "via": c.id, "lines": len(lines)} for r in _roots(h, c, q, tol, cache)]
    total = (len(f0) + len(f1) + sum(b["lines"] for b in broken_b + broken_a)) % 2
    return BoundaryReport(pair=(p.id, q.id), level=h.level, facet0=f0, facet1=f1,
                          broken_beta=broken_b, broken_alpha=broken_a, total_parity=total)
