"""Negative gradient flows: autonomous settling, nonautonomous transport
through a homotopy, separatrices of saddles and flow-line counts.

Backward flow is forward flow of the +grad field, so there is a single
integration path. A trajectory "settles" once the gradient norm drops below
``settle_tol``; it is then labelled with the nearest critical point.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry import CriticalPoint, MorseSmalePair, grad_norm
from .homotopy import Homotopy
from .ode import BatchResult, integrate_batch

log = logging.getLogger(__name__)

ESCAPED = "escaped"
FORWARD, BACKWARD = "forward", "backward"
_SIGN = {FORWARD: -1.0, BACKWARD: 1.0}


class FlowError(RuntimeError):
    pass


class NonGenericError(FlowError):
    """A crossing function came within cross_tol of zero without changing sign."""


@dataclass
class Trajectory:
    samples: np.ndarray  # (M, 4): t, chart, u1, u2
    start_label: str
    end_label: str
    parameter: Optional[tuple] = None
    status: int = BatchResult.STOPPED

    @property
    def end(self):
        return int(self.samples[-1, 1]), self.samples[-1, 2:4].copy()

    def xyz(self, surface) -> np.ndarray:
        return surface.embed(self.samples[:, 1].astype(int), self.samples[:, 2:4])

    def to_csv(self, path: str, surface) -> None:
        xyz = self.xyz(surface)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "chart_id", "u1", "u2", "x", "y", "z"])
            for row, p in zip(self.samples, xyz):
                w.writerow([f"{row[0]:.12g}", int(row[1]), f"{row[2]:.12g}", f"{row[3]:.12g}",
                            f"{p[0]:.12g}", f"{p[1]:.12g}", f"{p[2]:.12g}"])

    def summary(self) -> dict:
        return {"start": self.start_label, "end": self.end_label, "samples": int(len(self.samples)),
                "parameter": None if self.parameter is None else list(self.parameter)}


@dataclass
class FlowSpec:
    """What drives a flow: a static pair, or a homotopy frozen at parameter s.

    The time window [-T_num, T_num] covers the active segment [-T, T] plus
    the settle margin; past it the flow is autonomous at the matching end.
    """

    surface: object
    pair: Optional[MorseSmalePair] = None
    homotopy: Optional[Homotopy] = None
    parameter: Optional[tuple] = None
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if (self.pair is None) == (self.homotopy is None):
            raise ValueError("FlowSpec needs exactly one of pair / homotopy")
        if self.homotopy is not None:
            lvl = self.homotopy.level
            if self.parameter is None:
                self.parameter = ()
            if len(self.parameter) != lvl:
                raise ValueError(f"homotopy of level {lvl} needs {lvl} parameters")

    @property
    def autonomous(self) -> bool:
        return self.pair is not None

    @property
    def time_window(self):
        T = self.homotopy.cutoff if self.homotopy is not None else 0.0
        T_num = T + self.tol.settle_margin
        return (-T_num, T_num)

    def field_at(self, t: float, charts, u) -> np.ndarray:
        """Chart components of the negative gradient at time t."""
        if self.autonomous:
            return self.pair.vector_field()(t, charts, u, np.arange(len(u)))
        s = np.tile(np.asarray(self.parameter, float), (len(u), 1))
        return self.homotopy.vector_field(s)(np.full(len(u), t), charts, u, np.arange(len(u)))

    def check(self, n_points: int = 8) -> dict:
        """Spot checks of the driver invariants (time independence or the
        correct ends outside [-T, T])."""
        c, u = self.surface.spot_points(n_points)
        if self.autonomous:
            gap = float(np.max(np.abs(self.field_at(-3.0, c, u) - self.field_at(5.0, c, u))))
            return {"ok": gap == 0.0, "max_gap": gap}
        h = self.homotopy
        worst = 0.0
        for t, pair in ((-h.cutoff, h.alpha), (-2 * h.cutoff, h.alpha), (h.cutoff, h.beta), (2 * h.cutoff, h.beta)):
            gap = np.max(np.abs(self.field_at(t, c, u) - pair.vector_field()(t, c, u, None)))
            worst = max(worst, float(gap))
        return {"ok": worst <= 1e-12, "max_gap": worst}


# ---------------------------------------------------------------------------
# batch primitives


def settle(pair: MorseSmalePair, charts, u, direction: str = FORWARD, tol: Tolerances = DEFAULT_TOLERANCES,
           record: bool = False, t0=0.0):
    """Autonomous flow until every point settles at a critical point.

    ``direction`` is one string or one per point. Returns (labels, BatchResult).
    """
    n = len(np.asarray(u).reshape(-1, 2))
    if isinstance(direction, str):
        direction = [direction] * n
    signs = np.array([_SIGN[d] for d in direction])
    field_ = pair.vector_field(1.0)

    def rhs(t, c, uu, idx):
        return signs[idx, None] * field_(t, c, uu, idx)

    def stop(t, c, uu, idx):
        return grad_norm(pair.metric, pair.f, c, uu) < tol.settle_tol

    res = integrate_batch(rhs, pair.surface, charts, u, t0, None, stop=stop, t_max=tol.t_max,
                          rtol=tol.rtol, atol=tol.atol, record=record)
    labels = label_points(pair, res.charts, res.u, res.status == BatchResult.STOPPED)
    return labels, res


def label_points(pair: MorseSmalePair, charts, u, settled=None) -> list:
    if len(u) == 0:
        return []
    j, d = pair.nearest(charts, u)
    ids = [p.id for p in pair.critical_points]
    ok = d < 1e-4
    if settled is not None:
        ok &= settled
    return [ids[k] if good else ESCAPED for k, good in zip(j, ok)]


def transport(h: Homotopy, s, charts, u, direction: str = FORWARD, tol: Tolerances = DEFAULT_TOLERANCES,
              record: bool = False) -> BatchResult:
    """Nonautonomous flow across the active window: from t=-T to t=T
    (forward) or from T to -T (backward, in reversed time)."""
    n = len(np.asarray(u).reshape(-1, 2))
    s = np.broadcast_to(np.asarray(s, float).reshape(-1, h.level), (n, h.level)) if h.level else np.zeros((n, 0))
    T = h.cutoff
    if direction == FORWARD:
        rhs = h.vector_field(s, -1.0)
    else:
        # tau = -t runs from -T to T; d/dtau = +grad H(-tau)
        base = h.vector_field(s, 1.0)

        def rhs(tau, c, uu, idx):
            return base(-tau, c, uu, idx)
    return integrate_batch(rhs, h.alpha.surface, charts, u, -T, T, t_max=2 * T + 1.0,
                           rtol=tol.rtol, atol=tol.atol, record=record)


def _check_reached(res: BatchResult, what: str):
    bad = res.status != BatchResult.REACHED
    if bad.any():
        raise FlowError(f"{what}: {int(bad.sum())} trajectories did not reach the end of the window")


def through_homotopy(h: Homotopy, s, charts, u, direction: str = FORWARD,
                     tol: Tolerances = DEFAULT_TOLERANCES, record: bool = False):
    """Transport through [-T, T] and then settle under the far end pair.

    Returns (labels, end BatchResult, list of sample arrays or None).
    """
    res = transport(h, s, charts, u, direction, tol, record)
    _check_reached(res, "transport")
    far = h.beta if direction == FORWARD else h.alpha
    labels, res2 = settle(far, res.charts, res.u, direction, tol, record, t0=h.cutoff)
    samples = None
    if record:
        samples = []
        for a, b in zip(res.samples, res2.samples):
            a = np.array(a)
            b = np.array(b[1:]) if len(b) > 1 else np.zeros((0, 4))
            if direction == BACKWARD:
                a[:, 0] = -a[:, 0]
                if len(b):
                    b[:, 0] = -b[:, 0]
            samples.append(np.vstack([a, b]) if len(b) else a)
    return labels, res2, samples


def integrate(spec: FlowSpec, x0, direction: str = FORWARD, start_label: str = "") -> Trajectory:
    """Single trajectory from a chart point ``x0 = (chart, (u1, u2))``.

    For a homotopy driver the start time is -T (forward) or T (backward).
    """
    chart, u = x0
    charts = np.array([int(chart)])
    u = np.asarray(u, dtype=float).reshape(1, 2)
    if spec.autonomous:
        labels, res = settle(spec.pair, charts, u, direction, spec.tol, record=True)
        samples = np.array(res.samples[0])
        if direction == BACKWARD:
            samples[:, 0] = -samples[:, 0]
        status = int(res.status[0])
    else:
        labels, res, samp = through_homotopy(spec.homotopy, np.asarray(spec.parameter, float), charts, u,
                                             direction, spec.tol, record=True)
        samples = samp[0]
        status = int(res.status[0])
    return Trajectory(samples=samples, start_label=start_label, end_label=labels[0],
                      parameter=spec.parameter, status=status)


# ---------------------------------------------------------------------------
# separatrices


def _seeds(pair: MorseSmalePair, p: CriticalPoint, eps: float):
    if p.index != 1:
        raise ValueError(f"{p.id} has index {p.index}; separatrices need a saddle")
    vu = np.array(p.directions[0])  # negative eigenvalue: unstable
    vs = np.array(p.directions[1])
    base = p.u
    pts = np.array([base + eps * vu, base - eps * vu, base + eps * vs, base - eps * vs])
    return pair.surface.normalize(np.full(4, p.chart_id), pts)


def separatrices(pair: MorseSmalePair, p: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                 record: bool = True, check: bool = True) -> dict:
    """Two unstable (forward) and two stable (backward) separatrices of a
    saddle, seeded at distance sep_eps along the eigenvectors of g^-1 Hess."""
    if not pair.points_of_index(1):
        raise ValueError("no saddles: separatrices are not defined for this pair")
    key = ("separatrices", p.id, tol, record, check)
    if key not in pair.cache:
        pair.cache[key] = _separatrices(pair, p, tol, record, check)
    return pair.cache[key]


def _separatrices(pair, p, tol, record, check):
    c, u = _seeds(pair, p, tol.sep_eps)
    dirs = [FORWARD, FORWARD, BACKWARD, BACKWARD]
    labels, res = settle(pair, c, u, dirs, tol, record)
    if check:
        # Richardson-style check: halving the seed distance must not change any label
        c2, u2 = _seeds(pair, p, tol.sep_eps / 2)
        labels2, _ = settle(pair, c2, u2, dirs, tol)
        if labels2 != labels:
            raise FlowError(f"separatrix labels of {p.id} change when the seed distance is halved")
    out = {"unstable": [], "stable": []}
    for i, lab in enumerate(labels):
        if lab == ESCAPED:
            raise FlowError(f"separatrix of {p.id} did not settle by t_max; re-tolerance the scenario")
        samples = np.array(res.samples[i]) if record else np.array([[0.0, res.charts[i], *res.u[i]]])
        if i >= 2:
            samples[:, 0] *= -1.0
        out["unstable" if i < 2 else "stable"].append(Trajectory(samples=samples, start_label=p.id, end_label=lab))
    return out


def count_flow_lines(pair: MorseSmalePair, p: CriticalPoint, q: CriticalPoint,
                     tol: Tolerances = DEFAULT_TOLERANCES, seps: Optional[dict] = None):
    """Mod-2 number of flow lines from p down to q (ind p - ind q = 1).

    Returns (parity, witness trajectories).
    """
    if p.index - q.index != 1:
        raise ValueError("flow lines are counted only for index gap 1")
    if p.index == 1:
        seps = seps or separatrices(pair, p, tol)
        wit = [tr for tr in seps["unstable"] if tr.end_label == q.id]
    else:
        seps = seps or separatrices(pair, q, tol)
        wit = [tr for tr in seps["stable"] if tr.end_label == p.id]
    return len(wit) % 2, wit


# ---------------------------------------------------------------------------
# curves and signed distances


def _thin(xyz: np.ndarray, spacing: float) -> np.ndarray:
    keep = [0]
    last = xyz[0]
    for i in range(1, len(xyz) - 1):
        if np.linalg.norm(xyz[i] - last) >= spacing:
            keep.append(i)
            last = xyz[i]
    keep.append(len(xyz) - 1)
    return xyz[keep]


class Polyline:
    """Oriented polyline in R^3 on a surface, with signed distance.

    With y* the closest point, n the surface normal there and b = n x
    tangent, the signed distance of y is the length of the in-surface part
    of y - y* (its normal component removed) with the sign of <b, y - y*>.
    Dropping the normal part keeps the function continuous through zero
    even though chords sag below a curved surface. Only the normal excess
    beyond the longest chord is dropped, so a far point whose offset happens
    to be normal to the surface still reads as far away.
    """

    def __init__(self, xyz: np.ndarray, surface):
        xyz = np.asarray(xyz, dtype=float)
        seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
        keep = np.concatenate([[True], seg > 1e-14])
        self.keep = keep
        self.xyz = xyz[keep]
        self.surface = surface
        self.tree = cKDTree(self.xyz)
        seg = np.linalg.norm(np.diff(self.xyz, axis=0), axis=1)
        self.length = np.concatenate([[0.0], np.cumsum(seg)])
        self.sag_allowance = float(seg.max()) if seg.size else 0.0

    def closest(self, y: np.ndarray, k: int = 6):
        y = np.atleast_2d(y)
        k = min(k, len(self.xyz))
        _, nbr = self.tree.query(y, k=k)
        nbr = np.atleast_2d(nbr).reshape(len(y), -1)
        best_d = np.full(len(y), np.inf)
        best_pt = np.zeros_like(y)
        best_tan = np.zeros_like(y)
        best_arc = np.zeros(len(y))
        nseg = len(self.xyz) - 1
        for col in range(nbr.shape[1]):
            for off in (-1, 0):
                i = np.clip(nbr[:, col] + off, 0, nseg - 1)
                a, b = self.xyz[i], self.xyz[i + 1]
                ab = b - a
                w = np.clip(np.einsum("ij,ij->i", y - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
                pt = a + w[:, None] * ab
                d = np.linalg.norm(y - pt, axis=1)
                better = d < best_d
                best_d[better] = d[better]
                best_pt[better] = pt[better]
                best_tan[better] = ab[better]
                best_arc[better] = (self.length[i] + w * (self.length[i + 1] - self.length[i]))[better]
        return best_d, best_pt, best_tan, best_arc

    def signed_distance(self, y: np.ndarray) -> np.ndarray:
        d, pt, tan, _ = self.closest(y)
        c, u = self.surface.locate(pt)
        n = self.surface.normal(c, u)
        r = y - pt
        rn = np.einsum("ij,ij->i", r, n)
        r = r - rn[:, None] * n
        excess = np.maximum(np.abs(rn) - self.sag_allowance, 0.0)
        side = np.einsum("ij,ij->i", np.cross(n, tan), r)
        return np.where(side >= 0, 1.0, -1.0) * np.hypot(np.linalg.norm(r, axis=1), excess)


def _curve_through(pair, p, trajs, spacing=1e-3):
    a = trajs[0].xyz(pair.surface)[::-1]
    b = trajs[1].xyz(pair.surface)
    mid = np.array(p.xyz)[None, :]
    return np.vstack([_thin(a, spacing), mid, _thin(b, spacing)])


def stable_curve(pair: MorseSmalePair, q: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                 seps: Optional[dict] = None) -> Polyline:
    """Closure of W^s(q) for a saddle q: max -> q -> max."""
    key = ("stable_curve", q.id, tol)
    if key not in pair.cache:
        seps = seps or separatrices(pair, q, tol)
        pair.cache[key] = Polyline(_curve_through(pair, q, seps["stable"]), pair.surface)
    return pair.cache[key]


class UnstableArc:
    """Closure of W^u(p) for a saddle p (min -> p -> min), parametrized by
    normalized arclength lam in [0, 1]."""

    def __init__(self, pair: MorseSmalePair, p: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                 seps: Optional[dict] = None):
        seps = seps or separatrices(pair, p, tol)
        self.pair, self.point = pair, p
        self.poly = Polyline(_curve_through(pair, p, seps["unstable"]), pair.surface)
        self.ends = (seps["unstable"][0].end_label, seps["unstable"][1].end_label)

    def points(self, lam):
        lam = np.clip(np.asarray(lam, dtype=float), 0.0, 1.0)
        L = self.poly.length
        target = lam * L[-1]
        xyz = np.stack([np.interp(target, L, self.poly.xyz[:, k]) for k in range(3)], axis=-1)
        return self.pair.surface.locate(xyz)

    def offset_grid(self, n: int) -> np.ndarray:
        return (np.arange(n) + 0.5) / n


def find_sign_changes(values: np.ndarray, grid: np.ndarray, fn, tol: Tolerances,
                      accept: float = 1e-6, what: str = "crossing"):
    """Roots of a sampled crossing function.

    Each sign change between neighbours is refined with Brent's method;
    it counts as a genuine root only if the function is near zero there
    (sign flips of a signed distance far from the curve are discarded).
    A sample within cross_tol of zero with no neighbouring sign change is
    a tangency and raises NonGenericError.
    """
    roots = []
    sgn = np.sign(values)
    n = len(grid)
    for i in np.nonzero(values == 0.0)[0]:
        # an exact zero is a crossing only between samples of opposite sign
        if 0 < i < n - 1 and sgn[i - 1] * sgn[i + 1] < 0:
            roots.append((float(grid[i]), 0.0))
        else:
            raise NonGenericError(f"non-generic homotopy, perturb ({what} vanishes without crossing "
                                  f"at {float(grid[i]):.6g})")
    for i in range(n - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0 or b == 0.0:
            continue
        if sgn[i] != sgn[i + 1]:
            r, info = brentq(fn, grid[i], grid[i + 1], xtol=tol.root_tol, full_output=True, disp=False)
            mval = float(fn(r))
            if info.converged and abs(mval) < accept:
                roots.append((float(r), mval))
    near = np.abs(values) < tol.cross_tol
    for i in np.nonzero(near)[0]:
        left = i > 0 and sgn[i - 1] != sgn[i]
        right = i < len(values) - 1 and sgn[i + 1] != sgn[i]
        if not (left or right):
            raise NonGenericError(f"non-generic homotopy, perturb ({what} touches without crossing "
                                  f"near {float(grid[i]):.6g})")
    return roots


def resolve_curve(arc_fn, n: int, max_gap: float = 0.02, rounds: int = 16):
    """Offset grid lam_i = (i + 1/2)/n, refined wherever consecutive images
    under ``arc_fn`` are more than ``max_gap`` apart (the flow stretches the
    arc strongly near the saddle it leaves)."""
    grid = (np.arange(n) + 0.5) / n
    pts = arc_fn(grid)
    for _ in range(rounds):
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        wide = np.nonzero((gaps > max_gap) & (np.diff(grid) > 1e-12))[0]
        if wide.size == 0:
            break
        mids = 0.5 * (grid[wide] + grid[wide + 1])
        new = arc_fn(mids)
        grid = np.insert(grid, wide + 1, mids)
        pts = np.insert(pts, wide + 1, new, axis=0)
    return grid, pts


def arc_crossings(arc_fn, poly: Polyline, n: int, tol: Tolerances, what: str = "crossing"):
    """Crossings of the curve lam -> arc_fn(lam) (ambient xyz) with ``poly``."""
    grid, pts = resolve_curve(arc_fn, n)
    vals = poly.signed_distance(pts)

    def f(lam):
        return float(poly.signed_distance(arc_fn(np.array([lam])))[0])

    return find_sign_changes(vals, grid, f, tol, what=what)


# ---------------------------------------------------------------------------
# continuation counts (level-0 homotopies)


def continuation_count(h: Homotopy, p: CriticalPoint, q: CriticalPoint,
                       tol: Tolerances = DEFAULT_TOLERANCES, s=()) -> int:
    """Mod-2 count of flow lines of the nonautonomous flow from p (of f^a)
    to q (of f^b), ind p = ind q. ``s`` freezes the parameters of a higher
    level homotopy."""
    if p.index != q.index:
        raise ValueError("continuation counts pair critical points of equal index")
    col = continuation_column(h, p, tol, s)
    return int(q.id in col and col[q.id] % 2)


def continuation_column(h: Homotopy, p: CriticalPoint, tol: Tolerances = DEFAULT_TOLERANCES,
                        s=(), crossings: Optional[dict] = None) -> dict:
    """{q.id: count} over critical points q of f^b with ind q = ind p."""
    s = np.asarray(s, dtype=float).reshape(1, h.level) if h.level else np.zeros((1, 0))
    alpha, beta = h.alpha, h.beta
    if p.index == 0:
        labels, _, _ = through_homotopy(h, s, [p.chart_id], p.u[None], FORWARD, tol)
        _fail_escaped(labels, p)
        q = beta.point(labels[0])
        return {q.id: 1} if q.index == 0 else {}
    if p.index == 2:
        out = {}
        for q in beta.points_of_index(2):
            labels, _, _ = through_homotopy(h, s, [q.chart_id], q.u[None], BACKWARD, tol)
            _fail_escaped(labels, q)
            if labels[0] == p.id:
                out[q.id] = 1
        return out
    arc = UnstableArc(alpha, p, tol)
    out = {}
    for q in beta.points_of_index(1):
        poly = stable_curve(beta, q, tol)
        roots = arc_crossings(lambda lam: transported_arc(h, s, arc, lam, tol), poly, tol.arc_samples, tol,
                              what=f"transported W^u({p.id}) vs W^s({q.id})")
        if crossings is not None:
            crossings[q.id] = roots
        if len(roots) % 2:
            out[q.id] = 1
    return out


def transported_arc(h: Homotopy, s, arc: UnstableArc, lam, tol: Tolerances) -> np.ndarray:
    """Ambient positions at t=T of the arc points lam, started at t=-T."""
    c, u = arc.points(lam)
    res = transport(h, s, c, u, FORWARD, tol)
    _check_reached(res, "arc transport")
    return h.alpha.surface.embed(res.charts, res.u)


def _fail_escaped(labels, p):
    if ESCAPED in labels:
        raise FlowError(f"trajectory from {p.id} escaped; re-tolerance the scenario")


def dump_trajectories(trajs: Sequence[Trajectory], directory: str, stem: str, surface) -> list:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, tr in enumerate(trajs):
        path = os.path.join(directory, f"{stem}_{i}.csv")
        tr.to_csv(path, surface)
        paths.append(path)
    return paths
