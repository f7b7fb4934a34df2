"""Finite parametrized homotopies (H, G) of Morse-Smale pairs.

A homotopy of level l is a function of parameters s in [0,1]^l, time t and
a surface point. Parameter arrays have shape (N, l) with the *leading*
parameter s^l in column 0, so column ``l - k`` holds s^k. The source facet
sets s^l = 0 and the target facet sets s^l = 1.

Every homotopy exposes ``evaluate(s, t, charts, u)`` returning the value,
its chart differential and the metric, and all composite constructions
(facets, identities, concatenations, reparametrizations) are thin wrappers
that only transform the parameter array.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import expressions
from .geometry import ChartFunction, MorseSmalePair, solve2


def psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, all derivatives vanish
    at both ends, and smooth_step(1/2) = 1/2 exactly."""
    x = np.asarray(x, dtype=float)
    a = psi(x)
    b = psi(1.0 - x)
    return a / (a + b)


def smooth_step_dx(x):
    x = np.asarray(x, dtype=float)
    a, b = psi(x), psi(1.0 - x)
    da = np.where(x > 0, a / np.maximum(x, 1e-300) ** 2, 0.0)
    db = np.where(x < 1, b / np.maximum(1.0 - x, 1e-300) ** 2, 0.0)
    return (da * b + a * db) / (a + b) ** 2


ramp = smooth_step  # the flat-ended reparametrization used for gluing


def time_profiles(t, cutoff: float):
    """beta(t) moves 0 -> 1 on [-T, T]; kappa(t) = 4 beta (1 - beta) is the
    bump that carries the parameter-dependent push."""
    beta = smooth_step((np.asarray(t, dtype=float) + cutoff) / (2.0 * cutoff))
    return beta, 4.0 * beta * (1.0 - beta)


class Homotopy:
    """Base class; subclasses implement ``evaluate``."""

    level: int
    alpha: MorseSmalePair
    beta: MorseSmalePair
    cutoff: float

    def evaluate(self, s, t, charts, u):
        raise NotImplementedError

    # conveniences -----------------------------------------------------------
    def _prep(self, s, n):
        s = np.asarray(s, dtype=float)
        if self.level == 0:
            return np.zeros((n, 0))
        s = np.broadcast_to(s.reshape(-1, self.level) if s.size else s, (n, self.level))
        return np.array(s)

    def vector_field(self, s, sign: float = -1.0):
        """rhs(t, charts, u, idx) for the flow ``du/dt = sign * grad_G H``.

        ``s`` is an (N, l) array of per-trajectory parameters indexed by the
        integrator's batch indices.
        """
        s = np.asarray(s, dtype=float)
        s = s.reshape(-1, self.level) if self.level else None

        def rhs(t, charts, u, idx):
            sp = s[idx] if s is not None else np.zeros((len(u), 0))
            _, dh, g = self.evaluate(sp, np.broadcast_to(t, (len(u),)), charts, u)
            return sign * solve2(g, dh)

        return rhs

    def facet(self, value: float) -> "Homotopy":
        return Facet(self, value)

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "level": self.level}


class Atomic(Homotopy):
    """H(s,t,x) = (1-b(t)) f_a + b(t) f_b + k(t) P(s,x), G = (1-b) g_a + b g_b.

    ``push`` is an ambient-coordinate expression in x, y, z and s1..s_l.
    """

    def __init__(self, alpha: MorseSmalePair, beta: MorseSmalePair, push: str = "0",
                 level: int = 0, cutoff: float = 1.0):
        if alpha.surface is not beta.surface:
            raise ValueError("both ends of a homotopy must live on the same surface object")
        if cutoff <= 0:
            raise ValueError("cutoff must be positive")
        self.level = int(level)
        self.alpha, self.beta = alpha, beta
        self.cutoff = float(cutoff)
        self.push_text = push
        names = [f"s{k}" for k in range(1, self.level + 1)]
        expr = expressions.parse(push, ["x", "y", "z"] + names)
        self._push = ChartFunction(alpha.surface, expr, names, hessian=False)

    def evaluate(self, s, t, charts, u):
        n = len(u)
        s = self._prep(s, n)
        t = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        b, k = time_profiles(t, self.cutoff)
        fa, da = self.alpha.f.value_grad(charts, u)
        fb, db = self.beta.f.value_grad(charts, u)
        # parameter sk lives in column level - k
        params = [s[:, self.level - j] for j in range(1, self.level + 1)]
        p, dp = self._push.value_grad(charts, u, params)
        val = (1 - b) * fa + b * fb + k * p
        dval = (1 - b)[:, None] * da + b[:, None] * db + k[:, None] * dp
        ga = self.alpha.metric(charts, u)
        gb = self.beta.metric(charts, u) if self.beta.metric is not self.alpha.metric else ga
        g = (1 - b)[:, None, None] * ga + b[:, None, None] * gb
        return val, dval, g

    def describe(self):
        return {"kind": "atomic", "level": self.level, "push": self.push_text, "cutoff": self.cutoff}


class Wrapped(Homotopy):
    def __init__(self, child: Homotopy, level: int):
        self.child = child
        self.level = level
        self.alpha, self.beta, self.cutoff = child.alpha, child.beta, child.cutoff


class Facet(Wrapped):
    """Fix the leading parameter at 0 (source) or 1 (target)."""

    def __init__(self, child: Homotopy, value: float):
        if child.level < 1:
            raise ValueError("a level-0 homotopy has no facets")
        super().__init__(child, child.level - 1)
        self.value = float(value)

    def evaluate(self, s, t, charts, u):
        s = self._prep(s, len(u))
        full = np.concatenate([np.full((len(u), 1), self.value), s], axis=1)
        return self.child.evaluate(full, t, charts, u)

    def describe(self):
        return {"kind": "facet", "value": self.value, "child": self.child.describe()}


class Constant(Wrapped):
    """Identity cell: constant in a new leading parameter."""

    def __init__(self, child: Homotopy):
        super().__init__(child, child.level + 1)

    def evaluate(self, s, t, charts, u):
        s = self._prep(s, len(u))
        return self.child.evaluate(s[:, 1:], t, charts, u)

    def describe(self):
        return {"kind": "identity", "child": self.child.describe()}


class Reparametrized(Wrapped):
    """Replace one parameter column by ``fn(s_j)`` before evaluating."""

    def __init__(self, child: Homotopy, column: int, fn: Callable):
        super().__init__(child, child.level)
        self.column = column
        self.fn = fn

    def evaluate(self, s, t, charts, u):
        s = self._prep(s, len(u)).copy()
        s[:, self.column] = self.fn(s[:, self.column])
        return self.child.evaluate(s, t, charts, u)

    def describe(self):
        return {"kind": "reparametrized", "column": self.column, "child": self.child.describe()}


class Piecewise(Wrapped):
    """Concatenation along one parameter column.

    Piece i covers [breaks[i], breaks[i+1]] of column ``column``; there
    the local coordinate x in [0, 1] is fed through ``maps[i]`` and the
    result is handed to ``children[i]``.
    """

    def __init__(self, children: Sequence[Homotopy], column: int, breaks: Sequence[float],
                 maps: Sequence[Callable]):
        levels = {c.level for c in children}
        if len(levels) != 1:
            raise ValueError("pieces must share a level")
        if len(breaks) != len(children) + 1 or len(maps) != len(children):
            raise ValueError("need one map per piece and len(pieces)+1 breakpoints")
        super().__init__(children[0], children[0].level)
        self.children = list(children)
        self.column = column
        self.breaks = [float(b) for b in breaks]
        self.maps = list(maps)

    def evaluate(self, s, t, charts, u):
        n = len(u)
        s = self._prep(s, n)
        t = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        sig = s[:, self.column]
        which = np.searchsorted(np.asarray(self.breaks[1:-1]), sig, side="left")
        val = np.empty(n)
        dval = np.empty((n, 2))
        g = np.empty((n, 2, 2))
        for i, child in enumerate(self.children):
            m = which == i
            if not m.any():
                continue
            lo, hi = self.breaks[i], self.breaks[i + 1]
            x = np.clip((sig[m] - lo) / (hi - lo), 0.0, 1.0)
            sl = s[m].copy()
            sl[:, self.column] = self.maps[i](x)
            v, d, gg = child.evaluate(sl, t[m], charts[m], u[m])
            val[m], dval[m], g[m] = v, d, gg
        return val, dval, g

    def describe(self):
        return {"kind": "piecewise", "column": self.column, "breaks": self.breaks,
                "children": [c.describe() for c in self.children]}


def concatenate(second: Homotopy, first: Homotopy, column: int) -> Piecewise:
    """``first`` on the lower half of the column, ``second`` on the upper,
    each precomposed with the flat-ended ramp so the seam is smooth."""
    return Piecewise([first, second], column, [0.0, 0.5, 1.0], [ramp, ramp])


def spot_grid(level: int, surface, n_points: int = 12, n_times: int = 9, cutoff: float = 1.0):
    """Deterministic evaluation grid: parameters on {0, 1/4, 1/2, 3/4, 1}
    per axis, ``n_times`` times across the active window (plus beyond it),
    and ``n_points`` well-spread surface points."""
    axis = np.linspace(0.0, 1.0, 5)
    if level:
        mesh = np.stack(np.meshgrid(*([axis] * level), indexing="ij"), -1).reshape(-1, level)
    else:
        mesh = np.zeros((1, 0))
    times = np.linspace(-1.5 * cutoff, 1.5 * cutoff, n_times)
    charts, u = surface.spot_points(n_points)
    ns, nt, nx = len(mesh), len(times), len(u)
    s = np.repeat(mesh, nt * nx, axis=0)
    t = np.tile(np.repeat(times, nx), ns)
    c = np.tile(charts, ns * nt)
    uu = np.tile(u, (ns * nt, 1))
    return s, t, c, uu


def max_difference(a: Homotopy, b: Homotopy, n_points: int = 12, n_times: int = 9) -> float:
    """Largest gap in value, differential and metric on the spot grid."""
    if a.level != b.level:
        return np.inf
    grid = spot_grid(a.level, a.alpha.surface, n_points, n_times, max(a.cutoff, b.cutoff))
    va, da, ga = a.evaluate(*grid)
    vb, db, gb = b.evaluate(*grid)
    return float(max(np.max(np.abs(va - vb)), np.max(np.abs(da - db)), np.max(np.abs(ga - gb))))


def same_cell(a: Homotopy, b: Homotopy, tol: float = 1e-12) -> bool:
    return max_difference(a, b) <= tol


def check_ends(h: Homotopy, tol: float = 1e-12) -> dict:
    """Spot check that H equals f_a for t <= -T and f_b for t >= T."""
    surface = h.alpha.surface
    s, _, c, u = spot_grid(h.level, surface, 12, 1, h.cutoff)
    worst = 0.0
    for side, pair in ((-1, h.alpha), (1, h.beta)):
        for factor in (1.0, 1.7):
            t = np.full(len(u), side * factor * h.cutoff)
            v, d, _ = h.evaluate(s, t, c, u)
            fv, fd = pair.f.value_grad(c, u)
            worst = max(worst, float(np.max(np.abs(v - fv))), float(np.max(np.abs(d - fd))))
    return {"ok": worst <= tol, "max_gap": worst}


def check_degeneracy(h: Homotopy, tol: float = 1e-12) -> dict:
    """For every pair of adjacent columns (j, j+1): once column j+1 sits at
    0 or 1, the cell must not depend on the columns before it."""
    if h.level < 2:
        return {"ok": True, "max_gap": 0.0}
    surface = h.alpha.surface
    s, t, c, u = spot_grid(h.level, surface, 8, 5, h.cutoff)
    worst = 0.0
    for j in range(1, h.level):
        for end in (0.0, 1.0):
            base = s.copy()
            base[:, j] = end
            ref = base.copy()
            ref[:, :j] = 0.0
            v1, d1, _ = h.evaluate(base, t, c, u)
            v2, d2, _ = h.evaluate(ref, t, c, u)
            worst = max(worst, float(np.max(np.abs(v1 - v2))), float(np.max(np.abs(d1 - d2))))
    return {"ok": worst <= tol, "max_gap": worst}
