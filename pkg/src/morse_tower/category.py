"""The geometric weak infinity-category A, the algebraic strict
infinity-category B, and the functor F between them.

A-cells are parametrized homotopies together with a provenance record
(atomic, facet, composite, identity). Sources and targets follow the
provenance (for instance the source of a top-level composite is the source
of its first piece), and the axiom checks compare these declared cells with
direct facet evaluations on the spot grid. B-cells are graded GF(2) maps
with declared sources and targets; composition is addition and identities
are zero maps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import msw
from .config import DEFAULT_TOLERANCES, Tolerances
from .geometry import MorseSmalePair, ScalarField, Sphere
from .homotopy import (Atomic, Constant, Facet, Homotopy, Piecewise, Reparametrized, concatenate,
                       max_difference, ramp)
from .z2algebra import ChainComplex, Gf2Matrix, GradedMap, Report, nullspace, verify_chain_map, verify_homotopy

log = logging.getLogger(__name__)

CELL_TOL = 1e-12


class GluingError(ValueError):
    """Two cells do not share the boundary cell they are glued along."""


# ---------------------------------------------------------------------------
# globular sets
# ---------------------------------------------------------------------------

class GlobularSet:
    """Cells stored per level with their source and target maps.

    ``add`` files a cell together with all of its iterated boundaries;
    ``check`` tests ss = st and ts = tt on every stored cell of level >= 2
    using the supplied equality.
    """

    def __init__(self, equal: Callable = lambda a, b: a == b):
        self.equal = equal
        self.cells: dict[int, list] = {}
        self._seen: set[int] = set()

    def add(self, cell) -> None:
        if id(cell) in self._seen:
            return
        self._seen.add(id(cell))
        self.cells.setdefault(cell.level, []).append(cell)
        if cell.level > 0:
            self.add(cell.source)
            self.add(cell.target)

    @staticmethod
    def s_map(cell):
        return cell.source

    @staticmethod
    def t_map(cell):
        return cell.target

    def check(self) -> Report:
        for level in sorted(self.cells):
            if level < 2:
                continue
            for i, c in enumerate(self.cells[level]):
                if not self.equal(c.source.source, c.target.source):
                    return Report(False, "globular", f"ss != st on level-{level} cell {i}", (level, i))
                if not self.equal(c.source.target, c.target.target):
                    return Report(False, "globular", f"ts != tt on level-{level} cell {i}", (level, i))
        return Report(True, "globular")

    def counts(self) -> dict:
        return {level: len(cells) for level, cells in sorted(self.cells.items())}


# ---------------------------------------------------------------------------
# the geometric side A
# ---------------------------------------------------------------------------

class ACell:
    """A parametrized homotopy plus how it was built.

    ``provenance`` is one of ``("atomic",)``, ``("facet", parent, value)``,
    ``("composite", p, c2, c1)``, ``("identity", inner)`` or
    ``("witness", witness)``.
    """

    def __init__(self, payload: Homotopy, provenance: tuple = ("atomic",), name: str = ""):
        self.payload = payload
        self.provenance = provenance
        self.name = name
        self._bounds: dict[int, "ACell"] = {}

    @property
    def level(self) -> int:
        return self.payload.level

    @property
    def kind(self) -> str:
        return self.provenance[0]

    def boundary(self, side: int) -> "ACell":
        """Declared source (side 0) or target (side 1)."""
        if self.level == 0:
            raise ValueError("a 0-cell has no source or target")
        if side not in self._bounds:
            kind = self.kind
            if kind == "composite":
                _, p, c2, c1 = self.provenance
                if p == self.level - 1:
                    cell = (c1 if side == 0 else c2).boundary(side)
                else:
                    cell = compose_A(c2.boundary(side), c1.boundary(side), p, check=False)
            elif kind == "identity":
                cell = self.provenance[1]
            else:
                cell = ACell(Facet(self.payload, float(side)), ("facet", self, side),
                             f"{'st'[side]}({self.name})" if self.name else "")
            self._bounds[side] = cell
        return self._bounds[side]

    @property
    def source(self) -> "ACell":
        return self.boundary(0)

    @property
    def target(self) -> "ACell":
        return self.boundary(1)

    def iterated(self, side: int, k: int) -> "ACell":
        cell = self
        for _ in range(k):
            cell = cell.boundary(side)
        return cell

    def gap(self, other: "ACell") -> float:
        return max_difference(self.payload, other.payload)

    def same_as(self, other: "ACell", tol: float = CELL_TOL) -> bool:
        return self.level == other.level and self.gap(other) <= tol

    def facet_gaps(self) -> tuple[float, float]:
        """Distance between declared boundaries and direct facet evaluations."""
        return tuple(max_difference(self.boundary(side).payload, Facet(self.payload, float(side)))
                     for side in (0, 1))

    def describe(self) -> dict:
        kind = self.kind
        out = {"kind": kind, "level": self.level}
        if self.name:
            out["name"] = self.name
        if kind == "composite":
            out.update(p=self.provenance[1], second=self.provenance[2].describe(), first=self.provenance[3].describe())
        elif kind == "identity":
            out["inner"] = self.provenance[1].describe()
        return out

    def __repr__(self) -> str:
        return f"ACell(level={self.level}, kind={self.kind!r}, name={self.name!r})"


def a_equal(a: ACell, b: ACell) -> bool:
    return a.same_as(b)


def _check_composable(c2, c1, p: int):
    if c2.level != c1.level:
        raise GluingError(f"cells of levels {c2.level} and {c1.level} cannot be composed")
    if not 0 <= p < c1.level:
        raise GluingError(f"composite along p={p} needs 0 <= p < {c1.level}")


def compose_A(c2: ACell, c1: ACell, p: int, check: bool = True, tol: float = CELL_TOL) -> ACell:
    """c2 o_p c1: c1 on the lower half of the parameter s^(p+1), c2 on the
    upper half, each half precomposed with the flat-ended ramp."""
    _check_composable(c2, c1, p)
    ell = c1.level
    if check:
        lo, hi = c2.iterated(0, ell - p), c1.iterated(1, ell - p)
        gap = lo.gap(hi)
        if gap > tol:
            raise GluingError(f"gluing mismatch along p={p}: source of the second cell and target of the "
                              f"first differ by {gap:.3e}")
    payload = concatenate(c2.payload, c1.payload, ell - 1 - p)
    name = f"({c2.name} o{p} {c1.name})" if c2.name and c1.name else ""
    return ACell(payload, ("composite", p, c2, c1), name)


def identity_A(c: ACell) -> ACell:
    return ACell(Constant(c.payload), ("identity", c), f"1({c.name})" if c.name else "")


def identity_power(c, k: int, identity=None):
    identity = identity or (identity_A if isinstance(c, ACell) else identity_B)
    for _ in range(k):
        c = identity(c)
    return c


def broken_compose_A(c2: ACell, c1: ACell, p: int) -> ACell:
    """A deliberately wrong composite (pieces swapped) that still declares
    the composite provenance; used to show that the axiom checks bite."""
    _check_composable(c2, c1, p)
    payload = concatenate(c1.payload, c2.payload, c1.level - 1 - p)
    return ACell(payload, ("composite", p, c2, c1), "broken")


class _WitnessFamily(Homotopy):
    """A witness viewed as one cell whose new leading parameter is r."""

    def __init__(self, family: Callable[[float], Homotopy], probe: Homotopy):
        self.family = family
        self.level = probe.level + 1
        self.alpha, self.beta, self.cutoff = probe.alpha, probe.beta, probe.cutoff

    def evaluate(self, s, t, charts, u):
        n = len(u)
        s = self._prep(s, n)
        t = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        val, dval, g = np.empty(n), np.empty((n, 2)), np.empty((n, 2, 2))
        for r in np.unique(s[:, 0]):
            m = s[:, 0] == r
            val[m], dval[m], g[m] = self.family(float(r)).evaluate(s[m, 1:], t[m], charts[m], u[m])
        return val, dval, g


@dataclass
class HomotopyWitness:
    """An r-parametrized family of cells connecting two expected endpoints."""

    family: Callable[[float], Homotopy]
    start: ACell
    end: ACell
    label: str = ""

    def at(self, r: float) -> Homotopy:
        return self.family(float(r))

    def endpoint_gaps(self) -> tuple[float, float]:
        return (max_difference(self.at(0.0), self.start.payload), max_difference(self.at(1.0), self.end.payload))

    def check(self, tol: float = CELL_TOL) -> dict:
        g0, g1 = self.endpoint_gaps()
        return {"witness": self.label, "ok": bool(g0 <= tol and g1 <= tol), "gap_r0": g0, "gap_r1": g1}

    def as_cell(self) -> ACell:
        """The witness as an (l+1)-cell with source ``start`` and target ``end``."""
        return ACell(_WitnessFamily(self.family, self.start.payload), ("witness", self), self.label)


def _assoc_maps():
    # local maps of the three pieces for the left- and right-bracketed composites
    def half(x):
        return ramp(2.0 * ramp(x / 2.0))

    def upper_half(x):
        return ramp(2.0 * ramp(0.5 + x / 2.0) - 1.0)

    left = (ramp, half, upper_half)
    right = (half, upper_half, ramp)
    return left, right


def witness_assoc(c3: ACell, c2: ACell, c1: ACell, p: int) -> HomotopyWitness:
    """T(r) from (c3 o c2) o c1 at r=0 to c3 o (c2 o c1) at r=1.

    Three pieces on the column of s^(p+1) with breakpoints (2-r)/4 and
    (3-r)/4; on each piece the local map interpolates linearly between
    the maps the two bracketings induce there.
    """
    left_cell = compose_A(compose_A(c3, c2, p), c1, p)
    right_cell = compose_A(c3, compose_A(c2, c1, p), p)
    column = c1.level - 1 - p
    left, right = _assoc_maps()
    pieces = [c1.payload, c2.payload, c3.payload]

    def family(r: float) -> Homotopy:
        maps = [lambda x, a=a, b=b: (1.0 - r) * a(x) + r * b(x) for a, b in zip(left, right)]
        return Piecewise(pieces, column, [0.0, (2.0 - r) / 4.0, (3.0 - r) / 4.0, 1.0], maps)

    return HomotopyWitness(family, left_cell, right_cell, "assoc")


def witness_identity_law(c: ACell, p: int, side: str = "left") -> HomotopyWitness:
    """T1(r) from 1^(l-p)(t^(l-p) c) o_p c (side "left") or
    c o_p 1^(l-p)(s^(l-p) c) (side "right") at r=0 to c at r=1.

    Both padded composites are c with the column of s^(p+1) fed through a
    fixed monotone map mu; the witness slides mu linearly to the identity.
    """
    ell = c.level
    if not 0 <= p < ell:
        raise GluingError(f"identity law along p={p} needs 0 <= p < {ell}")
    column = ell - 1 - p
    if side == "left":
        padded = compose_A(identity_power(c.iterated(1, ell - p), ell - p), c, p)

        def mu(x):
            return ramp(np.minimum(2.0 * x, 1.0))
    elif side == "right":
        padded = compose_A(c, identity_power(c.iterated(0, ell - p), ell - p), p)

        def mu(x):
            return ramp(np.maximum(2.0 * x - 1.0, 0.0))
    else:
        raise ValueError("side is 'left' or 'right'")

    def family(r: float) -> Homotopy:
        return Reparametrized(c.payload, column, lambda x: (1.0 - r) * mu(x) + r * x)

    return HomotopyWitness(family, padded, c, f"identity_{side}")


# ---------------------------------------------------------------------------
# the algebraic side B
# ---------------------------------------------------------------------------

class BCell:
    """A graded map of shift l with declared (l-1)-cells as source and target."""

    def __init__(self, phi: GradedMap, source: Optional["BCell"] = None, target: Optional["BCell"] = None):
        if (phi.shift == 0) != (source is None and target is None):
            raise ValueError("exactly the cells of level >= 1 carry a source and a target")
        self.phi = phi
        self._source, self._target = source, target

    @property
    def level(self) -> int:
        return self.phi.shift

    @property
    def source(self) -> "BCell":
        if self._source is None:
            raise ValueError("a 0-cell has no source or target")
        return self._source

    @property
    def target(self) -> "BCell":
        if self._target is None:
            raise ValueError("a 0-cell has no source or target")
        return self._target

    def boundary(self, side: int) -> "BCell":
        return self.source if side == 0 else self.target

    def iterated(self, side: int, k: int) -> "BCell":
        cell = self
        for _ in range(k):
            cell = cell.boundary(side)
        return cell

    def validate(self) -> Report:
        """The cell invariant, recursively down to the 0-cells."""
        if self.level == 0:
            return verify_chain_map(self.phi)
        s, t = self.source, self.target
        if s.level != self.level - 1 or t.level != self.level - 1:
            return Report(False, "levels", "boundary cells must sit one level down")
        for cell in (s, t):
            rep = cell.validate()
            if not rep.ok:
                return rep
        if self.level >= 2 and (s.source != t.source or s.target != t.target):
            return Report(False, "globular", "source and target are not parallel")
        return verify_homotopy(self.phi, s.phi, t.phi)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BCell):
            return NotImplemented
        if self is other:
            return True
        if self.phi != other.phi:
            return False
        if self.level == 0:
            return True
        return self.source == other.source and self.target == other.target

    def __hash__(self) -> int:
        return hash(self.phi)

    def __repr__(self) -> str:
        return f"BCell(level={self.level}, blocks={[b.tolist() for b in self.phi.blocks]})"

    def to_json(self) -> dict:
        out = {"level": self.level, "blocks": [b.tolist() for b in self.phi.blocks]}
        if self.level:
            out["source"] = self.source.to_json()
            out["target"] = self.target.to_json()
        return out


def compose_B(b2: BCell, b1: BCell, p: int, check: bool = True) -> BCell:
    """b2 o_p b1 = b2 + b1, with boundaries recomputed by the composite rules."""
    _check_composable(b2, b1, p)
    ell = b1.level
    if check and b2.iterated(0, ell - p) != b1.iterated(1, ell - p):
        raise GluingError(f"gluing mismatch along p={p}")
    phi = b2.phi + b1.phi
    if p == ell - 1:
        return BCell(phi, b1.source, b2.target)
    return BCell(phi, compose_B(b2.source, b1.source, p, check=False),
                 compose_B(b2.target, b1.target, p, check=False))


def identity_B(b: BCell) -> BCell:
    return BCell(GradedMap.zero(b.phi.domain, b.phi.codomain, b.level + 1), b, b)


def broken_compose_B(b2: BCell, b1: BCell, p: int) -> BCell:
    """Sum with the wrong declared source (that of b2)."""
    _check_composable(b2, b1, p)
    ell = b1.level
    phi = b2.phi + b1.phi
    if p == ell - 1:
        return BCell(phi, b2.source, b2.target)
    return BCell(phi, compose_B(b2.source, b2.source, p, check=False),
                 compose_B(b2.target, b1.target, p, check=False))


# random B-cells -------------------------------------------------------------

def random_complex(rng: np.random.Generator, max_dim: int = 4, top_degree: Optional[int] = None,
                   prefix: str = "e") -> ChainComplex:
    """Random complex with basis sizes <= max_dim; each d_k has its columns
    in ker d_(k-1), so d^2 = 0 by construction."""
    n = int(rng.integers(1, 4)) if top_degree is None else top_degree
    dims = [int(x) for x in rng.integers(0, max_dim + 1, size=n + 1)]
    if sum(dims) == 0:
        dims[0] = 1
    mats = [np.zeros((0, dims[0]), dtype=np.uint8)]
    for k in range(1, n + 1):
        prev = Gf2Matrix(mats[k - 1], shape=(dims[k - 2] if k >= 2 else 0, dims[k - 1]))
        ker = nullspace(prev)  # (dims[k-1], r)
        coeff = rng.integers(0, 2, size=(ker.shape[1], dims[k]), dtype=np.uint8)
        mats.append((ker.astype(np.int64) @ coeff % 2).astype(np.uint8).reshape(dims[k - 1], dims[k]))
    basis = [[f"{prefix}{k}.{i}" for i in range(d)] for k, d in enumerate(dims)]
    return ChainComplex(basis, [Gf2Matrix(m, shape=m.shape) for m in mats])


def _shapes(c: ChainComplex, cp: ChainComplex, shift: int):
    return [(cp.dim(r + shift), c.dim(r)) for r in range(c.top_degree + 1)]


def _unflatten(vec, shapes):
    blocks, i = [], 0
    for rows, cols in shapes:
        blocks.append(np.asarray(vec[i:i + rows * cols], dtype=np.uint8).reshape(rows, cols))
        i += rows * cols
    return blocks


def random_graded_map(rng, c: ChainComplex, cp: ChainComplex, shift: int) -> GradedMap:
    shapes = _shapes(c, cp, shift)
    return GradedMap(c, cp, shift, [rng.integers(0, 2, size=s, dtype=np.uint8) for s in shapes])


def differential(phi: GradedMap) -> GradedMap:
    """D(phi) = d' phi + phi d, a map of shift one less (D o D = 0)."""
    c, cp, ell = phi.domain, phi.codomain, phi.shift
    if ell == 0:
        raise ValueError("D lowers the shift; a chain map has none to lose")
    blocks = [cp.d(r + ell) @ phi.block(r) + phi.block(r - 1) @ c.d(r) for r in range(c.top_degree + 1)]
    return GradedMap(c, cp, ell - 1, blocks)


def random_chain_map(rng, c: ChainComplex, cp: ChainComplex) -> GradedMap:
    """Uniform random element of the space of chain maps C -> C'."""
    shapes = _shapes(c, cp, 0)
    n = sum(r * k for r, k in shapes)
    cols = []
    for j in range(n):
        e = np.zeros(n, dtype=np.uint8)
        e[j] = 1
        phi = GradedMap(c, cp, 0, _unflatten(e, shapes))
        defect = [cp.d(r) @ phi.block(r) + phi.block(r - 1) @ c.d(r) for r in range(c.top_degree + 1)]
        cols.append(np.concatenate([m.bits.ravel() for m in defect]) if defect else np.zeros(0, np.uint8))
    op = np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.uint8)
    ker = nullspace(Gf2Matrix(op, shape=op.shape)) if n else np.zeros((0, 0), dtype=np.uint8)
    coeff = rng.integers(0, 2, size=ker.shape[1], dtype=np.uint8)
    vec = (ker.astype(np.int64) @ coeff % 2) if ker.size else np.zeros(n, dtype=np.int64)
    return GradedMap(c, cp, 0, _unflatten(vec, shapes))


def random_cell_over(rng, base: BCell) -> BCell:
    """A random cell one level up whose source is ``base``: payload X is
    random and the target is base + D(X)."""
    x = random_graded_map(rng, base.phi.domain, base.phi.codomain, base.level + 1)
    tphi = base.phi + differential(x)
    target = BCell(tphi) if base.level == 0 else BCell(tphi, base.source, base.target)
    return BCell(x, base, target)


def random_tower(rng, base: BCell, level: int) -> BCell:
    cell = base
    while cell.level < level:
        cell = random_cell_over(rng, cell)
    return cell


def random_zero_cell(rng, c: ChainComplex, cp: ChainComplex) -> BCell:
    return BCell(random_chain_map(rng, c, cp))


# ---------------------------------------------------------------------------
# random A-cells
# ---------------------------------------------------------------------------

_MONOMIALS = ("x", "y", "z", "x*y", "y*z")


class ACellFactory:
    """Seeded atomic cells between two fixed pairs on the unit sphere.

    A 0-cell is a push a(x); a 1-cell from a to b is the push
    (1-s1) a + s1 b + s1 (1-s1) w, and a 2-cell with source (a, b, w0) and
    target (a, b, w1) adds s2 (1-s2) v inside the bracket. These shapes make
    every degeneracy hold exactly.
    """

    def __init__(self, rng: np.random.Generator, alpha: Optional[MorseSmalePair] = None,
                 beta: Optional[MorseSmalePair] = None, cutoff: float = 1.0):
        self.rng = rng
        if alpha is None or beta is None:
            surface = Sphere()
            alpha = MorseSmalePair(surface, ScalarField(surface, "z"), prefix="a")
            beta = MorseSmalePair(surface, ScalarField(surface, "z - exp(-4*(1+z))*x^2"), prefix="b")
        self.alpha, self.beta, self.cutoff = alpha, beta, cutoff
        self._count = 0

    def poly(self) -> str:
        coeff = np.round(self.rng.uniform(-0.5, 0.5, size=len(_MONOMIALS)), 3)
        return " + ".join(f"({c:.3f})*({m})" for c, m in zip(coeff, _MONOMIALS))

    def _cell(self, push: str, level: int) -> ACell:
        self._count += 1
        h = Atomic(self.alpha, self.beta, push, level=level, cutoff=self.cutoff)
        return ACell(h, ("atomic",), f"c{self._count}")

    def zero(self, a: str) -> ACell:
        return self._cell(a, 0)

    def one(self, a: str, b: str, w: Optional[str] = None) -> ACell:
        w = w or self.poly()
        return self._cell(f"(1-s1)*({a}) + s1*({b}) + s1*(1-s1)*({w})", 1)

    def two(self, a: str, b: str, w0: str, w1: str, v: Optional[str] = None) -> ACell:
        v = v or self.poly()
        inner = f"(1-s2)*({w0}) + s2*({w1}) + s2*(1-s2)*({v})"
        return self._cell(f"(1-s1)*({a}) + s1*({b}) + s1*(1-s1)*({inner})", 2)

    def triple(self, level: int, p: int) -> tuple[ACell, ACell, ACell]:
        """(c3, c2, c1) with (c3, c2) and (c2, c1) glued along p."""
        if level == 1:
            x = [self.poly() for _ in range(4)]
            c1, c2, c3 = (self.one(x[i], x[i + 1]) for i in range(3))
        elif level == 2 and p == 1:
            a, b = self.poly(), self.poly()
            w = [self.poly() for _ in range(4)]
            c1, c2, c3 = (self.two(a, b, w[i], w[i + 1]) for i in range(3))
        elif level == 2 and p == 0:
            x = [self.poly() for _ in range(4)]
            c1, c2, c3 = (self.two(x[i], x[i + 1], self.poly(), self.poly()) for i in range(3))
        else:
            raise ValueError(f"no random triples for level {level}, p={p}")
        return c3, c2, c1

    def interchange(self) -> tuple[ACell, ACell, ACell, ACell]:
        """(D, C, B, A) at level 2 with (D,C), (B,A) glued along 1 and
        (D,B), (C,A) glued along 0."""
        x0, x1, x2 = (self.poly() for _ in range(3))
        y = [self.poly() for _ in range(3)]
        z = [self.poly() for _ in range(3)]
        a = self.two(x0, x1, y[0], y[1])
        b = self.two(x0, x1, y[1], y[2])
        c = self.two(x1, x2, z[0], z[1])
        d = self.two(x1, x2, z[1], z[2])
        return d, c, b, a


# ---------------------------------------------------------------------------
# the functor F
# ---------------------------------------------------------------------------

def smooth_step_inverse(y: float) -> float:
    y = float(y)
    if y <= 0.0 or y >= 1.0 or y == 0.5:
        return min(max(y, 0.0), 1.0)
    return brentq(lambda x: float(ramp(np.array([x]))[0]) - y, 0.0, 1.0, xtol=1e-15, rtol=1e-15)


def _rescale(point, column: int, half: int):
    pt = np.atleast_1d(np.asarray(point, dtype=float)).copy()
    pt[column] = (half + smooth_step_inverse(pt[column])) / 2.0
    return float(pt[0]) if pt.size == 1 else [float(v) for v in pt]


class Functor:
    """F: A -> B, memoized per cell.

    With ``path="provenance"`` composites are assembled from the loci of
    their pieces, rescaled into the halves of the glued parameter, and
    identities map to zero without any geometry. With ``path="scan"`` every
    cell is computed by scanning its own payload, whatever its history.
    """

    def __init__(self, tol: Tolerances = DEFAULT_TOLERANCES, path: str = "provenance"):
        if path not in ("provenance", "scan"):
            raise ValueError("path is 'provenance' or 'scan'")
        self.tol = tol
        self.path = path
        self._memo: dict[int, tuple] = {}
        self._loci: dict[int, tuple] = {}

    def __call__(self, cell: ACell) -> BCell:
        key = id(cell)
        if key not in self._memo:
            self._memo[key] = (cell, self._compute(cell))
        return self._memo[key][1]

    def _complexes(self, cell):
        return msw.build_msw(cell.payload.alpha, self.tol), msw.build_msw(cell.payload.beta, self.tol)

    def loci(self, cell: ACell) -> dict:
        """(p, c') -> sorted list of non-generic parameters, for the pairs
        of index gap equal to the level."""
        key = id(cell)
        if key not in self._loci:
            self._loci[key] = (cell, self._compute_loci(cell))
        return self._loci[key][1]

    def _compute_loci(self, cell: ACell) -> dict:
        ell = cell.level
        if ell == 0:
            return {}
        h = cell.payload
        pairs = [(p.id, q.id) for p in h.alpha.critical_points for q in h.beta.points_of_index(p.index + ell)]
        if self.path == "provenance" and cell.kind == "identity":
            return {k: [] for k in pairs}
        if self.path == "provenance" and cell.kind == "composite":
            _, p, c2, c1 = cell.provenance
            column = ell - 1 - p
            lo, hi = self.loci(c1), self.loci(c2)
            out = {}
            for k in pairs:
                pts = [_rescale(s, column, 0) for s in lo[k]] + [_rescale(s, column, 1) for s in hi[k]]
                out[k] = sorted(pts)
            return out
        if ell > 2:
            raise ValueError(f"geometric loci are available for levels 1 and 2, not {ell}")
        found: dict = {}
        msw.homotopy_entries(h, self.tol, found)
        return {k: sorted(found[k].roots) for k in pairs}

    def _compute(self, cell: ACell) -> BCell:
        ell = cell.level
        h = cell.payload
        if ell == 0:
            return BCell(msw.continuation_map(h, self.tol))
        source, target = self(cell.source), self(cell.target)
        c, cp = self._complexes(cell)
        if self.path == "provenance" and cell.kind == "identity":
            out = BCell(GradedMap.zero(c, cp, ell), source, target)
        elif self.path == "provenance" and cell.kind == "composite" and ell > 2:
            _, p, c2, c1 = cell.provenance
            out = compose_B(self(c2), self(c1), p)
        else:
            loci = self.loci(cell)
            blocks = [np.zeros((cp.dim(k + ell), c.dim(k)), dtype=np.uint8) for k in range(c.top_degree + 1)]
            for (pid, qid), pts in loci.items():
                k = next(j for j, b in enumerate(c.basis) if pid in b)
                blocks[k][cp.basis[k + ell].index(qid), c.basis[k].index(pid)] = len(pts) % 2
            out = BCell(GradedMap(c, cp, ell, blocks), source, target)
        rep = out.validate()
        if not rep.ok:
            raise msw.MSWError(f"functor image of a level-{ell} cell fails its relation: {rep.detail}")
        return out


def functor_F(cell: ACell, tol: Tolerances = DEFAULT_TOLERANCES, path: str = "provenance") -> BCell:
    return Functor(tol, path)(cell)


# ---------------------------------------------------------------------------
# axiom checks
# ---------------------------------------------------------------------------

AXIOMS = ("a", "b", "c", "d", "e", "f")


@dataclass
class AxiomTally:
    checked: int = 0
    passed: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, sample: int, detail: str = ""):
        self.checked += 1
        if ok:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append({"sample": sample, "detail": detail})

    def to_json(self) -> dict:
        return {"checked": self.checked, "passed": self.passed, "failures": self.failures}


def _b_sample(rng, i, tallies, compose, globular):
    top = int(rng.integers(1, 4))
    c, cp = random_complex(rng, 4, top), random_complex(rng, 4, top, prefix="f")
    ell = int(rng.integers(1, 4))
    p = int(rng.integers(0, ell))

    def tower(base=None, level=ell):
        return random_tower(rng, base if base is not None else random_zero_cell(rng, c, cp), level)

    def note(*cells):
        for cell in cells:
            globular.add(cell)

    # (a) sources and targets of composites
    b1 = tower()
    b2 = tower(b1.iterated(1, ell - p))
    comp = compose(b2, b1, p)
    if p == ell - 1:
        expect = (b1.source, b2.target)
    else:
        expect = (compose_B(b2.source, b1.source, p), compose_B(b2.target, b1.target, p))
    rep = comp.validate()
    ok = rep.ok and comp.source == expect[0] and comp.target == expect[1]
    tallies["a"].record(ok, i, rep.detail or "declared boundary differs from the composite rule")
    note(b1, b2, comp)
    # (b) sources and targets of identities
    x = tower(level=int(rng.integers(0, ell)))
    one = identity_B(x)
    tallies["b"].record(one.source == x and one.target == x and one.validate().ok, i)
    note(one)
    # (c) associativity
    b3 = tower(b2.iterated(1, ell - p))
    lhs, rhs = compose(compose(b3, b2, p), b1, p), compose(b3, compose(b2, b1, p), p)
    tallies["c"].record(lhs == rhs and lhs.validate().ok, i)
    note(b3, lhs, rhs)
    # (d) identities
    left = compose(identity_power(b1.iterated(1, ell - p), ell - p), b1, p)
    right = compose(b1, identity_power(b1.iterated(0, ell - p), ell - p), p)
    tallies["d"].record(left == b1 and right == b1, i)
    note(left, right)
    # (e) binary interchange, q < p' < l'
    le = max(ell, 2)
    pe = int(rng.integers(1, le))
    q = int(rng.integers(0, pe))
    a = tower(level=le)
    b = tower(a.iterated(1, le - pe), le)
    cc = tower(a.iterated(1, le - q), le)
    d = tower(cc.iterated(1, le - pe), le)
    lhs = compose(compose(d, cc, pe), compose(b, a, pe), q)
    rhs = compose(compose(d, b, q), compose(cc, a, q), pe)
    tallies["e"].record(lhs == rhs and lhs.validate().ok, i)
    note(lhs, rhs)
    # (f) nullary interchange
    lhs = compose(identity_B(b2), identity_B(b1), p)
    rhs = identity_B(compose_B(b2, b1, p))
    tallies["f"].record(lhs == rhs, i)
    note(lhs)


def _a_sample(factory, rng, i, tallies, compose, globular):
    ell = int(rng.integers(1, 3))
    p = int(rng.integers(0, ell))
    c3, c2, c1 = factory.triple(ell, p)

    def same(x, y):
        return x.same_as(y)

    # (a): declared boundaries of composites against facet evaluations
    comp = compose(c2, c1, p)
    gaps = comp.facet_gaps()
    tallies["a"].record(max(gaps) <= CELL_TOL, i, f"facet gaps {gaps[0]:.3e}, {gaps[1]:.3e}")
    globular.add(comp)
    # (b)
    one = identity_A(c1)
    gaps = one.facet_gaps()
    tallies["b"].record(max(gaps) <= CELL_TOL and same(one.source, c1) and same(one.target, c1), i)
    # (c) up to the witness T
    res = witness_assoc(c3, c2, c1, p).check()
    tallies["c"].record(res["ok"], i, f"endpoint gaps {res['gap_r0']:.3e}, {res['gap_r1']:.3e}")
    # (d) up to the witnesses T1 (left, right)
    for side in ("left", "right"):
        res = witness_identity_law(c1, p, side).check()
        tallies["d"].record(res["ok"], i, f"{side}: endpoint gaps {res['gap_r0']:.3e}, {res['gap_r1']:.3e}")
    # (e) exact on the spot grid
    d, c, b, a = factory.interchange()
    lhs = compose_A(compose_A(d, c, 1), compose_A(b, a, 1), 0)
    rhs = compose_A(compose_A(d, b, 0), compose_A(c, a, 0), 1)
    gap = lhs.gap(rhs)
    tallies["e"].record(gap <= CELL_TOL, i, f"gap {gap:.3e}")
    globular.add(lhs)
    # (f)
    lhs = compose_A(identity_A(c2), identity_A(c1), p)
    rhs = identity_A(compose_A(c2, c1, p))
    gap = lhs.gap(rhs)
    tallies["f"].record(gap <= CELL_TOL, i, f"gap {gap:.3e}")


def check_axioms(side: str, samples: int = 50, seed: int = 0, broken: bool = False) -> dict:
    """Seeded randomized check of axioms (a)-(f) on category A or B.

    B is checked bit-exactly. For A, (a), (b), (e), (f) are spot-grid
    equalities and (c), (d) are checked through the endpoints of the
    explicit witnesses. With ``broken`` every composite is replaced by a
    wrong one, which must make (a) fail.
    """
    rng = np.random.default_rng(seed)
    tallies = {k: AxiomTally() for k in AXIOMS}
    if side == "B":
        globular = GlobularSet()
        compose = broken_compose_B if broken else compose_B
        for i in range(samples):
            _b_sample(rng, i, tallies, compose, globular)
    elif side == "A":
        globular = GlobularSet(a_equal)
        compose = broken_compose_A if broken else compose_A
        factory = ACellFactory(rng)
        for i in range(samples):
            _a_sample(factory, rng, i, tallies, compose, globular)
    else:
        raise ValueError("side is 'A' or 'B'")
    glob = globular.check()
    report = {
        "side": side,
        "samples": samples,
        "seed": seed,
        "broken_composite": broken,
        "axioms": {k: t.to_json() for k, t in tallies.items()},
        "globular": glob.as_dict(),
        "cells_per_level": {str(k): v for k, v in globular.counts().items()},
    }
    report["ok"] = bool(glob.ok and all(t.passed == t.checked for t in tallies.values()))
    return report
