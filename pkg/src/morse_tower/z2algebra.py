"""Exact linear algebra over GF(2).

Matrices are immutable wrappers around ``uint8`` arrays. Chain complexes
store one boundary matrix per degree, including the zero map out of degree
0, so empty degrees are 0-dimensional spaces rather than missing entries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class Gf2Matrix:
    """A rows x cols matrix with entries in GF(2)."""

    __slots__ = ("_bits",)

    def __init__(self, entries, shape: Optional[tuple[int, int]] = None):
        if isinstance(entries, Gf2Matrix):
            bits = entries._bits
        else:
            arr = np.asarray(entries)
            if arr.size == 0:
                if shape is None:
                    shape = arr.shape if arr.ndim == 2 else (0, 0)
                bits = np.zeros(shape, dtype=np.uint8)
            else:
                if arr.ndim != 2:
                    raise ValueError(f"expected a 2-d bit table, got shape {arr.shape}")
                if np.issubdtype(arr.dtype, np.floating):
                    raise TypeError("GF(2) entries must be integers or booleans")
                bits = (arr.astype(np.int64) % 2).astype(np.uint8)
        if shape is not None and bits.shape != tuple(shape):
            raise ValueError(f"entries have shape {bits.shape}, expected {tuple(shape)}")
        bits = bits.copy()
        bits.setflags(write=False)
        self._bits = bits

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(np.eye(n, dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def rows(self) -> int:
        return self._bits.shape[0]

    @property
    def cols(self) -> int:
        return self._bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._bits.shape

    def __add__(self, other: "Gf2Matrix") -> "Gf2Matrix":
        if self.shape != other.shape:
            raise ValueError(f"cannot add {self.shape} and {other.shape} matrices")
        return Gf2Matrix(self._bits ^ other._bits)

    __sub__ = __add__

    def __matmul__(self, other: "Gf2Matrix") -> "Gf2Matrix":
        return mat_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Gf2Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self.shape, self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self._bits.tolist()!r}, shape={self.shape})"

    def is_zero(self) -> bool:
        return not self._bits.any()

    def transpose(self) -> "Gf2Matrix":
        return Gf2Matrix(self._bits.T)

    def flip(self, row: int, col: int) -> "Gf2Matrix":
        bits = self._bits.copy()
        bits[row, col] ^= 1
        return Gf2Matrix(bits)

    def tolist(self) -> list[list[int]]:
        return self._bits.astype(int).tolist()

    def rank(self) -> int:
        return len(rref(self)[1])


def mat_mul(a: Gf2Matrix, b: Gf2Matrix) -> Gf2Matrix:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    prod = a.bits.astype(np.int64) @ b.bits.astype(np.int64)
    return Gf2Matrix((prod % 2).astype(np.uint8), shape=(a.rows, b.cols))


def rref(m: Gf2Matrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    mat = m.bits.copy()
    rows, cols = mat.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(mat[r:, c])[0]
        if hits.size == 0:
            continue
        pivot = r + hits[0]
        if pivot != r:
            mat[[r, pivot]] = mat[[pivot, r]]
        others = np.nonzero(mat[:, c])[0]
        for o in others:
            if o != r:
                mat[o] ^= mat[r]
        pivots.append(c)
        r += 1
    return mat, pivots


def rank(m: Gf2Matrix) -> int:
    return len(rref(m)[1])


def nullspace(m: Gf2Matrix) -> np.ndarray:
    """Basis of ker m as columns of a (cols x k) uint8 array.

    One basis vector per free column of the RREF, with a 1 in that free
    position; the ordering follows the free columns left to right.
    """
    reduced, pivots = rref(m)
    n = m.cols
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((n, len(free)), dtype=np.uint8)
    for j, fc in enumerate(free):
        basis[fc, j] = 1
        for i, pc in enumerate(pivots):
            basis[pc, j] = reduced[i, fc]
    return basis


def column_space(m: Gf2Matrix) -> np.ndarray:
    """Columns of m at the pivot positions of its RREF (a basis of im m)."""
    _, pivots = rref(m)
    return m.bits[:, pivots].copy()


def solve(a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    """One solution x of a x = b over GF(2), or None if inconsistent."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1)
    if a.ndim != 2:
        a = a.reshape(b.shape[0], -1)
    aug = np.hstack([a, b])
    reduced, pivots = rref(Gf2Matrix(aug, shape=aug.shape))
    n = a.shape[1]
    if n in pivots:
        return None
    x = np.zeros(n, dtype=np.uint8)
    for i, pc in enumerate(pivots):
        x[pc] = reduced[i, n]
    return x


def brute_force_rank(m: Gf2Matrix) -> int:
    """Rank by enumerating every combination of rows (small matrices only)."""
    rows = [int("".join(map(str, r)), 2) if m.cols else 0 for r in m.tolist()]
    span = {0}
    for r in rows:
        span |= {v ^ r for v in span}
    return len(span).bit_length() - 1


@dataclass(frozen=True)
class Report:
    """Outcome of a verification: ``ok`` plus the first failure, if any."""

    ok: bool
    check: str
    detail: str = ""
    location: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        return {"check": self.check, "ok": self.ok, "detail": self.detail,
                "location": list(self.location) if self.location is not None else None}


class ChainComplex:
    """Graded GF(2) vector spaces C_0..C_n with boundary maps.

    ``boundary[k]`` is the matrix of d_k: C_k -> C_{k-1}; ``boundary[0]`` is
    the 0 x |C_0| zero map. Construction rejects d^2 != 0 unless
    ``check=False`` (used only to build counterexamples).
    """

    def __init__(self, basis: Sequence[Sequence[str]], boundary: Sequence, *, check: bool = True):
        self.basis = tuple(tuple(str(x) for x in b) for b in basis)
        if not self.basis:
            raise ValueError("a chain complex needs at least degree 0")
        self.top_degree = len(self.basis) - 1
        dims = self.dims
        if len(boundary) == self.top_degree:
            boundary = [Gf2Matrix.zeros(0, dims[0])] + list(boundary)
        if len(boundary) != self.top_degree + 1:
            raise ValueError("need one boundary matrix per degree")
        mats = []
        for k, d in enumerate(boundary):
            expect = (dims[k - 1] if k > 0 else 0, dims[k])
            mats.append(Gf2Matrix(d, shape=expect))
        self.boundary = tuple(mats)
        if check:
            rep = check_boundary_square(self)
            if not rep.ok:
                raise ValueError(f"boundary does not square to zero: {rep.detail}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.basis)

    def dim(self, k: int) -> int:
        return len(self.basis[k]) if 0 <= k <= self.top_degree else 0

    def d(self, k: int) -> Gf2Matrix:
        """d_k : C_k -> C_{k-1}, zero-sized outside 0..n+1."""
        if 0 <= k <= self.top_degree:
            return self.boundary[k]
        return Gf2Matrix.zeros(self.dim(k - 1), self.dim(k))

    def permuted(self, degree: int, perm: Sequence[int]) -> "ChainComplex":
        """Same complex with the basis of ``degree`` reordered by ``perm``."""
        perm = list(perm)
        basis = [list(b) for b in self.basis]
        basis[degree] = [basis[degree][i] for i in perm]
        mats = [m.bits.copy() for m in self.boundary]
        mats[degree] = mats[degree][:, perm]
        if degree + 1 <= self.top_degree:
            mats[degree + 1] = mats[degree + 1][perm, :]
        return ChainComplex(basis, [Gf2Matrix(m, shape=m.shape) for m in mats])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChainComplex):
            return NotImplemented
        return self.basis == other.basis and self.boundary == other.boundary

    def __hash__(self) -> int:
        return hash((self.basis, self.boundary))

    def __repr__(self) -> str:
        return f"ChainComplex(dims={self.dims})"

    def to_json(self) -> dict:
        return {
            "top_degree": self.top_degree,
            "basis": [list(b) for b in self.basis],
            "boundary": [m.tolist() for m in self.boundary],
        }

    @classmethod
    def from_json(cls, obj) -> "ChainComplex":
        if isinstance(obj, str):
            obj = json.loads(obj)
        basis = obj["basis"]
        if obj["top_degree"] != len(basis) - 1:
            raise ValueError("top_degree disagrees with basis length")
        mats = []
        for k, rows in enumerate(obj["boundary"]):
            shape = (len(basis[k - 1]) if k > 0 else 0, len(basis[k]))
            for row in rows:
                if any(v not in (0, 1) for v in row):
                    raise ValueError("boundary entries must be bits")
            mats.append(Gf2Matrix(np.array(rows, dtype=np.uint8).reshape(shape), shape=shape))
        return cls(basis, mats)


def zero_complex(dims: Sequence[int], prefix: str = "e") -> ChainComplex:
    basis = [[f"{prefix}{k}.{i}" for i in range(n)] for k, n in enumerate(dims)]
    mats = [Gf2Matrix.zeros(dims[k - 1] if k else 0, dims[k]) for k in range(len(dims))]
    return ChainComplex(basis, mats)


def check_boundary_square(c: ChainComplex) -> Report:
    for k in range(2, c.top_degree + 1):
        sq = mat_mul(c.boundary[k - 1], c.boundary[k])
        if not sq.is_zero():
            row, col = map(int, np.argwhere(sq.bits)[0])
            return Report(False, "boundary_square", f"d_{k - 1} d_{k} != 0 at ({row}, {col})", (k, row, col))
    return Report(True, "boundary_square")


def homology_ranks(c: ChainComplex) -> list[int]:
    rep = check_boundary_square(c)
    if not rep.ok:
        raise ValueError(f"homology of a non-complex: {rep.detail}")
    ranks = [rank(c.d(k)) for k in range(c.top_degree + 2)]
    return [c.dim(k) - ranks[k] - ranks[k + 1] for k in range(c.top_degree + 1)]


class GradedMap:
    """Degree-raising map phi_r : C_r -> C'_{r+shift}, one block per r.

    Blocks whose codomain degree is empty are 0-row matrices. For a chain
    homotopy the optional ``source_cell``/``target_cell`` record the two maps
    it interpolates.
    """

    def __init__(self, domain: ChainComplex, codomain: ChainComplex, shift: int,
                 blocks: Optional[Sequence] = None, *, source_cell=None, target_cell=None):
        if shift < 0:
            raise ValueError("shift must be non-negative")
        self.domain = domain
        self.codomain = codomain
        self.shift = shift
        mats = []
        for r in range(domain.top_degree + 1):
            shape = (codomain.dim(r + shift), domain.dim(r))
            if blocks is None:
                mats.append(Gf2Matrix.zeros(*shape))
            else:
                mats.append(Gf2Matrix(blocks[r], shape=shape))
        self.blocks = tuple(mats)
        self.source_cell = source_cell
        self.target_cell = target_cell

    @classmethod
    def identity(cls, c: ChainComplex) -> "GradedMap":
        return cls(c, c, 0, [Gf2Matrix.identity(n) for n in c.dims])

    @classmethod
    def zero(cls, domain, codomain, shift) -> "GradedMap":
        return cls(domain, codomain, shift)

    def block(self, r: int) -> Gf2Matrix:
        if 0 <= r <= self.domain.top_degree:
            return self.blocks[r]
        return Gf2Matrix.zeros(self.codomain.dim(r + self.shift), self.domain.dim(r))

    def _compatible(self, other: "GradedMap") -> None:
        if (self.shift != other.shift or self.domain != other.domain
                or self.codomain != other.codomain):
            raise ValueError("graded maps live between different complexes or shifts")

    def __add__(self, other: "GradedMap") -> "GradedMap":
        self._compatible(other)
        return GradedMap(self.domain, self.codomain, self.shift,
                         [a + b for a, b in zip(self.blocks, other.blocks)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedMap):
            return NotImplemented
        return (self.shift == other.shift and self.domain == other.domain
                and self.codomain == other.codomain and self.blocks == other.blocks)

    def __hash__(self) -> int:
        return hash((self.shift, self.blocks))

    def __repr__(self) -> str:
        return f"GradedMap(shift={self.shift}, blocks={[b.tolist() for b in self.blocks]})"

    def is_zero(self) -> bool:
        return all(b.is_zero() for b in self.blocks)

    def with_bit_flipped(self, r: int, row: int, col: int) -> "GradedMap":
        blocks = list(self.blocks)
        blocks[r] = blocks[r].flip(row, col)
        return GradedMap(self.domain, self.codomain, self.shift, blocks)

    def to_json(self) -> dict:
        return {"shift": self.shift, "blocks": [b.tolist() for b in self.blocks],
                "domain_basis": [list(b) for b in self.domain.basis],
                "codomain_basis": [list(b) for b in self.codomain.basis]}


def _homotopy_defect(phi: GradedMap, r: int) -> Gf2Matrix:
    """(d' phi + phi d)_r : C_r -> C'_{r+shift-1}."""
    c, cp, ell = phi.domain, phi.codomain, phi.shift
    left = mat_mul(cp.d(r + ell), phi.block(r))
    right = mat_mul(phi.block(r - 1), c.d(r))
    return left + right


def verify_chain_map(phi: GradedMap, c: Optional[ChainComplex] = None,
                     cp: Optional[ChainComplex] = None) -> Report:
    if phi.shift != 0:
        raise ValueError("a chain map has shift 0")
    if (c is not None and c != phi.domain) or (cp is not None and cp != phi.codomain):
        raise ValueError("chain map does not live between the given complexes")
    for r in range(phi.domain.top_degree + 1):
        bad = _homotopy_defect(phi, r)
        if not bad.is_zero():
            row, col = map(int, np.argwhere(bad.bits)[0])
            return Report(False, "chain_map", f"d' phi != phi d in degree {r} at ({row}, {col})", (r, row, col))
    return Report(True, "chain_map")


def verify_homotopy(phi_l: GradedMap, phi0: GradedMap, phi1: GradedMap) -> Report:
    """phi1 + phi0 == d' phi_l + phi_l d in every degree.

    Over GF(2) the sign (-1)^(l+1) in front of phi_l d is 1, so the relation
    for odd and even l is the same bit identity.
    """
    if phi0.shift != phi1.shift or phi_l.shift != phi0.shift + 1:
        raise ValueError("homotopy shift must exceed its endpoints' shift by one")
    phi0._compatible(phi1)
    if phi_l.domain != phi0.domain or phi_l.codomain != phi0.codomain:
        raise ValueError("homotopy and endpoints live between different complexes")
    for r in range(phi_l.domain.top_degree + 1):
        lhs = phi1.block(r) + phi0.block(r)
        rhs = _homotopy_defect(phi_l, r)
        if lhs != rhs:
            row, col = map(int, np.argwhere((lhs + rhs).bits)[0])
            return Report(False, "homotopy", f"relation fails in degree {r} at ({row}, {col})", (r, row, col))
    return Report(True, "homotopy")


@dataclass(frozen=True)
class HomologyBasis:
    """Cycle representatives for H_k, plus a basis of the boundaries B_k."""

    boundaries: np.ndarray
    cycles: np.ndarray

    @property
    def rank(self) -> int:
        return self.cycles.shape[1]


def homology_basis(c: ChainComplex, k: int) -> HomologyBasis:
    """Deterministic homology basis in degree k.

    Boundaries come from the pivot columns of d_{k+1}; kernel vectors of d_k
    (free-column basis of the RREF) are added left to right whenever they
    enlarge the span.
    """
    n = c.dim(k)
    if n == 0:
        empty = np.zeros((0, 0), dtype=np.uint8)
        return HomologyBasis(empty, empty)
    bounds = column_space(c.d(k + 1)).reshape(n, -1)
    kernel = nullspace(c.d(k)).reshape(n, -1)
    span = bounds.copy()
    chosen = []
    cur_rank = rank(Gf2Matrix(span, shape=span.shape)) if span.size else 0
    for j in range(kernel.shape[1]):
        trial = np.hstack([span, kernel[:, j:j + 1]])
        r = rank(Gf2Matrix(trial, shape=trial.shape))
        if r > cur_rank:
            span, cur_rank = trial, r
            chosen.append(kernel[:, j])
    cycles = np.array(chosen, dtype=np.uint8).T.reshape(n, len(chosen))
    return HomologyBasis(bounds, cycles)


@dataclass
class InducedMap:
    blocks: list = field(default_factory=list)
    iso: bool = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, InducedMap):
            return NotImplemented
        return self.blocks == other.blocks

    def to_json(self) -> dict:
        return {"blocks": [b.tolist() for b in self.blocks], "iso": self.iso}


def induced_homology_map(phi: GradedMap) -> InducedMap:
    rep = verify_chain_map(phi)
    if not rep.ok:
        raise ValueError(f"not a chain map: {rep.detail}")
    c, cp = phi.domain, phi.codomain
    blocks = []
    iso = True
    for k in range(max(c.top_degree, cp.top_degree) + 1):
        src = homology_basis(c, k) if k <= c.top_degree else None
        dst = homology_basis(cp, k) if k <= cp.top_degree else None
        n_src = src.rank if src else 0
        n_dst = dst.rank if dst else 0
        mat = np.zeros((n_dst, n_src), dtype=np.uint8)
        if n_src and n_dst:
            system = np.hstack([dst.boundaries, dst.cycles])
            nb = dst.boundaries.shape[1]
            image = (phi.block(k).bits.astype(np.int64) @ src.cycles.astype(np.int64)) % 2
            for j in range(n_src):
                x = solve(system, image[:, j])
                if x is None:
                    raise ValueError("image of a cycle is not a cycle")
                mat[:, j] = x[nb:]
        block = Gf2Matrix(mat, shape=(n_dst, n_src))
        blocks.append(block)
        if n_src != n_dst or rank(block) != n_src:
            iso = False
    return InducedMap(blocks, iso)
