"""Algebra from geometry: Morse-Smale-Witten complexes, continuation maps,
chain homotopies and the level-2 higher homotopy, all over GF(2)."""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances, parallel_map
from .flow import BACKWARD, FORWARD, FlowError, continuation_column, separatrices, through_homotopy
from .geometry import MorseSmalePair
from .homotopy import Homotopy
from .moduli import scan_locus_2d, scan_nongeneric
from .z2algebra import ChainComplex, GradedMap, verify_chain_map, verify_homotopy

log = logging.getLogger(__name__)

__all__ = ["MorseSmalePair", "MSWError", "build_msw", "continuation_map", "chain_homotopy",
           "higher_homotopy", "homotopy_entries"]


class MSWError(RuntimeError):
    pass


def _basis(pair: MorseSmalePair):
    return [[p.id for p in pair.points_of_index(k)] for k in range(3)]


def build_msw(pair: MorseSmalePair, tol: Tolerances = DEFAULT_TOLERANCES,
              witnesses: Optional[dict] = None) -> ChainComplex:
    """Chain complex on the critical points; d counts flow lines mod 2.

    Every entry comes from separatrices of the saddles: unstable ones give
    d_1, stable ones (traced backward) give d_2. ``witnesses`` collects the
    separatrix trajectories per saddle when given.
    """
    key = ("msw", tol)
    if key in pair.cache and witnesses is None:
        return pair.cache[key]
    basis = _basis(pair)
    mins, saddles, maxs = basis
    d1 = np.zeros((len(mins), len(saddles)), dtype=np.uint8)
    d2 = np.zeros((len(saddles), len(maxs)), dtype=np.uint8)
    seps = parallel_map(lambda p: separatrices(pair, p, tol), pair.points_of_index(1))
    for j, (p, sp) in enumerate(zip(pair.points_of_index(1), seps)):
        for tr in sp["unstable"]:
            d1[mins.index(tr.end_label), j] ^= 1
        for tr in sp["stable"]:
            d2[j, maxs.index(tr.end_label)] ^= 1
        if witnesses is not None:
            witnesses[p.id] = sp
    try:
        cx = ChainComplex(basis, [d1, d2])
    except ValueError as exc:
        raise MSWError(f"pair not Morse-Smale at this tolerance: {exc}") from None
    pair.cache[key] = cx
    return cx


def continuation_map(h: Homotopy, tol: Tolerances = DEFAULT_TOLERANCES, s=(), check: bool = True) -> GradedMap:
    """The chain map U of a level-0 homotopy (or of a higher family frozen at
    parameters ``s``)."""
    if len(tuple(np.atleast_1d(s))) != h.level and h.level:
        raise ValueError("frozen parameters must match the family level")
    c, cp = build_msw(h.alpha, tol), build_msw(h.beta, tol)
    sv = np.asarray(s, dtype=float).reshape(1, h.level) if h.level else np.zeros((1, 0))
    blocks = [np.zeros((cp.dim(k), c.dim(k)), dtype=np.uint8) for k in range(3)]
    # index 0: minima of f^a forward through the homotopy
    mins = h.alpha.points_of_index(0)
    if mins:
        labels, _, _ = through_homotopy(h, np.repeat(sv, len(mins), 0), [p.chart_id for p in mins],
                                        np.array([p.u for p in mins]), FORWARD, tol)
        for j, lab in enumerate(labels):
            _require_label(lab, mins[j].id, cp.basis[0])
            blocks[0][cp.basis[0].index(lab), j] = 1
    # index 2: maxima of f^b backward through the homotopy
    maxs = h.beta.points_of_index(2)
    if maxs:
        labels, _, _ = through_homotopy(h, np.repeat(sv, len(maxs), 0), [q.chart_id for q in maxs],
                                        np.array([q.u for q in maxs]), BACKWARD, tol)
        for i, lab in enumerate(labels):
            _require_label(lab, maxs[i].id, c.basis[2])
            blocks[2][i, c.basis[2].index(lab)] = 1
    # index 1: transported unstable arcs against stable curves
    cols = parallel_map(lambda p: continuation_column(h, p, tol, s), h.alpha.points_of_index(1))
    for j, col in enumerate(cols):
        for qid, n in col.items():
            blocks[1][cp.basis[1].index(qid), j] = n % 2
    u = GradedMap(c, cp, 0, blocks)
    if check:
        rep = verify_chain_map(u)
        if not rep.ok:
            raise MSWError(f"homotopy not generic/regular at this tolerance: {rep.detail}")
    return u


def _require_label(lab, start, allowed):
    if lab == "escaped":
        raise FlowError(f"continuation trajectory from {start} escaped; re-tolerance the scenario")
    if lab not in allowed:
        # settling on a critical point of the wrong index is a flow line of
        # negative expected dimension: the family is not generic
        raise MSWError(f"continuation trajectory from {start} ends at {lab}; the homotopy is not generic")


def homotopy_entries(h: Homotopy, tol: Tolerances = DEFAULT_TOLERANCES, loci: Optional[dict] = None) -> GradedMap:
    """phi_[l] of a level-1 or level-2 family: for every p of f^a and c' of
    f^b with ind c' = ind p + l, the parity of the non-generic locus."""
    c, cp = build_msw(h.alpha, tol), build_msw(h.beta, tol)
    ell = h.level
    blocks = [np.zeros((cp.dim(k + ell), c.dim(k)), dtype=np.uint8) for k in range(3)]
    jobs = [(p, q) for p in h.alpha.critical_points for q in h.beta.points_of_index(p.index + ell)]

    def run(job):
        p, q = job
        return scan_nongeneric(h, p, q, tol) if ell == 1 else scan_locus_2d(h, p, q, tol)

    for (p, q), locus in zip(jobs, parallel_map(run, jobs)):
        if loci is not None:
            loci[(p.id, q.id)] = locus
        k = p.index
        blocks[k][cp.basis[k + ell].index(q.id), c.basis[k].index(p.id)] = locus.parity
    return GradedMap(c, cp, ell, blocks)


def chain_homotopy(h: Homotopy, tol: Tolerances = DEFAULT_TOLERANCES, loci: Optional[dict] = None):
    """(U0, U1, E) for a level-1 family, with U1 + U0 = d'E + Ed verified."""
    if h.level != 1:
        raise ValueError("chain_homotopy takes a level-1 family")
    u0 = continuation_map(h.facet(0.0), tol)
    u1 = continuation_map(h.facet(1.0), tol)
    e = homotopy_entries(h, tol, loci)
    e = GradedMap(e.domain, e.codomain, 1, e.blocks, source_cell=u0, target_cell=u1)
    rep = verify_homotopy(e, u0, u1)
    if not rep.ok:
        r, row, col = rep.location
        raise MSWError(f"homotopy relation fails at entry {e.domain.basis[r][col]} -> "
                       f"{e.codomain.basis[r][row]}: {rep.detail}")
    return u0, u1, e


def higher_homotopy(h: Homotopy, tol: Tolerances = DEFAULT_TOLERANCES, loci: Optional[dict] = None,
                    check: bool = True) -> GradedMap:
    """phi_[l] for l in {1, 2}; the level-2 result is checked against the
    chain homotopies of its two leading facets."""
    if h.level == 1:
        return chain_homotopy(h, tol, loci)[2]
    if h.level != 2:
        raise ValueError(f"higher homotopies from geometry are available for levels 1 and 2, not {h.level}")
    phi = homotopy_entries(h, tol, loci)
    if check:
        e0 = chain_homotopy(h.facet(0.0), tol)[2]
        e1 = chain_homotopy(h.facet(1.0), tol)[2]
        phi = GradedMap(phi.domain, phi.codomain, 2, phi.blocks, source_cell=e0, target_cell=e1)
        rep = verify_homotopy(phi, e0, e1)
        if not rep.ok:
            raise MSWError(f"level-2 facet relation fails: {rep.detail}")
    return phi
