"""Numerical tolerances shared by every module.

All thresholds live in one record so acceptance runs can tighten them in a
single place (``Tolerances.scaled``).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # critical points
    grad_tol: float = 1e-10
    nondegen_tol: float = 1e-6
    dedup_tol: float = 1e-6
    # integrator
    rtol: float = 1e-9
    atol: float = 1e-11
    settle_tol: float = 1e-8
    t_max: float = 200.0
    # separatrices and crossings
    sep_eps: float = 1e-5
    cross_tol: float = 1e-7
    root_tol: float = 1e-10
    locus_sep: float = 1e-4
    # parameter sweeps
    scan_grid: int = 256
    arc_samples: int = 160
    # homotopy cutoff and settle margin
    cutoff: float = 1.0
    settle_margin: float = 50.0

    # entries that are not tolerances and must not be scaled
    _UNSCALED = ("t_max", "scan_grid", "arc_samples", "cutoff", "settle_margin",
                 "nondegen_tol", "dedup_tol", "sep_eps", "locus_sep")

    def scaled(self, factor: float) -> "Tolerances":
        """Multiply every error tolerance by ``factor`` (``--tol-scale``)."""
        if factor <= 0:
            raise ValueError("tolerance scale must be positive")
        changes = {}
        for f in fields(self):
            if f.name in self._UNSCALED:
                continue
            changes[f.name] = getattr(self, f.name) * factor
        return replace(self, **changes)

    def with_overrides(self, overrides: dict) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        cast = {k: type(getattr(self, k))(v) for k, v in overrides.items()}
        return replace(self, **cast)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def thread_cap() -> int:
    """Upper bound on worker threads, from ``MORSE_TOWER_THREADS``."""
    raw = os.environ.get("MORSE_TOWER_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"MORSE_TOWER_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]`` on up to ``thread_cap()`` threads; results
    keep the input order, so merges stay deterministic."""
    items = list(items)
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
