"""Batched Dormand-Prince 5(4) integrator for vector fields on charted surfaces.

Every point in a batch carries its own time and step size, so a batch of
trajectories with different stopping times advances together. After each
accepted step the surface renormalizes the point (periodic wrap, chart
switch), which is why a generic ODE solver is not used here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# quartic dense output (Shampine): u(t + th*h) = u + h * (K^T P) [th, th^2, th^3, th^4]
_P = np.array([
    [1.0, -2.8535800653862835, 3.0717434641059005, -1.1270175653862835],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 4.023133379230305, -6.249321565289, 2.675424484351598],
    [0.0, -3.7324019615885042, 10.068970589843675, -5.685526961588504],
    [0.0, 2.5548038301849423, -6.399112377351017, 3.5219323679207912],
    [0.0, -1.3744241142186024, 3.272657752246729, -1.7672812570757455],
    [0.0, 1.3824689317781436, -3.764937863556287, 2.382468931778144],
])

# rhs(t, charts, u, idx) -> du/dt, where idx are the batch indices of the rows
VectorField = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class BatchResult:
    t: np.ndarray
    charts: np.ndarray
    u: np.ndarray
    status: np.ndarray  # 0 reached t_end, 1 stop condition met, 2 hit t_max, 3 step-size underflow
    steps: np.ndarray
    samples: Optional[list] = None  # per point: list of (t, chart, u1, u2)

    REACHED, STOPPED, TIMEOUT, FAILED = 0, 1, 2, 3


def integrate_batch(rhs: VectorField, surface, charts, u, t0, t_end=None, *,
                    stop: Optional[Callable] = None, t_max: float = 200.0,
                    rtol: float = 1e-9, atol: float = 1e-11, h0: float = 1e-3,
                    record: bool = False, sample_dt: float = 0.02, sample_du: float = 1e-3, max_step: float = np.inf,
                    max_steps: int = 200000) -> BatchResult:
    """Advance every point from ``t0`` until ``t_end``, ``stop`` or ``t_max``.

    ``t0`` and ``t_end`` may be scalars or per-point arrays; ``t_end=None``
    means run until the stop condition fires. ``t_max`` bounds elapsed time.
    ``stop(t, charts, u, idx)`` returns a boolean mask and is evaluated after
    every accepted step. ``max_step`` caps the step. With ``record`` every
    trajectory keeps its samples, with dense output filling each step so
    that consecutive samples are at most ``sample_dt`` apart in time and
    ``sample_du`` apart in each chart coordinate.
    """
    charts = np.array(charts, dtype=int).reshape(-1)
    u = np.array(u, dtype=float).reshape(-1, 2)
    n = len(u)
    t = np.broadcast_to(np.asarray(t0, dtype=float), (n,)).copy()
    start = t.copy()
    end = np.full(n, np.inf) if t_end is None else np.broadcast_to(np.asarray(t_end, float), (n,)).copy()
    end = np.minimum(end, start + t_max)
    h = np.full(n, h0)
    status = np.full(n, -1)
    steps = np.zeros(n, dtype=int)
    samples = [[(float(t[i]), int(charts[i]), float(u[i, 0]), float(u[i, 1]))] for i in range(n)] if record else None

    done = end <= t
    status[done & (end < start + t_max)] = BatchResult.REACHED
    status[done & ~(end < start + t_max)] = BatchResult.TIMEOUT
    if stop is not None and (~done).any():
        idx = np.nonzero(~done)[0]
        hit = stop(t[idx], charts[idx], u[idx], idx)
        status[idx[hit]] = BatchResult.STOPPED
        done[idx[hit]] = True

    for _ in range(max_steps):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        ti, ci, ui = t[idx], charts[idx], u[idx]
        hi = np.minimum(np.minimum(h[idx], max_step), end[idx] - ti)
        k = np.empty((7, idx.size, 2))
        k[0] = rhs(ti, ci, ui, idx)
        for s in range(1, 7):
            incr = sum(_A[s][j] * k[j] for j in range(s) if _A[s][j] != 0.0)
            k[s] = rhs(ti + _C[s] * hi, ci, ui + hi[:, None] * incr, idx)
        unew = ui + hi[:, None] * np.tensordot(_B5, k, axes=1)
        err = hi[:, None] * np.tensordot(_E, k, axes=1)
        scale = atol + rtol * np.maximum(np.abs(ui), np.abs(unew))
        en = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        finite = np.all(np.isfinite(unew), axis=1) & np.isfinite(en)
        en = np.where(finite, en, np.inf)
        accept = en <= 1.0
        with np.errstate(divide="ignore"):
            factor = np.where(en == 0, 5.0, 0.9 * en ** -0.2)
        factor = np.clip(factor, 0.2, 5.0)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))
        h[idx] = hi * factor
        acc = idx[accept]
        if acc.size:
            t[acc] = ti[accept] + hi[accept]
            cn, un = surface.normalize(ci[accept], unew[accept])
            charts[acc], u[acc] = cn, un
            steps[acc] += 1
            if record:
                ha = hi[accept]
                q = np.einsum("snk,sm->nkm", k[:, accept], _P)  # (n, 2, 4)
                move = np.abs(unew[accept] - ui[accept]).max(axis=1)
                sub = np.maximum(1, np.ceil(np.maximum(np.abs(ha) / sample_dt, move / sample_du)).astype(int))
                for j, i in enumerate(acc):
                    for m in range(1, sub[j]):
                        th = m / sub[j]
                        du = ha[j] * q[j] @ np.array([th, th ** 2, th ** 3, th ** 4])
                        # dense points stay in the step's chart; normalize for storage
                        cc, uu = surface.normalize(ci[accept][j:j + 1], (ui[accept][j] + du)[None])
                        samples[i].append((float(ti[accept][j] + th * ha[j]), int(cc[0]), float(uu[0, 0]), float(uu[0, 1])))
                    samples[i].append((float(t[i]), int(cn[j]), float(un[j, 0]), float(un[j, 1])))
            reached = t[acc] >= end[acc] - 1e-14 * np.maximum(1.0, np.abs(end[acc]))
            timeout = reached & (end[acc] >= start[acc] + t_max)
            status[acc[reached & ~timeout]] = BatchResult.REACHED
            status[acc[timeout]] = BatchResult.TIMEOUT
            done[acc[reached]] = True
            live = acc[~reached]
            if stop is not None and live.size:
                hit = stop(t[live], charts[live], u[live], live)
                status[live[hit]] = BatchResult.STOPPED
                done[live[hit]] = True
        tiny = idx[h[idx] < 1e-14 * np.maximum(1.0, np.abs(t[idx]))]
        status[tiny] = BatchResult.FAILED
        done[tiny] = True
    status[status < 0] = BatchResult.FAILED
    return BatchResult(t=t, charts=charts, u=u, status=status, steps=steps, samples=samples)
