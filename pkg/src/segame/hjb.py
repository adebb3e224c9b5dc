"""Backward-in-time Hamilton-Jacobi-Bellman solver for the evader's value.

The value u(x, t) is the least observability cost to go from x at time t to
the target by the deadline, moving at speed at most f while staying in free
space.  It solves

    u_t - f(x) |grad u| + K(x, t) = 0,      u(x_T, t) = 0 for t <= T,
    u(x, T) = +inf elsewhere,

integrated backward from t = T with an explicit first-order scheme on a
9-point stencil split into 8 one-cell simplices.  Per simplex the scheme
uses the two-sided discrete gradient when its characteristic points into the
simplex, and a one-sided semi-Lagrangian bound otherwise; the node takes the
smallest of the 8 candidates.  Monotonicity requires dt <= h / max(f); the
solver additionally demands dt == h / max(f), because for dt strictly below
h / max(f) the reachability front advances less than one cell per step and
first-touch values are left to relax geometrically at rate (1 - f dt / h)
per step -- a trailing band of part-sentinel garbage.  At equality the top
speed front is exact; where a spatially varying speed field dips below
max(f) that band still appears locally and washes out once the slack of the
horizon exceeds the lag.

Unreachable states carry the finite sentinel INF_CAP rather than IEEE
infinity so that sentinel arithmetic stays NaN-free.  After each step,
values above INF_SNAP collapse back to INF_CAP.  Sentinel leakage through
the one-sided branch leaves a plateau of large values (between roughly
0.3 * INF_CAP and INF_SNAP) spreading ahead of the reachable front; it is
overwritten as the true front arrives, and every genuinely attainable cost
stays many orders of magnitude below REACH_LIMIT.  Callers should treat any
value >= REACH_LIMIT as "cannot reach the target".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit

from .scenario import CFL_FUZZ, FRONT_FUZZ, Grid2D, Scenario, TimeGrid, bilinear
from .observability import KSource

INF_CAP = 1.0e9      # finite stand-in for +inf (exact in float32)
# Post-step values above INF_SNAP collapse to INF_CAP.  Keep the threshold
# close to INF_CAP: snapping must only catch values that never left the
# sentinel (c + dt K and friends), not the partially relaxed ones a locally
# slow speed field produces, or slow regions freeze as permanently
# unreachable.
INF_SNAP = 9.5e8
REACH_LIMIT = 1.0e6  # values at or above this mean the target is out of reach

_SQRT2 = np.sqrt(2.0)

# The 8 simplices of the 9-point stencil, counterclockwise from +x.
# Each row: (axis neighbor di, dj, diagonal neighbor di, dj).  In the local
# frame of a simplex, U_1 is the directional difference toward the axis
# neighbor and U_2 the difference from the axis neighbor to the diagonal one;
# the two-sided gradient is admissible when U_1 <= U_2 <= 0.
SIMPLEX_TABLE = np.array(
    [
        (1, 0, 1, 1),
        (0, 1, 1, 1),
        (0, 1, -1, 1),
        (-1, 0, -1, 1),
        (-1, 0, -1, -1),
        (0, -1, -1, -1),
        (0, -1, 1, -1),
        (1, 0, 1, -1),
    ],
    dtype=np.int64,
)


def simplex_update(
    u_center: float,
    v_axis: float,
    v_diag: float,
    f: float,
    K: float,
    dt: float,
    h: float,
) -> float:
    """Candidate update of one node from one simplex (scalar reference).

    v_axis sits at distance h, v_diag at h * sqrt(2).  Returns
    u_center - dt * f * D + dt * K where D is the two-sided gradient norm
    when the upwinding condition holds and the one-sided bound otherwise
    (which includes the option of not moving, D = 0).
    """
    u1 = (v_axis - u_center) / h
    u2 = (v_diag - v_axis) / h
    if u1 <= u2 <= 0.0:
        d = np.hypot(u1, u2)
    else:
        d = max((u_center - v_axis) / h, (u_center - v_diag) / (h * _SQRT2), 0.0)
    return u_center - dt * f * d + dt * K


@njit(cache=True)
def _step_kernel(u, dt_k, dt_f, in_dom, inv_h, clamp, big, snap, out):  # pragma: no cover - jit
    n1 = u.shape[0]
    inv_hd = inv_h / _SQRT2
    for i in range(n1):
        for j in range(n1):
            if not in_dom[i, j]:
                out[i, j] = big
                continue
            c = u[i, j]
            best = c + dt_k[i, j]  # waiting in place (D = 0)
            for l in range(8):
                ai = i + SIMPLEX_TABLE[l, 0]
                aj = j + SIMPLEX_TABLE[l, 1]
                di = i + SIMPLEX_TABLE[l, 2]
                dj = j + SIMPLEX_TABLE[l, 3]
                v1 = u[ai, aj] if (0 <= ai < n1 and 0 <= aj < n1) else big
                v2 = u[di, dj] if (0 <= di < n1 and 0 <= dj < n1) else big
                u1 = (v1 - c) * inv_h
                u2 = (v2 - v1) * inv_h
                if u1 <= u2 <= 0.0:
                    d = np.sqrt(u1 * u1 + u2 * u2)
                else:
                    d1 = (c - v1) * inv_h
                    d2 = (c - v2) * inv_hd
                    d = d1 if d1 > d2 else d2
                    if d < 0.0:
                        d = 0.0
                cand = c - dt_f[i, j] * d + dt_k[i, j]
                if cand < best:
                    best = cand
            if clamp and c < best:
                best = c
            if best > snap:
                best = big
            out[i, j] = best


def step_backward(
    u: np.ndarray,
    K: np.ndarray,
    f: np.ndarray,
    in_domain: np.ndarray,
    target: tuple[int, int],
    dt: float,
    h: float,
    clamp: bool = False,
) -> np.ndarray:
    """One backward step: the slice at t - dt from the slice at t.

    K and f are per-node fields; in_domain marks free-space nodes (phi >= 0).
    The target node is pinned to zero.

    With clamp=True the result is additionally bounded above by the incoming
    slice.  That changes the semantics to "depart whenever convenient":
    waiting becomes free instead of costing K per unit time, which breaks the
    consistency between the value and integrated trajectory costs whenever
    lingering pays off.  It is off by default and exists for experiments.
    """
    out = np.empty_like(u)
    dt_k = dt * np.ascontiguousarray(K, dtype=np.float64)
    dt_f = dt * np.ascontiguousarray(f, dtype=np.float64)
    _step_kernel(
        np.ascontiguousarray(u, dtype=np.float64),
        dt_k,
        dt_f,
        np.ascontiguousarray(in_domain, dtype=np.bool_),
        1.0 / h,
        clamp,
        INF_CAP,
        INF_SNAP,
        out,
    )
    out[target] = 0.0
    return out


@dataclass
class ValueFunction:
    """Value volume on the space-time grid, stored float32."""

    grid: Grid2D
    time: TimeGrid
    target: tuple[int, int]
    values: np.ndarray  # (n_t + 1, n + 1, n + 1)

    def slice(self, k: int) -> np.ndarray:
        return self.values[k]

    def at_node(self, k: int, ij: tuple[int, int]) -> float:
        return float(self.values[k][ij])

    def interp(self, points: np.ndarray, k: int) -> np.ndarray:
        """Bilinear interpolation within slice k (float64 arithmetic)."""
        return bilinear(self.values[k].astype(np.float64), self.grid, points)

    def start_value(self, ij: tuple[int, int]) -> float:
        return float(self.values[0][ij])


def _terminal_slice(grid: Grid2D, in_domain: np.ndarray, target) -> np.ndarray:
    u = np.full(grid.shape, INF_CAP)
    u[target] = 0.0
    return u


def _prepare(sc: Scenario, target):
    grid = sc.grid
    f = sc.speed_field()
    cell_time = grid.h / float(np.max(f))
    if sc.time.dt > cell_time * (1.0 + CFL_FUZZ):
        raise ValueError("CFL violated: dt must not exceed h / max(f)")
    if sc.time.dt < cell_time * (1.0 - FRONT_FUZZ):
        raise ValueError("front condition violated: dt must equal h / max(f)")
    in_domain = sc.phi.values >= 0.0
    tgt = sc.x_t if target is None else target
    if not in_domain[tgt]:
        raise ValueError(f"target node {tgt} is not in free space")
    return f, in_domain, tgt


def solve_value_function(
    K: KSource,
    sc: Scenario,
    target: Optional[tuple[int, int]] = None,
    clamp: bool = False,
    progress: Optional[Callable[[int, int], None]] = None,
) -> ValueFunction:
    """Solve backward over the whole horizon, keeping every slice.

    K supplies per-slice cost rates (a mixture, a single patrol field, or a
    constant field).  The step from slice k to k-1 uses the rates at the
    earlier time t_{k-1}, matching the left-endpoint quadrature used for
    path costs.
    """
    f, in_domain, tgt = _prepare(sc, target)
    nt = sc.time.n_t
    vol = np.empty((nt + 1,) + sc.grid.shape, dtype=np.float32)
    u = _terminal_slice(sc.grid, in_domain, tgt)
    vol[nt] = u
    for k in range(nt, 0, -1):
        u = step_backward(
            u, K.K_slice(k - 1), f, in_domain, tgt, sc.time.dt, sc.grid.h, clamp
        )
        vol[k - 1] = u
        if progress is not None:
            progress(nt - k + 1, nt)
    return ValueFunction(grid=sc.grid, time=sc.time, target=tgt, values=vol)


def solve_initial_slice(
    K: KSource,
    sc: Scenario,
    target: Optional[tuple[int, int]] = None,
    clamp: bool = False,
) -> np.ndarray:
    """Like solve_value_function but returns only the t = 0 slice (float64),
    without allocating the full volume.  Useful for grid-refinement studies."""
    f, in_domain, tgt = _prepare(sc, target)
    u = _terminal_slice(sc.grid, in_domain, tgt)
    for k in range(sc.time.n_t, 0, -1):
        u = step_backward(
            u, K.K_slice(k - 1), f, in_domain, tgt, sc.time.dt, sc.grid.h, clamp
        )
    return u
