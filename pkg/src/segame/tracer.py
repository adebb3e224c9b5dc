"""Path extraction from a solved value function.

Starting at the evader's start node, each step moves distance dt * f(y)
along the direction (out of n_dir equally spaced unit vectors, plus staying
put) whose landing point has the smallest interpolated value on the current
time slice.  Candidates that leave free space or land on sentinel values are
excluded.  Once the target is within one step's reach the path hops straight
to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .scenario import Scenario, bilinear
from .observability import MixedObservability, ObservabilityField, integrate_costs
from .hjb import REACH_LIMIT, ValueFunction, solve_value_function


class TracerError(RuntimeError):
    """The path got stuck: no admissible candidate step."""


@dataclass
class TracedPath:
    """A traced evader trajectory sampled at the time slices."""

    points: np.ndarray      # (M + 1, 2); points[m] is the position at t_m
    reached: bool
    dt: float

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    @property
    def arrival_time(self) -> float:
        return self.steps * self.dt if self.reached else np.inf

    def times(self) -> np.ndarray:
        return np.arange(len(self.points)) * self.dt


def _unit_directions(n_dir: int) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(n_dir) / n_dir
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.vstack([dirs, [[0.0, 0.0]]])  # staying put is the last candidate


def trace_path(
    vf: ValueFunction,
    sc: Scenario,
    n_dir: Optional[int] = None,
    start: Optional[tuple[int, int]] = None,
) -> TracedPath:
    """Greedy descent of the value function from the start node.

    Raises TracerError if at some step every candidate is infeasible.  If the
    deadline passes without reaching the target the path is returned with
    reached=False.
    """
    grid, time = sc.grid, sc.time
    dt = time.dt
    if n_dir is None:
        n_dir = sc.solver.n_dir
    dirs = _unit_directions(n_dir)
    target = grid.node_xy(vf.target)
    y = grid.node_xy(sc.x_s if start is None else start)
    speed = sc.speed
    scalar_speed = np.isscalar(speed)
    phi = sc.phi

    pts = [y.copy()]
    reached = False
    for m in range(time.n_t):
        f_here = float(speed) if scalar_speed else float(bilinear(speed, grid, y))
        step_len = f_here * dt
        gap = float(np.hypot(*(y - target)))
        if gap <= step_len + 1e-12:
            if gap > 0.0:
                pts.append(target.copy())
            reached = True
            break
        cand = y[None, :] + step_len * dirs
        ok = (
            (cand[:, 0] >= 0.0)
            & (cand[:, 0] <= 1.0)
            & (cand[:, 1] >= 0.0)
            & (cand[:, 1] <= 1.0)
        )
        ok &= phi.interp(cand) >= 0.0
        # exclude candidates whose interpolation cell touches sentinel values
        vals = _interp_max_guard(vf.values[m], grid, cand)
        ok &= vals < REACH_LIMIT
        if not np.any(ok):
            raise TracerError(
                f"trace stuck at t = {m * dt:.4f}: no admissible step from {y}"
            )
        vals = np.where(ok, vals, np.inf)
        y = cand[int(np.argmin(vals))].copy()
        pts.append(y)
    return TracedPath(points=np.array(pts), reached=reached, dt=dt)


def _interp_max_guard(values: np.ndarray, grid, pts: np.ndarray) -> np.ndarray:
    """Bilinear values, forced to INF-scale when any cell corner is at or
    beyond the reach limit."""
    n = grid.n
    p = np.asarray(pts, dtype=float)
    gx = np.clip(p[:, 0], 0.0, 1.0) * n
    gy = np.clip(p[:, 1], 0.0, 1.0) * n
    i0 = np.clip(np.floor(gx).astype(np.int64), 0, n - 1)
    j0 = np.clip(np.floor(gy).astype(np.int64), 0, n - 1)
    fx = gx - i0
    fy = gy - j0
    v = values.astype(np.float64)
    c00 = v[i0, j0]
    c10 = v[i0 + 1, j0]
    c01 = v[i0, j0 + 1]
    c11 = v[i0 + 1, j0 + 1]
    out = (
        c00 * (1 - fx) * (1 - fy)
        + c10 * fx * (1 - fy)
        + c01 * (1 - fx) * fy
        + c11 * fx * fy
    )
    corner_max = np.maximum(np.maximum(c00, c10), np.maximum(c01, c11))
    return np.where(corner_max >= REACH_LIMIT, np.inf, out)


@dataclass
class BestResponse:
    """Evader's best response to an observer mixture."""

    lam: np.ndarray
    value: float            # u^lambda at the start, time 0
    path: TracedPath
    costs: np.ndarray       # J_i against each patrol, shape (r,)
    residual: float         # relative gap |lam . costs - value| / max(value, eps)

    @property
    def lam_cost(self) -> float:
        return float(np.dot(self.lam, self.costs))


def best_response_cost(
    sc: Scenario,
    fields: Sequence[ObservabilityField],
    lam: np.ndarray,
    vf: Optional[ValueFunction] = None,
) -> BestResponse:
    """Solve the mixture PDE (unless a value function is supplied), trace the
    optimal trajectory and integrate its cost against every patrol."""
    lam = np.asarray(lam, dtype=float)
    if vf is None:
        vf = solve_value_function(MixedObservability(fields, lam), sc)
    value = vf.start_value(sc.x_s)
    if value >= REACH_LIMIT:
        raise TracerError(
            "target unreachable from the start node within the horizon"
        )
    path = trace_path(vf, sc)
    costs = integrate_costs(path.points, fields, sc.time.dt, reached=path.reached)
    denom = max(abs(value), 1e-12)
    residual = abs(float(np.dot(lam, costs)) - value) / denom
    return BestResponse(lam=lam, value=value, path=path, costs=costs, residual=residual)


def path_to_csv(path: TracedPath, dest) -> None:
    """Write a traced path as delimited text with columns t,x,y."""
    ts = path.times()
    with open(dest, "w") as fh:
        fh.write("t,x,y\n")
        for t, (x, y) in zip(ts, path.points):
            fh.write(f"{t:.10g},{x:.10g},{y:.10g}\n")
