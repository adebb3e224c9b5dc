"""Observability cost rates K(x, t) induced by patrols, and path costs.

Each patrol contributes a proximity-decaying rate inside its visibility
region on top of an ambient rate sigma that applies everywhere:

    K(x, t) = K0 / (|x - z(t)|^2 + 0.1) + sigma   if x is visible from z(t)
            = sigma                               otherwise

Rates are never stored volumetrically; slices are recomputed on demand from
patrol states and packed visibility bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Protocol, Sequence, Union

import numpy as np

from .scenario import Grid2D, Scenario, ScenarioError, TimeGrid
from .visibility import VisibilityVolume, build_visibility

KERNEL_SOFTENING = 0.1  # denominator offset keeping the proximity rate bounded


class KSource(Protocol):
    """Anything that can produce per-slice cost-rate fields."""

    def K_slice(self, k: int) -> np.ndarray: ...


@dataclass
class ObservabilityField:
    """Cost-rate field of a single patrol."""

    grid: Grid2D
    time: TimeGrid
    K0: float
    sigma: float
    positions: np.ndarray  # (n_t + 1, 2)
    headings: np.ndarray   # (n_t + 1, 2)
    visibility: VisibilityVolume
    patrol_index: int
    _mesh: tuple[np.ndarray, np.ndarray] = dfield(default=None, repr=False)

    def __post_init__(self):
        if self._mesh is None:
            self._mesh = self.grid.meshgrid()

    def proximity_slice(self, k: int) -> np.ndarray:
        """Visibility-gated proximity rate (the K - sigma part) at slice k."""
        x, y = self._mesh
        z = self.positions[k]
        d2 = (x - z[0]) ** 2 + (y - z[1]) ** 2
        rate = self.K0 / (d2 + KERNEL_SOFTENING)
        rate *= self.visibility.mask(self.patrol_index, k)
        return rate

    def K_slice(self, k: int) -> np.ndarray:
        return self.sigma + self.proximity_slice(k)

    def rate_at_nodes(self, k, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
        """K at selected nodes; k may be a per-entry array of slice indices."""
        h = self.grid.h
        if np.isscalar(k):
            z = self.positions[int(k)]
            zx, zy = z[0], z[1]
            vis = self.visibility.visible_at_nodes(self.patrol_index, int(k), ii, jj)
        else:
            k = np.asarray(k)
            zx = self.positions[k, 0]
            zy = self.positions[k, 1]
            flat = ii * self.grid.shape[1] + jj
            byte = self.visibility.packed[self.patrol_index][k, flat >> 3]
            vis = (byte >> (7 - (flat & 7))) & 1
        d2 = (ii * h - zx) ** 2 + (jj * h - zy) ** 2
        return self.sigma + vis * (self.K0 / (d2 + KERNEL_SOFTENING))


@dataclass
class MixedObservability:
    """Mixture K^lambda = sigma + sum_i lambda_i * proximity_i."""

    fields: Sequence[ObservabilityField]
    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if len(self.lam) != len(self.fields):
            raise ValueError("mixture weight count must match patrol count")

    @property
    def sigma(self) -> float:
        return self.fields[0].sigma

    def K_slice(self, k: int) -> np.ndarray:
        out = np.full(self.fields[0].grid.shape, self.sigma)
        for w, f in zip(self.lam, self.fields):
            if w != 0.0:
                out += w * f.proximity_slice(k)
        return out


@dataclass
class ConstantObservability:
    """Spatially and temporally constant rate; handy for analytic checks."""

    grid: Grid2D
    value: float

    def K_slice(self, k: int) -> np.ndarray:
        return np.full(self.grid.shape, self.value)


KField = Union[ObservabilityField, MixedObservability, ConstantObservability]


def build_observability(sc: Scenario, threads: int = 1) -> list[ObservabilityField]:
    """Sample every patrol over the time grid and build visibility volumes."""
    ts = sc.time.times()
    r = sc.r
    positions = np.empty((r, len(ts), 2))
    headings = np.empty((r, len(ts), 2))
    for i, patrol in enumerate(sc.patrols):
        pos, head = patrol.states(ts)
        positions[i] = pos
        headings[i] = head
    if np.any(positions < -1e-12) or np.any(positions > 1.0 + 1e-12):
        bad = int(np.argmax(np.any((positions < -1e-12) | (positions > 1 + 1e-12), axis=(1, 2))))
        raise ScenarioError(f"patrols[{bad}] leaves the unit square")
    volume = build_visibility(sc.phi, positions, headings, sc.sensor, threads=threads)
    return [
        ObservabilityField(
            grid=sc.grid,
            time=sc.time,
            K0=sc.sensor.K0,
            sigma=sc.sensor.sigma,
            positions=positions[i],
            headings=headings[i],
            visibility=volume,
            patrol_index=i,
        )
        for i in range(r)
    ]


def integrate_costs(
    points: np.ndarray,
    fields: Sequence[ObservabilityField],
    dt: float,
    reached: bool = True,
) -> np.ndarray:
    """Accumulated cost of one trajectory against every patrol.

    Left-endpoint quadrature: J_i = sum_m dt * K_i(y^m, t_m) over the steps
    m = 0..M-1, with K_i interpolated bilinearly from node rates.  A
    trajectory that never reaches the target costs +inf against every patrol.
    """
    r = len(fields)
    if not reached:
        return np.full(r, np.inf)
    pts = np.asarray(points, dtype=float)
    m_steps = len(pts) - 1
    if m_steps <= 0:
        return np.zeros(r)
    grid = fields[0].grid
    n = grid.n
    pos = pts[:-1]
    ks = np.arange(m_steps)
    gx = np.clip(pos[:, 0], 0.0, 1.0) * n
    gy = np.clip(pos[:, 1], 0.0, 1.0) * n
    i0 = np.clip(np.floor(gx).astype(np.int64), 0, n - 1)
    j0 = np.clip(np.floor(gy).astype(np.int64), 0, n - 1)
    fx = gx - i0
    fy = gy - j0
    ii = np.stack([i0, i0 + 1, i0, i0 + 1], axis=1)
    jj = np.stack([j0, j0, j0 + 1, j0 + 1], axis=1)
    w = np.stack(
        [(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=1
    )
    kk = np.repeat(ks[:, None], 4, axis=1)
    out = np.empty(r)
    for idx, f in enumerate(fields):
        rates = f.rate_at_nodes(kk, ii, jj)
        out[idx] = dt * float(np.sum(w * rates))
    return out
