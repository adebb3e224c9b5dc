"""Line-of-sight visibility against obstacles, one mask per time slice.

Occlusion is resolved with a shadow field psi: the pointwise-smallest field
satisfying max{grad(psi) . r(x), psi - phi} = 0 away from the observer and
psi(z) = phi(z), where r(x) is the unit direction from the observer to x.
A point is occluded exactly when psi < 0 somewhere on the segment from the
observer, which the field encodes as psi(x) < 0.

The field is computed on the grid in a single sweep over nodes in order of
increasing distance from the observer's anchor node: each node takes the
minimum of phi and the value advected from the previous node along its ray,
found by stepping one cell back along the dominant axis and interpolating
between the two bracketing nodes.  Every dependency of a node is strictly
closer to the anchor, so one sweep suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .scenario import Grid2D, LevelSetField, SensorModel

_ANGLE_FUZZ = 1e-12
_FULL_CIRCLE = 2.0 * math.pi

# cache of canonical offset orderings, keyed by grid size n
_OFFSETS_CACHE: dict[int, np.ndarray] = {}


def offsets_by_distance(n: int) -> np.ndarray:
    """All lattice offsets (di, dj) with |di|,|dj| <= n sorted by distance.

    Ties are broken by lattice enumeration order (stable sort), so the
    resulting sweep order is deterministic.  The ordering is independent of
    the anchor node and is cached per grid size.
    """
    cached = _OFFSETS_CACHE.get(n)
    if cached is not None:
        return cached
    d = np.arange(-n, n + 1)
    di, dj = np.meshgrid(d, d, indexing="ij")
    dist2 = (di * di + dj * dj).ravel()
    order = np.argsort(dist2, kind="stable")
    offsets = np.stack([di.ravel()[order], dj.ravel()[order]], axis=1).astype(np.int64)
    _OFFSETS_CACHE[n] = offsets
    return offsets


@njit(cache=True)
def _shadow_sweep(phi, psi, i0, j0, offsets):  # pragma: no cover - jit
    n = phi.shape[0] - 1
    m = offsets.shape[0]
    for q in range(m):
        di = offsets[q, 0]
        dj = offsets[q, 1]
        i = i0 + di
        j = j0 + dj
        if i < 0 or i > n or j < 0 or j > n:
            continue
        if di == 0 and dj == 0:
            psi[i, j] = phi[i, j]
            continue
        adx = di if di >= 0 else -di
        ady = dj if dj >= 0 else -dj
        if adx >= ady:
            # step one column back toward the anchor, interpolate across rows
            ib = i - (1 if di > 0 else -1)
            fj = j0 + dj * (adx - 1.0) / adx
            jl = int(math.floor(fj))
            w = fj - jl
            if jl < 0:
                jl, w = 0, 0.0
            if jl >= n:
                jl, w = n - 1, 1.0
            upwind = (1.0 - w) * psi[ib, jl] + w * psi[ib, jl + 1]
        else:
            jb = j - (1 if dj > 0 else -1)
            fi = i0 + di * (ady - 1.0) / ady
            il = int(math.floor(fi))
            w = fi - il
            if il < 0:
                il, w = 0, 0.0
            if il >= n:
                il, w = n - 1, 1.0
            upwind = (1.0 - w) * psi[il, jb] + w * psi[il + 1, jb]
        v = phi[i, j]
        psi[i, j] = v if v < upwind else upwind


def solve_shadow_field(phi: LevelSetField, z: np.ndarray) -> np.ndarray:
    """Shadow field psi for an observer at z, anchored at the nearest node.

    Returns an (n+1, n+1) array with psi <= phi everywhere and psi = phi on
    the segment of full line of sight from the anchor.
    """
    grid = phi.grid
    i0, j0 = grid.nearest_node(z)
    psi = phi.values.copy()
    _shadow_sweep(phi.values, psi, i0, j0, offsets_by_distance(grid.n))
    return psi


def sector_mask(
    grid: Grid2D,
    z: np.ndarray,
    heading: np.ndarray,
    alpha: float,
    max_range: float | None = None,
) -> np.ndarray:
    """Field-of-view test: angle to the heading at most alpha/2 (ties pass),
    plus an optional range cutoff.  The observer's own node passes."""
    x, y = grid.meshgrid()
    dx = x - z[0]
    dy = y - z[1]
    dist = np.hypot(dx, dy)
    ok = np.ones(grid.shape, dtype=bool)
    if max_range is not None:
        ok &= dist <= max_range + _ANGLE_FUZZ
    if alpha < _FULL_CIRCLE - _ANGLE_FUZZ:
        cos_half = math.cos(0.5 * alpha)
        proj = dx * heading[0] + dy * heading[1]
        with np.errstate(invalid="ignore", divide="ignore"):
            inside = proj >= cos_half * dist - _ANGLE_FUZZ
        ok &= inside | (dist == 0.0)
    return ok


def slice_mask(
    phi: LevelSetField,
    z: np.ndarray,
    heading: np.ndarray,
    sensor: SensorModel,
) -> np.ndarray:
    """Boolean visibility mask of one time slice for one patrol.

    Points on the free-space boundary (phi = 0) count as visible: the evader
    may walk there and an unobstructed observer sees them.  Excluding them
    would carve a spurious h-wide low-cost corridor along every wall."""
    psi = solve_shadow_field(phi, z)
    mask = (psi >= 0.0) & (phi.values >= 0.0)
    mask &= sector_mask(phi.grid, z, heading, sensor.alpha, sensor.max_range)
    return mask


@dataclass
class VisibilityVolume:
    """Per-patrol, per-slice visibility masks, stored packed (1 bit/node)."""

    grid: Grid2D
    n_t: int
    packed: np.ndarray  # uint8, shape (r, n_t + 1, ceil((n+1)^2 / 8))

    @property
    def r(self) -> int:
        return self.packed.shape[0]

    @classmethod
    def from_masks(cls, grid: Grid2D, masks: np.ndarray) -> "VisibilityVolume":
        """Pack a boolean array of shape (r, n_t + 1, n + 1, n + 1)."""
        r, nt1 = masks.shape[0], masks.shape[1]
        flat = masks.reshape(r, nt1, -1)
        packed = np.packbits(flat, axis=2)
        return cls(grid=grid, n_t=nt1 - 1, packed=packed)

    def mask(self, patrol: int, k: int) -> np.ndarray:
        """Unpack the (n+1, n+1) boolean mask for patrol at slice k."""
        nn = self.grid.shape[0] * self.grid.shape[1]
        bits = np.unpackbits(self.packed[patrol, k], count=nn)
        return bits.reshape(self.grid.shape).astype(bool)

    def visible_at_nodes(self, patrol: int, k: int, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
        """Visibility bits at selected nodes without unpacking a full slice."""
        flat = ii * self.grid.shape[1] + jj
        byte = self.packed[patrol, k][flat >> 3]
        return (byte >> (7 - (flat & 7))) & 1

    def nbytes(self) -> int:
        return self.packed.nbytes


def build_visibility(
    phi: LevelSetField,
    positions: np.ndarray,
    headings: np.ndarray,
    sensor: SensorModel,
    threads: int = 1,
) -> VisibilityVolume:
    """Visibility masks for every patrol and time slice.

    positions/headings have shape (r, n_t + 1, 2).  Slices are independent;
    with threads > 1 they are distributed over a thread pool (the result does
    not depend on the schedule).
    """
    r, nt1 = positions.shape[0], positions.shape[1]
    nn = phi.grid.shape[0] * phi.grid.shape[1]
    packed = np.empty((r, nt1, (nn + 7) // 8), dtype=np.uint8)

    def work(item):
        i, k = item
        m = slice_mask(phi, positions[i, k], headings[i, k], sensor)
        packed[i, k] = np.packbits(m.reshape(-1))

    items = [(i, k) for i in range(r) for k in range(nt1)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, items))
    else:
        for item in items:
            work(item)
    return VisibilityVolume(grid=phi.grid, n_t=nt1 - 1, packed=packed)


def visible_oracle(
    phi: LevelSetField,
    z: np.ndarray,
    x: np.ndarray,
    heading: np.ndarray | None = None,
    sensor: SensorModel | None = None,
    samples_per_cell: float = 4.0,
) -> bool:
    """Slow reference visibility test by sampling the segment from z to x.

    The endpoint must be in (the closure of) free space, and the segment
    needs interpolated phi >= 0 at evenly spaced sample points (several per
    grid cell).  When a sensor is given the field-of-view and range
    constraints apply too.  Used to cross-check the shadow-field masks.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if float(phi.interp(x)) < 0.0:
        return False
    d = float(np.hypot(*(x - z)))
    if sensor is not None:
        if sensor.max_range is not None and d > sensor.max_range + _ANGLE_FUZZ:
            return False
        if sensor.alpha < _FULL_CIRCLE - _ANGLE_FUZZ and d > 0:
            cos_half = math.cos(0.5 * sensor.alpha)
            proj = float(np.dot(x - z, heading))
            if proj < cos_half * d - _ANGLE_FUZZ:
                return False
    m = max(2, int(math.ceil(d / phi.grid.h * samples_per_cell)) + 1)
    ts = np.linspace(0.0, 1.0, m)
    pts = z[None, :] + ts[:, None] * (x - z)[None, :]
    return bool(np.all(phi.interp(pts) >= 0.0))
