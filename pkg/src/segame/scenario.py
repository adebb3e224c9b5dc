"""Scenario definition: domain geometry, patrols, sensor, and solver knobs.

A scenario lives in a YAML file with sections ``grid``, ``time``, ``evader``,
``sensor``, ``obstacles``, ``patrols`` and ``solver``.  Loading a file
validates it, builds the obstacle level-set field and snaps the evader's
start/target to the nearest grid nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import yaml


class ScenarioError(ValueError):
    """Raised when a scenario file is malformed or inconsistent."""


CFL_FUZZ = 1e-12  # relative slack when checking dt <= h / max(f)
FRONT_FUZZ = 1e-9  # relative slack when checking dt >= h / max(f)


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class Grid2D:
    """Uniform (n+1) x (n+1) node grid on the unit square, spacing h = 1/n."""

    n: int

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n + 1, self.n + 1)

    def coords(self) -> np.ndarray:
        """Node coordinates along one axis, shape (n+1,)."""
        return np.linspace(0.0, 1.0, self.n + 1)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """X, Y node coordinate arrays of shape (n+1, n+1), indexed [i, j]
        with i the x index and j the y index."""
        c = self.coords()
        return np.meshgrid(c, c, indexing="ij")

    def nearest_node(self, p: Sequence[float]) -> tuple[int, int]:
        i = int(round(p[0] * self.n))
        j = int(round(p[1] * self.n))
        return (min(max(i, 0), self.n), min(max(j, 0), self.n))

    def node_xy(self, ij: tuple[int, int]) -> np.ndarray:
        return np.array([ij[0] * self.h, ij[1] * self.h])


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time slices t_k = k*dt for k = 0..n_t with n_t*dt = T."""

    dt: float
    n_t: int

    @property
    def T(self) -> float:
        return self.n_t * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.dt


# ---------------------------------------------------------------------------
# obstacles and the level-set field

@dataclass(frozen=True)
class DiskObstacle:
    center: tuple[float, float]
    radius: float

    def signed_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Positive outside the disk, negative inside."""
        return np.hypot(x - self.center[0], y - self.center[1]) - self.radius

    def to_dict(self) -> dict:
        return {"shape": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class RectObstacle:
    center: tuple[float, float]
    half_size: tuple[float, float]

    def signed_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        qx = np.abs(x - self.center[0]) - self.half_size[0]
        qy = np.abs(y - self.center[1]) - self.half_size[1]
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside

    def to_dict(self) -> dict:
        return {
            "shape": "rect",
            "center": list(self.center),
            "half_size": list(self.half_size),
        }


@dataclass(frozen=True)
class PolygonObstacle:
    vertices: tuple[tuple[float, float], ...]

    def signed_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Exact distance to the polygon boundary; sign by crossing parity."""
        vx = np.array([v[0] for v in self.vertices])
        vy = np.array([v[1] for v in self.vertices])
        m = len(vx)
        px = np.asarray(x, dtype=float)
        py = np.asarray(y, dtype=float)
        d2 = np.full(px.shape, np.inf)
        inside = np.zeros(px.shape, dtype=bool)
        for k in range(m):
            ax, ay = vx[k], vy[k]
            bx, by = vx[(k + 1) % m], vy[(k + 1) % m]
            ex, ey = bx - ax, by - ay
            wx, wy = px - ax, py - ay
            seg2 = ex * ex + ey * ey
            t = np.clip((wx * ex + wy * ey) / max(seg2, 1e-300), 0.0, 1.0)
            dx = wx - t * ex
            dy = wy - t * ey
            d2 = np.minimum(d2, dx * dx + dy * dy)
            # even-odd ray crossing test (ray toward +x)
            cond = (ay > py) != (by > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (py - ay) * ex / np.where(ey == 0.0, 1e-300, ey)
            inside ^= cond & (px < xint)
        d = np.sqrt(d2)
        return np.where(inside, -d, d)

    def to_dict(self) -> dict:
        return {"shape": "polygon", "vertices": [list(v) for v in self.vertices]}


Obstacle = Union[DiskObstacle, RectObstacle, PolygonObstacle]


@dataclass
class LevelSetField:
    """Signed distance-like field phi on grid nodes: positive in free space,
    zero on the free-space boundary, negative inside obstacles (and outside
    the unit square)."""

    grid: Grid2D
    values: np.ndarray  # (n+1, n+1), float64, indexed [i, j]

    def interp(self, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at (..., 2) points; clipped to the square."""
        return bilinear(self.values, self.grid, points)


def bilinear(values: np.ndarray, grid: Grid2D, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of node values at arbitrary points.

    Points outside [0,1]^2 are clamped to the boundary first.
    """
    pts = np.asarray(points, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    gx = np.clip(pts[..., 0], 0.0, 1.0) * grid.n
    gy = np.clip(pts[..., 1], 0.0, 1.0) * grid.n
    i0 = np.clip(np.floor(gx).astype(np.int64), 0, grid.n - 1)
    j0 = np.clip(np.floor(gy).astype(np.int64), 0, grid.n - 1)
    fx = gx - i0
    fy = gy - j0
    v00 = values[i0, j0]
    v10 = values[i0 + 1, j0]
    v01 = values[i0, j0 + 1]
    v11 = values[i0 + 1, j0 + 1]
    out = (
        v00 * (1 - fx) * (1 - fy)
        + v10 * fx * (1 - fy)
        + v01 * (1 - fx) * fy
        + v11 * fx * fy
    )
    return out[0] if scalar else out


def build_level_set(grid: Grid2D, obstacles: Sequence[Obstacle]) -> LevelSetField:
    """Free-space level-set: min of distance-to-square-boundary and every
    obstacle's signed distance."""
    x, y = grid.meshgrid()
    # distance to the boundary of the unit square, positive inside
    phi = np.minimum.reduce([x, 1.0 - x, y, 1.0 - y])
    for ob in obstacles:
        phi = np.minimum(phi, ob.signed_distance(x, y))
    return LevelSetField(grid=grid, values=phi)


# ---------------------------------------------------------------------------
# patrol trajectories

@dataclass(frozen=True)
class CirclePatrol:
    """Constant angular velocity on a circle; heading tangent to motion."""

    center: tuple[float, float]
    radius: float
    omega: float
    phase: float = 0.0

    def states(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        ang = self.omega * ts + self.phase
        pos = np.stack(
            [
                self.center[0] + self.radius * np.cos(ang),
                self.center[1] + self.radius * np.sin(ang),
            ],
            axis=-1,
        )
        s = 1.0 if self.omega >= 0 else -1.0
        heading = np.stack([-s * np.sin(ang), s * np.cos(ang)], axis=-1)
        return pos, heading

    def to_dict(self) -> dict:
        return {
            "kind": "circle",
            "center": list(self.center),
            "radius": self.radius,
            "omega": self.omega,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class LemniscatePatrol:
    """Figure-eight (Gerono lemniscate) sweep:
    z(t) = center + R(rotate) . scale*(cos tau, sin tau cos tau), tau = omega*t + phase.
    The parametrizing velocity never vanishes, so the heading is well defined."""

    center: tuple[float, float]
    scale: float
    omega: float
    phase: float = 0.0
    rotate: float = 0.0

    def states(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        tau = self.omega * ts + self.phase
        ux = np.cos(tau)
        uy = np.sin(tau) * np.cos(tau)
        vx = -np.sin(tau)
        vy = np.cos(2.0 * tau)
        if self.omega < 0:
            vx, vy = -vx, -vy
        cr, sr = math.cos(self.rotate), math.sin(self.rotate)
        px = self.center[0] + self.scale * (cr * ux - sr * uy)
        py = self.center[1] + self.scale * (sr * ux + cr * uy)
        hx = cr * vx - sr * vy
        hy = sr * vx + cr * vy
        norm = np.hypot(hx, hy)
        pos = np.stack([px, py], axis=-1)
        heading = np.stack([hx / norm, hy / norm], axis=-1)
        return pos, heading

    def to_dict(self) -> dict:
        return {
            "kind": "lemniscate",
            "center": list(self.center),
            "scale": self.scale,
            "omega": self.omega,
            "phase": self.phase,
            "rotate": self.rotate,
        }


@dataclass(frozen=True)
class PolylinePatrol:
    """Closed polyline loop traversed at constant speed with the given period.
    At a corner the heading is that of the incoming segment."""

    vertices: tuple[tuple[float, float], ...]
    period: float
    phase: float = 0.0  # time offset along the loop

    def _geometry(self):
        v = np.array(self.vertices, dtype=float)
        nxt = np.roll(v, -1, axis=0)
        seg = nxt - v
        lens = np.hypot(seg[:, 0], seg[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        return v, seg, lens, cum

    def states(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        v, seg, lens, cum = self._geometry()
        total = cum[-1]
        s = ((ts + self.phase) % self.period) / self.period * total
        # segment index; a point exactly on a corner belongs to the incoming segment
        k = np.searchsorted(cum, s, side="left") - 1
        k = np.clip(k, 0, len(lens) - 1)
        frac = (s - cum[k]) / lens[k]
        pos = v[k] + frac[:, None] * seg[k]
        heading = seg[k] / lens[k][:, None]
        return pos, heading

    def to_dict(self) -> dict:
        return {
            "kind": "polyline",
            "vertices": [list(p) for p in self.vertices],
            "period": self.period,
            "phase": self.phase,
        }


Patrol = Union[CirclePatrol, LemniscatePatrol, PolylinePatrol]


# ---------------------------------------------------------------------------
# sensor and solver knobs

@dataclass(frozen=True)
class SensorModel:
    """Pointwise observability parameters shared by all patrols.

    K0 scales the proximity term, sigma is the ambient (always-on) cost rate,
    alpha is the full field-of-view angle, max_range an optional cutoff
    radius (None = unlimited)."""

    K0: float
    sigma: float
    alpha: float
    max_range: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"K0": self.K0, "sigma": self.sigma, "alpha": self.alpha}
        if self.max_range is not None:
            d["max_range"] = self.max_range
        return d


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the ascent loop, trajectory collection and certification."""

    step_c: Optional[float] = None      # None: scaled from the uniform mixture
    max_iters: int = 120
    grad_tol: float = 1e-3              # relative best-value improvement per window
    window: int = 15                    # sliding window (iterations) for stagnation
    perturbation: float = 0.02          # mixture perturbation for trajectory collection
    cluster_dist: Optional[float] = None  # None: 4*h
    opt_tol: float = 0.05               # near-optimality band for kept trajectories
    nash_tol: float = 0.05              # equilibrium certificate tolerance
    tol_supp: float = 1e-3              # support threshold on lambda*
    n_dir: int = 64                     # tracer candidate directions

    def to_dict(self) -> dict:
        d = {
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "window": self.window,
            "perturbation": self.perturbation,
            "opt_tol": self.opt_tol,
            "nash_tol": self.nash_tol,
            "tol_supp": self.tol_supp,
            "n_dir": self.n_dir,
        }
        if self.step_c is not None:
            d["step_c"] = self.step_c
        if self.cluster_dist is not None:
            d["cluster_dist"] = self.cluster_dist
        return d


# ---------------------------------------------------------------------------
# the scenario

@dataclass(eq=False)
class Scenario:
    grid: Grid2D
    time: TimeGrid
    x_s: tuple[int, int]            # start node (i, j), snapped
    x_t: tuple[int, int]            # target node (i, j), snapped
    speed: Union[float, np.ndarray]  # evader speed f: scalar or per-node field
    sensor: SensorModel
    obstacles: tuple[Obstacle, ...]
    patrols: tuple[Patrol, ...]
    solver: SolverParams = field(default_factory=SolverParams)
    phi: LevelSetField = None  # built during parsing

    @property
    def r(self) -> int:
        return len(self.patrols)

    @property
    def start_xy(self) -> np.ndarray:
        return self.grid.node_xy(self.x_s)

    @property
    def target_xy(self) -> np.ndarray:
        return self.grid.node_xy(self.x_t)

    def speed_field(self) -> np.ndarray:
        """Evader speed as a per-node array."""
        if np.isscalar(self.speed):
            return np.full(self.grid.shape, float(self.speed))
        return np.asarray(self.speed, dtype=float)

    def max_speed(self) -> float:
        return float(self.speed) if np.isscalar(self.speed) else float(np.max(self.speed))

    def cluster_dist(self) -> float:
        cd = self.solver.cluster_dist
        return 4.0 * self.grid.h if cd is None else cd

    def to_dict(self) -> dict:
        speed = (
            float(self.speed)
            if np.isscalar(self.speed)
            else np.asarray(self.speed).tolist()
        )
        return {
            "grid": {"n": self.grid.n},
            "time": {"dt": self.time.dt, "T": self.time.T},
            "evader": {
                "start": [float(c) for c in self.start_xy],
                "target": [float(c) for c in self.target_xy],
                "speed": speed,
            },
            "sensor": self.sensor.to_dict(),
            "obstacles": [ob.to_dict() for ob in self.obstacles],
            "patrols": [p.to_dict() for p in self.patrols],
            "solver": self.solver.to_dict(),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# ---------------------------------------------------------------------------
# parsing / serialization

def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing '{key}' in {where}")
    return section[key]


def _point(v, where: str) -> tuple[float, float]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ScenarioError(f"{where} must be a pair [x, y], got {v!r}")
    return (float(v[0]), float(v[1]))


def _parse_obstacle(d: dict, idx: int) -> Obstacle:
    where = f"obstacles[{idx}]"
    shape = _require(d, "shape", where)
    if shape == "disk":
        c = _point(_require(d, "center", where), f"{where}.center")
        rad = float(_require(d, "radius", where))
        if rad <= 0:
            raise ScenarioError(f"{where}: radius must be positive")
        return DiskObstacle(center=c, radius=rad)
    if shape == "rect":
        c = _point(_require(d, "center", where), f"{where}.center")
        hs = _point(_require(d, "half_size", where), f"{where}.half_size")
        if hs[0] <= 0 or hs[1] <= 0:
            raise ScenarioError(f"{where}: half_size must be positive")
        return RectObstacle(center=c, half_size=hs)
    if shape == "polygon":
        verts = _require(d, "vertices", where)
        if not isinstance(verts, list) or len(verts) < 3:
            raise ScenarioError(f"{where}: polygon needs at least 3 vertices")
        return PolygonObstacle(
            vertices=tuple(_point(v, f"{where}.vertices[{k}]") for k, v in enumerate(verts))
        )
    raise ScenarioError(f"{where}: unknown shape {shape!r}")


def _parse_patrol(d: dict, idx: int) -> Patrol:
    where = f"patrols[{idx}]"
    kind = _require(d, "kind", where)
    if kind == "circle":
        return CirclePatrol(
            center=_point(_require(d, "center", where), f"{where}.center"),
            radius=float(_require(d, "radius", where)),
            omega=float(_require(d, "omega", where)),
            phase=float(d.get("phase", 0.0)),
        )
    if kind == "lemniscate":
        return LemniscatePatrol(
            center=_point(_require(d, "center", where), f"{where}.center"),
            scale=float(_require(d, "scale", where)),
            omega=float(_require(d, "omega", where)),
            phase=float(d.get("phase", 0.0)),
            rotate=float(d.get("rotate", 0.0)),
        )
    if kind == "polyline":
        verts = _require(d, "vertices", where)
        if not isinstance(verts, list) or len(verts) < 2:
            raise ScenarioError(f"{where}: polyline needs at least 2 vertices")
        period = float(_require(d, "period", where))
        if period <= 0:
            raise ScenarioError(f"{where}: period must be positive")
        return PolylinePatrol(
            vertices=tuple(_point(v, f"{where}.vertices[{k}]") for k, v in enumerate(verts)),
            period=period,
            phase=float(d.get("phase", 0.0)),
        )
    raise ScenarioError(f"{where}: unknown kind {kind!r}")


def parse_scenario(doc: dict) -> Scenario:
    """Build and validate a Scenario from a parsed configuration mapping."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")

    gsec = _require(doc, "grid", "scenario")
    n = int(_require(gsec, "n", "grid"))
    if n < 4:
        raise ScenarioError(f"grid.n must be at least 4, got {n}")
    grid = Grid2D(n=n)

    tsec = _require(doc, "time", "scenario")
    dt = float(_require(tsec, "dt", "time"))
    T = float(_require(tsec, "T", "time"))
    if dt <= 0 or T <= 0:
        raise ScenarioError("time.dt and time.T must be positive")
    n_t_f = T / dt
    n_t = int(round(n_t_f))
    if n_t < 1 or abs(n_t_f - n_t) > 1e-9 * max(1.0, n_t_f):
        raise ScenarioError(f"T/dt = {n_t_f} is not a positive integer")
    time = TimeGrid(dt=dt, n_t=n_t)

    esec = _require(doc, "evader", "scenario")
    start = _point(_require(esec, "start", "evader"), "evader.start")
    target = _point(_require(esec, "target", "evader"), "evader.target")
    speed_raw = _require(esec, "speed", "evader")
    if isinstance(speed_raw, (int, float)):
        speed: Union[float, np.ndarray] = float(speed_raw)
        if speed <= 0:
            raise ScenarioError("evader.speed must be positive")
    else:
        speed = np.asarray(speed_raw, dtype=float)
        if speed.shape != grid.shape:
            raise ScenarioError(
                f"evader.speed field must have shape {grid.shape}, got {speed.shape}"
            )
        if np.any(speed <= 0):
            raise ScenarioError("evader.speed field must be positive everywhere")

    ssec = _require(doc, "sensor", "scenario")
    sensor = SensorModel(
        K0=float(_require(ssec, "K0", "sensor")),
        sigma=float(_require(ssec, "sigma", "sensor")),
        alpha=float(_require(ssec, "alpha", "sensor")),
        max_range=(float(ssec["max_range"]) if "max_range" in ssec else None),
    )
    if sensor.K0 < 0 or sensor.sigma < 0:
        raise ScenarioError("sensor.K0 and sensor.sigma must be non-negative")
    if not (0.0 < sensor.alpha <= 2.0 * math.pi + 1e-12):
        raise ScenarioError("sensor.alpha must lie in (0, 2*pi]")
    if sensor.max_range is not None and sensor.max_range <= 0:
        raise ScenarioError("sensor.max_range must be positive")

    obstacles = tuple(
        _parse_obstacle(d, k) for k, d in enumerate(doc.get("obstacles", []) or [])
    )
    patrol_docs = _require(doc, "patrols", "scenario")
    if not patrol_docs:
        raise ScenarioError("at least one patrol is required")
    patrols = tuple(_parse_patrol(d, k) for k, d in enumerate(patrol_docs))

    sol = doc.get("solver", {}) or {}
    known = {
        "step_c", "max_iters", "grad_tol", "window", "perturbation",
        "cluster_dist", "opt_tol", "nash_tol", "tol_supp", "n_dir",
    }
    unknown = set(sol) - known
    if unknown:
        raise ScenarioError(f"unknown solver keys: {sorted(unknown)}")
    solver = SolverParams(
        step_c=(float(sol["step_c"]) if "step_c" in sol else None),
        max_iters=int(sol.get("max_iters", SolverParams.max_iters)),
        grad_tol=float(sol.get("grad_tol", SolverParams.grad_tol)),
        window=int(sol.get("window", SolverParams.window)),
        perturbation=float(sol.get("perturbation", SolverParams.perturbation)),
        cluster_dist=(float(sol["cluster_dist"]) if "cluster_dist" in sol else None),
        opt_tol=float(sol.get("opt_tol", SolverParams.opt_tol)),
        nash_tol=float(sol.get("nash_tol", SolverParams.nash_tol)),
        tol_supp=float(sol.get("tol_supp", SolverParams.tol_supp)),
        n_dir=int(sol.get("n_dir", SolverParams.n_dir)),
    )
    if solver.max_iters < 1:
        raise ScenarioError("solver.max_iters must be at least 1")
    if solver.n_dir < 4:
        raise ScenarioError("solver.n_dir must be at least 4")

    # The explicit stepper needs the reachability front to advance exactly one
    # cell per step at top speed: dt > h/max(f) breaks the CFL bound, while
    # dt < h/max(f) leaves the front limping behind sentinel relaxation.
    max_f = float(speed) if np.isscalar(speed) else float(np.max(speed))
    if dt > grid.h / max_f * (1.0 + CFL_FUZZ):
        raise ScenarioError(
            f"CFL violated: dt = {dt} exceeds h/max(f) = {grid.h / max_f}"
        )
    if dt < grid.h / max_f * (1.0 - FRONT_FUZZ):
        raise ScenarioError(
            f"front condition violated: dt = {dt} must equal h/max(f) = "
            f"{grid.h / max_f} (refine the grid to refine time)"
        )

    phi = build_level_set(grid, obstacles)

    def _snap(p, name):
        ij = grid.nearest_node(p)
        if not (0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0):
            raise ScenarioError(f"evader.{name} must lie in the unit square")
        if phi.values[ij] <= 0:
            raise ScenarioError(
                f"evader.{name} snaps to node {ij} which is not in free space"
            )
        return ij

    x_s = _snap(start, "start")
    x_t = _snap(target, "target")

    # Observers must stay in free space: visibility from inside an obstacle
    # is meaningless and silently corrupts the whole game.
    if obstacles:
        ts = time.times()
        for idx, patrol in enumerate(patrols):
            pos, _ = patrol.states(ts)
            clear = phi.interp(pos)
            if np.any(clear <= 0.0):
                k_bad = int(np.argmax(clear <= 0.0))
                raise ScenarioError(
                    f"patrols[{idx}] enters an obstacle (first at t = {ts[k_bad]:.4g}, "
                    f"position ({pos[k_bad, 0]:.4g}, {pos[k_bad, 1]:.4g}))"
                )

    return Scenario(
        grid=grid,
        time=time,
        x_s=x_s,
        x_t=x_t,
        speed=speed,
        sensor=sensor,
        obstacles=obstacles,
        patrols=patrols,
        solver=solver,
        phi=phi,
    )


def load_scenario(path) -> Scenario:
    """Load a scenario from a YAML file."""
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ScenarioError(f"cannot parse scenario file {path}: {e}") from e
    return parse_scenario(doc)


def serialize_scenario(sc: Scenario) -> str:
    """Scenario back to YAML text; parsing the result gives an equal Scenario.

    Start/target are emitted in their node-snapped positions, so serialization
    canonicalizes them."""
    return yaml.safe_dump(sc.to_dict(), sort_keys=False)
