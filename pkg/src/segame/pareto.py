"""Cost trade-off sweep between two patrols.

Sweeping the observer mixture along one edge of the simplex and recording
the evader's best-response costs traces the lower-left boundary of the
attainable cost region: each swept mixture supports the curve from below,
since the best response minimizes lambda . J over all feasible cost vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import Scenario
from .observability import ObservabilityField
from .tracer import best_response_cost


@dataclass
class ParetoPoint:
    lam: np.ndarray       # full mixture (zero off the swept pair)
    costs: np.ndarray     # traced best-response costs against every patrol
    value: float          # u^lambda at the start


def sweep_tradeoff(
    sc: Scenario,
    fields: Sequence[ObservabilityField],
    n_points: int = 11,
    pair: tuple[int, int] = (0, 1),
) -> list[ParetoPoint]:
    """Best responses along a uniform grid of the (i, j) simplex edge,
    sorted by the weight on patrol i."""
    i, j = pair
    r = sc.r
    if not (0 <= i < r and 0 <= j < r and i != j):
        raise ValueError(f"invalid patrol pair {pair} for r = {r}")
    out = []
    for w in np.linspace(0.0, 1.0, n_points):
        lam = np.zeros(r)
        lam[i] = w
        lam[j] = 1.0 - w
        resp = best_response_cost(sc, fields, lam)
        out.append(ParetoPoint(lam=lam, costs=resp.costs, value=resp.value))
    return out


def filter_dominated(points: Sequence[ParetoPoint], pair: tuple[int, int] = (0, 1)) -> list[ParetoPoint]:
    """Drop points whose (J_i, J_j) pair is weakly dominated by another's.
    Off by default in the sweep output; the raw set shows solver noise."""
    i, j = pair
    keep = []
    for a in points:
        dominated = any(
            (b.costs[i] <= a.costs[i] and b.costs[j] <= a.costs[j])
            and (b.costs[i] < a.costs[i] or b.costs[j] < a.costs[j])
            for b in points
        )
        if not dominated:
            keep.append(a)
    return keep


def tradeoff_to_csv(points: Sequence[ParetoPoint], pair: tuple[int, int], dest) -> None:
    """Delimited output: lambda_i, J_1..J_r, value — one row per swept point."""
    i = pair[0]
    r = len(points[0].costs)
    with open(dest, "w") as fh:
        cols = ",".join(f"J_{k + 1}" for k in range(r))
        fh.write(f"lambda_{i + 1},{cols},value\n")
        for p in points:
            js = ",".join(f"{c:.10g}" for c in p.costs)
            fh.write(f"{p.lam[i]:.10g},{js},{p.value:.10g}\n")
