"""Nash equilibrium of the observer-evader game.

The observer's problem max_lambda G(lambda), with G the evader's best-response
cost against the mixture lambda, is concave: G is an infimum of linear
functions of lambda.  It is maximized by projected supergradient ascent,
using the traced best response's per-patrol costs as a supergradient.  The
evader's equilibrium mixture over near-optimal trajectories is then the
solution of a small linear program equalizing costs across the observer's
support.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .scenario import Scenario
from .observability import MixedObservability, ObservabilityField, build_observability
from .hjb import solve_value_function
from .tracer import BestResponse, TracedPath, best_response_cost

log = logging.getLogger(__name__)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold algorithm: find the largest k for which keeping the k
    largest coordinates (shifted to sum to 1) leaves them all positive.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def evaluate_mixture(
    sc: Scenario,
    fields: Sequence[ObservabilityField],
    lam: np.ndarray,
) -> BestResponse:
    """G(lambda) together with its supergradient (the per-patrol costs)."""
    return best_response_cost(sc, fields, lam)


@dataclass
class AscentRecord:
    iteration: int
    lam: np.ndarray
    value: float
    step: float


@dataclass
class AscentResult:
    lam_star: np.ndarray
    value: float                    # best observed G
    history: list[AscentRecord]
    best_response: BestResponse     # response at lam_star
    stopped_by: str


def maximize_observer_value(
    sc: Scenario,
    fields: Sequence[ObservabilityField],
    progress=None,
) -> AscentResult:
    """Projected supergradient ascent on G from the uniform mixture.

    Step q uses size c / sqrt(q + 1); c defaults to half the uniform-mixture
    value over the sup-norm of its supergradient, which makes the first move
    a simplex-scale displacement.  Ascent is not monotone, so the best
    iterate (not the last) is returned.  Stops when max_iters evaluations are
    spent or the best value fails to improve by grad_tol (relatively) over a
    sliding window.
    """
    p = sc.solver
    r = sc.r
    lam = np.full(r, 1.0 / r)
    best: Optional[BestResponse] = None
    best_val = -np.inf
    history: list[AscentRecord] = []
    stopped_by = "max_iters"
    window_anchor = -np.inf
    c = p.step_c

    if r == 1:
        resp = evaluate_mixture(sc, fields, lam)
        history.append(AscentRecord(0, lam.copy(), resp.value, 0.0))
        return AscentResult(lam, resp.value, history, resp, "single_patrol")

    for q in range(p.max_iters):
        resp = evaluate_mixture(sc, fields, lam)
        if resp.value > best_val:
            best_val = resp.value
            best = resp
        if c is None:
            gnorm = float(np.max(np.abs(resp.costs)))
            c = 0.5 * resp.value / max(gnorm, 1e-12)
        step = c / np.sqrt(q + 1.0)
        history.append(AscentRecord(q, lam.copy(), resp.value, step))
        if progress is not None:
            progress(q, resp.value, best_val)
        if (q + 1) % p.window == 0:
            if best_val - window_anchor <= p.grad_tol * max(abs(best_val), 1e-12):
                stopped_by = "stagnation"
                break
            window_anchor = best_val
        lam = project_simplex(lam + step * resp.costs)

    return AscentResult(best.lam, best_val, history, best, stopped_by)


@dataclass
class SupportedTrajectory:
    """A candidate equilibrium trajectory for the evader."""

    path: TracedPath
    costs: np.ndarray        # against each patrol
    lam_cost: float          # cost against lambda_star
    source_lam: np.ndarray   # the (possibly perturbed) mixture that produced it


def _aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max pointwise distance after extending the shorter path by its
    endpoint (paths are sampled on the same time grid)."""
    m = max(len(a), len(b))
    if len(a) < m:
        a = np.vstack([a, np.repeat(a[-1:], m - len(a), axis=0)])
    if len(b) < m:
        b = np.vstack([b, np.repeat(b[-1:], m - len(b), axis=0)])
    return float(np.max(np.hypot(*(a - b).T)))


def _perturbed_mixtures(lam: np.ndarray, delta: float) -> list[np.ndarray]:
    """Deterministic two-sided edge perturbations of lambda on the simplex.

    Walks every coordinate pair at two scales (delta and 2 delta): the kink
    of G where the best response flips sides is rarely dead-centered on
    lambda*, and the wider ring catches flips the narrow one misses."""
    r = len(lam)
    out = []
    seen = set()
    for scale in (delta, 2.0 * delta):
        for i in range(r):
            for j in range(i + 1, r):
                e = np.zeros(r)
                e[i], e[j] = 1.0, -1.0
                e /= np.sqrt(2.0)
                for s in (+1.0, -1.0):
                    lam_p = project_simplex(lam + s * scale * e)
                    key = tuple(np.round(lam_p, 12))
                    if key not in seen:
                        seen.add(key)
                        out.append(lam_p)
    return out


def collect_optimal_trajectories(
    sc: Scenario,
    fields: Sequence[ObservabilityField],
    lam_star: np.ndarray,
    base: BestResponse,
) -> list[SupportedTrajectory]:
    """Gather near-optimal trajectories by re-tracing under small mixture
    perturbations, cluster them by pointwise distance, keep per-cluster
    representatives that stay near-optimal against lambda_star, and cap the
    selection at r trajectories by greedy best-spread."""
    p = sc.solver
    value = base.value
    cands: list[SupportedTrajectory] = [
        SupportedTrajectory(
            path=base.path,
            costs=base.costs,
            lam_cost=float(np.dot(lam_star, base.costs)),
            source_lam=lam_star.copy(),
        )
    ]
    for lam_p in _perturbed_mixtures(lam_star, p.perturbation):
        try:
            resp = best_response_cost(sc, fields, lam_p)
        except Exception as e:  # keep collecting; a perturbation may be infeasible
            log.warning("perturbed trace failed at %s: %s", lam_p, e)
            continue
        if not resp.path.reached:
            continue
        cands.append(
            SupportedTrajectory(
                path=resp.path,
                costs=resp.costs,
                lam_cost=float(np.dot(lam_star, resp.costs)),
                source_lam=lam_p,
            )
        )

    # cluster by trajectory distance
    cdist = sc.cluster_dist()
    clusters: list[list[SupportedTrajectory]] = []
    for cand in cands:
        for cl in clusters:
            if _aligned_distance(cand.path.points, cl[0].path.points) < cdist:
                cl.append(cand)
                break
        else:
            clusters.append([cand])

    # representative: cheapest against lambda_star; drop clusters that are
    # not within opt_tol of the equilibrium value
    reps = []
    for cl in clusters:
        rep = min(cl, key=lambda s: s.lam_cost)
        if rep.lam_cost <= value * (1.0 + p.opt_tol) + 1e-15:
            reps.append(rep)
    if not reps:  # the unperturbed response is optimal by construction
        reps = [cands[0]]

    # cap at r, keeping the cheapest and then maximizing spread
    r = sc.r
    if len(reps) > r:
        chosen = [min(range(len(reps)), key=lambda idx: reps[idx].lam_cost)]
        while len(chosen) < r:
            def spread(idx):
                return min(
                    _aligned_distance(reps[idx].path.points, reps[c].path.points)
                    for c in chosen
                )
            rest = [idx for idx in range(len(reps)) if idx not in chosen]
            chosen.append(max(rest, key=spread))
        reps = [reps[idx] for idx in sorted(chosen)]
    return reps


@dataclass
class EvaderPolicy:
    theta: np.ndarray
    residual: float           # relative max deviation on the support
    support: np.ndarray       # observer support indices used


def solve_evader_policy(
    trajectories: Sequence[SupportedTrajectory],
    lam_star: np.ndarray,
    value: float,
    sc: Scenario,
) -> EvaderPolicy:
    """Mixture over trajectories equalizing expected cost across the
    observer's support.

    Solves  min_t,theta t  s.t. |sum_a theta_a J_a,i - value| <= t for every
    supported patrol i, and sum_a theta_a J_a,i - value <= t for every
    unsupported one (a deviation to an idle patrol must not pay either; the
    cap is one-sided because earning less than the value is harmless there),
    theta on the simplex.  The residual is reported relative to the value; a
    large residual means the collected trajectories cannot balance the
    support and the certificate will flag it.
    """
    p = sc.solver
    J = np.array([s.costs for s in trajectories])  # (A, r)
    A = len(trajectories)
    support = np.nonzero(lam_star > p.tol_supp)[0]
    off = np.nonzero(lam_star <= p.tol_supp)[0]
    ns = len(support)
    # variables: theta_0..theta_{A-1}, t
    c = np.zeros(A + 1)
    c[-1] = 1.0
    a_ub = np.zeros((2 * ns + len(off), A + 1))
    b_ub = np.zeros(2 * ns + len(off))
    for row, i in enumerate(support):
        a_ub[2 * row, :A] = J[:, i]
        a_ub[2 * row, -1] = -1.0
        b_ub[2 * row] = value
        a_ub[2 * row + 1, :A] = -J[:, i]
        a_ub[2 * row + 1, -1] = -1.0
        b_ub[2 * row + 1] = -value
    for row, i in enumerate(off):
        a_ub[2 * ns + row, :A] = J[:, i]
        a_ub[2 * ns + row, -1] = -1.0
        b_ub[2 * ns + row] = value
    a_eq = np.zeros((1, A + 1))
    a_eq[0, :A] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0.0, None)] * A + [(0.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if not res.success:
        raise RuntimeError(f"evader policy LP failed: {res.message}")
    theta = np.maximum(res.x[:A], 0.0)
    theta /= theta.sum()
    residual = float(res.x[-1]) / max(abs(value), 1e-12)
    return EvaderPolicy(theta=theta, residual=residual, support=support)


@dataclass
class Certificate:
    """Approximate-equilibrium checks at tolerance nash_tol/opt_tol."""

    certified: bool
    support_gap: float       # max_i in support |E_theta J_i - value| / value
    off_support_gap: float   # max_i E_theta J_i / value - 1 (positive = violation)
    traj_gap: float          # max_a (lam* . J_a / value - 1)
    expected_costs: np.ndarray


def certify_equilibrium(
    trajectories: Sequence[SupportedTrajectory],
    policy: EvaderPolicy,
    lam_star: np.ndarray,
    value: float,
    sc: Scenario,
) -> Certificate:
    """Check the two sides of the saddle point:

    (a) on the observer's support, the evader mixture leaves every patrol
        with expected cost within nash_tol of the value;
    (b) no patrol (supported or not) gains more than nash_tol over the value
        against the evader mixture;
    (c) every kept trajectory costs within opt_tol of the value against
        lambda_star.
    """
    p = sc.solver
    J = np.array([s.costs for s in trajectories])
    expected = policy.theta @ J  # (r,)
    denom = max(abs(value), 1e-12)
    support_gap = float(np.max(np.abs(expected[policy.support] - value))) / denom
    off_support_gap = float(np.max(expected)) / denom - 1.0
    traj_gap = float(np.max(J @ lam_star)) / denom - 1.0
    ok = (
        support_gap <= p.nash_tol
        and off_support_gap <= p.nash_tol
        and traj_gap <= p.opt_tol
    )
    return Certificate(
        certified=bool(ok),
        support_gap=support_gap,
        off_support_gap=off_support_gap,
        traj_gap=traj_gap,
        expected_costs=expected,
    )


@dataclass
class GameSolution:
    scenario: Scenario
    lam_star: np.ndarray
    value: float
    trajectories: list[SupportedTrajectory]
    policy: EvaderPolicy
    certificate: Certificate
    ascent: AscentResult
    fields: list[ObservabilityField] = field(repr=False, default=None)


def solve_game(
    sc: Scenario,
    threads: int = 1,
    progress=None,
    fields: Optional[list[ObservabilityField]] = None,
) -> GameSolution:
    """End-to-end equilibrium solve for a scenario."""
    if fields is None:
        fields = build_observability(sc, threads=threads)
    ascent = maximize_observer_value(sc, fields, progress=progress)
    trajs = collect_optimal_trajectories(sc, fields, ascent.lam_star, ascent.best_response)
    policy = solve_evader_policy(trajs, ascent.lam_star, ascent.value, sc)
    cert = certify_equilibrium(trajs, policy, ascent.lam_star, ascent.value, sc)
    return GameSolution(
        scenario=sc,
        lam_star=ascent.lam_star,
        value=ascent.value,
        trajectories=trajs,
        policy=policy,
        certificate=cert,
        ascent=ascent,
        fields=fields,
    )
