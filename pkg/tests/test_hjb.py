"""Backward value solver: kernel vs scalar reference, sentinels, analytics."""

import numpy as np
import pytest

from segame.hjb import (
    INF_CAP,
    INF_SNAP,
    REACH_LIMIT,
    SIMPLEX_TABLE,
    simplex_update,
    solve_initial_slice,
    solve_value_function,
    step_backward,
)
from segame.observability import ConstantObservability
from segame.scenario import parse_scenario


def free_space_doc(n=50, T=1.0, start=(0.2, 0.5), target=(0.8, 0.5), obstacles=()):
    # the corner patrol keeps the document valid; constant-K tests ignore it
    return {
        "grid": {"n": n},
        "time": {"dt": 1.0 / n, "T": T},
        "evader": {"start": list(start), "target": list(target), "speed": 1.0},
        "sensor": {"K0": 1.0, "sigma": 0.1, "alpha": 2 * np.pi},
        "obstacles": list(obstacles),
        "patrols": [
            {"kind": "circle", "center": [0.12, 0.12], "radius": 0.05, "omega": 1.0, "phase": 0.0}
        ],
    }


def reference_step(u, K, f, in_dom, target, dt, h):
    """Pure-python transcription of one backward step via simplex_update."""
    n1 = u.shape[0]
    out = np.empty_like(u)
    for i in range(n1):
        for j in range(n1):
            if not in_dom[i, j]:
                out[i, j] = INF_CAP
                continue
            c = u[i, j]
            best = c + dt * K[i, j]  # waiting in place
            for dai, daj, ddi, ddj in SIMPLEX_TABLE:
                ai, aj = i + dai, j + daj
                di, dj = i + ddi, j + ddj
                va = u[ai, aj] if (0 <= ai < n1 and 0 <= aj < n1) else INF_CAP
                vd = u[di, dj] if (0 <= di < n1 and 0 <= dj < n1) else INF_CAP
                best = min(best, simplex_update(c, va, vd, f[i, j], K[i, j], dt, h))
            out[i, j] = best if best <= INF_SNAP else INF_CAP
    out[target] = 0.0
    return out


class TestStepKernel:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_scalar_reference_on_random_slices(self, seed):
        rng = np.random.default_rng(seed)
        n1 = 12
        h = 1.0 / (n1 - 1)
        dt = h  # CFL-tight with max f = 1
        u = rng.uniform(0.0, 2.0, (n1, n1))
        u[rng.random((n1, n1)) < 0.1] = INF_CAP
        K = rng.uniform(0.0, 3.0, (n1, n1))
        f = rng.uniform(0.5, 1.0, (n1, n1))
        in_dom = rng.random((n1, n1)) < 0.9
        ti, tj = rng.integers(0, n1, 2)
        in_dom[ti, tj] = True
        got = step_backward(u, K, f, in_dom, (ti, tj), dt, h)
        want = reference_step(u, K, f, in_dom, (ti, tj), dt, h)
        np.testing.assert_allclose(got, want, rtol=1e-9)

    def test_waiting_costs_k_per_unit_time(self):
        n1 = 8
        h = 1.0 / (n1 - 1)
        u = np.full((n1, n1), 0.7)
        K = np.full((n1, n1), 0.4)
        in_dom = np.ones((n1, n1), dtype=bool)
        # zero speed: moving is impossible, only waiting remains
        out = step_backward(u, K, np.zeros((n1, n1)), in_dom, (0, 0), h, h)
        expected = np.full((n1, n1), 0.7 + h * 0.4)
        expected[0, 0] = 0.0
        np.testing.assert_allclose(out, expected)

    def test_target_pinned_to_zero(self):
        n1 = 6
        h = 1.0 / (n1 - 1)
        u = np.full((n1, n1), INF_CAP)
        out = step_backward(
            u, np.ones((n1, n1)), np.ones((n1, n1)), np.ones((n1, n1), bool), (3, 2), h, h
        )
        assert out[3, 2] == 0.0

    def test_blocked_nodes_stay_capped(self):
        n1 = 6
        h = 1.0 / (n1 - 1)
        u = np.zeros((n1, n1))
        in_dom = np.ones((n1, n1), dtype=bool)
        in_dom[2, 2] = False
        out = step_backward(
            u, np.zeros((n1, n1)), np.ones((n1, n1)), in_dom, (0, 0), h, h
        )
        assert out[2, 2] == INF_CAP

    def test_clamp_bounds_by_incoming_slice(self):
        rng = np.random.default_rng(7)
        n1 = 10
        h = 1.0 / (n1 - 1)
        u = rng.uniform(0.0, 1.0, (n1, n1))
        K = rng.uniform(0.5, 2.0, (n1, n1))
        f = np.ones((n1, n1))
        in_dom = np.ones((n1, n1), dtype=bool)
        out = step_backward(u, K, f, in_dom, (0, 0), h, h, clamp=True)
        assert np.all(out <= u + 1e-12)


class TestSentinels:
    """First two steps from the terminal slice have exact closed forms."""

    def setup_method(self):
        self.n1 = 9
        self.h = 1.0 / (self.n1 - 1)
        self.dt = self.h
        self.K = np.full((self.n1, self.n1), 0.3)
        self.f = np.ones((self.n1, self.n1))
        self.in_dom = np.ones((self.n1, self.n1), dtype=bool)
        self.tgt = (4, 4)
        self.u0 = np.full((self.n1, self.n1), INF_CAP)
        self.u0[self.tgt] = 0.0

    def step(self, u):
        return step_backward(u, self.K, self.f, self.in_dom, self.tgt, self.dt, self.h)

    def test_axis_neighbors_become_one_step_cost(self):
        out = self.step(self.u0)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            assert out[4 + di, 4 + dj] == pytest.approx(self.dt * 0.3, rel=1e-12)

    def test_diagonal_neighbors_carry_the_documented_halo(self):
        # one-sided bound through the diagonal leaves INF_CAP * (1 - 1/sqrt(2))
        out = self.step(self.u0)
        halo = INF_CAP * (1.0 - 1.0 / np.sqrt(2.0)) + self.dt * 0.3
        for di, dj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            assert out[4 + di, 4 + dj] == pytest.approx(halo, rel=1e-9)
        assert halo < INF_SNAP  # the halo survives the snap on purpose

    def test_second_step_resolves_diagonals_via_axis_hops(self):
        out = self.step(self.step(self.u0))
        for di, dj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            assert out[4 + di, 4 + dj] == pytest.approx(2 * self.dt * 0.3, rel=1e-6)

    def test_far_field_stays_at_cap(self):
        out = self.step(self.step(self.u0))
        assert out[0, 0] == INF_CAP
        assert out[8, 4] == INF_CAP


class TestMonotonicity:
    @pytest.mark.parametrize("seed", range(25))
    def test_pointwise_order_is_preserved(self, seed):
        rng = np.random.default_rng(100 + seed)
        n1 = 14
        h = 1.0 / (n1 - 1)
        u = rng.uniform(0.0, 3.0, (n1, n1))
        u[rng.random((n1, n1)) < 0.08] = INF_CAP
        v = u + rng.uniform(0.0, 1.5, (n1, n1))
        v[u == INF_CAP] = INF_CAP
        K = rng.uniform(0.0, 2.0, (n1, n1))
        f = rng.uniform(0.3, 1.0, (n1, n1))
        in_dom = rng.random((n1, n1)) < 0.92
        tgt = tuple(rng.integers(0, n1, 2))
        in_dom[tgt] = True
        su = step_backward(u, K, f, in_dom, tgt, h, h)
        sv = step_backward(v, K, f, in_dom, tgt, h, h)
        assert np.all(su <= sv + 1e-9)


class TestAnalyticValues:
    def test_axis_aligned_constant_rate(self):
        # free space, constant rate: value = sigma * distance / speed
        sc = parse_scenario(free_space_doc(n=50))
        K = ConstantObservability(grid=sc.grid, value=0.1)
        u = solve_initial_slice(K, sc)
        assert u[sc.x_s] == pytest.approx(0.06, abs=0.005)

    def test_diagonal_constant_rate(self):
        # the discrete front crosses diagonals at axis speed, so leave slack
        # beyond d/f before reading the value (here d/f = 0.85, T = 2)
        sc = parse_scenario(
            free_space_doc(n=50, T=2.0, start=(0.2, 0.2), target=(0.8, 0.8))
        )
        K = ConstantObservability(grid=sc.grid, value=0.1)
        u = solve_initial_slice(K, sc)
        assert u[sc.x_s] == pytest.approx(0.1 * 0.6 * np.sqrt(2.0), abs=0.01)

    def test_value_constant_while_slack_remains(self):
        # with d/f well inside the horizon, u(x_S, t) does not depend on t
        sc = parse_scenario(free_space_doc(n=40, T=1.5))
        K = ConstantObservability(grid=sc.grid, value=0.1)
        vf = solve_value_function(K, sc)
        early = vf.at_node(0, sc.x_s)
        later = vf.at_node(10, sc.x_s)  # t = 0.25
        assert later == pytest.approx(early, rel=1e-5)

    def test_out_of_horizon_start_is_unreachable(self):
        sc = parse_scenario(free_space_doc(n=40, T=0.5))  # d = 0.6 > T * f
        K = ConstantObservability(grid=sc.grid, value=0.1)
        u = solve_initial_slice(K, sc)
        assert u[sc.x_s] >= REACH_LIMIT

    def test_undersized_dt_is_rejected(self):
        # below h / max(f) the front cannot keep up; the solver refuses
        doc = free_space_doc(n=40)
        doc["time"] = {"dt": 0.5 / 40, "T": 1.0}
        with pytest.raises(Exception, match="front"):
            parse_scenario(doc)

    def test_wall_forces_a_detour(self):
        wall = {"shape": "rect", "center": [0.5, 0.5], "half_size": [0.03, 0.3]}
        sc = parse_scenario(free_space_doc(n=50, T=2.0, obstacles=[wall]))
        K = ConstantObservability(grid=sc.grid, value=0.1)
        u = solve_initial_slice(K, sc)
        # shortest route over either wall tip is about 0.87 long
        assert 0.082 <= u[sc.x_s] <= 0.095

    def test_interp_matches_nodes(self):
        sc = parse_scenario(free_space_doc(n=30))
        K = ConstantObservability(grid=sc.grid, value=0.2)
        vf = solve_value_function(K, sc)
        pts = np.array([sc.grid.node_xy((10, 17)), sc.grid.node_xy((3, 4))])
        got = vf.interp(pts, 0)
        want = [vf.at_node(0, (10, 17)), vf.at_node(0, (3, 4))]
        np.testing.assert_allclose(got, want, rtol=1e-6)
