import math

import numpy as np
import pytest

from segame.scenario import (
    CirclePatrol,
    DiskObstacle,
    Grid2D,
    LemniscatePatrol,
    PolygonObstacle,
    PolylinePatrol,
    RectObstacle,
    ScenarioError,
    bilinear,
    build_level_set,
    parse_scenario,
    serialize_scenario,
)


def minimal_doc(**overrides):
    doc = {
        "grid": {"n": 20},
        "time": {"dt": 0.05, "T": 2.0},
        "evader": {"start": [0.1, 0.5], "target": [0.9, 0.5], "speed": 1.0},
        "sensor": {"K0": 1.0, "sigma": 0.1, "alpha": 2 * math.pi},
        "obstacles": [],
        "patrols": [
            {"kind": "circle", "center": [0.5, 0.5], "radius": 0.2, "omega": 1.0, "phase": 0.0}
        ],
    }
    doc.update(overrides)
    return doc


class TestGrid:
    def test_spacing_and_shape(self):
        g = Grid2D(20)
        assert g.h == pytest.approx(0.05)
        assert g.shape == (21, 21)
        assert g.coords()[0] == 0.0 and g.coords()[-1] == 1.0

    def test_nearest_node_rounds(self):
        g = Grid2D(10)
        assert g.nearest_node((0.12, 0.58)) == (1, 6)
        np.testing.assert_allclose(g.node_xy((1, 6)), [0.1, 0.6])


class TestObstacles:
    def test_disk_sign_convention(self):
        d = DiskObstacle(center=(0.5, 0.5), radius=0.2)
        x = np.array([0.5, 0.5, 0.9])
        y = np.array([0.5, 0.69, 0.5])
        s = d.signed_distance(x, y)
        assert s[0] < 0  # center is inside
        assert s[1] < 0
        assert s[2] == pytest.approx(0.2)

    def test_rect_inside_outside(self):
        r = RectObstacle(center=(0.5, 0.5), half_size=(0.1, 0.2))
        assert r.signed_distance(np.array([0.5]), np.array([0.5]))[0] < 0
        assert r.signed_distance(np.array([0.65]), np.array([0.5]))[0] == pytest.approx(0.05)
        # corner distance is Euclidean, not Chebyshev
        assert r.signed_distance(np.array([0.7]), np.array([0.8]))[0] == pytest.approx(
            math.hypot(0.1, 0.1)
        )

    def test_polygon_matches_rect(self):
        # an axis-aligned square expressed as a polygon
        p = PolygonObstacle(vertices=((0.4, 0.4), (0.6, 0.4), (0.6, 0.6), (0.4, 0.6)))
        r = RectObstacle(center=(0.5, 0.5), half_size=(0.1, 0.1))
        xs, ys = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41), indexing="ij")
        np.testing.assert_allclose(
            p.signed_distance(xs.ravel(), ys.ravel()),
            r.signed_distance(xs.ravel(), ys.ravel()),
            atol=1e-12,
        )

    def test_level_set_is_min_of_square_and_obstacles(self):
        g = Grid2D(10)
        phi = build_level_set(g, [DiskObstacle(center=(0.5, 0.5), radius=0.15)])
        # wall nodes sit exactly on the zero level set
        assert phi.values[0, 5] == pytest.approx(0.0)
        # obstacle interior is negative
        assert phi.values[5, 5] < 0
        # free corner-adjacent node is governed by the wall distance
        assert phi.values[1, 5] == pytest.approx(0.1)


class TestBilinear:
    def test_exact_at_nodes_and_linear_between(self):
        g = Grid2D(4)
        vals = np.arange(25, dtype=float).reshape(5, 5)
        pts = np.array([[0.25, 0.5], [0.375, 0.5]])
        out = bilinear(vals, g, pts)
        assert out[0] == pytest.approx(vals[1, 2])
        assert out[1] == pytest.approx(0.5 * (vals[1, 2] + vals[2, 2]))

    def test_clamps_outside_domain(self):
        g = Grid2D(4)
        vals = np.ones((5, 5))
        vals[0, :] = 5.0
        out = bilinear(vals, g, np.array([[-0.3, 0.5]]))
        assert out[0] == pytest.approx(5.0)


class TestPatrols:
    def test_circle_position_and_heading(self):
        p = CirclePatrol(center=(0.5, 0.5), radius=0.2, omega=math.pi / 2, phase=0.0)
        pos, head = p.states(np.array([0.0, 1.0]))
        np.testing.assert_allclose(pos[0], [0.7, 0.5], atol=1e-15)
        np.testing.assert_allclose(pos[1], [0.5, 0.7], atol=1e-15)
        # moving counterclockwise: heading at phase 0 points +y
        np.testing.assert_allclose(head[0], [0.0, 1.0], atol=1e-15)

    def test_circle_clockwise_heading_flips(self):
        p = CirclePatrol(center=(0.5, 0.5), radius=0.2, omega=-math.pi / 2, phase=0.0)
        _, head = p.states(np.array([0.0]))
        np.testing.assert_allclose(head[0], [0.0, -1.0], atol=1e-15)

    def test_lemniscate_passes_center_and_stays_bounded(self):
        p = LemniscatePatrol(center=(0.5, 0.5), scale=0.3, omega=1.0, phase=0.0)
        ts = np.linspace(0.0, 2 * math.pi, 400)
        pos, head = p.states(ts)
        assert np.all(pos >= 0.5 - 0.3 - 1e-12) and np.all(pos <= 0.5 + 0.3 + 1e-12)
        # the figure-eight's velocity never vanishes, so headings are unit
        np.testing.assert_allclose(np.hypot(head[:, 0], head[:, 1]), 1.0, atol=1e-12)

    def test_lemniscate_mirror_pair(self):
        # omega -> -omega, phase -> -phase mirrors the motion about the
        # horizontal line through the center, including headings.
        a = LemniscatePatrol(center=(0.5, 0.5), scale=0.3, omega=0.8, phase=0.6)
        b = LemniscatePatrol(center=(0.5, 0.5), scale=0.3, omega=-0.8, phase=-0.6)
        ts = np.linspace(0.0, 5.0, 97)
        pa, ha = a.states(ts)
        pb, hb = b.states(ts)
        np.testing.assert_allclose(pb[:, 0], pa[:, 0], atol=1e-12)
        np.testing.assert_allclose(pb[:, 1], 1.0 - pa[:, 1], atol=1e-12)
        np.testing.assert_allclose(hb[:, 0], ha[:, 0], atol=1e-12)
        np.testing.assert_allclose(hb[:, 1], -ha[:, 1], atol=1e-12)

    def test_polyline_walks_at_constant_speed(self):
        p = PolylinePatrol(vertices=((0.2, 0.2), (0.8, 0.2), (0.8, 0.8)), period=2.4, phase=0.0)
        pos, head = p.states(np.array([0.0, 0.6, 1.2, 1.8]))
        # closed loop of length 0.6+0.6+sqrt(0.72); period 2.4 fixes the speed
        np.testing.assert_allclose(pos[0], [0.2, 0.2], atol=1e-12)
        total = 1.2 + math.hypot(0.6, 0.6)
        speed = total / 2.4
        np.testing.assert_allclose(pos[1], [0.2 + 0.6 * speed, 0.2], atol=1e-12)
        np.testing.assert_allclose(head[0], [1.0, 0.0], atol=1e-12)

    def test_polyline_corner_uses_incoming_segment(self):
        p = PolylinePatrol(vertices=((0.2, 0.2), (0.8, 0.2), (0.8, 0.8)), period=3.0, phase=0.0)
        total = 1.2 + math.hypot(0.6, 0.6)
        t_corner = 0.6 / total * 3.0
        _, head = p.states(np.array([t_corner]))
        np.testing.assert_allclose(head[0], [1.0, 0.0], atol=1e-12)


class TestParsing:
    def test_minimal_doc_parses(self):
        sc = parse_scenario(minimal_doc())
        assert sc.r == 1
        assert sc.grid.n == 20
        assert sc.time.n_t == 40
        np.testing.assert_allclose(sc.start_xy, [0.1, 0.5])

    def test_round_trip_equality(self):
        import yaml

        doc = minimal_doc(
            obstacles=[
                {"shape": "disk", "center": [0.15, 0.8], "radius": 0.1},
                {"shape": "rect", "center": [0.3, 0.3], "half_size": [0.05, 0.1]},
            ]
        )
        sc = parse_scenario(doc)
        again = parse_scenario(yaml.safe_load(serialize_scenario(sc)))
        assert sc == again

    def test_start_snaps_to_nearest_node(self):
        doc = minimal_doc(evader={"start": [0.1024, 0.501], "target": [0.9, 0.5], "speed": 1.0})
        sc = parse_scenario(doc)
        np.testing.assert_allclose(sc.start_xy, [0.1, 0.5])

    def test_cfl_violation_rejected(self):
        doc = minimal_doc(time={"dt": 0.06, "T": 2.4})
        with pytest.raises(ScenarioError, match="CFL"):
            parse_scenario(doc)

    def test_cfl_boundary_has_fuzz(self):
        # dt == h passes despite floating-point noise in h = 1/n
        doc = minimal_doc(grid={"n": 30}, time={"dt": 1.0 / 30.0, "T": 1.0})
        parse_scenario(doc)

    def test_horizon_must_be_a_multiple_of_dt(self):
        doc = minimal_doc(time={"dt": 0.05, "T": 2.03})
        with pytest.raises(ScenarioError, match="not a positive integer"):
            parse_scenario(doc)

    def test_start_inside_obstacle_rejected(self):
        doc = minimal_doc(obstacles=[{"shape": "disk", "center": [0.1, 0.5], "radius": 0.05}])
        with pytest.raises(ScenarioError, match="start"):
            parse_scenario(doc)

    def test_needs_at_least_one_patrol(self):
        doc = minimal_doc(patrols=[])
        with pytest.raises(ScenarioError, match="patrol"):
            parse_scenario(doc)

    def test_alpha_out_of_range_rejected(self):
        doc = minimal_doc(sensor={"K0": 1.0, "sigma": 0.1, "alpha": 7.0})
        with pytest.raises(ScenarioError, match="alpha"):
            parse_scenario(doc)

    def test_unknown_solver_key_rejected(self):
        doc = minimal_doc(solver={"step_sea": 1.0})
        with pytest.raises(ScenarioError, match="solver"):
            parse_scenario(doc)

    def test_speed_field_shape_checked(self):
        doc = minimal_doc()
        doc["evader"]["speed"] = [[1.0, 2.0], [3.0, 4.0]]
        with pytest.raises(ScenarioError, match="speed"):
            parse_scenario(doc)
