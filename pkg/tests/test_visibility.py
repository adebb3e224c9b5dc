import math

import numpy as np
import pytest

from segame.scenario import DiskObstacle, Grid2D, RectObstacle, SensorModel, build_level_set
from segame.visibility import (
    VisibilityVolume,
    build_visibility,
    offsets_by_distance,
    sector_mask,
    slice_mask,
    solve_shadow_field,
    visible_oracle,
)

OMNI = SensorModel(K0=1.0, sigma=0.1, alpha=2 * math.pi)


def free_phi(n=40):
    return build_level_set(Grid2D(n), [])


class TestOffsets:
    def test_sorted_by_distance_and_complete(self):
        offs = offsets_by_distance(6)
        d2 = offs[:, 0] ** 2 + offs[:, 1] ** 2
        assert np.all(np.diff(d2) >= 0)
        assert len(offs) == 13 * 13
        assert tuple(offs[0]) == (0, 0)

    def test_cached_identity(self):
        assert offsets_by_distance(9) is offsets_by_distance(9)


class TestShadowField:
    def test_no_obstacles_means_no_shadow(self):
        phi = free_phi()
        psi = solve_shadow_field(phi, np.array([0.5, 0.5]))
        # psi = phi everywhere: nothing occludes
        np.testing.assert_allclose(psi, phi.values, atol=1e-12)

    def test_shadow_behind_disk(self):
        g = Grid2D(80)
        phi = build_level_set(g, [DiskObstacle(center=(0.5, 0.5), radius=0.1)])
        z = np.array([0.2, 0.5])
        psi = solve_shadow_field(phi, z)
        # directly behind the disk (same ray from z) the shadow is negative
        assert psi[g.nearest_node((0.75, 0.5))] < 0
        # off the shadow cone it stays positive
        assert psi[g.nearest_node((0.75, 0.9))] > 0
        # never exceeds phi
        assert np.all(psi <= phi.values + 1e-12)

    def test_point_symmetry_of_straight_shadow(self):
        g = Grid2D(60)
        phi = build_level_set(g, [DiskObstacle(center=(0.5, 0.5), radius=0.12)])
        psi = solve_shadow_field(phi, np.array([0.1, 0.5]))
        # the geometry is symmetric about y = 0.5, so the sweep must be too
        np.testing.assert_allclose(psi, psi[:, ::-1], atol=1e-9)


class TestSectorMask:
    def test_full_circle_sees_everything(self):
        g = Grid2D(20)
        m = sector_mask(g, np.array([0.5, 0.5]), np.array([1.0, 0.0]), 2 * math.pi, None)
        assert m.all()

    def test_half_plane_boundary_counts_as_visible(self):
        g = Grid2D(20)
        # alpha = pi: sector spans +/- pi/2 around heading +x
        m = sector_mask(g, np.array([0.5, 0.5]), np.array([1.0, 0.0]), math.pi, None)
        assert m[g.nearest_node((0.8, 0.5))]
        assert not m[g.nearest_node((0.2, 0.5))]
        # nodes exactly on the boundary ray are visible (ties included)
        assert m[g.nearest_node((0.5, 0.9))]
        assert m[g.nearest_node((0.5, 0.1))]

    def test_observer_node_always_visible(self):
        g = Grid2D(20)
        m = sector_mask(g, np.array([0.5, 0.5]), np.array([0.0, 1.0]), math.pi / 3, None)
        assert m[10, 10]

    def test_range_limit(self):
        g = Grid2D(20)
        m = sector_mask(g, np.array([0.5, 0.5]), np.array([1.0, 0.0]), 2 * math.pi, 0.2)
        assert m[g.nearest_node((0.65, 0.5))]
        assert not m[g.nearest_node((0.75, 0.5))]


class TestSliceMask:
    def test_domain_walls_are_visible(self):
        g = Grid2D(30)
        phi = build_level_set(g, [])
        m = slice_mask(phi, np.array([0.5, 0.5]), np.array([1.0, 0.0]), OMNI)
        # wall nodes lie on phi == 0 and must not be carved out of the mask
        assert m[0, :].all() and m[-1, :].all()

    def test_obstacle_interior_is_not_visible(self):
        g = Grid2D(40)
        phi = build_level_set(g, [DiskObstacle(center=(0.7, 0.5), radius=0.1)])
        m = slice_mask(phi, np.array([0.2, 0.5]), np.array([1.0, 0.0]), OMNI)
        assert not m[g.nearest_node((0.7, 0.5))]
        assert not m[g.nearest_node((0.9, 0.5))]  # shadowed
        assert m[g.nearest_node((0.2, 0.8))]


class TestVolume:
    def test_pack_round_trip(self):
        g = Grid2D(17)
        rng = np.random.default_rng(0)
        masks = rng.random((2, 4, 18, 18)) < 0.5
        vol = VisibilityVolume.from_masks(g, masks)
        for p in range(2):
            for k in range(4):
                np.testing.assert_array_equal(vol.mask(p, k), masks[p, k])

    def test_bit_gather_matches_mask(self):
        g = Grid2D(9)
        rng = np.random.default_rng(1)
        masks = rng.random((1, 3, 10, 10)) < 0.3
        vol = VisibilityVolume.from_masks(g, masks)
        ii, jj = np.divmod(np.arange(100), 10)
        got = vol.visible_at_nodes(0, 2, ii, jj)
        np.testing.assert_array_equal(got, masks[0, 2, ii, jj])


class TestOracleAgreement:
    @pytest.mark.parametrize("alpha", [2 * math.pi, 2 * math.pi / 3])
    def test_masks_match_segment_sampling(self, alpha):
        g = Grid2D(60)
        phi = build_level_set(
            g,
            [
                DiskObstacle(center=(0.45, 0.55), radius=0.12),
                RectObstacle(center=(0.7, 0.3), half_size=(0.08, 0.06)),
            ],
        )
        sensor = SensorModel(K0=1.0, sigma=0.1, alpha=alpha)
        z = np.array([0.2, 0.35])
        heading = np.array([math.cos(0.5), math.sin(0.5)])
        m = slice_mask(phi, z, heading, sensor)
        xs, ys = g.meshgrid()
        disagree = 0
        interior = 0
        for i in range(g.n + 1):
            for j in range(g.n + 1):
                if phi.values[i, j] < 0:
                    continue
                interior += 1
                o = visible_oracle(phi, z, np.array([xs[i, j], ys[i, j]]), heading, sensor)
                disagree += int(o != m[i, j])
        assert disagree / interior <= 0.01


def test_build_visibility_shapes():
    g = Grid2D(25)
    phi = build_level_set(g, [])
    ts = np.linspace(0, 1, 5)
    pos = np.stack([np.full(5, 0.5), np.linspace(0.2, 0.8, 5)], axis=1)[None]
    heads = np.tile(np.array([1.0, 0.0]), (1, 5, 1))
    vol = build_visibility(phi, pos, heads, OMNI)
    assert vol.r == 1
    assert vol.mask(0, 4).shape == (26, 26)
    ii = np.array([0, 13])
    jj = np.array([0, 13])
    assert vol.visible_at_nodes(0, 0, ii, jj).all()
