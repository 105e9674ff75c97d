"""Block/sliding transform tests with brute-force and roundtrip oracles."""
import math

import numpy as np
import pytest

from krawtex.krawtchouk import (
    KrawtchoukParams,
    basis_set,
    krawtchouk_poly,
    norm_rho,
    polynomial_matrix,
    weight,
)
from krawtex.transform import (
    BLOCK_ANCHOR,
    band_energy_stats,
    forward_moments,
    ikcl_exact,
    inverse_moments,
    kcl_apply,
    merge_cube,
    split_cube,
)

PARAMS = KrawtchoukParams(p=0.5, size=8)


@pytest.fixture(scope="module")
def basis():
    return basis_set(PARAMS)


@pytest.fixture(scope="module")
def matrix():
    return polynomial_matrix(PARAMS)


def weighted_value(n: int, x: int, params: KrawtchoukParams) -> float:
    """Scalar-path weighted polynomial, independent of the matrix builder."""
    return krawtchouk_poly(n, x, params) * math.sqrt(
        weight(x, params) / norm_rho(n, params)
    )


class TestMomentMatrices:
    def test_zero_block(self, matrix):
        q = forward_moments(np.zeros((8, 8)), matrix, matrix)
        assert np.all(q == 0)

    def test_dc_basis_projects_to_single_coefficient(self, matrix, basis):
        q = forward_moments(basis.filters[0], matrix, matrix)
        expected = np.zeros((8, 8))
        expected[0, 0] = 1.0
        assert np.max(np.abs(q - expected)) < 1e-10

    def test_against_double_sum_oracle(self, matrix):
        rng = np.random.default_rng(11)
        block = rng.standard_normal((8, 8))
        q = forward_moments(block, matrix, matrix)
        for n in range(8):
            for m in range(8):
                direct = sum(
                    weighted_value(n, x, PARAMS)
                    * weighted_value(m, y, PARAMS)
                    * block[x, y]
                    for x in range(8)
                    for y in range(8)
                )
                assert q[n, m] == pytest.approx(direct, abs=1e-10)

    def test_roundtrip(self, matrix):
        rng = np.random.default_rng(12)
        block = rng.standard_normal((8, 8))
        back = inverse_moments(forward_moments(block, matrix, matrix), matrix, matrix)
        assert np.max(np.abs(back - block)) < 1e-8

    def test_zero_moments(self, matrix):
        assert np.all(inverse_moments(np.zeros((8, 8)), matrix, matrix) == 0)

    def test_single_coefficient_gives_scaled_filter(self, matrix, basis):
        for k in (0, 7, 33):
            i, j = basis.order[k]
            q = np.zeros((8, 8))
            q[i, j] = 2.5
            block = inverse_moments(q, matrix, matrix)
            np.testing.assert_allclose(block, 2.5 * basis.filters[k], atol=1e-10)

    def test_general_size(self):
        params = KrawtchoukParams(p=0.4, size=12)
        m = polynomial_matrix(params)
        rng = np.random.default_rng(13)
        block = rng.standard_normal((12, 12))
        back = inverse_moments(forward_moments(block, m, m), m, m)
        assert np.max(np.abs(back - block)) < 1e-8

    def test_dimension_mismatch(self, matrix):
        with pytest.raises(ValueError):
            forward_moments(np.zeros((4, 4)), matrix, matrix)
        with pytest.raises(ValueError):
            inverse_moments(np.zeros((4, 8)), matrix, matrix)


class TestKclApply:
    def test_zero_channel(self, basis):
        cube = kcl_apply(np.zeros((32, 32)), basis, mode="block")
        assert np.all(cube.maps == 0)
        cube = kcl_apply(np.zeros((32, 32)), basis, mode="sliding")
        assert np.all(cube.maps == 0)

    def test_tiled_basis_filter(self, basis):
        tile = np.tile(basis.filters[5], (4, 4))
        cube = kcl_apply(tile, basis, mode="block")
        assert np.max(np.abs(cube.maps[5] - 1.0)) < 1e-8
        others = np.delete(cube.maps, 5, axis=0)
        assert np.max(np.abs(others)) < 1e-8

    def test_sliding_matches_block_at_anchors(self, basis):
        rng = np.random.default_rng(21)
        channel = rng.random((40, 56))
        block = kcl_apply(channel, basis, mode="block")
        sliding = kcl_apply(channel, basis, mode="sliding")
        anchors = sliding.maps[:, BLOCK_ANCHOR::8, BLOCK_ANCHOR::8]
        np.testing.assert_allclose(anchors, block.maps, atol=1e-12)

    def test_sliding_output_same_size(self, basis):
        cube = kcl_apply(np.ones((30, 47)), basis, mode="sliding")
        assert cube.map_shape == (30, 47)

    def test_block_pads_to_multiple(self, basis):
        cube = kcl_apply(np.ones((30, 47)), basis, mode="block")
        assert cube.map_shape == (4, 6)
        assert cube.source_shape == (30, 47)

    def test_linearity(self, basis):
        rng = np.random.default_rng(22)
        a = rng.random((24, 24))
        b = rng.random((24, 24))
        lhs = kcl_apply(2.0 * a - 3.0 * b, basis, mode="sliding").maps
        rhs = 2.0 * kcl_apply(a, basis, mode="sliding").maps - 3.0 * kcl_apply(
            b, basis, mode="sliding"
        ).maps
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_empty_rejected(self, basis):
        with pytest.raises(ValueError):
            kcl_apply(np.zeros((0, 8)), basis)


class TestExactInverse:
    @pytest.mark.parametrize("seed", range(5))
    def test_roundtrip_64(self, basis, seed):
        rng = np.random.default_rng(seed)
        channel = rng.random((64, 64))
        cube = kcl_apply(channel, basis, mode="block")
        assert np.max(np.abs(ikcl_exact(cube, basis) - channel)) < 1e-8

    def test_roundtrip_nonmultiple(self, basis):
        rng = np.random.default_rng(31)
        channel = rng.random((50, 70))
        cube = kcl_apply(channel, basis, mode="block")
        back = ikcl_exact(cube, basis)
        assert back.shape == (50, 70)
        assert np.max(np.abs(back - channel)) < 1e-8

    def test_zero_cube(self, basis):
        cube = kcl_apply(np.zeros((16, 16)), basis, mode="block")
        assert np.all(ikcl_exact(cube, basis) == 0)

    def test_tiled_reconstruction(self, basis):
        tile = np.tile(basis.filters[9], (2, 3))
        cube = kcl_apply(tile, basis, mode="block")
        assert np.max(np.abs(ikcl_exact(cube, basis) - tile)) < 1e-8

    def test_mode_mismatch(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="sliding")
        with pytest.raises(ValueError):
            ikcl_exact(cube, basis)

    def test_parseval_per_block(self, basis):
        rng = np.random.default_rng(32)
        channel = rng.random((32, 32))
        cube = kcl_apply(channel, basis, mode="block")
        for bi in range(4):
            for bj in range(4):
                pixels = channel[bi * 8 : (bi + 1) * 8, bj * 8 : (bj + 1) * 8]
                coeff_energy = np.sum(cube.maps[:, bi, bj] ** 2)
                assert abs(coeff_energy - np.sum(pixels**2)) < 1e-8


class TestSplitMerge:
    def test_default_split_sizes(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="block")
        low, high = split_cube(cube, 60)
        assert low.maps.shape[0] == 60
        assert high.maps.shape[0] == 4

    def test_boundary_split(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="block")
        low, high = split_cube(cube, 1)
        assert low.maps.shape[0] == 1

    @pytest.mark.parametrize("t", [1, 17, 32, 60, 63])
    def test_merge_is_exact_inverse(self, basis, t):
        rng = np.random.default_rng(t)
        cube = kcl_apply(rng.random((24, 24)), basis, mode="sliding")
        merged = merge_cube(*split_cube(cube, t))
        assert np.array_equal(merged.maps, cube.maps)
        assert merged.mode == cube.mode
        assert merged.source_shape == cube.source_shape

    def test_out_of_range(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="block")
        for t in (0, 64, -1):
            with pytest.raises(ValueError):
                split_cube(cube, t)

    def test_merge_rejects_non_partition(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="block")
        low, high = split_cube(cube, 10)
        low2, _ = split_cube(cube, 20)
        with pytest.raises(ValueError):
            merge_cube(low2, high)


class TestBandStats:
    def test_identical_cubes(self, basis):
        rng = np.random.default_rng(41)
        cube = kcl_apply(rng.random((16, 16)), basis, mode="block")
        stats = band_energy_stats(cube, cube)
        assert np.all(stats.mean_diff == 0)
        assert np.all(stats.mean_abs_diff == 0)

    def test_single_band_perturbation_is_local(self, basis):
        rng = np.random.default_rng(42)
        cube = kcl_apply(rng.random((16, 16)), basis, mode="block")
        bumped = kcl_apply(rng.random((16, 16)), basis, mode="block")
        bumped.maps[:] = cube.maps
        bumped.maps[13] += 0.5
        stats = band_energy_stats(cube, bumped)
        assert stats.mean_diff[13] == pytest.approx(0.5)
        mask = np.ones(64, dtype=bool)
        mask[13] = False
        assert np.all(stats.mean_diff[mask] == 0)

    def test_low_bands_lose_more_than_high(self, basis, scene_pairs):
        from krawtex.color import rgb_to_ycbcr

        for hazy, clear in scene_pairs:
            hazy_cube = kcl_apply(rgb_to_ycbcr(hazy).y, basis, mode="sliding")
            clear_cube = kcl_apply(rgb_to_ycbcr(clear).y, basis, mode="sliding")
            stats = band_energy_stats(hazy_cube, clear_cube)
            assert stats.mean_abs_diff[:8].mean() > stats.mean_abs_diff[56:].mean()

    def test_shape_mismatch(self, basis):
        a = kcl_apply(np.ones((16, 16)), basis, mode="block")
        b = kcl_apply(np.ones((24, 24)), basis, mode="block")
        with pytest.raises(ValueError):
            band_energy_stats(a, b)
        c = kcl_apply(np.ones((16, 16)), basis, mode="sliding")
        with pytest.raises(ValueError):
            band_energy_stats(a, c)

    def test_csv_rows(self, basis):
        cube = kcl_apply(np.ones((16, 16)), basis, mode="block")
        stats = band_energy_stats(cube, cube)
        rows = stats.csv_rows()
        assert len(rows) == 64
        assert rows[0].startswith("0,0,0,")
