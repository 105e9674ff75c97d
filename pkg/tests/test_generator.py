"""Generator and discriminator architecture contracts."""
import numpy as np
import pytest

from krawtex.krawtchouk import KrawtchoukParams, basis_set
from krawtex.nn.discriminator import Discriminator
from krawtex.nn.generator import (
    Generator,
    GeneratorConfig,
    KrawtchoukAnalysis,
    KrawtchoukSynthesis,
)
from krawtex.transform import kcl_apply


class TestIdentityAtInit:
    @pytest.mark.parametrize("shape", [(16, 16), (24, 32), (64, 64)])
    def test_identity(self, shape):
        gen = Generator(GeneratorConfig(scale=0.5), seed=0)
        rng = np.random.default_rng(1)
        x = rng.random((2, 1) + shape)
        out = gen.forward(x, training=False)
        assert np.max(np.abs(out - x)) < 1e-6

    def test_identity_in_training_mode(self):
        gen = Generator(GeneratorConfig(scale=0.5), seed=0)
        rng = np.random.default_rng(2)
        x = rng.random((3, 1, 16, 16))
        out = gen.forward(x, training=True)
        assert np.max(np.abs(out - x)) < 1e-6

    def test_random_init_is_not_identity(self):
        gen = Generator(GeneratorConfig(scale=0.5), seed=0, init="random")
        rng = np.random.default_rng(3)
        x = rng.random((1, 1, 16, 16))
        assert np.max(np.abs(gen.forward(x) - x)) > 1e-8


class TestShapes:
    def test_output_shape_matches_input(self):
        gen = Generator(GeneratorConfig(scale=0.25), seed=0)
        for shape in ((1, 1, 16, 16), (2, 1, 32, 24), (1, 1, 48, 64)):
            x = np.random.default_rng(0).random(shape) * 0.5 + 0.2
            assert gen.forward(x).shape == shape

    def test_batch_of_fifteen_128px_patches(self):
        gen = Generator(GeneratorConfig(scale=0.25), seed=0)
        x = np.random.default_rng(1).random((15, 1, 128, 128))
        out = gen.forward(x, training=True)
        assert out.shape == (15, 1, 128, 128)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_invalid_sizes_rejected(self):
        gen = Generator(GeneratorConfig(scale=0.25), seed=0)
        with pytest.raises(ValueError):
            gen.forward(np.zeros((1, 1, 8, 8)))  # below minimum side
        with pytest.raises(ValueError):
            gen.forward(np.zeros((1, 1, 20, 16)))  # not divisible by 8
        with pytest.raises(ValueError):
            gen.forward(np.zeros((1, 3, 16, 16)))  # multi-channel


class TestSplitCoverage:
    @pytest.mark.parametrize("t", [1, 20, 40, 60, 63])
    def test_branch_widths_partition_the_cube(self, t):
        gen = Generator(GeneratorConfig(split_point=t, scale=0.25), seed=0)
        assert gen.low.entry.w.value.shape[1] == t
        assert gen.high.entry.w.value.shape[1] == 64 - t
        assert gen.low.exit.w.value.shape[0] == t
        assert gen.high.exit.w.value.shape[0] == 64 - t

    def test_low_branch_deeper_than_high(self):
        gen = Generator(GeneratorConfig(scale=0.5), seed=0)
        low_convs = sum(1 for name, _ in gen.low.named_parameters() if name.endswith(".w"))
        high_convs = sum(1 for name, _ in gen.high.named_parameters() if name.endswith(".w"))
        assert low_convs > high_convs


class TestFrozenAnalysis:
    def test_kcl_weights_frozen_and_match_basis(self):
        gen = Generator(GeneratorConfig(), seed=0)
        spec = gen.analysis.spec()
        assert spec.kind == "CONV"
        assert not spec.trainable
        basis = basis_set(KrawtchoukParams(p=0.5, size=8))
        np.testing.assert_array_equal(
            gen.analysis.conv.w.value[:, 0], basis.filters
        )

    def test_synthesis_trainable_and_exact_inverse_init(self):
        gen = Generator(GeneratorConfig(), seed=0)
        spec = gen.synthesis.spec()
        assert spec.trainable
        basis = basis_set(KrawtchoukParams(p=0.5, size=8))
        np.testing.assert_array_equal(gen.synthesis.kernels.value, basis.filters)

    def test_analysis_matches_sliding_transform(self):
        params = KrawtchoukParams(p=0.5, size=8)
        analysis = KrawtchoukAnalysis(params)
        rng = np.random.default_rng(4)
        channel = rng.random((24, 24))
        layer_maps = analysis.forward(channel[None, None])[0]
        cube = kcl_apply(channel, basis_set(params), mode="sliding")
        np.testing.assert_allclose(layer_maps, cube.maps, atol=1e-12)

    def test_synthesis_inverts_analysis(self):
        params = KrawtchoukParams(p=0.5, size=8)
        analysis = KrawtchoukAnalysis(params)
        synthesis = KrawtchoukSynthesis(params)
        rng = np.random.default_rng(5)
        x = rng.random((2, 1, 32, 32))
        back = synthesis.forward(analysis.forward(x))
        assert np.max(np.abs(back - x)) < 1e-10


class TestDiscriminator:
    def test_scores_in_open_interval(self):
        disc = Discriminator(scale=1.0, seed=0)
        rng = np.random.default_rng(6)
        scores = disc.forward(rng.random((4, 1, 32, 32)))
        assert scores.shape == (4,)
        assert np.all(scores > 0) and np.all(scores < 1)

    def test_deterministic_construction(self):
        a = Discriminator(scale=1.0, seed=5)
        b = Discriminator(scale=1.0, seed=5)
        rng = np.random.default_rng(7)
        x = rng.random((2, 1, 16, 16))
        np.testing.assert_array_equal(a.forward(x), b.forward(x))

    def test_multichannel_rejected(self):
        disc = Discriminator(scale=1.0, seed=0)
        with pytest.raises(ValueError):
            disc.forward(np.zeros((1, 3, 16, 16)))


class TestConfig:
    def test_defaults(self):
        cfg = GeneratorConfig()
        assert cfg.split_point == 60
        assert cfg.grid_rows == 3
        assert cfg.grid_cols == 6
        assert cfg.dense_layers == 5
        assert cfg.high_depth == 4

    def test_row_widths_halve_downward(self):
        cfg = GeneratorConfig(scale=2.0)  # base width 12 divides twice
        assert cfg.row_width(0) == 2 * cfg.row_width(1)
        assert cfg.row_width(1) == 2 * cfg.row_width(2)

    def test_invalid_split_point(self):
        with pytest.raises(ValueError):
            GeneratorConfig(split_point=0)
        with pytest.raises(ValueError):
            GeneratorConfig(split_point=64)
