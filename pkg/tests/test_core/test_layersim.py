"""
Tests for core/layersim.py
"""

import numpy as np
import pytest

from topv.core.errors import ContractError, ShapeError
from topv.core.layersim import (
    SplitMix64,
    Tap,
    ToyBlockConfig,
    forward_all,
    forward_tap,
    init_block,
    layer_norm,
)
from topv.core.tokens import TokenSet


def random_tokens(grid_h=4, grid_w=4, dim=16, seed=0):
    rng = np.random.default_rng(seed)
    return TokenSet.from_grid(rng.standard_normal((grid_h * grid_w, dim)), grid_h, grid_w)


class TestSplitMix64:
    """Test the weight generator"""

    def test_reference_sequence(self):
        """Seed 0 produces the published SplitMix64 outputs"""
        rng = SplitMix64(0)

        assert rng.next_u64() == 0xE220A8397B1DCDAF
        assert rng.next_u64() == 0x6E789E6AA1B965F4
        assert rng.next_u64() == 0x06C45D188009454F

    def test_weight_range(self):
        """Weights lie in (-0.1, 0.1)"""
        weights = SplitMix64(42).matrix(10, 10)

        assert weights.min() >= -0.1
        assert weights.max() < 0.1

    def test_first_weight(self):
        """The first weight maps the first output linearly"""
        expected = (0xE220A8397B1DCDAF / 2.0**64) * 0.2 - 0.1

        assert SplitMix64(0).next_weight() == expected

    @pytest.mark.parametrize("seed", [0, 42, (1 << 64) - 1])
    def test_matrix_matches_scalar_stream(self, seed):
        """Vectorized fill gives the same weights and state as one-by-one draws"""
        scalar = SplitMix64(seed)
        expected = [scalar.next_weight() for _ in range(3 * 7)]

        vectorized = SplitMix64(seed)
        weights = vectorized.matrix(3, 7)

        np.testing.assert_array_equal(weights.ravel(), expected)
        assert vectorized.state == scalar.state
        assert vectorized.next_u64() == scalar.next_u64()

    def test_matrix_continues_stream(self):
        """Consecutive matrices continue the same sequence"""
        rng = SplitMix64(7)
        first = rng.matrix(2, 3)
        second = rng.matrix(4, 1)

        whole = SplitMix64(7).matrix(1, 10).ravel()
        np.testing.assert_array_equal(np.concatenate([first.ravel(), second.ravel()]), whole)

    def test_large_block_is_fast(self):
        """A block with dim 512 initializes quickly"""
        import time

        started = time.perf_counter()
        block = init_block(ToyBlockConfig(dim=512, heads=8))

        assert time.perf_counter() - started < 2.0
        assert block.w_up.shape == (512, 2048)


class TestToyBlockConfig:
    """Test ToyBlockConfig validation"""

    def test_defaults(self):
        """dim 16, two heads, MLP x4, Post-LN tap"""
        cfg = ToyBlockConfig()

        assert (cfg.dim, cfg.heads, cfg.mlp_mult, cfg.seed) == (16, 2, 4, 0)
        assert cfg.tap is Tap.POST_LN

    @pytest.mark.parametrize(
        "kwargs", [{"dim": 15, "heads": 2}, {"dim": 0}, {"mlp_mult": 0}, {"seed": -1}]
    )
    def test_invalid(self, kwargs):
        """Heads must divide dim, sizes must be positive"""
        with pytest.raises(ContractError):
            ToyBlockConfig(**kwargs)


class TestInitBlock:
    """Test deterministic weight initialization"""

    def test_same_seed(self):
        """Same seed gives identical weights"""
        a = init_block(ToyBlockConfig(seed=7))
        b = init_block(ToyBlockConfig(seed=7))

        for name in ("w_q", "w_k", "w_v", "w_o", "w_up", "w_down"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_different_seeds(self):
        """Different seeds give different weights"""
        a = init_block(ToyBlockConfig(seed=1))
        b = init_block(ToyBlockConfig(seed=2))

        assert not np.array_equal(a.w_q, b.w_q)

    def test_shapes_and_fill_order(self):
        """W_q takes the first d*d outputs, W_up is d x (m d)"""
        cfg = ToyBlockConfig(dim=4, heads=2, mlp_mult=3, seed=0)
        block = init_block(cfg)

        assert block.w_q.shape == (4, 4)
        assert block.w_up.shape == (4, 12)
        assert block.w_down.shape == (12, 4)
        assert block.w_q[0, 0] == SplitMix64(0).next_weight()

        rng = SplitMix64(0)
        rng.matrix(4, 4)
        np.testing.assert_array_equal(block.w_k, rng.matrix(4, 4))


class TestForward:
    """Test tap outputs"""

    @pytest.fixture
    def block(self):
        return init_block(ToyBlockConfig(dim=16, heads=2, seed=3))

    def test_pre_ln_normalized(self, block):
        """Pre-LN output has zero mean and unit variance per token"""
        out = forward_tap(block, random_tokens(), Tap.PRE_LN).data

        np.testing.assert_allclose(out.mean(axis=1), 0.0, atol=1e-6)
        np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-6)

    def test_post_ln_normalized(self, block):
        """Post-LN output has zero mean and unit variance per token"""
        out = forward_tap(block, random_tokens(seed=1), Tap.POST_LN).data

        np.testing.assert_allclose(out.mean(axis=1), 0.0, atol=1e-6)
        np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-6)

    def test_residual_identity(self, block):
        """attn = attn_no_residual + input"""
        tokens = random_tokens(seed=2)
        outputs = forward_all(block, tokens.data)

        np.testing.assert_allclose(
            outputs[Tap.ATTN], outputs[Tap.ATTN_NO_RESIDUAL] + tokens.data, atol=1e-12
        )

    def test_post_ln_differs_from_attn(self, block):
        """Post-LN is not the raw attention output"""
        outputs = forward_all(block, random_tokens(seed=4).data)

        assert not np.allclose(outputs[Tap.POST_LN], outputs[Tap.ATTN])

    @pytest.mark.parametrize("tap", list(Tap))
    def test_shape_preserved(self, block, tap):
        """Every tap keeps N, d and coordinates"""
        tokens = random_tokens(grid_h=3, grid_w=5)

        out = forward_tap(block, tokens, tap)

        assert out.data.shape == tokens.data.shape
        np.testing.assert_array_equal(out.coords, tokens.coords)
        assert np.all(np.isfinite(out.data))

    def test_deterministic(self, block):
        """Same input and seed give bit-identical output"""
        tokens = random_tokens(seed=5)

        a = forward_tap(block, tokens, Tap.MLP).data
        b = forward_tap(init_block(ToyBlockConfig(dim=16, heads=2, seed=3)), tokens, Tap.MLP).data

        np.testing.assert_array_equal(a, b)

    def test_dim_mismatch(self, block):
        """Token dimension must match the block"""
        with pytest.raises(ShapeError):
            forward_tap(block, random_tokens(dim=8), Tap.POST_LN)

    def test_layer_norm_floor(self):
        """A constant token maps to zeros instead of dividing by zero"""
        out = layer_norm(np.full((2, 4), 3.0))

        assert np.all(out == 0.0)
