"""
Tests for core/budget.py
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from topv.core.budget import (
    PRESETS,
    ModelShape,
    flops_ratio,
    get_preset,
    layer_flops,
    sweep,
)
from topv.core.errors import ContractError
from topv.core.pruner import PruneConfig

LLAVA_7B = ModelShape()


class TestModelShape:
    """Test ModelShape validation and presets"""

    def test_defaults_are_llava_7b(self):
        """Default shape is LLaVA-7B pruned at layer 2"""
        assert LLAVA_7B == ModelShape(32, 4096, 11008, 576, 2)
        assert PRESETS["llava-7b"] == LLAVA_7B

    def test_prune_layer_bound(self):
        """prune_layer must be below n_layers"""
        with pytest.raises(ContractError):
            ModelShape(n_layers=2, prune_layer=2)

    def test_non_positive(self):
        """Sizes must be positive"""
        with pytest.raises(ContractError):
            ModelShape(hidden=0)

    def test_get_preset(self):
        """Presets are looked up case-insensitively"""
        assert get_preset("InternVL2-2B").n_visual == 256

    def test_unknown_preset(self):
        """Unknown preset names are rejected"""
        with pytest.raises(ContractError):
            get_preset("gpt-2")


class TestLayerFlops:
    """Test per-layer FLOPs accounting"""

    def test_hand_arithmetic(self):
        """n=1, d=2, m=4 -> 36"""
        shape = ModelShape(n_layers=2, hidden=2, mlp_hidden=4, n_visual=1, prune_layer=0)

        assert layer_flops(1, shape) == 36

    def test_mlp_term_linear(self):
        """Doubling m adds exactly the MLP term once more"""
        small = ModelShape(hidden=8, mlp_hidden=16)
        large = ModelShape(hidden=8, mlp_hidden=32)

        assert layer_flops(10, large) - layer_flops(10, small) == 2 * 10 * 8 * 16

    def test_llava_layer(self):
        """n=576 on LLaVA-7B matches the three terms"""
        n, d, m = 576, 4096, 11008
        expected = 4 * n * d * d + 2 * n * n * d + 2 * n * d * m

        assert layer_flops(n, LLAVA_7B) == expected


class TestFlopsRatio:
    """Test BudgetReport computation"""

    def test_no_pruning(self):
        """retained = n_visual gives zero savings and full cache"""
        report = flops_ratio(576, LLAVA_7B)

        assert report.flops_ratio_tokenfraction == 0.0
        assert report.flops_ratio_layerweighted == pytest.approx(0.0, abs=1e-12)
        assert report.kv_ratio == 1.0

    def test_llava_35_percent(self):
        """retained 360 -> 216/576 * 30/32 = 0.3516"""
        report = flops_ratio(360, LLAVA_7B)

        assert report.flops_ratio_tokenfraction == pytest.approx(216 / 576 * 30 / 32)
        assert report.flops_ratio_tokenfraction == pytest.approx(0.35, abs=0.05)
        assert report.flops_ratio_layerweighted == pytest.approx(0.35, abs=0.05)

    def test_llava_round_50_percent(self):
        """retained 288 -> 0.469, near the published ~50%"""
        report = flops_ratio(288, LLAVA_7B)

        assert report.flops_ratio_tokenfraction == pytest.approx(0.46875)
        assert report.flops_ratio_tokenfraction == pytest.approx(0.51, abs=0.05)

    def test_internvl_regime(self):
        """70% / r=3 leaves 307 tokens, about 47% savings"""
        retained = PruneConfig(0.7, 3).counts(576)[3]

        report = flops_ratio(retained, LLAVA_7B)

        assert retained == 307
        assert report.flops_ratio_tokenfraction == pytest.approx(0.47, abs=0.05)

    def test_video_regime(self):
        """8-frame Video-LLaVA at 72% with r=4 saves about 51%"""
        shape = get_preset("video-llava-7b")
        retained = PruneConfig(0.72, 4).counts(shape.n_visual)[3]

        report = flops_ratio(retained, shape)

        assert shape.n_visual == 2048
        assert retained == 942
        assert report.flops_ratio_tokenfraction == pytest.approx(0.51, abs=0.01)

    @given(retained=st.integers(0, 576))
    def test_modes_close_for_llava(self, retained):
        """Both FLOPs accountings differ by less than 2 points on LLaVA-7B"""
        report = flops_ratio(retained, LLAVA_7B)

        assert abs(report.flops_ratio_layerweighted - report.flops_ratio_tokenfraction) < 0.02

    def test_kv_ratio(self):
        """KV size counts full layers before the cut"""
        report = flops_ratio(288, LLAVA_7B)

        assert report.kv_ratio == pytest.approx((2 * 576 + 30 * 288) / (32 * 576))

    def test_out_of_range(self):
        """retained outside [0, n_visual] is rejected"""
        with pytest.raises(ContractError):
            flops_ratio(577, LLAVA_7B)
        with pytest.raises(ContractError):
            flops_ratio(-1, LLAVA_7B)

    def test_to_dict(self):
        """Report flattens to rounded key=value pairs"""
        data = flops_ratio(360, LLAVA_7B).to_dict()

        assert list(data) == [
            "retained_tokens",
            "flops_ratio_tokenfraction",
            "flops_ratio_layerweighted",
            "kv_ratio",
        ]
        assert data["retained_tokens"] == 360
        assert data["flops_ratio_tokenfraction"] == pytest.approx(0.351562, abs=1e-6)

    @given(a=st.integers(0, 576), b=st.integers(0, 576))
    def test_monotone(self, a, b):
        """Fewer retained tokens never decrease either ratio"""
        fewer, more = sorted((a, b))
        low = flops_ratio(more, LLAVA_7B)
        high = flops_ratio(fewer, LLAVA_7B)

        assert high.flops_ratio_tokenfraction >= low.flops_ratio_tokenfraction
        assert high.flops_ratio_layerweighted >= low.flops_ratio_layerweighted - 1e-15


class TestSweep:
    """Test prune-ratio sweeps"""

    def test_rows(self):
        """0.1:0.9:0.1 gives nine rows with inclusive stop"""
        rows = sweep(LLAVA_7B, PruneConfig(0.5, 4), 0.1, 0.9, 0.1)

        assert len(rows) == 9
        assert rows[0]["prune_ratio"] == 0.1
        assert rows[-1]["prune_ratio"] == 0.9

    def test_llava_row(self):
        """The 0.5 row reproduces the LLaVA regime"""
        rows = sweep(LLAVA_7B, PruneConfig(0.5, 4), 0.5, 0.5, 0.1)

        assert rows[0]["kept"] == 288
        assert rows[0]["recovered"] == 72
        assert rows[0]["retained_tokens"] == 360

    def test_monotone(self):
        """Savings are nondecreasing along the sweep"""
        rows = sweep(LLAVA_7B, PruneConfig(0.5, 4), 0.0, 0.95, 0.05)
        savings = [row["flops_ratio_tokenfraction"] for row in rows]

        assert savings == sorted(savings)

    def test_invalid_range(self):
        """Reversed range or zero step is rejected"""
        with pytest.raises(ContractError):
            sweep(LLAVA_7B, PruneConfig(), 0.5, 0.1, 0.1)
        with pytest.raises(ContractError):
            sweep(LLAVA_7B, PruneConfig(), 0.1, 0.5, 0.0)
