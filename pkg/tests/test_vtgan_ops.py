import numpy as np
import pytest
import torch

from vtreid.errors import ContractError, ShapeError
from vtreid.vtgan import (
    ContentEncoder,
    Decoder,
    Generator,
    GeneratorConfig,
    StyleEncoder,
    apply_mask,
    attention_mask,
    fuse_residual_outputs,
    gram,
)

TOY = GeneratorConfig(stem_width_full=4, stem_width_half=4, residual_width=4)


def _zero_params(module: torch.nn.Module) -> None:
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()


class TestFuse:
    def test_concatenation_arithmetic(self):
        # nine 4×4 maps with 8 channels each fuse into one 4×4×72 map
        fused = fuse_residual_outputs([torch.zeros(8, 4, 4) for _ in range(9)])
        assert fused.shape == (72, 4, 4)

    def test_zero_maps_fuse_to_zero(self):
        fused = fuse_residual_outputs([torch.zeros(2, 3, 3)] * 9)
        assert torch.all(fused == 0)

    def test_channel_blocks_keep_order(self):
        maps = [torch.full((2, 3, 3), float(i)) for i in range(1, 10)]
        fused = fuse_residual_outputs(maps)
        for i in range(9):
            assert torch.all(fused[2 * i : 2 * (i + 1)] == i + 1)

    def test_wrong_count_rejected(self):
        with pytest.raises(ShapeError, match="9"):
            fuse_residual_outputs([torch.zeros(2, 3, 3)] * 8)

    def test_mismatched_shapes_rejected(self):
        maps = [torch.zeros(2, 3, 3)] * 8 + [torch.zeros(2, 4, 3)]
        with pytest.raises(ShapeError):
            fuse_residual_outputs(maps)


class TestAttentionMask:
    def test_zero_weights_give_half(self):
        fused = torch.randn(1, 6, 5, 5)
        mask = attention_mask(fused, torch.zeros(6), torch.zeros(()))
        assert torch.allclose(mask, torch.full((1, 1, 5, 5), 0.5))

    def test_elementwise_sigmoid_of_logit(self):
        fused = torch.randn(2, 3, 4, 4, dtype=torch.float64)
        w = torch.randn(3, dtype=torch.float64)
        b = torch.tensor(0.3, dtype=torch.float64)
        mask = attention_mask(fused, w, b)
        logits = torch.einsum("nchw,c->nhw", fused, w) + b
        assert torch.allclose(mask.squeeze(1), torch.sigmoid(logits))

    def test_hand_computed_scalar(self):
        fused = torch.tensor([1.0, -1.0]).reshape(2, 1, 1)
        mask = attention_mask(fused, torch.tensor([2.0, 1.0]), torch.zeros(()))
        assert mask.shape == (1, 1, 1)
        assert abs(float(mask) - 0.7311) < 1e-4

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            attention_mask(torch.zeros(1, 4, 2, 2), torch.zeros(5), torch.zeros(()))


class TestApplyMask:
    def test_mask_of_ones_is_identity(self):
        fused = torch.randn(1, 3, 4, 4)
        assert torch.equal(apply_mask(fused, torch.ones(1, 1, 4, 4)), fused)

    def test_mask_of_zeros_kills_map(self):
        fused = torch.randn(1, 3, 4, 4)
        assert torch.all(apply_mask(fused, torch.zeros(1, 1, 4, 4)) == 0)

    def test_hand_product(self):
        fused = torch.tensor([3.0, -2.0]).reshape(1, 2, 1, 1)
        out = apply_mask(fused, torch.full((1, 1, 1, 1), 0.25))
        assert torch.allclose(out.flatten(), torch.tensor([0.75, -0.5]))

    def test_spatial_mismatch(self):
        with pytest.raises(ShapeError):
            apply_mask(torch.zeros(1, 3, 4, 4), torch.zeros(1, 1, 2, 2))


class TestGram:
    def test_zero_map(self):
        assert torch.all(gram(torch.zeros(3, 2, 2)) == 0)

    def test_hand_inner_products(self):
        features = torch.tensor([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 1, 2)
        g = gram(features)
        assert torch.allclose(g, torch.tensor([[5.0, 11.0], [11.0, 25.0]]))

    def test_quadratic_scaling(self):
        f = torch.randn(4, 3, 3, dtype=torch.float64)
        assert torch.allclose(gram(3.0 * f), 9.0 * gram(f))

    def test_symmetry_and_psd_over_trials(self):
        rng = torch.Generator().manual_seed(0)
        for _ in range(100):
            f = torch.randn(5, 4, 3, dtype=torch.float64, generator=rng)
            g = gram(f)
            assert torch.allclose(g, g.T, atol=1e-6)
            eigs = torch.linalg.eigvalsh(g)
            assert float(eigs.min()) >= -1e-8 * float(torch.trace(g))

    def test_batched_matches_stacked(self):
        f = torch.randn(3, 2, 4, 4)
        batched = gram(f)
        for i in range(3):
            assert torch.allclose(batched[i], gram(f[i]))

    def test_empty_map_rejected(self):
        with pytest.raises(ContractError):
            gram(torch.zeros(0, 2, 2))


class TestContentEncoder:
    def test_shape_trace_at_default_widths(self):
        torch.manual_seed(0)
        enc = ContentEncoder(GeneratorConfig())
        f_c, skip, mask = enc(torch.randn(1, 3, 64, 64))
        assert f_c.shape == (1, 64, 16, 16)
        assert mask.shape == (1, 1, 16, 16)
        assert skip.shape == (1, 32, 32, 32)

    def test_zero_weights_give_half_mask_and_zero_features(self):
        enc = ContentEncoder(TOY)
        _zero_params(enc)
        f_c, _, mask = enc(torch.rand(1, 3, 16, 16) * 2 - 1)
        assert torch.allclose(mask, torch.full_like(mask, 0.5))
        assert torch.all(f_c == 0)

    def test_mask_strictly_inside_unit_interval(self):
        for trial in range(100):
            torch.manual_seed(trial)
            enc = ContentEncoder(TOY)
            _, _, mask = enc(torch.rand(1, 3, 8, 8) * 2 - 1)
            assert float(mask.min()) > 0.0 and float(mask.max()) < 1.0

    def test_indivisible_dims_rejected(self):
        enc = ContentEncoder(TOY)
        with pytest.raises(ShapeError, match="divisible"):
            enc(torch.zeros(1, 3, 10, 10))

    def test_frozen_mask_is_ones(self):
        enc = ContentEncoder(TOY, mask_frozen=True)
        _, _, mask = enc(torch.rand(1, 3, 8, 8) * 2 - 1)
        assert torch.all(mask == 1.0)


class TestStyleEncoder:
    def test_shape_trace(self):
        torch.manual_seed(0)
        enc = StyleEncoder(GeneratorConfig())
        assert enc(torch.randn(1, 3, 64, 64)).shape == (1, 64, 16, 16)

    def test_zero_weights_give_zero_map(self):
        enc = StyleEncoder(TOY)
        _zero_params(enc)
        assert torch.all(enc(torch.rand(1, 3, 16, 16)) == 0)

    def test_purity(self):
        torch.manual_seed(3)
        enc = StyleEncoder(TOY)
        x = torch.rand(1, 3, 8, 8) * 2 - 1
        assert torch.equal(enc(x), enc(x.clone()))


class TestDecoder:
    def test_zero_weights_collapse_to_tanh_bias(self):
        dec = Decoder(TOY)
        _zero_params(dec)
        with torch.no_grad():
            dec.out.bias.copy_(torch.tensor([0.3, -0.2, 0.1]))
        out = dec(torch.zeros(1, 4, 4, 4), torch.zeros(1, 4, 4, 4), torch.zeros(1, 4, 8, 8))
        expected = torch.tanh(torch.tensor([0.3, -0.2, 0.1])).reshape(1, 3, 1, 1)
        assert torch.allclose(out, expected.expand_as(out), atol=1e-6)

    def test_shape_trace(self):
        torch.manual_seed(0)
        dec = Decoder(GeneratorConfig())
        out = dec(torch.randn(1, 64, 16, 16), torch.randn(1, 64, 16, 16), torch.randn(1, 32, 32, 32))
        assert out.shape == (1, 3, 64, 64)

    def test_outputs_strictly_inside_unit_interval(self):
        for trial in range(100):
            torch.manual_seed(trial)
            dec = Decoder(TOY)
            out = dec(torch.randn(1, 4, 2, 2), torch.randn(1, 4, 2, 2), torch.randn(1, 4, 4, 4))
            assert float(out.abs().max()) < 1.0

    def test_skip_shape_mismatch(self):
        dec = Decoder(TOY)
        with pytest.raises(ShapeError, match="skip"):
            dec(torch.zeros(1, 4, 2, 2), torch.zeros(1, 4, 2, 2), torch.zeros(1, 4, 6, 6))

    def test_content_style_mismatch(self):
        dec = Decoder(TOY)
        with pytest.raises(ShapeError):
            dec(torch.zeros(1, 4, 2, 2), torch.zeros(1, 4, 3, 3), torch.zeros(1, 4, 4, 4))


class TestGeneratorForward:
    def test_roundtrip_shapes_and_range(self):
        torch.manual_seed(1)
        gen = Generator(TOY)
        out, mask = gen.forward_with_mask(torch.rand(2, 3, 16, 16) * 2 - 1)
        assert out.shape == (2, 3, 16, 16)
        assert mask.shape == (2, 1, 4, 4)
        assert float(out.abs().max()) < 1.0
