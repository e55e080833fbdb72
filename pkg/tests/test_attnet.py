import math

import pytest
import torch

from vtreid.attnet import (
    Backbone,
    ReidArch,
    ReidModel,
    channel_attention,
    global_average_pool,
    identification_loss,
    verification_loss,
)
from vtreid.attnet.losses import ReidLossReport, check_finite
from vtreid.errors import ContractError, ShapeError, TrainingDivergedError

DESK = ReidArch(n_classes=6)
TINY = ReidArch(backbone_widths=(4, 4, 8, 8, 8), fc_widths=(8, 4), image_size=64, n_classes=3)


class TestBackbone:
    def test_desk_shape(self):
        torch.manual_seed(0)
        bb = Backbone((32, 64, 128, 256, 256), 64)
        assert bb(torch.randn(2, 3, 64, 64)).shape == (2, 256, 2, 2)

    def test_paper_scale_shape(self):
        torch.manual_seed(0)
        bb = Backbone((8, 8, 8, 8, 2048), 224)
        assert bb(torch.randn(1, 3, 224, 224)).shape == (1, 2048, 7, 7)

    def test_zero_weights_give_zero_map(self):
        bb = Backbone((4, 4, 4, 4, 4), 32)
        with torch.no_grad():
            for p in bb.parameters():
                p.zero_()
        bb.eval()
        assert torch.all(bb(torch.rand(1, 3, 32, 32)) == 0)

    def test_wrong_resolution_rejected(self):
        bb = Backbone((4, 4, 4, 4, 4), 64)
        with pytest.raises(ShapeError, match="64"):
            bb(torch.zeros(1, 3, 32, 32))


class TestGlobalAveragePool:
    def test_constant_map(self):
        f = torch.full((2, 5, 3, 3), 2.75)
        assert torch.allclose(global_average_pool(f), torch.full((2, 5), 2.75))

    def test_hand_mean(self):
        f = torch.tensor([1.0, 2.0, 3.0, 4.0]).reshape(1, 1, 2, 2)
        assert float(global_average_pool(f)) == 2.5

    def test_permutation_invariance(self):
        f = torch.rand(1, 4, 3, 3)
        flat = f.flatten(2)
        perm = torch.randperm(9)
        shuffled = flat[:, :, perm].reshape(1, 4, 3, 3)
        assert torch.allclose(global_average_pool(f), global_average_pool(shuffled))


class TestChannelAttention:
    def test_zero_weights_give_uniform_gate(self):
        pooled = torch.tensor([[1.0, 2.0, 3.0, 4.0]])
        gate, shortcut = channel_attention(pooled, torch.zeros(4, 4), torch.zeros(4))
        assert torch.allclose(gate, torch.full((1, 4), 0.25))
        assert torch.allclose(shortcut, pooled * 1.25)

    def test_gate_sums_to_one(self):
        torch.manual_seed(0)
        for _ in range(50):
            pooled = torch.randn(3, 8)
            gate, _ = channel_attention(pooled, torch.randn(8, 8), torch.randn(8))
            assert torch.all((gate.sum(dim=1) - 1.0).abs() < 1e-6)

    def test_hand_computed_two_channel_case(self):
        pooled = torch.tensor([4.0, 8.0])
        weight = torch.tensor([[math.log(3.0) / 4.0, 0.0], [0.0, 0.0]])
        gate, shortcut = channel_attention(pooled, weight, torch.zeros(2))
        assert torch.allclose(gate, torch.tensor([0.75, 0.25]), atol=1e-6)
        # gated features (3, 2); shortcut sum (7, 10)
        assert torch.allclose(shortcut, torch.tensor([7.0, 10.0]), atol=1e-5)

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            channel_attention(torch.zeros(1, 4), torch.zeros(3, 3), torch.zeros(3))


class TestEmbedding:
    def test_desk_embedding_width(self):
        torch.manual_seed(0)
        model = ReidModel(DESK)
        model.eval()
        emb = model.embed(torch.rand(2, 3, 64, 64) * 2 - 1)
        assert emb.shape == (2, 64 + 256)

    def test_identical_images_identical_embeddings(self):
        torch.manual_seed(1)
        model = ReidModel(TINY)
        model.eval()
        x = torch.rand(1, 3, 64, 64) * 2 - 1
        a = model.embed(x)
        b = model.embed(x.clone())
        assert torch.equal(a, b)

    def test_zero_head_weights_keep_backbone_tail(self):
        torch.manual_seed(2)
        model = ReidModel(TINY)
        with torch.no_grad():
            for layer in model.fc:
                if hasattr(layer, "weight"):
                    layer.weight.zero_()
                    layer.bias.zero_()
        model.eval()
        x1 = torch.rand(1, 3, 64, 64) * 2 - 1
        x2 = torch.rand(1, 3, 64, 64) * 2 - 1
        e1, e2 = model.embed(x1), model.embed(x2)
        fd = TINY.fc_widths[-1]
        assert torch.equal(e1[:, :fd], e2[:, :fd])  # compact path collapsed to bias
        assert not torch.equal(e1[:, fd:], e2[:, fd:])  # pooled tail still varies

    def test_stream_symmetry(self):
        torch.manual_seed(3)
        model = ReidModel(TINY)
        model.eval()
        image = torch.rand(1, 3, 64, 64) * 2 - 1
        as_anchor = model.embed(image)
        as_partner = model.embed(image)
        assert torch.equal(as_anchor, as_partner)

    def test_baseline_head_skips_attention(self):
        torch.manual_seed(4)
        arch = ReidArch(backbone_widths=TINY.backbone_widths, fc_widths=TINY.fc_widths, n_classes=3, head="baseline")
        model = ReidModel(arch)
        with torch.no_grad():
            model.attention.weight.fill_(100.0)  # would distort an attention head
        model.eval()
        x = torch.rand(1, 3, 64, 64) * 2 - 1
        pooled = global_average_pool(model.backbone(x))
        expected = torch.cat([model.fc(pooled), pooled], dim=1)
        assert torch.equal(model.embed(x), expected)

    def test_spatial_attention_variant_runs(self):
        torch.manual_seed(5)
        arch = ReidArch(backbone_widths=TINY.backbone_widths, fc_widths=TINY.fc_widths, n_classes=3, spatial_attention=True)
        model = ReidModel(arch)
        model.eval()
        emb = model.embed(torch.rand(2, 3, 64, 64) * 2 - 1)
        assert emb.shape == (2, arch.embedding_dim)

    def test_attention_gate_normalized(self):
        torch.manual_seed(6)
        model = ReidModel(TINY)
        model.eval()
        gate = model.attention_gate(torch.rand(3, 3, 64, 64) * 2 - 1)
        assert torch.all((gate.sum(dim=1) - 1.0).abs() < 1e-6)


class TestIdentificationLoss:
    def test_uniform_logits_closed_form(self):
        logits = torch.zeros(5, 4)
        labels = torch.tensor([0, 1, 2, 3, 0])
        assert abs(float(identification_loss(logits, labels)) - math.log(4.0)) < 1e-6

    def test_confident_logits_approach_zero(self):
        labels = torch.tensor([0, 1])
        logits = torch.tensor([[30.0, 0.0, 0.0], [0.0, 30.0, 0.0]])
        assert float(identification_loss(logits, labels)) < 1e-6

    def test_permutation_invariance(self):
        torch.manual_seed(0)
        logits = torch.randn(6, 4)
        labels = torch.randint(0, 4, (6,))
        perm = torch.randperm(6)
        a = identification_loss(logits, labels)
        b = identification_loss(logits[perm], labels[perm])
        assert torch.allclose(a, b)

    def test_label_out_of_range(self):
        with pytest.raises(ContractError, match="labels"):
            identification_loss(torch.zeros(2, 3), torch.tensor([0, 3]))


class TestVerificationLoss:
    def test_uniform_logits_closed_form(self):
        logits = torch.zeros(4, 2)
        same = torch.tensor([0, 1, 0, 1])
        assert abs(float(verification_loss(logits, same)) - math.log(2.0)) < 1e-6

    def test_same_pair_with_biased_separator_beats_chance(self):
        torch.manual_seed(0)
        model = ReidModel(TINY)
        with torch.no_grad():
            model.verifier.bias.copy_(torch.tensor([-1.0, 1.0]))  # favors "same"
        model.eval()
        with torch.no_grad():
            emb = model.embed(torch.rand(1, 3, 64, 64) * 2 - 1)
            logits = model.verification_logits(emb, emb.clone())
            loss = verification_loss(logits, torch.tensor([1]))
        assert float(loss) < math.log(2.0)

    def test_swap_invariance(self):
        torch.manual_seed(1)
        model = ReidModel(TINY)
        model.eval()
        a = model.embed(torch.rand(2, 3, 64, 64) * 2 - 1)
        b = model.embed(torch.rand(2, 3, 64, 64) * 2 - 1)
        assert torch.equal(model.verification_logits(a, b), model.verification_logits(b, a))

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            verification_loss(torch.zeros(3, 2), torch.tensor([0, 1]))

    def test_bad_labels(self):
        with pytest.raises(ContractError):
            verification_loss(torch.zeros(2, 2), torch.tensor([0, 2]))


def test_check_finite_names_component():
    report = ReidLossReport(0.0, float("inf"), 0.0, 0.0, 0.0)
    with pytest.raises(TrainingDivergedError, match="l_verification"):
        check_finite(report)
