"""Fast finite-difference sanity checks; the acceptance suite runs the full sweep."""

import numpy as np
import pytest
import torch

from vtreid.attnet import ReidArch, ReidModel, identification_loss, verification_loss
from vtreid.gradcheck import finite_difference_check
from vtreid.vtgan import (
    Generator,
    GeneratorConfig,
    PatchDiscriminator,
    adversarial_losses,
    cycle_loss,
    identity_loss,
    style_loss,
    total_objective,
)

TOY = GeneratorConfig(stem_width_full=2, stem_width_half=2, residual_width=4)


def toy_pair(seed):
    torch.manual_seed(seed)
    g = Generator(TOY).double()
    f = Generator(TOY).double()
    d = PatchDiscriminator(4, n_layers=2).double()
    x = (torch.rand(2, 3, 8, 8, dtype=torch.float64) * 1.6 - 0.8).requires_grad_(False)
    y = (torch.rand(2, 3, 8, 8, dtype=torch.float64) * 1.6 - 0.8).requires_grad_(False)
    return g, f, d, x, y


def assert_grads_ok(result, all_tol=1e-3, most_tol=1e-4, most_frac=0.95):
    assert result.max_error < all_tol, f"max relative error {result.max_error}"
    assert result.fraction_below(most_tol) >= most_frac


def test_infrastructure_on_quadratic(rng):
    w = torch.randn(5, dtype=torch.float64, requires_grad=True)
    result = finite_difference_check(lambda: (w**3).sum(), [w], rng, n_coords=5)
    assert result.max_error < 1e-8


def test_style_loss_gradients(rng):
    g, f, d, x, y = toy_pair(0)
    params = list(g.style.parameters()) + list(f.style.parameters())
    result = finite_difference_check(lambda: style_loss(x, y, g.style, f.style), params, rng, n_coords=10)
    assert_grads_ok(result)


def test_cycle_loss_gradients(rng):
    g, f, d, x, y = toy_pair(1)
    params = list(g.parameters()) + list(f.parameters())
    result = finite_difference_check(lambda: cycle_loss(x, y, g, f), params, rng, n_coords=10)
    assert_grads_ok(result)


def test_identity_loss_gradients(rng):
    g, f, d, x, y = toy_pair(2)
    params = list(g.parameters()) + list(f.parameters())
    result = finite_difference_check(lambda: identity_loss(x, y, g, f), params, rng, n_coords=10)
    assert_grads_ok(result)


def test_adversarial_loss_gradients(rng):
    g, f, d, x, y = toy_pair(3)

    def loss():
        d_loss, g_loss = adversarial_losses(y, g(x), d)
        return d_loss + g_loss

    params = list(g.parameters()) + list(d.parameters())
    assert_grads_ok(finite_difference_check(loss, params, rng, n_coords=10))


def test_total_objective_gradients(rng):
    g, f, d, x, y = toy_pair(4)
    d2 = PatchDiscriminator(4, n_layers=2).double()

    def loss():
        fake_y, fake_x = g(x), f(y)
        _, g_loss_G = adversarial_losses(y, fake_y, d)
        _, g_loss_F = adversarial_losses(x, fake_x, d2)
        total, _ = total_objective(
            g_loss_G,
            g_loss_F,
            cycle_loss(x, y, g, f),
            identity_loss(x, y, g, f),
            style_loss(x, y, g.style, f.style),
            lambda_cyc=10.0,
            lambda_id=5.0,
            lambda_style=1.0,
        )
        return total

    params = list(g.parameters()) + list(f.parameters())
    assert_grads_ok(finite_difference_check(loss, params, rng, n_coords=8))


def test_reid_loss_gradients(rng):
    torch.manual_seed(5)
    arch = ReidArch(backbone_widths=(2, 2, 4, 4, 4), fc_widths=(4, 3), image_size=32, n_classes=3)
    model = ReidModel(arch).double()
    model.train()
    anchors = torch.rand(4, 3, 32, 32, dtype=torch.float64) * 2 - 1
    partners = torch.rand(4, 3, 32, 32, dtype=torch.float64) * 2 - 1
    labels = torch.tensor([0, 1, 2, 0])
    same = torch.tensor([1, 0, 1, 0])

    def loss():
        emb_a = model.embed(anchors)
        emb_p = model.embed(partners)
        l_id = identification_loss(model.identification_logits(emb_a), labels)
        l_verif = verification_loss(model.verification_logits(emb_a, emb_p), same)
        return l_id + l_verif

    assert_grads_ok(finite_difference_check(loss, list(model.parameters()), rng, n_coords=10))
