"""Translation objectives: adversarial, cycle, identity and gram-style terms.

The default adversarial objective is least-squares (real→1, fake→0 for the
discriminator; fake→1 for the generator). ``paper_literal_adv=True`` swaps in
the alternative printed form that mixes a squared real term with an L1 fake
term and drives the discriminator's real score toward 0; it is kept for
auditability and both callables return that single objective value.

All L1 reconstruction terms are per-pixel means, so the default loss weights
are resolution-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable

import torch
import torch.nn as nn

from vtreid.errors import ContractError, TrainingDivergedError, ValidationError
from vtreid.vtgan.ops import gram


@dataclass
class TranslationLossReport:
    l_gan_G: float
    l_gan_F: float
    l_cyc: float
    l_id: float
    l_style: float
    l_total: float
    d_s_loss: float
    d_t_loss: float

    CSV_HEADER = "step,l_gan_G,l_gan_F,l_cyc,l_id,l_style,l_total,d_s,d_t"

    def csv_row(self, step: int) -> str:
        vals = [getattr(self, f.name) for f in fields(self)]
        return ",".join([str(step)] + [repr(float(v)) for v in vals])


def adversarial_losses(
    real_batch: torch.Tensor,
    fake_batch: torch.Tensor,
    discriminator: nn.Module,
    paper_literal: bool = False,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Discriminator and generator objectives for one direction.

    No detaching happens here; callers decide which graph each loss may reach
    (the training loop scores ``fake_batch.detach()`` for the discriminator
    update).
    """
    if real_batch.numel() == 0 or fake_batch.numel() == 0:
        raise ContractError("adversarial losses need nonempty real and fake batches")
    real_scores = discriminator(real_batch)
    fake_scores = discriminator(fake_batch)
    if paper_literal:
        value = torch.mean(real_scores**2) + torch.mean(torch.abs(fake_scores - 1.0))
        return value, value
    d_loss = torch.mean((real_scores - 1.0) ** 2) + torch.mean(fake_scores**2)
    g_loss = torch.mean((fake_scores - 1.0) ** 2)
    return d_loss, g_loss


def cycle_loss(
    x_batch: torch.Tensor,
    y_batch: torch.Tensor,
    g: Callable[[torch.Tensor], torch.Tensor],
    f: Callable[[torch.Tensor], torch.Tensor],
) -> torch.Tensor:
    """Round-trip reconstruction penalty: |F(G(x)) - x| + |G(F(y)) - y|."""
    return torch.mean(torch.abs(f(g(x_batch)) - x_batch)) + torch.mean(torch.abs(g(f(y_batch)) - y_batch))


def identity_loss(
    x_batch: torch.Tensor,
    y_batch: torch.Tensor,
    g: Callable[[torch.Tensor], torch.Tensor],
    f: Callable[[torch.Tensor], torch.Tensor],
) -> torch.Tensor:
    """Near-identity regularizer, applied to each generator's own input side.

    Computed as |F(y) - y| + |G(x) - x|: each generator is pulled toward the
    identity map on the batch it translates.
    """
    return torch.mean(torch.abs(f(y_batch) - y_batch)) + torch.mean(torch.abs(g(x_batch) - x_batch))


def style_loss(
    x_batch: torch.Tensor,
    y_batch: torch.Tensor,
    style_encoder_g: Callable[[torch.Tensor], torch.Tensor],
    style_encoder_f: Callable[[torch.Tensor], torch.Tensor],
) -> torch.Tensor:
    """Symmetric gram-matrix discrepancy between the two domains' features.

    Each direction compares same-encoder grams of the two inputs, normalized
    once by 1/(channels × sites) of the feature map, then sums both
    directions; batches are averaged per sample.
    """
    feats = [style_encoder_g(x_batch), style_encoder_g(y_batch), style_encoder_f(y_batch), style_encoder_f(x_batch)]
    shapes = {tuple(f.shape[1:]) for f in feats}
    if len(shapes) != 1:
        raise ContractError(f"style features disagree in shape: {sorted(shapes)}")
    channels = feats[0].shape[1]
    sites = feats[0].shape[2] * feats[0].shape[3]
    g_x, g_y, f_y, f_x = (gram(f) for f in feats)
    term_g = torch.sum((g_x - g_y) ** 2, dim=(1, 2)) / (channels * sites)
    term_f = torch.sum((f_y - f_x) ** 2, dim=(1, 2)) / (channels * sites)
    return torch.mean(term_g + term_f)


def total_objective(
    g_loss_G: torch.Tensor,
    g_loss_F: torch.Tensor,
    l_cyc: torch.Tensor,
    l_id: torch.Tensor,
    l_style: torch.Tensor,
    *,
    lambda_cyc: float,
    lambda_id: float,
    lambda_style: float,
    d_s_loss: float = 0.0,
    d_t_loss: float = 0.0,
) -> tuple[torch.Tensor, TranslationLossReport]:
    """Combine all generator-side terms into the scalar training objective.

    Returns the differentiable total plus a float report carrying every
    component for logging.
    """
    for name, lam in (("lambda_cyc", lambda_cyc), ("lambda_id", lambda_id), ("lambda_style", lambda_style)):
        if lam < 0:
            raise ValidationError(f"{name} must be >= 0, got {lam}")
    total = g_loss_G + g_loss_F + lambda_cyc * l_cyc + lambda_id * l_id + lambda_style * l_style
    report = TranslationLossReport(
        l_gan_G=_scalar(g_loss_G),
        l_gan_F=_scalar(g_loss_F),
        l_cyc=_scalar(l_cyc),
        l_id=_scalar(l_id),
        l_style=_scalar(l_style),
        l_total=_scalar(total),
        d_s_loss=_scalar(d_s_loss),
        d_t_loss=_scalar(d_t_loss),
    )
    return total, report


def _scalar(value) -> float:
    if isinstance(value, torch.Tensor):
        return float(value.detach())
    return float(value)


def check_finite(report: TranslationLossReport) -> None:
    """Raise naming the first non-finite component, if any."""
    for f in fields(report):
        if not math.isfinite(getattr(report, f.name)):
            raise TrainingDivergedError(f"loss component {f.name} is non-finite")
