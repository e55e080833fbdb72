"""Identification and verification objectives for the reID stage."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import torch
import torch.nn.functional as F

from vtreid.errors import ContractError, TrainingDivergedError


@dataclass
class ReidLossReport:
    l_identification: float
    l_verification: float
    l_total: float
    acc_identification: float
    acc_verification: float

    CSV_HEADER = "step,l_id,l_verif,l_total,acc_id,acc_verif"

    def csv_row(self, step: int) -> str:
        vals = [getattr(self, f.name) for f in fields(self)]
        return ",".join([str(step)] + [repr(float(v)) for v in vals])


def identification_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean softmax cross-entropy over the batch."""
    if logits.ndim != 2:
        raise ContractError(f"expected N×K logits, got shape {tuple(logits.shape)}")
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ContractError("labels must be a vector matching the logits batch")
    if labels.numel() and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ContractError(
            f"labels must lie in [0, {logits.shape[1] - 1}], got range [{int(labels.min())}, {int(labels.max())}]"
        )
    return F.cross_entropy(logits, labels)


def verification_loss(verification_logits: torch.Tensor, same_id: torch.Tensor) -> torch.Tensor:
    """Two-way cross-entropy on pair logits against same/different labels."""
    if verification_logits.ndim != 2 or verification_logits.shape[1] != 2:
        raise ContractError(f"expected N×2 verification logits, got {tuple(verification_logits.shape)}")
    if same_id.shape[0] != verification_logits.shape[0]:
        raise ContractError("same_id labels must match the pair batch length")
    if same_id.numel() and (same_id.min() < 0 or same_id.max() > 1):
        raise ContractError("same_id labels must be 0 or 1")
    return F.cross_entropy(verification_logits, same_id)


def batch_accuracy(logits: torch.Tensor, labels: torch.Tensor) -> float:
    return float((logits.argmax(dim=1) == labels).float().mean())


def check_finite(report: ReidLossReport) -> None:
    for f in fields(report):
        if not math.isfinite(getattr(report, f.name)):
            raise TrainingDivergedError(f"loss component {f.name} is non-finite")
