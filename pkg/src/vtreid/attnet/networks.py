"""Attention-based re-identification network.

A five-stage residual backbone feeds global average pooling; the pooled
vector is re-weighted by a softmax channel-attention map, combined with
itself through a shortcut sum, pushed through two FC layers, and the result
is concatenated with the pooled vector to form the final embedding. Both
images of a pair run through the same weights (two-stream, shared).

``head="baseline"`` disables the attention/shortcut block, giving the plain
dual-task comparison network. ``spatial_attention=True`` applies the
alternative reading where the softmax gate sits on the spatial map before
pooling.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from vtreid.errors import ShapeError


@dataclass(frozen=True)
class ReidArch:
    backbone_widths: tuple[int, ...] = (32, 64, 128, 256, 256)
    fc_widths: tuple[int, ...] = (128, 64)
    image_size: int = 64
    n_classes: int = 2
    head: str = "attention"  # or "baseline"
    spatial_attention: bool = False

    @property
    def pooled_dim(self) -> int:
        return self.backbone_widths[-1]

    @property
    def embedding_dim(self) -> int:
        return self.fc_widths[-1] + self.pooled_dim

    def as_dict(self) -> dict:
        return {
            "backbone_widths": list(self.backbone_widths),
            "fc_widths": list(self.fc_widths),
            "image_size": self.image_size,
            "n_classes": self.n_classes,
            "head": self.head,
            "spatial_attention": self.spatial_attention,
        }


class _DownStage(nn.Module):
    """Stride-2 residual stage with a projection shortcut."""

    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
        )
        self.shortcut = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 1, stride=2, bias=False),
            nn.BatchNorm2d(out_ch),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.relu(self.body(x) + self.shortcut(x))


class Backbone(nn.Module):
    """Five stride-2 residual stages; a 64×64 input yields a 2×2 map."""

    def __init__(self, widths: tuple[int, ...], image_size: int):
        super().__init__()
        if len(widths) != 5:
            raise ShapeError(f"backbone needs 5 stage widths, got {len(widths)}")
        self.image_size = image_size
        chans = [3, *widths]
        self.stages = nn.Sequential(*(_DownStage(chans[i], chans[i + 1]) for i in range(5)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected N×3×H×W input, got {tuple(x.shape)}")
        if x.shape[-2] != self.image_size or x.shape[-1] != self.image_size:
            raise ShapeError(f"expected {self.image_size}×{self.image_size} input, got {x.shape[-2]}×{x.shape[-1]}")
        return self.stages(x)


def global_average_pool(feature_map: torch.Tensor) -> torch.Tensor:
    """Spatial mean per channel: N×C×H×W (or C×H×W) to N×C (or C)."""
    if feature_map.ndim not in (3, 4):
        raise ShapeError(f"expected a CHW or NCHW map, got ndim={feature_map.ndim}")
    if feature_map.shape[-1] == 0 or feature_map.shape[-2] == 0:
        raise ShapeError("cannot pool an empty feature map")
    return feature_map.mean(dim=(-2, -1))


def channel_attention(pooled: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Softmax channel gate plus shortcut sum.

    ``pooled`` is (N, C) or (C,). Returns ``(gate, shortcut)`` where the gate
    sums to 1 over channels and ``shortcut = pooled + pooled * gate``.
    """
    squeeze = pooled.ndim == 1
    vec = pooled.unsqueeze(0) if squeeze else pooled
    if weight.shape[1] != vec.shape[1]:
        raise ShapeError(f"attention weight expects {weight.shape[1]} channels, input has {vec.shape[1]}")
    gate = torch.softmax(vec @ weight.T + bias, dim=1)
    shortcut = vec + vec * gate
    if squeeze:
        return gate.squeeze(0), shortcut.squeeze(0)
    return gate, shortcut


class ReidModel(nn.Module):
    """Shared-weight embedding network with identification/verification heads."""

    def __init__(self, arch: ReidArch):
        super().__init__()
        if arch.head not in ("attention", "baseline"):
            raise ShapeError(f"unknown head type {arch.head!r}")
        self.arch = arch
        self.backbone = Backbone(arch.backbone_widths, arch.image_size)
        c = arch.pooled_dim
        self.attention = nn.Linear(c, c)
        self.spatial_gate = nn.Conv2d(c, 1, 1)
        fc1, fc2 = arch.fc_widths
        self.fc = nn.Sequential(nn.Linear(c, fc1), nn.ReLU(inplace=True), nn.Linear(fc1, fc2))
        self.classifier = nn.Linear(arch.embedding_dim, arch.n_classes)
        self.verifier = nn.Linear(arch.embedding_dim, 2)

    def embed(self, images: torch.Tensor) -> torch.Tensor:
        """Embedding [compact-FC features, pooled backbone features]."""
        feature_map = self.backbone(images)
        if self.arch.head == "attention" and self.arch.spatial_attention:
            logits = self.spatial_gate(feature_map)
            gate = torch.softmax(logits.flatten(2), dim=2).reshape_as(logits)
            feature_map = feature_map + feature_map * gate
            pooled = global_average_pool(feature_map)
            shortcut = pooled
        else:
            pooled = global_average_pool(feature_map)
            if self.arch.head == "attention":
                _, shortcut = channel_attention(pooled, self.attention.weight, self.attention.bias)
            else:
                shortcut = pooled
        compact = self.fc(shortcut)
        return torch.cat([compact, pooled], dim=1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.embed(images)

    def attention_gate(self, images: torch.Tensor) -> torch.Tensor:
        """Channel gate values for inspection; sums to 1 per sample."""
        pooled = global_average_pool(self.backbone(images))
        gate, _ = channel_attention(pooled, self.attention.weight, self.attention.bias)
        return gate

    def identification_logits(self, embeddings: torch.Tensor) -> torch.Tensor:
        return self.classifier(embeddings)

    def verification_logits(self, anchor: torch.Tensor, partner: torch.Tensor) -> torch.Tensor:
        if anchor.shape != partner.shape:
            raise ShapeError(f"pair embedding shapes differ: {tuple(anchor.shape)} vs {tuple(partner.shape)}")
        return self.verifier((anchor - partner) ** 2)
