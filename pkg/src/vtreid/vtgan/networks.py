"""Translation networks: attention-gated content encoder, style encoder,
skip-connected decoder, and the patch discriminator.

Each generator is the composition content-encode + style-encode + decode; the
content path fuses all nine residual-block outputs, gates them with a learned
per-location sigmoid mask, and projects back to the residual width before
decoding. The decoder concatenates the content and style features, upsamples
twice, and adds the half-resolution stem feature as a global skip.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from vtreid.errors import ShapeError
from vtreid.vtgan.ops import RESIDUAL_BLOCK_COUNT, apply_mask, attention_mask, fuse_residual_outputs


@dataclass(frozen=True)
class GeneratorConfig:
    stem_width_full: int = 32
    stem_width_half: int = 32
    residual_width: int = 64

    def validate(self) -> "GeneratorConfig":
        for name in ("stem_width_full", "stem_width_half", "residual_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        return self


def _conv_block(in_ch: int, out_ch: int, kernel: int, stride: int = 1) -> nn.Sequential:
    pad = kernel // 2
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=pad, padding_mode="reflect"),
        nn.InstanceNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class _Stem(nn.Module):
    """Full-res 7×7 block, then two stride-2 blocks down to quarter res."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.block_full = _conv_block(3, cfg.stem_width_full, 7)
        self.block_half = _conv_block(cfg.stem_width_full, cfg.stem_width_half, 3, stride=2)
        self.block_quarter = _conv_block(cfg.stem_width_half, cfg.residual_width, 3, stride=2)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        half_res = self.block_half(self.block_full(x))
        return self.block_quarter(half_res), half_res


def _check_image(x: torch.Tensor) -> None:
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"expected an N×3×H×W image batch, got shape {tuple(x.shape)}")
    if x.shape[-2] % 4 or x.shape[-1] % 4:
        raise ShapeError(f"image dims must be divisible by 4, got {x.shape[-2]}×{x.shape[-1]}")


class ContentEncoder(nn.Module):
    """Identity-preserving path: residual fusion gated by an attention mask.

    ``mask_frozen=True`` replaces the mask with ones, giving the plain
    ungated configuration used by the degenerate cycle-consistency setup.
    """

    def __init__(self, cfg: GeneratorConfig, mask_frozen: bool = False):
        super().__init__()
        self.cfg = cfg
        self.mask_frozen = mask_frozen
        self.stem = _Stem(cfg)
        self.blocks = nn.ModuleList(ResidualBlock(cfg.residual_width) for _ in range(RESIDUAL_BLOCK_COUNT))
        fused_width = RESIDUAL_BLOCK_COUNT * cfg.residual_width
        self.attention_weight = nn.Parameter(torch.zeros(fused_width))
        self.attention_bias = nn.Parameter(torch.zeros(()))
        self.project = nn.Conv2d(fused_width, cfg.residual_width, 1)
        nn.init.normal_(self.attention_weight, std=fused_width**-0.5)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        _check_image(x)
        feat, skip = self.stem(x)
        outputs = []
        for block in self.blocks:
            feat = block(feat)
            outputs.append(feat)
        fused = fuse_residual_outputs(outputs)
        if self.mask_frozen:
            mask = torch.ones(fused.shape[0], 1, *fused.shape[-2:], dtype=fused.dtype, device=fused.device)
        else:
            mask = attention_mask(fused, self.attention_weight, self.attention_bias)
        gated = apply_mask(fused, mask)
        return self.project(gated), skip, mask


class StyleEncoder(nn.Module):
    """Same stem + residual stack as the content path, with no gating."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.stem = _Stem(cfg)
        self.blocks = nn.Sequential(*(ResidualBlock(cfg.residual_width) for _ in range(RESIDUAL_BLOCK_COUNT)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_image(x)
        feat, _ = self.stem(x)
        return self.blocks(feat)


class Decoder(nn.Module):
    """Two ×2 upsamplings with a half-resolution global skip, then tanh."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.up1 = nn.Sequential(
            nn.ConvTranspose2d(2 * cfg.residual_width, cfg.stem_width_half, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(cfg.stem_width_half),
            nn.ReLU(inplace=True),
        )
        self.up2 = nn.Sequential(
            nn.ConvTranspose2d(cfg.stem_width_half, cfg.stem_width_full, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(cfg.stem_width_full),
            nn.ReLU(inplace=True),
        )
        self.out = nn.Conv2d(cfg.stem_width_full, 3, 7, padding=3, padding_mode="reflect")

    def forward(self, content: torch.Tensor, style: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        if content.shape[-2:] != style.shape[-2:]:
            raise ShapeError(
                f"content {tuple(content.shape[-2:])} and style {tuple(style.shape[-2:])} spatial dims differ"
            )
        half = self.up1(torch.cat([content, style], dim=1))
        if half.shape != skip.shape:
            raise ShapeError(f"skip feature shape {tuple(skip.shape)} does not match upsampled {tuple(half.shape)}")
        return torch.tanh(self.out(self.up2(half + skip)))


class Generator(nn.Module):
    """One translation direction: encode content and style, then decode."""

    def __init__(self, cfg: GeneratorConfig | None = None, mask_frozen: bool = False):
        super().__init__()
        self.cfg = (cfg or GeneratorConfig()).validate()
        self.content = ContentEncoder(self.cfg, mask_frozen=mask_frozen)
        self.style = StyleEncoder(self.cfg)
        self.decoder = Decoder(self.cfg)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward_with_mask(x)[0]

    def forward_with_mask(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        content, skip, mask = self.content(x)
        style = self.style(x)
        return self.decoder(content, style, skip), mask


class PatchDiscriminator(nn.Module):
    """Stride-2 leaky-rectifier conv stack scoring local patches.

    Four stride-2 layers by default; toy-scale checks on tiny images can
    request fewer so the patch map keeps more than one spatial site.
    """

    def __init__(self, width: int = 32, n_layers: int = 4):
        super().__init__()
        if n_layers < 1:
            raise ShapeError(f"discriminator needs at least 1 layer, got {n_layers}")
        layers: list[nn.Module] = [nn.Conv2d(3, width, 4, stride=2, padding=1), nn.LeakyReLU(0.2, inplace=True)]
        w = width
        for i in range(1, n_layers):
            w_next = min(2 * w, 4 * width)
            layers += [
                nn.Conv2d(w, w_next, 4, stride=2, padding=1),
                nn.InstanceNorm2d(w_next),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            w = w_next
        layers.append(nn.Conv2d(w, 1, 4, stride=1, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)
