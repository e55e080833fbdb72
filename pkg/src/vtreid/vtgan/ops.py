"""Functional primitives of the translation encoder: fusion, attention, gram.

All functions accept NCHW tensors (or CHW for the unbatched gram case) and
raise :class:`ShapeError` on incompatible inputs.
"""

from __future__ import annotations

from typing import Sequence

import torch

from vtreid.errors import ContractError, ShapeError

RESIDUAL_BLOCK_COUNT = 9


def fuse_residual_outputs(block_outputs: Sequence[torch.Tensor]) -> torch.Tensor:
    """Concatenate the nine residual-block outputs along the channel axis."""
    if len(block_outputs) != RESIDUAL_BLOCK_COUNT:
        raise ShapeError(f"expected {RESIDUAL_BLOCK_COUNT} residual outputs, got {len(block_outputs)}")
    first = block_outputs[0]
    for i, t in enumerate(block_outputs):
        if t.shape != first.shape:
            raise ShapeError(f"residual output {i} has shape {tuple(t.shape)}, expected {tuple(first.shape)}")
    return torch.cat(list(block_outputs), dim=-3)


def attention_mask(fused: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor) -> torch.Tensor:
    """Per-location sigmoid gate: one shared affine map over channels.

    ``weight`` has shape (C,) and ``bias`` shape (); the same map is applied
    at every spatial site, producing an N×1×H×W mask in (0, 1).
    """
    channels = fused.shape[-3]
    if weight.ndim != 1 or weight.shape[0] != channels:
        raise ShapeError(f"attention weight width {tuple(weight.shape)} does not match {channels} channels")
    logits = torch.einsum("...chw,c->...hw", fused, weight) + bias
    return torch.sigmoid(logits).unsqueeze(-3)


def apply_mask(fused: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Scale every channel of ``fused`` by the scalar mask at its site."""
    if fused.shape[-2:] != mask.shape[-2:]:
        raise ShapeError(f"mask spatial dims {tuple(mask.shape[-2:])} do not match {tuple(fused.shape[-2:])}")
    if mask.shape[-3] != 1:
        raise ShapeError(f"mask must have a single channel, got {mask.shape[-3]}")
    return fused * mask


def gram(features: torch.Tensor) -> torch.Tensor:
    """Channel-by-channel inner products of the flattened spatial planes.

    CHW input gives a C×C matrix; NCHW gives N stacked matrices. No
    normalization is applied here; the style loss owns its 1/(N·M) factor.
    """
    if features.ndim not in (3, 4):
        raise ShapeError(f"expected a CHW or NCHW feature map, got ndim={features.ndim}")
    if features.shape[-1] == 0 or features.shape[-2] == 0 or features.shape[-3] == 0:
        raise ContractError("cannot take the gram matrix of an empty feature map")
    squeeze = features.ndim == 3
    if squeeze:
        features = features.unsqueeze(0)
    n, c = features.shape[:2]
    flat = features.reshape(n, c, -1)
    result = flat @ flat.transpose(1, 2)
    return result[0] if squeeze else result
