"""Image I/O: 8-bit RGB PNG on disk, float32 H×W×3 in [-1, 1] in memory."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from vtreid.errors import ContractError


def load_image(path: str | Path) -> np.ndarray:
    """Load an RGB PNG and map pixel bytes linearly onto [-1, 1]."""
    with PILImage.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    return rgb / 127.5 - 1.0


def save_image(pixels: np.ndarray, path: str | Path) -> None:
    """Write an H×W×3 array in [-1, 1] as an 8-bit RGB PNG."""
    require_image(pixels, divisible_by=1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clipped = np.clip(pixels, -1.0, 1.0)
    bytes_ = np.rint((clipped + 1.0) * 127.5).astype(np.uint8)
    PILImage.fromarray(bytes_, mode="RGB").save(path, format="PNG")


def require_image(pixels: np.ndarray, divisible_by: int = 4) -> np.ndarray:
    """Validate the in-memory image contract; returns the array unchanged.

    Stride-2 encoder stems need both spatial dims divisible by ``divisible_by``
    (4 for the translation networks); pass 1 to skip that check.
    """
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ContractError(f"expected an H×W×3 image array, got shape {arr.shape}")
    h, w = arr.shape[:2]
    if h <= 0 or w <= 0:
        raise ContractError(f"image dims must be positive, got {h}×{w}")
    if divisible_by > 1 and (h % divisible_by or w % divisible_by):
        raise ContractError(f"image dims must be divisible by {divisible_by}, got {h}×{w}")
    if not np.isfinite(arr).all():
        raise ContractError("image contains non-finite values")
    lo, hi = float(arr.min()), float(arr.max())
    if lo < -1.0 or hi > 1.0:
        raise ContractError(f"image values must lie in [-1, 1], got range [{lo}, {hi}]")
    return arr


def resize_image(pixels: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize to ``size``×``size``, staying in [-1, 1]."""
    h, w = pixels.shape[:2]
    if h == size and w == size:
        return pixels
    as_bytes = np.rint((np.clip(pixels, -1.0, 1.0) + 1.0) * 127.5).astype(np.uint8)
    resized = PILImage.fromarray(as_bytes, mode="RGB").resize((size, size), PILImage.BILINEAR)
    return np.asarray(resized, dtype=np.float32) / 127.5 - 1.0
