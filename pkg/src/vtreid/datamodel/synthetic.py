"""Deterministic synthetic two-domain vehicle corpus.

Identity is geometry: each identity_id maps to a unique body outline, cabin,
wheel layout and glyph pattern, rendered identically in both domains. Domains
differ photometrically (brightness / contrast / hue) and by background
texture, which is the gap the translation stage is meant to close.

Everything is a pure function of (spec, identity, image index), so two runs
with the same spec produce byte-identical PNG trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vtreid.datamodel.images import save_image
from vtreid.datamodel.manifest import SOURCE, TARGET, DomainDataset, load_manifest, write_manifest
from vtreid.errors import ValidationError

# Stream tags keep the per-purpose RNGs independent of each other.
_GEOMETRY_STREAM = 101
_POSE_STREAM = 202
_BACKGROUND_STREAM = 303

_CAMERAS_PER_DOMAIN = 2


@dataclass(frozen=True)
class DomainStyle:
    """Photometric style of one domain, applied after compositing."""

    brightness: float = 0.0  # additive shift in [0,1] pixel space
    contrast: float = 1.0  # gain about mid-gray
    hue: float = 0.0  # rotation angle in radians
    background_seed: int = 0  # selects the background texture family

    def as_tuple(self) -> tuple[float, float, float, int]:
        return (self.brightness, self.contrast, self.hue, self.background_seed)


@dataclass(frozen=True)
class SyntheticSpec:
    n_identities: int
    images_per_identity: int
    image_size: int
    source_style: DomainStyle
    target_style: DomainStyle
    rng_seed: int

    def validate(self) -> "SyntheticSpec":
        if self.n_identities < 2:
            raise ValidationError(f"n_identities must be >= 2, got {self.n_identities}")
        if self.images_per_identity < 1:
            raise ValidationError(f"images_per_identity must be >= 1, got {self.images_per_identity}")
        if self.image_size < 16 or self.image_size % 4:
            raise ValidationError(f"image_size must be >= 16 and divisible by 4, got {self.image_size}")
        if self.source_style.as_tuple() == self.target_style.as_tuple():
            raise ValidationError("source_style and target_style must differ in at least one component")
        return self


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def _identity_geometry(identity_id: int) -> dict:
    """Shape parameters uniquely derived from the identity (seed-independent)."""
    rng = _rng(_GEOMETRY_STREAM, identity_id)
    return {
        "body_hw": rng.uniform(0.58, 0.80),  # half-width, normalized coords
        "body_hh": rng.uniform(0.26, 0.40),
        "body_exp": rng.uniform(2.0, 6.0),  # superellipse exponent
        "cabin_hw": rng.uniform(0.28, 0.46),
        "cabin_hh": rng.uniform(0.16, 0.26),
        "cabin_dx": rng.uniform(-0.14, 0.14),
        "wheel_r": rng.uniform(0.10, 0.15),
        "wheel_dx": rng.uniform(0.50, 0.72),
        "glyph": rng.integers(0, 2, size=(2, 4)),
        "hue": (identity_id * 0.6180339887498949) % 1.0,
        "sat": rng.uniform(0.55, 0.95),
        "val": rng.uniform(0.55, 0.90),
    }


def _pose(spec: SyntheticSpec, identity_id: int, index: int) -> dict:
    """Per-image placement jitter, shared by both domains."""
    rng = _rng(_POSE_STREAM, spec.rng_seed, identity_id, index)
    return {
        "dx": rng.uniform(-0.07, 0.07),
        "dy": rng.uniform(-0.07, 0.07),
        "scale": rng.uniform(0.92, 1.08),
    }


def _hsv_to_rgb(h: float, s: float, v: float) -> np.ndarray:
    i = int(h * 6.0) % 6
    f = h * 6.0 - math.floor(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.array(rgb, dtype=np.float64)


def render_vehicle(spec: SyntheticSpec, identity_id: int, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Render the domain-independent vehicle layer.

    Returns ``(rgb, mask)`` where ``rgb`` is H×W×3 in [0, 1] (background left
    black) and ``mask`` is a boolean foreground stencil.
    """
    geo = _identity_geometry(identity_id)
    pose = _pose(spec, identity_id, index)
    s = spec.image_size

    ys, xs = np.mgrid[0:s, 0:s]
    # Normalized coordinates in [-1, 1], pose-adjusted.
    x = (2.0 * (xs + 0.5) / s - 1.0 - pose["dx"]) / pose["scale"]
    y = (2.0 * (ys + 0.5) / s - 1.0 - pose["dy"]) / pose["scale"]

    body_cy = 0.18
    p = geo["body_exp"]
    body = (np.abs(x / geo["body_hw"]) ** p + np.abs((y - body_cy) / geo["body_hh"]) ** p) <= 1.0

    cabin_cy = body_cy - geo["body_hh"] - geo["cabin_hh"] * 0.55
    cabin = (
        np.abs((x - geo["cabin_dx"]) / geo["cabin_hw"]) ** 2.2
        + np.abs((y - cabin_cy) / geo["cabin_hh"]) ** 2.2
    ) <= 1.0

    wheel_cy = body_cy + geo["body_hh"]
    wheel_l = (x + geo["wheel_dx"] * geo["body_hw"]) ** 2 + (y - wheel_cy) ** 2 <= geo["wheel_r"] ** 2
    wheel_r = (x - geo["wheel_dx"] * geo["body_hw"]) ** 2 + (y - wheel_cy) ** 2 <= geo["wheel_r"] ** 2

    mask = body | cabin | wheel_l | wheel_r

    body_color = _hsv_to_rgb(geo["hue"], geo["sat"], geo["val"])
    cabin_color = np.clip(body_color * 0.55 + 0.40, 0.0, 1.0)
    wheel_color = np.array([0.12, 0.12, 0.14])
    glyph_color = 1.0 - body_color

    rgb = np.zeros((s, s, 3), dtype=np.float64)
    rgb[body] = body_color
    rgb[cabin] = cabin_color

    # Glyph: a small grid of contrast cells on the lower body panel.
    grid = geo["glyph"]
    gh, gw = grid.shape
    cell = geo["body_hw"] * 0.8 / gw
    gx0, gy0 = -geo["body_hw"] * 0.4, body_cy - 0.02
    for gi in range(gh):
        for gj in range(gw):
            if not grid[gi, gj]:
                continue
            in_cell = (
                (x >= gx0 + gj * cell)
                & (x < gx0 + (gj + 1) * cell)
                & (y >= gy0 + gi * cell)
                & (y < gy0 + (gi + 1) * cell)
            )
            rgb[in_cell & body] = glyph_color

    rgb[wheel_l | wheel_r] = wheel_color
    return rgb, mask


def foreground_mask(spec: SyntheticSpec, identity_id: int, index: int) -> np.ndarray:
    """Boolean foreground stencil for one record (identical in both domains)."""
    return render_vehicle(spec, identity_id, index)[1]


def _render_background(spec: SyntheticSpec, domain: str, identity_id: int, index: int) -> np.ndarray:
    """Smooth domain-characteristic texture in [0, 1]."""
    style = spec.source_style if domain == SOURCE else spec.target_style
    domain_idx = 0 if domain == SOURCE else 1
    rng = _rng(_BACKGROUND_STREAM, spec.rng_seed, domain_idx, style.background_seed, identity_id, index)

    # The texture family (orientation band, palette) follows the domain's
    # background seed; the per-image rng only jitters phases and frequency.
    fam = _rng(_BACKGROUND_STREAM, style.background_seed)
    theta = fam.uniform(0, math.pi)
    base = fam.uniform(0.35, 0.65, size=3)
    tint = fam.uniform(-0.12, 0.12, size=3)

    s = spec.image_size
    ys, xs = np.mgrid[0:s, 0:s]
    u = (xs * math.cos(theta) + ys * math.sin(theta)) / s
    v = (-xs * math.sin(theta) + ys * math.cos(theta)) / s
    freq = rng.uniform(1.5, 3.0)
    phase_u, phase_v = rng.uniform(0, 2 * math.pi, size=2)
    wave = 0.5 * np.sin(2 * math.pi * freq * u + phase_u) + 0.5 * np.sin(2 * math.pi * freq * 0.7 * v + phase_v)
    rgb = base[None, None, :] + wave[:, :, None] * 0.10 + wave[:, :, None] ** 2 * tint[None, None, :]
    return np.clip(rgb, 0.0, 1.0)


def _hue_rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    third = np.full((3, 3), 1.0 / 3.0)
    cross = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]) / math.sqrt(3.0)
    return c * np.eye(3) + (1.0 - c) * third + s * cross


def apply_style(rgb: np.ndarray, style: DomainStyle) -> np.ndarray:
    """Hue-rotate, contrast-scale and brightness-shift an image in [0, 1]."""
    out = rgb @ _hue_rotation_matrix(style.hue).T
    out = (out - 0.5) * style.contrast + 0.5 + style.brightness
    return np.clip(out, 0.0, 1.0)


def render_record(spec: SyntheticSpec, domain: str, identity_id: int, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Render one finished corpus image plus its foreground mask.

    The vehicle layer is domain-independent; only the background texture and
    the photometric style differ between domains. The returned image is in
    [-1, 1]; the mask is the pre-style foreground stencil.
    """
    vehicle, mask = render_vehicle(spec, identity_id, index)
    background = _render_background(spec, domain, identity_id, index)
    style = spec.source_style if domain == SOURCE else spec.target_style
    composed = np.where(mask[:, :, None], vehicle, background)
    styled = apply_style(composed, style)
    return (styled * 2.0 - 1.0).astype(np.float32), mask


def generate_synthetic_corpus(spec: SyntheticSpec, out_dir: str | Path) -> tuple[DomainDataset, DomainDataset]:
    """Write the two-domain corpus to disk and load it back as datasets.

    Layout: ``out_dir/{source,target}/manifest.txt`` plus an ``images/`` tree.
    Both manifests carry identity and camera columns (ground truth on disk);
    the returned target dataset has its labels stripped at load time.
    """
    spec.validate()
    out_dir = Path(out_dir)
    manifests: dict[str, Path] = {}
    for domain in (SOURCE, TARGET):
        domain_dir = out_dir / domain
        rows = []
        for identity in range(spec.n_identities):
            for index in range(spec.images_per_identity):
                rel = f"images/id{identity:04d}_{index:02d}.png"
                image, _ = render_record(spec, domain, identity, index)
                save_image(image, domain_dir / rel)
                rows.append((rel, identity, index % _CAMERAS_PER_DOMAIN))
        manifest_path = domain_dir / "manifest.txt"
        write_manifest(manifest_path, rows)
        manifests[domain] = manifest_path
    return (
        load_manifest(manifests[SOURCE], SOURCE),
        load_manifest(manifests[TARGET], TARGET),
    )


def corpus_mean_brightness(images: list[np.ndarray]) -> float:
    """Mean gray level in [0, 1] over a list of [-1, 1] images."""
    if not images:
        raise ValidationError("cannot take the mean brightness of an empty image list")
    return float(np.mean([(img.astype(np.float64) + 1.0) / 2.0 for img in images]))


class ShapeIdentityOracle:
    """Nearest-neighbor identity classifier on photometry-invariant edge maps.

    Fit on the clean foreground stencils the corpus generator produced, it
    re-identifies an image by correlating its normalized gradient-magnitude
    map against every reference silhouette. Style transforms move color, not
    edges, so a translation that preserves geometry keeps the oracle accurate.
    """

    def __init__(self):
        self._refs: np.ndarray | None = None
        self._labels: np.ndarray | None = None

    @classmethod
    def from_spec(cls, spec: SyntheticSpec) -> "ShapeIdentityOracle":
        """Fit on the clean vehicle layers (geometry incl. glyph, no style)."""
        oracle = cls()
        shapes, labels = [], []
        for identity in range(spec.n_identities):
            for index in range(spec.images_per_identity):
                shapes.append(render_vehicle(spec, identity, index)[0])
                labels.append(identity)
        oracle.fit(shapes, labels)
        return oracle

    def fit(self, shapes: list[np.ndarray], labels: list[int]) -> "ShapeIdentityOracle":
        if len(shapes) != len(labels) or not shapes:
            raise ValidationError("oracle needs one label per reference shape")
        self._refs = np.stack([self._descriptor(s) for s in shapes])
        self._labels = np.asarray(labels, dtype=np.int64)
        return self

    def predict(self, images: list[np.ndarray]) -> np.ndarray:
        """Predicted identity for each [-1, 1] image (or 2-D map)."""
        if self._refs is None or self._labels is None:
            raise ValidationError("oracle must be fit before predicting")
        out = np.empty(len(images), dtype=np.int64)
        for i, img in enumerate(images):
            desc = self._descriptor(img)
            out[i] = self._labels[int(np.argmax(self._refs @ desc))]
        return out

    @staticmethod
    def _descriptor(image: np.ndarray) -> np.ndarray:
        arr = image.astype(np.float64)
        planes = [arr] if arr.ndim == 2 else [arr[:, :, c] for c in range(arr.shape[2])]
        # Per-channel gradient magnitudes keep edges that a grayscale view
        # would lose when a style transform makes regions isoluminant.
        mag = np.zeros_like(planes[0])
        for plane in planes:
            gy, gx = np.gradient(plane)
            mag += np.hypot(gx, gy)
        mag /= len(planes)
        # Box blur tolerates soft or slightly shifted edges in generated images.
        padded = np.pad(mag, 1, mode="edge")
        mag = sum(
            padded[dy : dy + mag.shape[0], dx : dx + mag.shape[1]] for dy in range(3) for dx in range(3)
        ) / 9.0
        flat = mag.ravel()
        flat = flat - flat.mean()
        norm = np.linalg.norm(flat)
        return flat / norm if norm > 0 else flat
