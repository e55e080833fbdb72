"""Embedding extraction from a trained reID checkpoint."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from vtreid.attnet.training import load_reid_model
from vtreid.datamodel.images import load_image, resize_image
from vtreid.datamodel.manifest import DomainDataset
from vtreid.errors import ShapeError
from vtreid.vtgan.training import images_to_tensor


@dataclass
class EmbeddingSet:
    embeddings: np.ndarray  # N×D
    identity_ids: np.ndarray  # N
    camera_ids: np.ndarray | None = None

    def __post_init__(self):
        if self.embeddings.ndim != 2:
            raise ShapeError("embeddings must be an N×D array")
        if self.identity_ids.shape[0] != self.embeddings.shape[0]:
            raise ShapeError("identity_ids length must match embedding rows")
        if self.camera_ids is not None and self.camera_ids.shape[0] != self.embeddings.shape[0]:
            raise ShapeError("camera_ids length must match embedding rows")
        if not np.isfinite(self.embeddings).all():
            raise ShapeError("embeddings contain non-finite values")

    def select(self, indices) -> "EmbeddingSet":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingSet(
            embeddings=self.embeddings[idx],
            identity_ids=self.identity_ids[idx],
            camera_ids=None if self.camera_ids is None else self.camera_ids[idx],
        )


def extract_embeddings(
    checkpoint_dir: str | Path,
    dataset: DomainDataset,
    batch_size: int = 32,
) -> EmbeddingSet:
    """Row i is the embedding of record i; deterministic in inference mode."""
    model = load_reid_model(checkpoint_dir)
    size = model.arch.image_size
    rows = []
    with torch.no_grad():
        for start in range(0, len(dataset), batch_size):
            records = dataset.records[start : start + batch_size]
            images = [resize_image(load_image(r.path), size) for r in records]
            rows.append(model.embed(images_to_tensor(images)).cpu().numpy())
    embeddings = np.concatenate(rows, axis=0) if rows else np.zeros((0, model.arch.embedding_dim))
    cameras = [r.camera_id for r in dataset.records]
    return EmbeddingSet(
        embeddings=embeddings.astype(np.float64),
        identity_ids=np.asarray(dataset.identities(), dtype=np.int64),
        camera_ids=None if any(c is None for c in cameras) else np.asarray(cameras, dtype=np.int64),
    )
