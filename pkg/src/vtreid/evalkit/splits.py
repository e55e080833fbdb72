"""Test-split construction: single-gallery-shot protocol at chosen scales.

For each requested size, that many identities are sampled; one image per
identity goes to the gallery, the rest become queries. Splits are a pure
function of (dataset, sizes, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vtreid.datamodel.manifest import DomainDataset
from vtreid.errors import ContractError


@dataclass(frozen=True)
class TestSplit:
    size: int
    gallery_indices: tuple[int, ...]
    query_indices: tuple[int, ...]


def build_test_splits(
    dataset: DomainDataset,
    sizes: tuple[int, ...] | list[int],
    rng_seed: int,
    draw: int = 0,
) -> list[TestSplit]:
    """One split per requested identity count; ``draw`` varies the gallery pick."""
    if not dataset.is_labeled:
        raise ContractError("split construction needs a labeled dataset")
    by_identity: dict[int, list[int]] = {}
    for i in range(len(dataset)):
        by_identity.setdefault(dataset.identity_of(i), []).append(i)
    identities = sorted(by_identity)

    splits = []
    for size in sizes:
        if size < 1 or size > len(identities):
            raise ContractError(f"split size {size} exceeds identity count {len(identities)}")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, size, draw])))
        chosen = rng.choice(len(identities), size=size, replace=False)
        gallery, queries = [], []
        for ci in sorted(chosen):
            identity = identities[ci]
            indices = by_identity[identity]
            pick = int(rng.integers(len(indices)))
            gallery.append(indices[pick])
            queries.extend(idx for j, idx in enumerate(indices) if j != pick)
        splits.append(TestSplit(size=size, gallery_indices=tuple(gallery), query_indices=tuple(queries)))
    return splits
