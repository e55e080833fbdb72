"""Seed-deterministic batch samplers for both training stages.

Each sampler owns its RNG and epoch cursor; ``state_dict`` /
``load_state_dict`` round-trip the full sampling state so checkpoint resume
replays the exact same batch sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vtreid.datamodel.images import load_image
from vtreid.datamodel.manifest import DomainDataset
from vtreid.errors import ContractError, SamplingError


@dataclass
class UnpairedBatch:
    source_images: list[np.ndarray]
    target_images: list[np.ndarray]
    size: int


@dataclass
class PairBatch:
    anchors: list[np.ndarray]
    partners: list[np.ndarray]
    same_id: list[int]
    identity_labels: list[int]


@dataclass
class _ImageCache:
    """Decoded-image cache keyed by path; corpora are small at desk scale."""

    _store: dict = field(default_factory=dict)

    def get(self, path: Path) -> np.ndarray:
        if path not in self._store:
            self._store[path] = load_image(path)
        return self._store[path]


class _EpochCursor:
    """Without-replacement index stream that reshuffles at each epoch end."""

    def __init__(self, n: int, seed_key: list[int]):
        self.n = n
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_key)))
        self.order = self.rng.permutation(n)
        self.pos = 0

    def take(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            if self.pos == self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
            grab = min(count - filled, self.n - self.pos)
            out[filled : filled + grab] = self.order[self.pos : self.pos + grab]
            self.pos += grab
            filled += grab
        return out

    def state_dict(self) -> dict:
        return {"rng": self.rng.bit_generator.state, "order": self.order.tolist(), "pos": self.pos}

    def load_state_dict(self, state: dict) -> None:
        self.rng.bit_generator.state = state["rng"]
        self.order = np.asarray(state["order"], dtype=np.int64)
        self.pos = int(state["pos"])


class UnpairedSampler:
    """Draws independent source/target batches for translation training.

    Sampling is without replacement within each per-domain epoch pass; a batch
    may straddle an epoch boundary. The two domains advance independently.
    """

    def __init__(self, source: DomainDataset, target: DomainDataset, seed: int):
        if len(source) == 0 or len(target) == 0:
            raise SamplingError("both datasets must be nonempty")
        self.source = source
        self.target = target
        self._cursors = {
            "source": _EpochCursor(len(source), [seed, 0]),
            "target": _EpochCursor(len(target), [seed, 1]),
        }
        self._cache = _ImageCache()

    def sample(self, batch_size: int) -> UnpairedBatch:
        if batch_size < 1:
            raise SamplingError(f"batch_size must be >= 1, got {batch_size}")
        if batch_size > len(self.source) or batch_size > len(self.target):
            raise SamplingError(
                f"batch_size {batch_size} exceeds dataset size "
                f"({len(self.source)} source / {len(self.target)} target)"
            )
        src_idx = self._cursors["source"].take(batch_size)
        tgt_idx = self._cursors["target"].take(batch_size)
        return UnpairedBatch(
            source_images=[self._cache.get(self.source.records[i].path) for i in src_idx],
            target_images=[self._cache.get(self.target.records[i].path) for i in tgt_idx],
            size=batch_size,
        )

    def sample_indices(self, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
        """Index-only variant for determinism checks."""
        return self._cursors["source"].take(batch_size), self._cursors["target"].take(batch_size)

    def state_dict(self) -> dict:
        return {name: cur.state_dict() for name, cur in self._cursors.items()}

    def load_state_dict(self, state: dict) -> None:
        for name, cur in self._cursors.items():
            cur.load_state_dict(state[name])


class PairSampler:
    """Balanced positive/negative pair batches from a labeled dataset.

    Each batch holds ceil(B/2) positive and floor(B/2) negative pairs; the
    anchor identity is recorded for the identification head and ``same_id``
    is exact by construction.
    """

    def __init__(self, dataset: DomainDataset, seed: int):
        if not dataset.is_labeled:
            raise ContractError("pair sampling needs a labeled (source-tagged) dataset")
        self.dataset = dataset
        self._by_identity: dict[int, list[int]] = {}
        for i in range(len(dataset)):
            self._by_identity.setdefault(dataset.identity_of(i), []).append(i)
        if len(self._by_identity) < 2:
            raise SamplingError("pair sampling needs at least 2 identities")
        self._multi = sorted(k for k, v in self._by_identity.items() if len(v) >= 2)
        if not self._multi:
            raise SamplingError("no identity has 2+ images; no positive pair exists")
        self._ids = sorted(self._by_identity)
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 2])))
        self._cache = _ImageCache()

    def sample(self, batch_size: int) -> PairBatch:
        rows = self.sample_index_pairs(batch_size)
        return PairBatch(
            anchors=[self._cache.get(self.dataset.records[a].path) for a, _, _, _ in rows],
            partners=[self._cache.get(self.dataset.records[b].path) for _, b, _, _ in rows],
            same_id=[same for _, _, same, _ in rows],
            identity_labels=[label for _, _, _, label in rows],
        )

    def sample_index_pairs(self, batch_size: int) -> list[tuple[int, int, int, int]]:
        """(anchor_idx, partner_idx, same_id, anchor_identity) rows, no image I/O."""
        if batch_size < 1:
            raise SamplingError(f"batch_size must be >= 1, got {batch_size}")
        n_pos = (batch_size + 1) // 2
        n_neg = batch_size // 2
        rows = []
        for _ in range(n_pos):
            identity = self._multi[self.rng.integers(len(self._multi))]
            a, b = self.rng.choice(self._by_identity[identity], size=2, replace=False)
            rows.append((int(a), int(b), 1, identity))
        for _ in range(n_neg):
            ia, ib = self.rng.choice(len(self._ids), size=2, replace=False)
            id_a, id_b = self._ids[ia], self._ids[ib]
            a = self.rng.choice(self._by_identity[id_a])
            b = self.rng.choice(self._by_identity[id_b])
            rows.append((int(a), int(b), 0, id_a))
        return rows

    def state_dict(self) -> dict:
        return {"rng": self.rng.bit_generator.state}

    def load_state_dict(self, state: dict) -> None:
        self.rng.bit_generator.state = state["rng"]
