"""Checkpoint bundles: a directory of role-tagged parameter blobs plus JSON metadata.

Bundles are written atomically (build under a temp name, then rename) and are
self-describing: metadata carries the step, the producing config hash, the
bundle kind and enough architecture fields to rebuild the networks.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import torch

from vtreid.errors import CheckpointError

FORMAT_VERSION = 1
METADATA_FILE = "metadata.json"


def save_bundle(
    parent_dir: str | Path,
    *,
    kind: str,
    step: int,
    config_hash: str,
    blobs: dict[str, Any],
    extra: dict | None = None,
) -> Path:
    """Write ``ckpt-{step:06d}`` under ``parent_dir``; returns the bundle path."""
    parent_dir = Path(parent_dir)
    parent_dir.mkdir(parents=True, exist_ok=True)
    final = parent_dir / f"ckpt-{step:06d}"
    tmp = parent_dir / f".ckpt-{step:06d}.tmp"
    if tmp.exists():
        _rmtree(tmp)
    tmp.mkdir()
    for role, blob in blobs.items():
        torch.save(blob, tmp / f"{role}.pt")
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "step": step,
        "config_hash": config_hash,
        "roles": sorted(blobs),
    }
    meta.update(extra or {})
    (tmp / METADATA_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if final.exists():
        _rmtree(final)
    tmp.rename(final)
    return final


class CheckpointBundle:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        meta_path = self.path / METADATA_FILE
        if not meta_path.is_file():
            raise CheckpointError(f"no checkpoint metadata at {meta_path}")
        try:
            self.meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"corrupt checkpoint metadata at {meta_path}: {exc}") from exc
        if self.meta.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {self.meta.get('format_version')}")

    @property
    def kind(self) -> str:
        return self.meta["kind"]

    @property
    def step(self) -> int:
        return int(self.meta["step"])

    def blob(self, role: str) -> Any:
        blob_path = self.path / f"{role}.pt"
        if not blob_path.is_file():
            raise CheckpointError(f"checkpoint {self.path} has no '{role}' blob")
        return torch.load(blob_path, map_location="cpu", weights_only=False)

    def require_kind(self, kind: str) -> "CheckpointBundle":
        if self.kind != kind:
            raise CheckpointError(f"checkpoint {self.path} has kind {self.kind!r}, expected {kind!r}")
        return self


def load_bundle(path: str | Path) -> CheckpointBundle:
    return CheckpointBundle(path)


def latest_bundle(parent_dir: str | Path) -> Path | None:
    parent_dir = Path(parent_dir)
    if not parent_dir.is_dir():
        return None
    candidates = sorted(p for p in parent_dir.iterdir() if p.is_dir() and p.name.startswith("ckpt-"))
    return candidates[-1] if candidates else None


def _rmtree(path: Path) -> None:
    for child in path.iterdir():
        if child.is_dir():
            _rmtree(child)
        else:
            child.unlink()
    path.rmdir()
