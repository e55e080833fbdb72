"""Manifest-backed dataset descriptions.

A manifest is a UTF-8 text file with the header line ``#vtreid-manifest-v1``
followed by one record per line::

    relative_path,identity_id,camera_id

with ``-`` marking an absent field. Paths are relative to the manifest's
directory and must resolve at load time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from vtreid.errors import LabelAbsentError, ManifestError

MANIFEST_HEADER = "#vtreid-manifest-v1"

SOURCE = "source"
TARGET = "target"
_DOMAIN_TAGS = (SOURCE, TARGET)


@dataclass(frozen=True)
class Record:
    """One dataset entry: an image path plus optional identity/camera labels."""

    path: Path
    identity_id: int | None
    camera_id: int | None


@dataclass(frozen=True)
class DomainDataset:
    """An immutable image collection tagged with its domain role.

    Source-tagged datasets expose identity labels on every record; target-tagged
    datasets carry no identity labels at all, so no consumer can accidentally
    train on them.
    """

    domain_tag: str
    records: tuple[Record, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.domain_tag not in _DOMAIN_TAGS:
            raise ManifestError(f"unknown domain tag {self.domain_tag!r}")
        if self.domain_tag == SOURCE:
            for i, rec in enumerate(self.records):
                if rec.identity_id is None:
                    raise ManifestError(f"source dataset record {i} has no identity label")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def is_labeled(self) -> bool:
        return self.domain_tag == SOURCE

    def identity_of(self, index: int) -> int:
        """Identity label of record ``index``; raises on unlabeled datasets."""
        rec = self.records[index]
        if rec.identity_id is None:
            raise LabelAbsentError(
                f"record {index} carries no identity label (domain tag {self.domain_tag!r})"
            )
        return rec.identity_id

    def identities(self) -> list[int]:
        """All identity labels, in record order; raises on unlabeled datasets."""
        return [self.identity_of(i) for i in range(len(self.records))]

    def filter_identities(self, keep: Iterable[int]) -> "DomainDataset":
        """Labeled subset containing only records whose identity is in ``keep``."""
        keep_set = set(keep)
        kept = tuple(r for r in self.records if r.identity_id in keep_set)
        return DomainDataset(self.domain_tag, kept)


def load_manifest(path: str | Path, domain_tag: str) -> DomainDataset:
    """Load a manifest file into a :class:`DomainDataset`.

    Loading with ``domain_tag="target"`` strips identity labels from every
    record, whatever the file contains. Loading with ``domain_tag="source"``
    requires an identity on every row.
    """
    path = Path(path)
    if domain_tag not in _DOMAIN_TAGS:
        raise ManifestError(f"unknown domain tag {domain_tag!r}")
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    root = path.parent
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != MANIFEST_HEADER:
        raise ManifestError(f"{path}: missing required header line {MANIFEST_HEADER!r}")

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ManifestError(f"{path}:{lineno}: expected 3 comma-separated fields, got {len(parts)}")
        rel, identity_raw, camera_raw = (p.strip() for p in parts)
        if not rel:
            raise ManifestError(f"{path}:{lineno}: empty image path")
        image_path = (root / rel).resolve()
        if not image_path.is_file():
            raise FileNotFoundError(f"{path}:{lineno}: image file not found: {image_path}")
        identity = _parse_optional_int(identity_raw, path, lineno, "identity_id")
        camera = _parse_optional_int(camera_raw, path, lineno, "camera_id")
        if domain_tag == SOURCE and identity is None:
            raise ManifestError(f"{path}:{lineno}: source manifest row is missing its identity_id")
        if domain_tag == TARGET:
            identity = None
        if identity is not None and identity < 0:
            raise ManifestError(f"{path}:{lineno}: identity_id must be non-negative, got {identity}")
        records.append(Record(image_path, identity, camera))
    return DomainDataset(domain_tag, tuple(records))


def write_manifest(path: str | Path, rows: Sequence[tuple[str, int | None, int | None]]) -> None:
    """Write manifest ``rows`` of (relative_path, identity_id, camera_id)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [MANIFEST_HEADER]
    for rel, identity, camera in rows:
        out.append(f"{rel},{_fmt(identity)},{_fmt(camera)}")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def _fmt(value: int | None) -> str:
    return "-" if value is None else str(value)


def _parse_optional_int(raw: str, path: Path, lineno: int, name: str) -> int | None:
    if raw == "-":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ManifestError(f"{path}:{lineno}: {name} must be an integer or '-', got {raw!r}") from None
