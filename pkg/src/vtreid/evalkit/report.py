"""Evaluation reports: a methods × split-sizes grid of mAP / rank-1 / rank-5.

The CSV mirrors the usual benchmark-table layout (three metric columns per
split size, values as percentages with two decimals); a JSON twin carries the
raw fractions. CMC curves are emitted as rank→value CSVs that the plot
command consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vtreid.errors import ContractError


@dataclass(frozen=True)
class SplitMetrics:
    map_score: float  # each in [0, 1]
    rank1: float
    rank5: float

    def validate(self) -> "SplitMetrics":
        for name, v in (("map", self.map_score), ("rank1", self.rank1), ("rank5", self.rank5)):
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {v}")
        if self.rank5 < self.rank1 - 1e-12:
            raise ContractError(f"rank5 ({self.rank5}) must be >= rank1 ({self.rank1})")
        return self


@dataclass(frozen=True)
class MethodResult:
    label: str
    per_size: dict[int, SplitMetrics]


@dataclass(frozen=True)
class EvalReport:
    sizes: tuple[int, ...]
    rows: tuple[MethodResult, ...]


def compose_report(results: list[MethodResult]) -> EvalReport:
    """Assemble the per-method grid, requiring consistent split sizes."""
    if not results:
        raise ContractError("cannot compose an empty report")
    sizes = tuple(sorted(results[0].per_size))
    for res in results:
        if tuple(sorted(res.per_size)) != sizes:
            raise ContractError(
                f"method {res.label!r} covers sizes {sorted(res.per_size)}, expected {list(sizes)}"
            )
        for metrics in res.per_size.values():
            metrics.validate()
    return EvalReport(sizes=sizes, rows=tuple(results))


def report_to_csv(report: EvalReport) -> str:
    header = ["method"]
    for size in report.sizes:
        header += [f"mAP_{size}", f"rank1_{size}", f"rank5_{size}"]
    lines = [",".join(header)]
    for row in report.rows:
        cells = [row.label]
        for size in report.sizes:
            m = row.per_size[size]
            cells += [f"{m.map_score * 100:.2f}", f"{m.rank1 * 100:.2f}", f"{m.rank5 * 100:.2f}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> dict:
    return {
        "sizes": list(report.sizes),
        "methods": [
            {
                "label": row.label,
                "per_size": {
                    str(size): {
                        "mAP": row.per_size[size].map_score,
                        "rank1": row.per_size[size].rank1,
                        "rank5": row.per_size[size].rank5,
                    }
                    for size in report.sizes
                },
            }
            for row in report.rows
        ],
    }


def write_report(report: EvalReport, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    json_path = out_dir / "report.json"
    csv_path.write_text(report_to_csv(report), encoding="utf-8")
    json_path.write_text(json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def cmc_csv_name(size: int, label: str) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "+-" else "_" for ch in label)
    return f"cmc_size{size}_{safe}.csv"


def write_cmc_curve(curve: np.ndarray, size: int, label: str, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["rank,match_rate"]
    for rank_index, value in enumerate(np.asarray(curve, dtype=np.float64), start=1):
        lines.append(f"{rank_index},{float(value)!r}")
    path = out_dir / cmc_csv_name(size, label)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
