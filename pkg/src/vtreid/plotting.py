"""Plot emission: CMC curves per split size and loss curves per training log.

Plots are SVG with a pinned hash salt and no creation date, so re-rendering
unchanged inputs produces byte-identical files.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "vtreid"

import matplotlib.pyplot as plt

from vtreid.errors import ContractError

_CMC_FILE = re.compile(r"cmc_size(\d+)_(.+)\.csv$")


def emit_plots(report_dir: str | Path, out_dir: str | Path, loss_logs: tuple[str, ...] = ()) -> list[Path]:
    """Render one CMC plot per split size plus a curve plot per loss log."""
    report_dir = Path(report_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    by_size: dict[int, list[tuple[str, list[int], list[float]]]] = {}
    for path in sorted(report_dir.glob("cmc_size*_*.csv")):
        match = _CMC_FILE.match(path.name)
        if not match:
            continue
        size, label = int(match.group(1)), match.group(2)
        ranks, values = _read_curve(path)
        by_size.setdefault(size, []).append((label, ranks, values))
    if not by_size and not loss_logs:
        raise ContractError(f"no CMC curve CSVs found under {report_dir}")

    produced = []
    for size in sorted(by_size):
        fig, ax = plt.subplots(figsize=(5, 4))
        for label, ranks, values in by_size[size]:
            ax.plot(ranks, values, marker="o", markersize=3, label=label)
        ax.set_xlabel("rank")
        ax.set_ylabel("match rate")
        ax.set_title(f"CMC, test size = {size}")
        ax.set_ylim(0.0, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        out_path = out_dir / f"cmc_size{size}.svg"
        _save(fig, out_path)
        produced.append(out_path)

    for log in loss_logs:
        produced.append(_plot_loss_log(Path(log), out_dir))
    return produced


def _read_curve(path: Path) -> tuple[list[int], list[float]]:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ContractError(f"empty CMC curve file: {path}")
    ranks = [int(r["rank"]) for r in rows]
    values = [float(r["match_rate"]) for r in rows]
    return ranks, values


def _plot_loss_log(log_path: Path, out_dir: Path) -> Path:
    with log_path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ContractError(f"empty loss log: {log_path}")
    steps = [int(r["step"]) for r in rows]
    series = [name for name in rows[0] if name != "step"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in series:
        ax.plot(steps, [float(r[name]) for r in rows], label=name, linewidth=0.9)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(log_path.parent.name or log_path.stem)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    out_path = out_dir / f"{log_path.parent.name or log_path.stem}_losses.svg"
    _save(fig, out_path)
    return out_path


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
