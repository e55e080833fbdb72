"""Stage runners shared by the CLI and by programmatic callers.

Each runner validates the fields it needs, does its work under the config's
output directory, and stamps the resolved config hash beside its artifacts.
Stages never mutate their inputs: `translate` writes a fresh manifest and
image tree, `evaluate` only reads checkpoints.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import torch

from vtreid.attnet.training import train_reid
from vtreid.config import RunConfig, write_config_stamp
from vtreid.datamodel.images import load_image, save_image
from vtreid.datamodel.manifest import SOURCE, TARGET, DomainDataset, load_manifest, write_manifest
from vtreid.errors import ValidationError
from vtreid.evalkit.embeddings import extract_embeddings
from vtreid.evalkit.metrics import cmc, distance_matrix, mean_average_precision
from vtreid.evalkit.report import MethodResult, SplitMetrics, compose_report, write_cmc_curve, write_report
from vtreid.evalkit.splits import build_test_splits
from vtreid.vtgan.training import load_generators, train_translation, translate

THREADS_ENV = "VTREID_THREADS"


def apply_thread_cap(cfg: RunConfig) -> int:
    """Set torch's thread count: the env var caps the configured value."""
    threads = cfg.threads
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if cap < 1:
            raise ValidationError(f"{THREADS_ENV} must be >= 1, got {cap}")
        threads = min(threads, cap)
    torch.set_num_threads(threads)
    return threads


def run_gen_data(cfg: RunConfig) -> Path:
    from vtreid.datamodel.synthetic import generate_synthetic_corpus

    out_dir = Path(cfg.out_dir)
    spec = cfg.synthetic.to_spec(cfg.seed)
    generate_synthetic_corpus(spec, out_dir)
    write_config_stamp(out_dir, cfg, "gen-data")
    return out_dir


def run_train_translate(cfg: RunConfig, resume: str | Path | None = None) -> Path:
    _require_path(cfg.data.source_manifest, "data.source_manifest")
    _require_path(cfg.data.target_manifest, "data.target_manifest")
    source = load_manifest(cfg.data.source_manifest, SOURCE)
    target = load_manifest(cfg.data.target_manifest, TARGET)
    out_dir = Path(cfg.out_dir)
    final = train_translation(source, target, cfg, out_dir, resume=resume)
    write_config_stamp(out_dir, cfg, "train-translate")
    return final


def run_translate(cfg: RunConfig) -> Path:
    """Translate every input image; writes a new labeled manifest + tree."""
    _require_path(cfg.data.input_manifest, "data.input_manifest")
    if not cfg.translate.checkpoint:
        raise ValidationError("config field translate.checkpoint must name a translation checkpoint")
    dataset = load_manifest(cfg.data.input_manifest, SOURCE)
    g, f = load_generators(cfg.translate.checkpoint)
    generator = g if cfg.translate.direction == "source_to_target" else f

    out_dir = Path(cfg.out_dir)
    images = [load_image(r.path) for r in dataset.records]
    translated = translate(images, generator, batch_size=max(1, cfg.translate.batch_size))
    rows = []
    for record, image in zip(dataset.records, translated):
        rel = f"images/{record.path.stem}.png"
        save_image(image, out_dir / rel)
        rows.append((rel, record.identity_id, record.camera_id))
    manifest_path = out_dir / "manifest.txt"
    write_manifest(manifest_path, rows)
    write_config_stamp(out_dir, cfg, "translate")
    return manifest_path


def run_train_reid(cfg: RunConfig, resume: str | Path | None = None) -> Path:
    _require_path(cfg.data.train_manifest, "data.train_manifest")
    dataset = load_manifest(cfg.data.train_manifest, SOURCE)
    out_dir = Path(cfg.out_dir)
    final = train_reid(dataset, cfg, out_dir, resume=resume)
    write_config_stamp(out_dir, cfg, "train-reid")
    return final


def evaluate_method(
    checkpoint: str | Path,
    dataset: DomainDataset,
    cfg: RunConfig,
) -> tuple[dict[int, SplitMetrics], dict[int, np.ndarray]]:
    """Metrics and CMC curves per split size for one trained model.

    With ``evaluate.repeats > 1`` the gallery draw is repeated and metric
    values are averaged; the default single draw is fully deterministic.
    """
    e = cfg.evaluate
    embeddings = extract_embeddings(checkpoint, dataset)
    per_size: dict[int, SplitMetrics] = {}
    curves: dict[int, np.ndarray] = {}
    for size in e.split_sizes:
        maps, r1s, r5s, curve_acc = [], [], [], []
        for draw in range(e.repeats):
            (split,) = build_test_splits(dataset, [size], cfg.seed, draw=draw)
            queries = embeddings.select(split.query_indices)
            gallery = embeddings.select(split.gallery_indices)
            dist = distance_matrix(queries.embeddings, gallery.embeddings, e.metric)
            curve = cmc(dist, queries.identity_ids, gallery.identity_ids, e.max_rank)
            maps.append(mean_average_precision(dist, queries.identity_ids, gallery.identity_ids))
            r1s.append(curve[0])
            r5s.append(curve[4])
            curve_acc.append(curve)
        per_size[size] = SplitMetrics(
            map_score=float(np.mean(maps)), rank1=float(np.mean(r1s)), rank5=float(np.mean(r5s))
        )
        curves[size] = np.mean(curve_acc, axis=0)
    return per_size, curves


def run_evaluate(cfg: RunConfig) -> tuple[Path, Path]:
    _require_path(cfg.data.eval_manifest, "data.eval_manifest")
    if not cfg.evaluate.methods:
        raise ValidationError("config field evaluate.methods must list at least one method")
    dataset = load_manifest(cfg.data.eval_manifest, SOURCE)
    out_dir = Path(cfg.out_dir)
    results = []
    for method in cfg.evaluate.methods:
        per_size, curves = evaluate_method(method.checkpoint, dataset, cfg)
        results.append(MethodResult(label=method.label, per_size=per_size))
        for size, curve in curves.items():
            write_cmc_curve(curve, size, method.label, out_dir)
    report = compose_report(results)
    paths = write_report(report, out_dir)
    write_config_stamp(out_dir, cfg, "evaluate")
    return paths


def run_plot(cfg: RunConfig) -> list[Path]:
    from vtreid.plotting import emit_plots

    if not cfg.plot.report_dir:
        raise ValidationError("config field plot.report_dir must name an evaluation output directory")
    out_dir = Path(cfg.out_dir)
    produced = emit_plots(cfg.plot.report_dir, out_dir, loss_logs=cfg.plot.loss_logs)
    write_config_stamp(out_dir, cfg, "plot")
    return produced


def _require_path(value: str, field_name: str) -> None:
    if not value:
        raise ValidationError(f"config field data-stage requires {field_name} to be set")
