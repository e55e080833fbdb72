"""Run configuration: TOML parsing, strict validation, presets and hashing.

Configs are TOML files with dotted sections. Unknown keys are rejected, every
field is validated before any stage work starts, and the resolved config is
hashed so each produced artifact can be traced back to the exact settings
that made it.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, get_args, get_origin, get_type_hints

from vtreid.datamodel.synthetic import DomainStyle, SyntheticSpec
from vtreid.errors import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STAGES = ("gen-data", "train-translate", "translate", "train-reid", "evaluate", "plot")


@dataclass(frozen=True)
class StyleConfig:
    brightness: float = 0.0
    contrast: float = 1.0
    hue: float = 0.0
    background_seed: int = 0


@dataclass(frozen=True)
class SyntheticConfig:
    n_identities: int = 8
    images_per_identity: int = 4
    image_size: int = 64
    source_style: StyleConfig = field(default_factory=StyleConfig)
    target_style: StyleConfig = field(
        default_factory=lambda: StyleConfig(brightness=-0.22, contrast=0.85, hue=2.2, background_seed=5)
    )

    def to_spec(self, rng_seed: int) -> SyntheticSpec:
        return SyntheticSpec(
            n_identities=self.n_identities,
            images_per_identity=self.images_per_identity,
            image_size=self.image_size,
            source_style=DomainStyle(**asdict(self.source_style)),
            target_style=DomainStyle(**asdict(self.target_style)),
            rng_seed=rng_seed,
        ).validate()


@dataclass(frozen=True)
class DataConfig:
    source_manifest: str = ""
    target_manifest: str = ""
    train_manifest: str = ""
    eval_manifest: str = ""
    input_manifest: str = ""


@dataclass(frozen=True)
class TranslateConfig:
    lr: float = 2e-4
    batch_size: int = 16
    epochs: int = 6
    max_steps: int = 0  # 0: derive the step count from epochs
    lambda_cyc: float = 10.0
    lambda_id: float = 5.0
    lambda_style: float = 1.0
    paper_literal_adv: bool = False
    stem_width_full: int = 32
    stem_width_half: int = 32
    residual_width: int = 64
    disc_width: int = 32
    checkpoint_every: int = 500
    log_every: int = 1
    checkpoint: str = ""  # consumed by the `translate` stage
    direction: str = "source_to_target"


@dataclass(frozen=True)
class ReidConfig:
    lr_high: float = 0.1
    lr_low: float = 0.01
    epochs_high: int = 50
    epochs_low: int = 5
    batch_size: int = 16
    momentum: float = 0.9
    weight_decay: float = 5e-4
    head: str = "attention"
    spatial_attention: bool = False
    backbone_widths: tuple[int, ...] = (32, 64, 128, 256, 256)
    fc_widths: tuple[int, ...] = (128, 64)
    image_size: int = 64
    flip_prob: float = 0.5
    checkpoint_every: int = 200


@dataclass(frozen=True)
class EvalMethod:
    label: str = ""
    checkpoint: str = ""


@dataclass(frozen=True)
class EvaluateConfig:
    split_sizes: tuple[int, ...] = (4, 8)
    metric: str = "euclidean"
    max_rank: int = 10
    repeats: int = 1  # repeated gallery draws; 1 keeps the deterministic single draw
    methods: tuple[EvalMethod, ...] = ()


@dataclass(frozen=True)
class PlotConfig:
    report_dir: str = ""
    loss_logs: tuple[str, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "runs/out"
    threads: int = 1
    preset: str = ""
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    data: DataConfig = field(default_factory=DataConfig)
    translate: TranslateConfig = field(default_factory=TranslateConfig)
    reid: ReidConfig = field(default_factory=ReidConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    plot: PlotConfig = field(default_factory=PlotConfig)


PRESETS: dict[str, dict] = {
    # Matches the dataclass defaults; spelled out so the preset is inspectable.
    "desk-scale": {
        "translate": {"batch_size": 4, "epochs": 125},
        "reid": {"epochs_high": 30, "epochs_low": 5},
    },
    "paper-scale": {
        "translate": {
            "lr": 2e-4,
            "batch_size": 16,
            "epochs": 6,
            "stem_width_full": 64,
            "stem_width_half": 128,
            "residual_width": 256,
            "disc_width": 64,
        },
        "reid": {
            "lr_high": 0.1,
            "lr_low": 0.01,
            "epochs_high": 50,
            "epochs_low": 5,
            "batch_size": 16,
            "image_size": 224,
            "backbone_widths": [64, 256, 512, 1024, 2048],
            "fc_widths": [1024, 512],
        },
    },
}


def load_config(path: str | Path, *, out_dir: str | None = None, seed: int | None = None) -> RunConfig:
    """Parse, merge with any preset, apply CLI overrides, and validate."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(raw, out_dir=out_dir, seed=seed)


def config_from_dict(raw: dict, *, out_dir: str | None = None, seed: int | None = None) -> RunConfig:
    preset_name = raw.get("preset", "")
    if preset_name:
        if preset_name not in PRESETS:
            raise ValidationError(f"preset must be one of {sorted(PRESETS)}, got {preset_name!r}")
        merged = _deep_merge(PRESETS[preset_name], raw)
    else:
        merged = raw
    cfg = _build(RunConfig, merged, "")
    if out_dir is not None:
        cfg = _replace_field(cfg, "out_dir", out_dir)
    if seed is not None:
        cfg = _replace_field(cfg, "seed", seed)
    validate_config(cfg)
    return cfg


def resolved_dict(cfg: RunConfig) -> dict:
    """Canonical plain-dict form of the config (tuples become lists)."""
    return json.loads(json.dumps(asdict(cfg)))


def config_hash(cfg: RunConfig) -> str:
    payload = json.dumps(resolved_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


STAMP_FILE = "vtreid-config.json"


def write_config_stamp(out_dir: str | Path, cfg: RunConfig, stage: str) -> Path:
    """Record the resolved config and its hash beside a stage's artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = {"stage": stage, "config_hash": config_hash(cfg), "config": resolved_dict(cfg)}
    stamp_path = out_dir / STAMP_FILE
    stamp_path.write_text(json.dumps(stamp, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return stamp_path


def verify_config_stamp(out_dir: str | Path) -> bool:
    """Recompute the stamped config's hash and confirm it matches."""
    stamp_path = Path(out_dir) / STAMP_FILE
    if not stamp_path.is_file():
        raise ValidationError(f"no config stamp at {stamp_path}")
    stamp = json.loads(stamp_path.read_text(encoding="utf-8"))
    payload = json.dumps(stamp["config"], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest() == stamp["config_hash"]


def validate_config(cfg: RunConfig) -> None:
    _require(cfg.seed >= 0, "seed", "must be >= 0", cfg.seed)
    _require(cfg.threads >= 1, "threads", "must be >= 1", cfg.threads)
    _require(bool(cfg.out_dir), "out_dir", "must be nonempty", cfg.out_dir)

    t = cfg.translate
    _require(t.lr > 0, "translate.lr", "must be > 0", t.lr)
    _require(t.batch_size >= 1, "translate.batch_size", "must be >= 1", t.batch_size)
    _require(t.epochs >= 1, "translate.epochs", "must be >= 1", t.epochs)
    _require(t.max_steps >= 0, "translate.max_steps", "must be >= 0", t.max_steps)
    for name in ("lambda_cyc", "lambda_id", "lambda_style"):
        _require(getattr(t, name) >= 0, f"translate.{name}", "must be >= 0", getattr(t, name))
    for name in ("stem_width_full", "stem_width_half", "residual_width", "disc_width"):
        _require(getattr(t, name) >= 1, f"translate.{name}", "must be >= 1", getattr(t, name))
    _require(t.checkpoint_every >= 1, "translate.checkpoint_every", "must be >= 1", t.checkpoint_every)
    _require(t.log_every >= 1, "translate.log_every", "must be >= 1", t.log_every)
    _require(
        t.direction in ("source_to_target", "target_to_source"),
        "translate.direction",
        "must be 'source_to_target' or 'target_to_source'",
        t.direction,
    )

    r = cfg.reid
    _require(r.lr_high > 0, "reid.lr_high", "must be > 0", r.lr_high)
    _require(r.lr_low > 0, "reid.lr_low", "must be > 0", r.lr_low)
    _require(r.epochs_high >= 1, "reid.epochs_high", "must be >= 1", r.epochs_high)
    _require(r.epochs_low >= 0, "reid.epochs_low", "must be >= 0", r.epochs_low)
    _require(r.batch_size >= 2, "reid.batch_size", "must be >= 2", r.batch_size)
    _require(0 <= r.momentum < 1, "reid.momentum", "must be in [0, 1)", r.momentum)
    _require(r.weight_decay >= 0, "reid.weight_decay", "must be >= 0", r.weight_decay)
    _require(r.head in ("attention", "baseline"), "reid.head", "must be 'attention' or 'baseline'", r.head)
    _require(len(r.backbone_widths) == 5, "reid.backbone_widths", "must list 5 stage widths", r.backbone_widths)
    _require(all(w >= 1 for w in r.backbone_widths), "reid.backbone_widths", "widths must be >= 1", r.backbone_widths)
    _require(len(r.fc_widths) == 2, "reid.fc_widths", "must list 2 layer widths", r.fc_widths)
    _require(all(w >= 1 for w in r.fc_widths), "reid.fc_widths", "widths must be >= 1", r.fc_widths)
    _require(
        r.image_size >= 32 and r.image_size % 32 == 0,
        "reid.image_size",
        "must be a positive multiple of 32 (five stride-2 stages)",
        r.image_size,
    )
    _require(0 <= r.flip_prob <= 1, "reid.flip_prob", "must be in [0, 1]", r.flip_prob)
    _require(r.checkpoint_every >= 1, "reid.checkpoint_every", "must be >= 1", r.checkpoint_every)

    e = cfg.evaluate
    _require(len(e.split_sizes) >= 1, "evaluate.split_sizes", "must be nonempty", e.split_sizes)
    _require(all(s >= 1 for s in e.split_sizes), "evaluate.split_sizes", "sizes must be >= 1", e.split_sizes)
    _require(e.metric in ("euclidean", "cosine"), "evaluate.metric", "must be 'euclidean' or 'cosine'", e.metric)
    _require(e.max_rank >= 5, "evaluate.max_rank", "must be >= 5 (reports carry rank-5)", e.max_rank)
    _require(e.repeats >= 1, "evaluate.repeats", "must be >= 1", e.repeats)
    for i, m in enumerate(e.methods):
        _require(bool(m.label), f"evaluate.methods[{i}].label", "must be nonempty", m.label)
        _require(bool(m.checkpoint), f"evaluate.methods[{i}].checkpoint", "must be nonempty", m.checkpoint)

    s = cfg.synthetic
    _require(s.n_identities >= 2, "synthetic.n_identities", "must be >= 2", s.n_identities)
    _require(s.images_per_identity >= 1, "synthetic.images_per_identity", "must be >= 1", s.images_per_identity)
    _require(
        s.image_size >= 16 and s.image_size % 4 == 0,
        "synthetic.image_size",
        "must be >= 16 and divisible by 4",
        s.image_size,
    )


def _require(cond: bool, name: str, rule: str, value) -> None:
    if not cond:
        raise ValidationError(f"config field {name} {rule} (got {value!r})")


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _replace_field(cfg: RunConfig, name: str, value) -> RunConfig:
    import dataclasses

    return dataclasses.replace(cfg, **{name: value})


def _build(dc_type, raw: Any, path: str):
    """Recursively build a dataclass from a dict, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ValidationError(f"config section {path or '<root>'} must be a table, got {type(raw).__name__}")
    hints = get_type_hints(dc_type)
    known = {f.name: hints[f.name] for f in fields(dc_type)}
    unknown = set(raw) - set(known)
    if unknown:
        where = path or "top level"
        raise ValidationError(f"unknown config key(s) at {where}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, ftype in known.items():
        if name not in raw:
            continue
        kwargs[name] = _coerce(ftype, raw[name], f"{path + '.' if path else ''}{name}")
    return dc_type(**kwargs)


def _coerce(ftype, value, path: str):
    origin = get_origin(ftype)
    if is_dataclass(ftype):
        return _build(ftype, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"config field {path} must be a list, got {type(value).__name__}")
        (item_type,) = (a for a in get_args(ftype) if a is not Ellipsis)
        return tuple(_coerce(item_type, v, f"{path}[{i}]") for i, v in enumerate(value))
    if ftype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"config field {path} must be a number, got {value!r}")
        return float(value)
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"config field {path} must be an integer, got {value!r}")
        return value
    if ftype is bool:
        if not isinstance(value, bool):
            raise ValidationError(f"config field {path} must be a boolean, got {value!r}")
        return value
    if ftype is str:
        if not isinstance(value, str):
            raise ValidationError(f"config field {path} must be a string, got {value!r}")
        return value
    raise ValidationError(f"config field {path} has unsupported type {ftype!r}")
