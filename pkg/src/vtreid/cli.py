"""Command-line entry point: ``vtreid <stage> --config <path> [--out DIR] [--seed N]``.

Exit codes: 0 on success, 1 on validation/usage errors, 2 on runtime
failures. Output directories are lock-filed against concurrent writers.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from vtreid.config import STAGES, load_config
from vtreid.errors import LockError, ValidationError, VtreidError

LOCK_FILE = ".vtreid.lock"


class _UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vtreid", description=__doc__)
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", default=None, help="override the config's output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config's seed")
        if stage in ("train-translate", "train-reid"):
            sp.add_argument("--resume", default=None, help="checkpoint bundle to resume from")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, out_dir=args.out, seed=args.seed)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    from vtreid import pipeline

    try:
        pipeline.apply_thread_cap(cfg)
        with _output_lock(Path(cfg.out_dir)):
            if args.stage == "gen-data":
                out = pipeline.run_gen_data(cfg)
            elif args.stage == "train-translate":
                out = pipeline.run_train_translate(cfg, resume=args.resume)
            elif args.stage == "translate":
                out = pipeline.run_translate(cfg)
            elif args.stage == "train-reid":
                out = pipeline.run_train_reid(cfg, resume=args.resume)
            elif args.stage == "evaluate":
                out = pipeline.run_evaluate(cfg)
            else:
                out = pipeline.run_plot(cfg)
        print(f"{args.stage}: done -> {out}")
        return 0
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (VtreidError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


class _output_lock:
    """Exclusive lock file in the output directory for the stage's duration."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / LOCK_FILE
        self.fd = None

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockError(f"output directory is locked by another writer: {self.path}") from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc_info):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)
        return False


if __name__ == "__main__":
    raise SystemExit(main())
