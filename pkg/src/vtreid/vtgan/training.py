"""Adversarial training loop for the translation stage, plus batch inference.

The loop alternates generator and discriminator updates each batch, logs a
full loss report per step to CSV, and writes resumable checkpoint bundles.
With a fixed seed and a single torch thread, reruns and checkpoint resumes
are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from vtreid.checkpoints import load_bundle, save_bundle
from vtreid.config import RunConfig, TranslateConfig, config_hash
from vtreid.datamodel.manifest import DomainDataset
from vtreid.datamodel.sampling import UnpairedSampler
from vtreid.errors import CheckpointError, ContractError
from vtreid.vtgan.losses import (
    TranslationLossReport,
    adversarial_losses,
    check_finite,
    total_objective,
)
from vtreid.vtgan.networks import Generator, GeneratorConfig, PatchDiscriminator
from vtreid.vtgan.ops import gram

BUNDLE_KIND = "translation"
LOG_FILE = "loss_log.csv"


def generator_config(cfg: TranslateConfig) -> GeneratorConfig:
    return GeneratorConfig(
        stem_width_full=cfg.stem_width_full,
        stem_width_half=cfg.stem_width_half,
        residual_width=cfg.residual_width,
    )


def images_to_tensor(images: Sequence[np.ndarray], dtype=torch.float32) -> torch.Tensor:
    """Stack H×W×3 arrays into an N×3×H×W tensor."""
    if not images:
        raise ContractError("empty image batch")
    stacked = np.stack([np.asarray(im, dtype=np.float32) for im in images])
    return torch.from_numpy(stacked).permute(0, 3, 1, 2).to(dtype).contiguous()


def tensor_to_images(batch: torch.Tensor) -> list[np.ndarray]:
    arr = batch.detach().permute(0, 2, 3, 1).cpu().numpy().astype(np.float32)
    return [arr[i] for i in range(arr.shape[0])]


class TranslationTrainer:
    """Owns both generators, both discriminators and their optimizers."""

    def __init__(self, source: DomainDataset, target: DomainDataset, run_cfg: RunConfig):
        self.cfg = run_cfg.translate
        self.run_cfg = run_cfg
        self.source = source
        self.target = target
        torch.manual_seed(run_cfg.seed)
        gen_cfg = generator_config(self.cfg)
        self.g = Generator(gen_cfg)  # source -> target style
        self.f = Generator(gen_cfg)  # target -> source style
        self.d_s = PatchDiscriminator(self.cfg.disc_width)
        self.d_t = PatchDiscriminator(self.cfg.disc_width)
        self.opt_gen = torch.optim.Adam(
            list(self.g.parameters()) + list(self.f.parameters()), lr=self.cfg.lr, betas=(0.5, 0.999)
        )
        self.opt_disc = torch.optim.Adam(
            list(self.d_s.parameters()) + list(self.d_t.parameters()), lr=self.cfg.lr, betas=(0.5, 0.999)
        )
        self.sampler = UnpairedSampler(source, target, run_cfg.seed)
        self.step = 0

    @property
    def total_steps(self) -> int:
        if self.cfg.max_steps:
            return self.cfg.max_steps
        per_epoch = -(-max(len(self.source), len(self.target)) // self.cfg.batch_size)
        return self.cfg.epochs * per_epoch

    def train_step(self) -> TranslationLossReport:
        batch = self.sampler.sample(self.cfg.batch_size)
        x = images_to_tensor(batch.source_images)
        y = images_to_tensor(batch.target_images)

        # Generator update: translation, round trip, identity and style terms.
        # Components are assembled by hand so each style encoding runs once.
        self.opt_gen.zero_grad(set_to_none=True)
        content_x, skip_x, _ = self.g.content(x)
        style_g_x = self.g.style(x)
        fake_y = self.g.decoder(content_x, style_g_x, skip_x)
        content_y, skip_y, _ = self.f.content(y)
        style_f_y = self.f.style(y)
        fake_x = self.f.decoder(content_y, style_f_y, skip_y)

        if self.cfg.paper_literal_adv:
            _, g_loss_G = adversarial_losses(y, fake_y, self.d_t, paper_literal=True)
            _, g_loss_F = adversarial_losses(x, fake_x, self.d_s, paper_literal=True)
        else:
            g_loss_G = torch.mean((self.d_t(fake_y) - 1.0) ** 2)
            g_loss_F = torch.mean((self.d_s(fake_x) - 1.0) ** 2)
        l_cyc = torch.mean(torch.abs(self.f(fake_y) - x)) + torch.mean(torch.abs(self.g(fake_x) - y))
        l_id = torch.mean(torch.abs(fake_x - y)) + torch.mean(torch.abs(fake_y - x))
        l_style = self._style_loss_reusing(x, y, style_g_x, style_f_y)
        total, report = total_objective(
            g_loss_G,
            g_loss_F,
            l_cyc,
            l_id,
            l_style,
            lambda_cyc=self.cfg.lambda_cyc,
            lambda_id=self.cfg.lambda_id,
            lambda_style=self.cfg.lambda_style,
        )
        total.backward()
        self.opt_gen.step()

        # Discriminator update on detached fakes.
        self.opt_disc.zero_grad(set_to_none=True)
        d_t_loss, _ = adversarial_losses(y, fake_y.detach(), self.d_t, self.cfg.paper_literal_adv)
        d_s_loss, _ = adversarial_losses(x, fake_x.detach(), self.d_s, self.cfg.paper_literal_adv)
        (d_t_loss + d_s_loss).backward()
        self.opt_disc.step()

        report.d_s_loss = float(d_s_loss.detach())
        report.d_t_loss = float(d_t_loss.detach())
        check_finite(report)
        self.step += 1
        return report

    def _style_loss_reusing(
        self, x: torch.Tensor, y: torch.Tensor, style_g_x: torch.Tensor, style_f_y: torch.Tensor
    ) -> torch.Tensor:
        # Same value as style_loss(x, y, g.style, f.style) with two encodings reused.
        feats = [style_g_x, self.g.style(y), style_f_y, self.f.style(x)]
        channels = feats[0].shape[1]
        sites = feats[0].shape[2] * feats[0].shape[3]
        g_x, g_y, f_y, f_x = (gram(t) for t in feats)
        term_g = torch.sum((g_x - g_y) ** 2, dim=(1, 2)) / (channels * sites)
        term_f = torch.sum((f_y - f_x) ** 2, dim=(1, 2)) / (channels * sites)
        return torch.mean(term_g + term_f)

    # ---- checkpointing -------------------------------------------------

    def save_checkpoint(self, parent_dir: Path) -> Path:
        return save_bundle(
            parent_dir,
            kind=BUNDLE_KIND,
            step=self.step,
            config_hash=config_hash(self.run_cfg),
            blobs={
                "G": self.g.state_dict(),
                "F": self.f.state_dict(),
                "D_S": self.d_s.state_dict(),
                "D_T": self.d_t.state_dict(),
                "optimizer": {"gen": self.opt_gen.state_dict(), "disc": self.opt_disc.state_dict()},
                "rng": {"sampler": self.sampler.state_dict(), "torch": torch.get_rng_state()},
            },
            extra={
                "generator_config": {
                    "stem_width_full": self.cfg.stem_width_full,
                    "stem_width_half": self.cfg.stem_width_half,
                    "residual_width": self.cfg.residual_width,
                },
            },
        )

    def load_checkpoint(self, bundle_dir: str | Path) -> None:
        bundle = load_bundle(bundle_dir).require_kind(BUNDLE_KIND)
        self.g.load_state_dict(bundle.blob("G"))
        self.f.load_state_dict(bundle.blob("F"))
        self.d_s.load_state_dict(bundle.blob("D_S"))
        self.d_t.load_state_dict(bundle.blob("D_T"))
        opt = bundle.blob("optimizer")
        self.opt_gen.load_state_dict(opt["gen"])
        self.opt_disc.load_state_dict(opt["disc"])
        rng = bundle.blob("rng")
        self.sampler.load_state_dict(rng["sampler"])
        torch.set_rng_state(rng["torch"])
        self.step = bundle.step


def train_translation(
    source: DomainDataset,
    target: DomainDataset,
    run_cfg: RunConfig,
    out_dir: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Run the translation stage; returns the final checkpoint bundle path.

    ``out_dir`` receives the loss log CSV and periodic checkpoint bundles.
    When resuming, log rows past the checkpoint step are dropped before
    training continues, so the finished log equals an uninterrupted run's.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer = TranslationTrainer(source, target, run_cfg)
    log_path = out_dir / LOG_FILE

    if resume is not None:
        trainer.load_checkpoint(resume)
        _truncate_log(log_path, trainer.step)
        log = log_path.open("a", encoding="utf-8")
    else:
        log = log_path.open("w", encoding="utf-8")
        log.write(TranslationLossReport.CSV_HEADER + "\n")

    with log:
        while trainer.step < trainer.total_steps:
            report = trainer.train_step()
            if trainer.step % run_cfg.translate.log_every == 0 or trainer.step == trainer.total_steps:
                log.write(report.csv_row(trainer.step) + "\n")
            if trainer.step % run_cfg.translate.checkpoint_every == 0 and trainer.step < trainer.total_steps:
                trainer.save_checkpoint(out_dir)
    return trainer.save_checkpoint(out_dir)


def _truncate_log(log_path: Path, keep_up_to_step: int) -> None:
    if not log_path.is_file():
        raise CheckpointError(f"cannot resume: missing loss log {log_path}")
    lines = log_path.read_text(encoding="utf-8").splitlines()
    kept = [lines[0]]
    for line in lines[1:]:
        if line and int(line.split(",", 1)[0]) <= keep_up_to_step:
            kept.append(line)
    log_path.write_text("\n".join(kept) + "\n", encoding="utf-8")


def load_generators(bundle_dir: str | Path) -> tuple[Generator, Generator]:
    """Rebuild both generators from a translation checkpoint, in eval mode."""
    bundle = load_bundle(bundle_dir).require_kind(BUNDLE_KIND)
    arch = bundle.meta.get("generator_config")
    if arch is None:
        raise CheckpointError(f"checkpoint {bundle_dir} lacks generator architecture metadata")
    gen_cfg = GeneratorConfig(**arch)
    g, f = Generator(gen_cfg), Generator(gen_cfg)
    g.load_state_dict(bundle.blob("G"))
    f.load_state_dict(bundle.blob("F"))
    g.eval()
    f.eval()
    return g, f


def translate(
    images: Sequence[np.ndarray],
    generator: Generator,
    batch_size: int = 16,
) -> list[np.ndarray]:
    """Translate a list of images; deterministic, order-preserving."""
    generator.eval()
    out: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            chunk = images_to_tensor(images[start : start + batch_size])
            out.extend(tensor_to_images(generator(chunk)))
    return out
