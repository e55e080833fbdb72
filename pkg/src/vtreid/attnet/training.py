"""Two-stream reID training on balanced pair batches.

SGD with momentum and weight decay; the learning rate drops by ×10 for the
final phase of the schedule. Identification loss is computed on the anchors'
class logits, verification loss on the squared-difference pair feature; the
two tasks are summed with unit weights.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from vtreid.checkpoints import load_bundle, save_bundle
from vtreid.config import ReidConfig, RunConfig, config_hash
from vtreid.datamodel.images import resize_image
from vtreid.datamodel.manifest import DomainDataset
from vtreid.datamodel.sampling import PairSampler
from vtreid.attnet.losses import ReidLossReport, batch_accuracy, check_finite, identification_loss, verification_loss
from vtreid.attnet.networks import ReidArch, ReidModel
from vtreid.errors import CheckpointError
from vtreid.vtgan.training import images_to_tensor

BUNDLE_KIND = "reid"
LOG_FILE = "loss_log.csv"


def reid_arch(cfg: ReidConfig, n_classes: int) -> ReidArch:
    return ReidArch(
        backbone_widths=tuple(cfg.backbone_widths),
        fc_widths=tuple(cfg.fc_widths),
        image_size=cfg.image_size,
        n_classes=n_classes,
        head=cfg.head,
        spatial_attention=cfg.spatial_attention,
    )


class ReidTrainer:
    def __init__(self, dataset: DomainDataset, run_cfg: RunConfig):
        self.cfg = run_cfg.reid
        self.run_cfg = run_cfg
        self.dataset = dataset
        self.class_of = {identity: i for i, identity in enumerate(sorted(set(dataset.identities())))}
        torch.manual_seed(run_cfg.seed)
        self.model = ReidModel(reid_arch(self.cfg, len(self.class_of)))
        self.optimizer = torch.optim.SGD(
            self.model.parameters(),
            lr=self.cfg.lr_high,
            momentum=self.cfg.momentum,
            weight_decay=self.cfg.weight_decay,
        )
        self.sampler = PairSampler(dataset, run_cfg.seed)
        self.augment_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([run_cfg.seed, 7]))
        )
        self.step = 0

    @property
    def steps_per_epoch(self) -> int:
        return -(-len(self.dataset) // self.cfg.batch_size)

    @property
    def total_steps(self) -> int:
        return (self.cfg.epochs_high + self.cfg.epochs_low) * self.steps_per_epoch

    def _lr_for_step(self, step: int) -> float:
        return self.cfg.lr_high if step <= self.cfg.epochs_high * self.steps_per_epoch else self.cfg.lr_low

    def _prepare(self, images: list[np.ndarray]) -> torch.Tensor:
        size = self.cfg.image_size
        prepared = []
        for img in images:
            img = resize_image(img, size)
            if self.cfg.flip_prob and self.augment_rng.random() < self.cfg.flip_prob:
                img = img[:, ::-1, :].copy()
            prepared.append(img)
        return images_to_tensor(prepared)

    def train_step(self) -> ReidLossReport:
        self.step += 1
        lr = self._lr_for_step(self.step)
        for group in self.optimizer.param_groups:
            group["lr"] = lr

        batch = self.sampler.sample(self.cfg.batch_size)
        anchors = self._prepare(batch.anchors)
        partners = self._prepare(batch.partners)
        labels = torch.tensor([self.class_of[i] for i in batch.identity_labels], dtype=torch.long)
        same = torch.tensor(batch.same_id, dtype=torch.long)

        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)
        emb_a = self.model.embed(anchors)
        emb_p = self.model.embed(partners)
        id_logits = self.model.identification_logits(emb_a)
        verif_logits = self.model.verification_logits(emb_a, emb_p)
        l_id = identification_loss(id_logits, labels)
        l_verif = verification_loss(verif_logits, same)
        total = l_id + l_verif
        total.backward()
        self.optimizer.step()

        report = ReidLossReport(
            l_identification=float(l_id.detach()),
            l_verification=float(l_verif.detach()),
            l_total=float(total.detach()),
            acc_identification=batch_accuracy(id_logits.detach(), labels),
            acc_verification=batch_accuracy(verif_logits.detach(), same),
        )
        check_finite(report)
        return report

    def save_checkpoint(self, parent_dir: Path) -> Path:
        return save_bundle(
            parent_dir,
            kind=BUNDLE_KIND,
            step=self.step,
            config_hash=config_hash(self.run_cfg),
            blobs={
                "model": self.model.state_dict(),
                "optimizer": self.optimizer.state_dict(),
                "rng": {
                    "sampler": self.sampler.state_dict(),
                    "augment": self.augment_rng.bit_generator.state,
                    "torch": torch.get_rng_state(),
                },
            },
            extra={"arch": self.model.arch.as_dict()},
        )

    def load_checkpoint(self, bundle_dir: str | Path) -> None:
        bundle = load_bundle(bundle_dir).require_kind(BUNDLE_KIND)
        self.model.load_state_dict(bundle.blob("model"))
        self.optimizer.load_state_dict(bundle.blob("optimizer"))
        rng = bundle.blob("rng")
        self.sampler.load_state_dict(rng["sampler"])
        self.augment_rng.bit_generator.state = rng["augment"]
        torch.set_rng_state(rng["torch"])
        self.step = bundle.step


def train_reid(
    dataset: DomainDataset,
    run_cfg: RunConfig,
    out_dir: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Run the reID stage; returns the final checkpoint bundle path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer = ReidTrainer(dataset, run_cfg)
    log_path = out_dir / LOG_FILE

    if resume is not None:
        trainer.load_checkpoint(resume)
        _truncate_log(log_path, trainer.step)
        log = log_path.open("a", encoding="utf-8")
    else:
        log = log_path.open("w", encoding="utf-8")
        log.write(ReidLossReport.CSV_HEADER + "\n")

    with log:
        while trainer.step < trainer.total_steps:
            report = trainer.train_step()
            log.write(report.csv_row(trainer.step) + "\n")
            if trainer.step % trainer.cfg.checkpoint_every == 0 and trainer.step < trainer.total_steps:
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


def load_reid_model(bundle_dir: str | Path) -> ReidModel:
    """Rebuild the embedding network from a reID checkpoint, in eval mode."""
    bundle = load_bundle(bundle_dir).require_kind(BUNDLE_KIND)
    arch_dict = bundle.meta.get("arch")
    if arch_dict is None:
        raise CheckpointError(f"checkpoint {bundle_dir} lacks architecture metadata")
    arch = ReidArch(
        backbone_widths=tuple(arch_dict["backbone_widths"]),
        fc_widths=tuple(arch_dict["fc_widths"]),
        image_size=int(arch_dict["image_size"]),
        n_classes=int(arch_dict["n_classes"]),
        head=arch_dict["head"],
        spatial_attention=bool(arch_dict["spatial_attention"]),
    )
    model = ReidModel(arch)
    model.load_state_dict(bundle.blob("model"))
    model.eval()
    return model
