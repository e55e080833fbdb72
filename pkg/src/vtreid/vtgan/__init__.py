"""Unpaired image-to-image translation: networks, losses, training, inference."""

from vtreid.vtgan.losses import (
    TranslationLossReport,
    adversarial_losses,
    cycle_loss,
    identity_loss,
    style_loss,
    total_objective,
)
from vtreid.vtgan.networks import (
    ContentEncoder,
    Decoder,
    Generator,
    GeneratorConfig,
    PatchDiscriminator,
    StyleEncoder,
)
from vtreid.vtgan.ops import apply_mask, attention_mask, fuse_residual_outputs, gram
from vtreid.vtgan.training import (
    TranslationTrainer,
    images_to_tensor,
    load_generators,
    tensor_to_images,
    train_translation,
    translate,
)

__all__ = [
    "ContentEncoder",
    "Decoder",
    "Generator",
    "GeneratorConfig",
    "PatchDiscriminator",
    "StyleEncoder",
    "TranslationLossReport",
    "TranslationTrainer",
    "adversarial_losses",
    "apply_mask",
    "attention_mask",
    "cycle_loss",
    "fuse_residual_outputs",
    "gram",
    "identity_loss",
    "images_to_tensor",
    "load_generators",
    "style_loss",
    "tensor_to_images",
    "total_objective",
    "train_translation",
    "translate",
]
