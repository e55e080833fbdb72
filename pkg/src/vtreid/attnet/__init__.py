"""Attention-based reID feature learner: network, losses, training."""

from vtreid.attnet.losses import ReidLossReport, identification_loss, verification_loss
from vtreid.attnet.networks import (
    Backbone,
    ReidArch,
    ReidModel,
    channel_attention,
    global_average_pool,
)
from vtreid.attnet.training import ReidTrainer, load_reid_model, reid_arch, train_reid

__all__ = [
    "Backbone",
    "ReidArch",
    "ReidLossReport",
    "ReidModel",
    "ReidTrainer",
    "channel_attention",
    "global_average_pool",
    "identification_loss",
    "load_reid_model",
    "reid_arch",
    "train_reid",
    "verification_loss",
]
