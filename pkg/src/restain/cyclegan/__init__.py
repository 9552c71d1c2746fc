from .config import DiscriminatorConfig, GeneratorConfig, TrainHyper
from .model import Model, Stage, build_discriminator, build_generator, forward
from .losses import cycle_loss, gan_loss
from .pool import ImagePool
from .adam import AdamState, adam_step
from .trainer import TrainState, build_train_state, sync_train_step, train_step
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "GeneratorConfig",
    "DiscriminatorConfig",
    "TrainHyper",
    "Model",
    "Stage",
    "build_generator",
    "build_discriminator",
    "forward",
    "gan_loss",
    "cycle_loss",
    "ImagePool",
    "AdamState",
    "adam_step",
    "TrainState",
    "build_train_state",
    "train_step",
    "sync_train_step",
    "save_checkpoint",
    "load_checkpoint",
]
