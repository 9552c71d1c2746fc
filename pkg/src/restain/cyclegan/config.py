"""Model and training hyperparameter records."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GeneratorConfig:
    base_channels: int = 32
    n_blocks: int = 11
    in_channels: int = 3
    out_channels: int = 3

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("need at least one residual block")
        if self.base_channels < 8:
            raise ValueError("base_channels must be >= 8")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")


@dataclass(frozen=True)
class DiscriminatorConfig:
    base_channels: int = 64
    n_layers: int = 3
    in_channels: int = 3

    def __post_init__(self):
        if self.base_channels < 8:
            raise ValueError("base_channels must be >= 8")
        if self.n_layers < 1:
            raise ValueError("need at least one downsampling layer")


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lambda_cycle: float = 10.0
    lambda_identity: float = 0.0
    batch_per_worker: int = 1
    workers: int = 2
    pool_capacity: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.adam_eps <= 0:
            raise ValueError("lr and adam_eps must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0,1)")
        if self.lambda_cycle < 0 or self.lambda_identity < 0:
            raise ValueError("loss weights must be non-negative")
        if self.batch_per_worker < 1 or self.workers < 1:
            raise ValueError("batch_per_worker and workers must be >= 1")
        if self.pool_capacity < 1:
            raise ValueError("pool_capacity must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in u64")
