"""Bias-corrected adaptive moment optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from ..nncore import Tensor
from .config import TrainHyper


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: list[tuple[str, Tensor]],
    grads: dict[str, np.ndarray],
    state: AdamState,
    hyper: TrainHyper,
) -> None:
    """One in-place update over the named parameter set.

    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    """
    state.t += 1
    t = state.t
    b1 = np.float32(hyper.beta1)
    b2 = np.float32(hyper.beta2)
    lr = np.float32(hyper.lr)
    eps = np.float32(hyper.adam_eps)
    c1 = np.float32(1.0 / (1.0 - hyper.beta1**t))
    c2 = np.float32(1.0 / (1.0 - hyper.beta2**t))
    for name, p in params:
        g = grads.get(name)
        if g is None:
            raise KeyError(f"missing gradient for {name}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p.data -= lr * (m * c1) / (np.sqrt(v * c2) + eps)
