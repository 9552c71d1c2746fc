"""Finite-difference verification of taped gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor
from .tape import Tape, backward, zero_grads


def grad_check(
    build: Callable[[Tape | None], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
) -> float:
    """Compare taped gradients against central differences.

    build(tape) must construct a scalar loss from the live buffers of
    params, so in-place perturbation of those buffers changes the loss.
    Returns the worst relative error over params, where each parameter
    scores max|a - n| / max(max|a|, max|n|, 1e-12). Use float64 inputs;
    float32 rounding drowns the difference signal.
    """
    for p in params:
        if p.dtype != np.float64:
            raise ValueError("grad_check requires float64 parameters")
    zero_grads(params)
    tape = Tape()
    loss = build(tape)
    if loss.numel() != 1:
        raise ValueError("grad_check loss must be scalar")
    backward(tape, loss)

    worst = 0.0
    for p in params:
        a = p.grad if p.grad is not None else np.zeros_like(p.data)
        n = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        nflat = n.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp = build(None).item()
            flat[i] = orig - eps
            lm = build(None).item()
            flat[i] = orig
            nflat[i] = (lp - lm) / (2.0 * eps)
        denom = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0), 1e-12)
        err = float(np.abs(a - n).max(initial=0.0) / denom)
        worst = max(worst, err)
    zero_grads(params)
    return worst
