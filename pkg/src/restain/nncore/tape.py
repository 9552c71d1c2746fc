"""Reverse-mode differentiation over a linear tape.

Ops append a closure per executed op; backward replays the closures in
exact reverse execution order. Gradients accumulate additively so a
tensor feeding several ops (fan-out, residual skips) is handled by
plain summation.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Tape:
    __slots__ = ("_records",)

    def __init__(self):
        self._records: list = []

    def record(self, fn) -> None:
        self._records.append(fn)

    def __len__(self) -> int:
        return len(self._records)


def accumulate(t: Tensor, g: np.ndarray) -> None:
    """Add g into t.grad, allocating on first touch."""
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


def backward(tape: Tape, loss: Tensor, seed: Tensor | None = None) -> None:
    """Replay the tape backwards from loss.

    seed defaults to ones of the loss shape (the usual scalar case).
    """
    if len(tape) == 0:
        raise ValueError("backward on an empty tape")
    if seed is not None:
        if seed.shape != loss.shape:
            raise ValueError(f"seed shape {seed.shape} != loss shape {loss.shape}")
        loss.grad = seed.data.astype(loss.data.dtype, copy=True)
    else:
        loss.grad = np.ones_like(loss.data)
    for fn in reversed(tape._records):
        fn()


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = None
