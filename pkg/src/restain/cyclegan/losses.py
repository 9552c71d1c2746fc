"""Adversarial and reconstruction objectives (least-squares GAN form)."""

from __future__ import annotations

from ..nncore import Tape, Tensor, mean_abs_diff, mean_sq_const, scale


def gan_loss(pred: Tensor, target_real: bool, tape: Tape | None = None) -> Tensor:
    """Mean squared distance of patch scores to the 1/0 label."""
    label = 1.0 if target_real else 0.0
    return mean_sq_const(pred, label, tape)


def cycle_loss(rec: Tensor, real: Tensor, lambda_cycle: float, tape: Tape | None = None) -> Tensor:
    """lambda_cycle * mean |rec - real|."""
    return scale(mean_abs_diff(rec, real, tape), lambda_cycle, tape)
