"""Receptive field arithmetic over layer descriptions.

Tracks the input-pixel span of one output pixel through convolutions,
stride reductions, and nearest-neighbor upsampling. The inter-tap jump
is kept as an exact rational internally so upsampling after striding
stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

_KINDS = (
    "conv",
    "upsample-conv",
    "instance-norm",
    "activation",
    "reflection-pad",
    "residual-block",
)
_ACT_KINDS = ("relu", "leaky_relu", "tanh", "none")


@dataclass(frozen=True)
class LayerSpec:
    """One stage of a network, enough to size weights and walk geometry.

    conv            kernel x kernel at the given stride
    upsample-conv   nearest-neighbor upsample by `factor`, then 3x3 s1 conv
    residual-block  two 3x3 stride-1 conv+norm sublayers plus the skip add
    instance-norm / activation / reflection-pad: spatially pointwise
    """

    kind: str
    kernel: int = 1
    stride: int = 1
    cin: int = 0
    cout: int = 0
    act: str = "none"
    factor: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.act not in _ACT_KINDS:
            raise ValueError(f"unknown activation {self.act!r}")
        if self.kernel < 1 or self.stride < 1 or self.factor < 1:
            raise ValueError("kernel, stride and factor must be >= 1")
        if self.kind == "residual-block" and self.cin != self.cout:
            raise ValueError("residual-block needs matching channel counts")


def receptive_field(layers: list[LayerSpec]) -> tuple[int, int]:
    """(span, jump) of one output pixel over the input grid.

    Per conv: rf += (kernel - 1) * jump, then jump *= stride. A
    residual block counts as two 3x3 stride-1 convs. Upsampling divides
    the jump before its conv taps are added. Norms, activations and
    padding leave both untouched.
    """
    rf = Fraction(1)
    jump = Fraction(1)
    for layer in layers:
        if layer.kind == "conv":
            rf += (layer.kernel - 1) * jump
            jump *= layer.stride
        elif layer.kind == "residual-block":
            rf += 2 * 2 * jump
        elif layer.kind == "upsample-conv":
            jump /= layer.factor
            rf += 2 * jump
        # instance-norm, activation, reflection-pad: spatially 1x1
    ijump = int(jump) if jump.denominator == 1 else math.ceil(jump)
    return math.ceil(rf), ijump
