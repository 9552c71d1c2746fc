"""Translator and critic networks as flat stage lists.

A Model is an ordered list of Stage records walked by forward(). Norm
sites are numbered in execution order; those integer ids are how
inference strategies inject precomputed statistics and how collectors
label what they observe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nncore import (
    ChannelStats,
    LayerSpec,
    Tape,
    Tensor,
    activation,
    add,
    conv2d,
    instance_norm,
    instance_norm_stats,
    reflection_pad2d,
    reflection_pad2d_lrtb,
    upsample_conv,
)
from .config import DiscriminatorConfig, GeneratorConfig

_STAGE_KINDS = ("pad", "conv", "in", "act", "res", "upconv")
WEIGHT_STD = 0.02


@dataclass
class Stage:
    kind: str
    p: int = 0
    stride: int = 1
    pad: int = 0
    act: str = "none"
    factor: int = 1
    w: Tensor | None = None
    b: Tensor | None = None
    w2: Tensor | None = None
    b2: Tensor | None = None
    in_id: int = -1  # first norm site of this stage; res blocks own two

    def __post_init__(self):
        if self.kind not in _STAGE_KINDS:
            raise ValueError(f"unknown stage kind {self.kind!r}")


@dataclass
class Model:
    key: str
    stages: list[Stage]
    n_in_sites: int
    size_multiple: int = 1  # inputs padded up to this grid before the walk

    def params(self) -> list[tuple[str, Tensor]]:
        """Stable (name, tensor) enumeration used everywhere weights move."""
        out = []
        for i, st in enumerate(self.stages):
            if st.w is not None:
                out.append((f"{i:02d}.w", st.w))
                if st.b is not None:
                    out.append((f"{i:02d}.b", st.b))
            if st.w2 is not None:
                out.append((f"{i:02d}.w2", st.w2))
                if st.b2 is not None:
                    out.append((f"{i:02d}.b2", st.b2))
        return out

    def layer_specs(self) -> list[LayerSpec]:
        specs = []
        for st in self.stages:
            if st.kind == "pad":
                specs.append(LayerSpec("reflection-pad"))
            elif st.kind == "conv":
                cout, cin, k, _ = st.w.shape
                specs.append(LayerSpec("conv", kernel=k, stride=st.stride, cin=cin, cout=cout))
            elif st.kind == "in":
                specs.append(LayerSpec("instance-norm"))
            elif st.kind == "act":
                specs.append(LayerSpec("activation", act=st.act))
            elif st.kind == "res":
                c = st.w.shape[0]
                specs.append(LayerSpec("residual-block", kernel=3, cin=c, cout=c))
            elif st.kind == "upconv":
                cout, cin, k, _ = st.w.shape
                specs.append(
                    LayerSpec("upsample-conv", kernel=k, cin=cin, cout=cout, factor=st.factor)
                )
        return specs


def _conv_params(
    rng: np.random.Generator, cout: int, cin: int, k: int, bias: bool = True
) -> tuple[Tensor, Tensor | None]:
    # Convs feeding a norm get no bias: the norm subtracts the per-channel
    # mean, so a bias there contributes nothing to the forward pass while
    # its gradient is pure float roundoff that the optimizer then walks.
    w = rng.normal(0.0, WEIGHT_STD, size=(cout, cin, k, k)).astype(np.float32)
    if not bias:
        return Tensor(w), None
    b = np.zeros((1, cout, 1, 1), dtype=np.float32)
    return Tensor(w), Tensor(b)


def build_generator(cfg: GeneratorConfig, rng: np.random.Generator, key: str = "g") -> Model:
    """Encoder, residual trunk, decoder; output tanh-bounded, size-preserving."""
    base = cfg.base_channels
    stages: list[Stage] = []
    n_in = 0

    def conv_stage(cout, cin, k, stride=1, pad=0, bias=True):
        w, b = _conv_params(rng, cout, cin, k, bias=bias)
        return Stage("conv", stride=stride, pad=pad, w=w, b=b)

    stages.append(Stage("pad", p=3))
    stages.append(conv_stage(base, cfg.in_channels, 7, bias=False))
    stages.append(Stage("in", in_id=n_in)); n_in += 1
    stages.append(Stage("act", act="relu"))
    ch = base
    for _ in range(2):  # two 2x downsampling steps
        stages.append(conv_stage(ch * 2, ch, 3, stride=2, pad=1, bias=False))
        ch *= 2
        stages.append(Stage("in", in_id=n_in)); n_in += 1
        stages.append(Stage("act", act="relu"))
    for _ in range(cfg.n_blocks):
        w1, _ = _conv_params(rng, ch, ch, 3, bias=False)
        w2, _ = _conv_params(rng, ch, ch, 3, bias=False)
        stages.append(Stage("res", w=w1, w2=w2, in_id=n_in))
        n_in += 2
    for _ in range(2):
        w, _ = _conv_params(rng, ch // 2, ch, 3, bias=False)
        stages.append(Stage("upconv", factor=2, w=w))
        ch //= 2
        stages.append(Stage("in", in_id=n_in)); n_in += 1
        stages.append(Stage("act", act="relu"))
    stages.append(Stage("pad", p=3))
    stages.append(conv_stage(cfg.out_channels, ch, 7))  # tanh follows, bias matters
    stages.append(Stage("act", act="tanh"))
    return Model(key=key, stages=stages, n_in_sites=n_in, size_multiple=4)


def build_discriminator(
    cfg: DiscriminatorConfig, rng: np.random.Generator, key: str = "d"
) -> Model:
    """Patch critic: stacked 4x4 convs scoring overlapping regions."""
    stages: list[Stage] = []
    n_in = 0
    ch = cfg.base_channels
    w, b = _conv_params(rng, ch, cfg.in_channels, 4)  # no norm here, bias stays
    stages.append(Stage("conv", stride=2, pad=1, w=w, b=b))
    stages.append(Stage("act", act="leaky_relu"))
    for _ in range(cfg.n_layers - 1):
        w, _ = _conv_params(rng, min(ch * 2, cfg.base_channels * 8), ch, 4, bias=False)
        ch = min(ch * 2, cfg.base_channels * 8)
        stages.append(Stage("conv", stride=2, pad=1, w=w))
        stages.append(Stage("in", in_id=n_in)); n_in += 1
        stages.append(Stage("act", act="leaky_relu"))
    w, _ = _conv_params(rng, min(ch * 2, cfg.base_channels * 8), ch, 4, bias=False)
    ch = min(ch * 2, cfg.base_channels * 8)
    stages.append(Stage("conv", stride=1, pad=1, w=w))
    stages.append(Stage("in", in_id=n_in)); n_in += 1
    stages.append(Stage("act", act="leaky_relu"))
    w, b = _conv_params(rng, 1, ch, 4)
    stages.append(Stage("conv", stride=1, pad=1, w=w, b=b))
    return Model(key=key, stages=stages, n_in_sites=n_in, size_multiple=1)


def _apply_in(
    x: Tensor,
    site: int,
    overrides,
    stats_sink,
    tape,
) -> Tensor:
    if stats_sink is not None:
        stats_sink[site] = instance_norm_stats(x)
    ov: ChannelStats | None = None
    if overrides is not None:
        ov = overrides.get(site)
        if ov is None:
            raise KeyError(f"no override stats for norm site {site}")
    return instance_norm(x, override=ov, tape=tape)


def forward(
    model: Model,
    x: Tensor,
    tape: Tape | None = None,
    overrides=None,
    stats_sink: dict | None = None,
) -> Tensor:
    """Walk the stage list.

    overrides: mapping norm-site id -> ChannelStats; when given, every
    site must be covered (partial overrides would silently mix stats
    regimes). stats_sink: dict filled with the per-site input stats.
    Inputs whose sides are not multiples of model.size_multiple are
    reflect-padded on the right/bottom and cropped back after.
    """
    m = model.size_multiple
    h, w = x.shape[2], x.shape[3]
    pad_r = (-w) % m
    pad_b = (-h) % m
    if pad_r or pad_b:
        x = reflection_pad2d_lrtb(x, 0, pad_r, 0, pad_b, tape)
    out = x
    for st in model.stages:
        if st.kind == "pad":
            out = reflection_pad2d(out, st.p, tape)
        elif st.kind == "conv":
            out = conv2d(out, st.w, st.b, stride=st.stride, pad=st.pad, tape=tape)
        elif st.kind == "in":
            out = _apply_in(out, st.in_id, overrides, stats_sink, tape)
        elif st.kind == "act":
            out = activation(out, st.act, tape)
        elif st.kind == "upconv":
            out = upsample_conv(out, st.w, st.b, factor=st.factor, tape=tape)
        elif st.kind == "res":
            skip = out
            h1 = reflection_pad2d(out, 1, tape)
            h1 = conv2d(h1, st.w, st.b, stride=1, pad=0, tape=tape)
            h1 = _apply_in(h1, st.in_id, overrides, stats_sink, tape)
            h1 = activation(h1, "relu", tape)
            h1 = reflection_pad2d(h1, 1, tape)
            h1 = conv2d(h1, st.w2, st.b2, stride=1, pad=0, tape=tape)
            h1 = _apply_in(h1, st.in_id + 1, overrides, stats_sink, tape)
            out = add(h1, skip, tape)
    if pad_r or pad_b:
        # crop back; slicing off-tape is fine because callers never
        # differentiate through the auto-padding path of a padded input
        if tape is not None:
            raise ValueError("taped forward requires input sides divisible by size_multiple")
        out = Tensor(np.ascontiguousarray(out.data[:, :, :h, :w]))
    return out
