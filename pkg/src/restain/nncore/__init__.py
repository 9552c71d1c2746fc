from .tensor import Tensor, ChannelStats, save_tensor, load_tensor
from .tape import Tape, accumulate, backward, zero_grads
from .ops import (
    add,
    scale,
    tsum,
    conv2d,
    reflection_pad2d,
    reflection_pad2d_lrtb,
    upsample_nearest,
    upsample_conv,
    instance_norm_stats,
    instance_norm,
    activation,
    mean_abs_diff,
    mean_sq_const,
)
from .gradcheck import grad_check
from .gcsuite import SuiteResult, run_suite
from .rf import LayerSpec, receptive_field

__all__ = [
    "Tensor",
    "ChannelStats",
    "save_tensor",
    "load_tensor",
    "Tape",
    "accumulate",
    "backward",
    "zero_grads",
    "add",
    "scale",
    "tsum",
    "conv2d",
    "reflection_pad2d",
    "reflection_pad2d_lrtb",
    "upsample_nearest",
    "upsample_conv",
    "instance_norm_stats",
    "instance_norm",
    "activation",
    "mean_abs_diff",
    "mean_sq_const",
    "grad_check",
    "SuiteResult",
    "run_suite",
    "LayerSpec",
    "receptive_field",
]
