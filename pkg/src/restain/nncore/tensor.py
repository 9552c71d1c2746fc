"""Rank-4 tensor container and raw tensor file IO.

Layout is fixed to (T, C, H, W) row-major. Two precision modes exist:
float32 for training and inference, float64 for gradient checking.
Every kernel in this package checks its output for NaN/Inf and raises
NumericError, so a Tensor in circulation always holds finite values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, NumericError

_MAGIC = b"TNSR"
_VERSION = 1


def _as4d(data: np.ndarray) -> np.ndarray:
    if data.ndim != 4:
        raise ValueError(f"tensor data must be rank 4 (T,C,H,W), got shape {data.shape}")
    return np.ascontiguousarray(data)


@dataclass
class Tensor:
    """A (T,C,H,W) array with an optional gradient buffer."""

    data: np.ndarray
    requires_grad: bool = False
    grad: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.data = _as4d(self.data)
        if self.data.dtype not in (np.float32, np.float64):
            raise ValueError(f"tensor dtype must be f32 or f64, got {self.data.dtype}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numel(self) -> int:
        return int(self.data.size)

    def detach(self) -> "Tensor":
        """A grad-free view of the same values (data is copied)."""
        return Tensor(self.data.copy())

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad)

    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy(), requires_grad=self.requires_grad)
        if self.grad is not None:
            t.grad = self.grad.copy()
        return t

    @staticmethod
    def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @staticmethod
    def from_scalar(value: float, dtype=np.float32) -> "Tensor":
        return Tensor(np.full((1, 1, 1, 1), value, dtype=dtype))

    def item(self) -> float:
        if self.numel() != 1:
            raise ValueError(f"item() on tensor of {self.numel()} elements")
        return float(self.data.reshape(-1)[0])


@dataclass
class ChannelStats:
    """Per-(instance, channel) mean and population variance.

    mean/var have shape (T, C); count is the number of pixels per channel
    (H*W of the source tensor).
    """

    mean: np.ndarray
    var: np.ndarray
    count: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.ndim != 2 or self.var.shape != self.mean.shape:
            raise ValueError("stats must be (T,C) arrays of matching shape")
        if np.any(self.var < 0):
            raise ValueError("variance must be non-negative")

    @property
    def channels(self) -> int:
        return self.mean.shape[1]


def check_finite(arr: np.ndarray, what: str) -> None:
    """Raise NumericError if arr holds NaN/Inf.

    Uses the sum trick: a pairwise sum of finite values in range stays
    finite, while any NaN/Inf poisons it. Cheaper than isfinite().all()
    on large activations.
    """
    s = float(arr.sum(dtype=np.float64))
    if not np.isfinite(s):
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in {what}")


def save_tensor(t: Tensor, path) -> None:
    """Raw tensor file: magic TNSR, version u32 LE, 4 dims u32, f32 payload LE."""
    data = np.ascontiguousarray(t.data, dtype=np.float32)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<4I", *data.shape))
        f.write(data.astype("<f4", copy=False).tobytes())


def load_tensor(path) -> Tensor:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 24 or raw[:4] != _MAGIC:
        raise DataError(f"not a tensor file: {path}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise DataError(f"unsupported tensor file version {version}")
    dims = struct.unpack_from("<4I", raw, 8)
    n = dims[0] * dims[1] * dims[2] * dims[3]
    payload = raw[24:]
    if len(payload) != 4 * n:
        raise DataError(f"truncated tensor file: {path}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return Tensor(data.astype(np.float32))
