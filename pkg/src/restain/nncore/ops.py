"""Neural layer kernels with manual reverse-mode differentiation.

Every op is a pure function Tensor -> Tensor. Passing a Tape records a
backward closure; passing tape=None runs forward-only (inference) and
keeps no intermediates. Convolution is im2col + GEMM; the forward-only
path chunks the column matrix to bound peak memory on large windows.
"""

from __future__ import annotations

import numpy as np

from .tensor import ChannelStats, Tensor, check_finite
from .tape import Tape, accumulate

# Forward-only conv chunks its column matrix above this size.
_COL_BYTES_CAP = 192 * 1024 * 1024

_ACTIVATIONS = ("relu", "leaky_relu", "tanh", "none")
_LEAKY_SLOPE = 0.2


def _same_dtype(*tensors: Tensor) -> None:
    dt = tensors[0].dtype
    for t in tensors[1:]:
        if t.dtype != dt:
            raise ValueError("mixed dtypes in op")


def add(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch {a.shape} vs {b.shape}")
    _same_dtype(a, b)
    out = Tensor(a.data + b.data)
    check_finite(out.data, "add output")
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            accumulate(a, out.grad)
            accumulate(b, out.grad)
        tape.record(_bwd)
    return out


def scale(a: Tensor, s: float, tape: Tape | None = None) -> Tensor:
    out = Tensor(a.data * a.data.dtype.type(s))
    check_finite(out.data, "scale output")
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            accumulate(a, out.grad * a.data.dtype.type(s))
        tape.record(_bwd)
    return out


def tsum(x: Tensor, tape: Tape | None = None) -> Tensor:
    out = Tensor(x.data.sum(dtype=x.dtype).reshape(1, 1, 1, 1))
    check_finite(out.data, "sum output")
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            accumulate(x, np.full_like(x.data, out.grad.reshape(-1)[0]))
        tape.record(_bwd)
    return out


def _conv_out_hw(h: int, w: int, k: int, stride: int, pad: int) -> tuple[int, int]:
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"conv input {h}x{w} too small for kernel {k} stride {stride} pad {pad}")
    return ho, wo


def _im2col(xp: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """(T,C,Hp,Wp) -> column matrix (C*k*k, T*ho*wo)."""
    t, c = xp.shape[:2]
    col6 = np.empty((c, k, k, t, ho, wo), dtype=xp.dtype)
    for ki in range(k):
        for kj in range(k):
            col6[:, ki, kj] = xp[
                :, :, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride
            ].transpose(1, 0, 2, 3)
    return col6.reshape(c * k * k, t * ho * wo)


def conv2d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None,
    stride: int = 1,
    pad: int = 0,
    tape: Tape | None = None,
) -> Tensor:
    """Cross-correlation plus optional bias.

    w is (Cout,Cin,k,k); b carries the Cout bias vector as (1,Cout,1,1),
    or None for layers whose bias a following norm would cancel anyway.
    Zero padding only; reflection borders are a separate op.
    """
    if b is None:
        _same_dtype(x, w)
    else:
        _same_dtype(x, w, b)
    t, c, h, wd = x.shape
    cout, cin, k, k2 = w.shape
    if k != k2:
        raise ValueError("only square kernels supported")
    if cin != c:
        raise ValueError(f"conv channel mismatch: input {c}, weight expects {cin}")
    if b is not None and b.shape != (1, cout, 1, 1):
        raise ValueError(f"bias must be (1,{cout},1,1), got {b.shape}")
    ho, wo = _conv_out_hw(h, wd, k, stride, pad)

    if pad > 0:
        xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    else:
        xp = x.data
    w2d = w.data.reshape(cout, cin * k * k)
    bcol = None if b is None else b.data.reshape(cout, 1)

    itemsize = x.data.itemsize
    col_bytes = cin * k * k * t * ho * wo * itemsize
    if tape is None and col_bytes > _COL_BYTES_CAP:
        # chunk over output rows to bound the column matrix
        out = np.empty((t, cout, ho, wo), dtype=x.dtype)
        rows_per = max(1, int(_COL_BYTES_CAP // (cin * k * k * t * wo * itemsize)))
        for r0 in range(0, ho, rows_per):
            r1 = min(r0 + rows_per, ho)
            xs = xp[:, :, r0 * stride : (r1 - 1) * stride + k, :]
            col = _im2col(xs, k, stride, r1 - r0, wo)
            o2d = w2d @ col
            if bcol is not None:
                o2d += bcol
            out[:, :, r0:r1, :] = o2d.reshape(cout, t, r1 - r0, wo).transpose(1, 0, 2, 3)
        check_finite(out, "conv2d output")
        return Tensor(out)

    col = _im2col(xp, k, stride, ho, wo)
    o2d = w2d @ col
    if bcol is not None:
        o2d += bcol
    out_data = np.ascontiguousarray(o2d.reshape(cout, t, ho, wo).transpose(1, 0, 2, 3))
    check_finite(out_data, "conv2d output")
    out = Tensor(out_data)

    if tape is not None:
        hp, wp = xp.shape[2], xp.shape[3]

        def _bwd():
            if out.grad is None:
                return
            g2d = out.grad.transpose(1, 0, 2, 3).reshape(cout, t * ho * wo)
            accumulate(w, (g2d @ col.T).reshape(w.shape))
            if b is not None:
                accumulate(b, g2d.sum(axis=1).reshape(1, cout, 1, 1))
            dcol = w2d.T @ g2d
            dcol6 = dcol.reshape(cin, k, k, t, ho, wo)
            dxp = np.zeros((t, cin, hp, wp), dtype=x.dtype)
            for ki in range(k):
                for kj in range(k):
                    dxp[:, :, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride] += (
                        dcol6[:, ki, kj].transpose(1, 0, 2, 3)
                    )
            if pad > 0:
                accumulate(x, dxp[:, :, pad : pad + h, pad : pad + wd])
            else:
                accumulate(x, dxp)

        tape.record(_bwd)
    return out


def _reflect_pad_data(data: np.ndarray, top: int, bottom: int, left: int, right: int) -> np.ndarray:
    h, w = data.shape[2], data.shape[3]
    if max(top, bottom) >= h or max(left, right) >= w:
        raise ValueError(f"reflection pad ({top},{bottom},{left},{right}) too large for {h}x{w}")
    return np.pad(data, ((0, 0), (0, 0), (top, bottom), (left, right)), mode="reflect")


def _reflect_fold(g: np.ndarray, top: int, bottom: int, left: int, right: int) -> np.ndarray:
    """Adjoint of reflect-101 padding: fold border gradients back inward."""
    h = g.shape[2] - top - bottom
    core = g[:, :, top : top + h, :].copy()
    if top > 0:
        core[:, :, 1 : top + 1, :] += np.flip(g[:, :, 0:top, :], axis=2)
    if bottom > 0:
        core[:, :, h - bottom - 1 : h - 1, :] += np.flip(g[:, :, top + h :, :], axis=2)
    w = core.shape[3] - left - right
    out = core[:, :, :, left : left + w].copy()
    if left > 0:
        out[:, :, :, 1 : left + 1] += np.flip(core[:, :, :, 0:left], axis=3)
    if right > 0:
        out[:, :, :, w - right - 1 : w - 1] += np.flip(core[:, :, :, left + w :], axis=3)
    return out


def reflection_pad2d(x: Tensor, p: int, tape: Tape | None = None) -> Tensor:
    """Reflect-101 border padding (edge pixel not duplicated)."""
    if p < 0:
        raise ValueError("pad must be >= 0")
    if p == 0:
        out = Tensor(x.data.copy())
        if tape is not None:
            def _bwd0():
                if out.grad is not None:
                    accumulate(x, out.grad)
            tape.record(_bwd0)
        return out
    out = Tensor(_reflect_pad_data(x.data, p, p, p, p))
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            accumulate(x, _reflect_fold(out.grad, p, p, p, p))
        tape.record(_bwd)
    return out


def reflection_pad2d_lrtb(
    x: Tensor, left: int, right: int, top: int, bottom: int, tape: Tape | None = None
) -> Tensor:
    """Asymmetric reflect-101 padding, used to round sizes up before a net."""
    if min(left, right, top, bottom) < 0:
        raise ValueError("pads must be >= 0")
    if left == right == top == bottom == 0:
        return x
    out = Tensor(_reflect_pad_data(x.data, top, bottom, left, right))
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            accumulate(x, _reflect_fold(out.grad, top, bottom, left, right))
        tape.record(_bwd)
    return out


def upsample_nearest(x: Tensor, factor: int, tape: Tape | None = None) -> Tensor:
    if factor < 2:
        raise ValueError("upsample factor must be >= 2")
    t, c, h, w = x.shape
    out = Tensor(x.data.repeat(factor, axis=2).repeat(factor, axis=3))
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            g = out.grad.reshape(t, c, h, factor, w, factor).sum(axis=(3, 5))
            accumulate(x, g.astype(x.dtype))
        tape.record(_bwd)
    return out


def upsample_conv(
    x: Tensor, w: Tensor, b: Tensor | None, factor: int = 2, tape: Tape | None = None
) -> Tensor:
    """Nearest-neighbor upsample then 3x3 stride-1 pad-1 conv."""
    if w.shape[2] != 3 or w.shape[3] != 3:
        raise ValueError("upsample_conv expects a 3x3 kernel")
    up = upsample_nearest(x, factor, tape)
    return conv2d(up, w, b, stride=1, pad=1, tape=tape)


def instance_norm_stats(x: Tensor) -> ChannelStats:
    """Per-(instance, channel) mean and population variance over H*W."""
    t, c, h, w = x.shape
    if h * w < 1:
        raise ValueError("empty spatial extent")
    mean = x.data.mean(axis=(2, 3), dtype=np.float64)
    var = x.data.var(axis=(2, 3), dtype=np.float64)
    return ChannelStats(mean=mean, var=np.maximum(var, 0.0), count=h * w)


def _broadcast_stats(st: ChannelStats, t: int, c: int) -> tuple[np.ndarray, np.ndarray]:
    mean, var = st.mean, st.var
    if mean.shape[1] != c:
        raise ValueError(f"override has {mean.shape[1]} channels, tensor has {c}")
    if mean.shape[0] == 1 and t > 1:
        mean = np.broadcast_to(mean, (t, c))
        var = np.broadcast_to(var, (t, c))
    elif mean.shape[0] != t:
        raise ValueError(f"override batch {mean.shape[0]} incompatible with tensor batch {t}")
    return mean, var


def instance_norm(
    x: Tensor,
    eps: float = 1e-5,
    override: ChannelStats | None = None,
    tape: Tape | None = None,
) -> Tensor:
    """y = (x - mu) / sqrt(var + eps), stats per instance and channel.

    Without override the stats come from the input itself and backward
    accounts for their dependence on x. With override the stats are
    constants (the injection point for global-stats and sliding-window
    inference).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t, c, h, w = x.shape
    dt = x.dtype
    if override is None:
        st = instance_norm_stats(x)
        mean, var = st.mean, st.var
    else:
        mean, var = _broadcast_stats(override, t, c)
    inv = (1.0 / np.sqrt(var + eps)).astype(dt)[:, :, None, None]
    mu = mean.astype(dt)[:, :, None, None]
    y = (x.data - mu) * inv
    check_finite(y, "instance_norm output")
    out = Tensor(y)
    if tape is not None:
        n = h * w
        if override is None:
            def _bwd():
                if out.grad is None:
                    return
                g = out.grad
                gsum = g.sum(axis=(2, 3), keepdims=True)
                gysum = (g * y).sum(axis=(2, 3), keepdims=True)
                dx = (inv / n) * (n * g - gsum - y * gysum)
                accumulate(x, dx.astype(dt))
            tape.record(_bwd)
        else:
            def _bwd_const():
                if out.grad is None:
                    return
                accumulate(x, out.grad * inv)
            tape.record(_bwd_const)
    return out


def activation(x: Tensor, kind: str, tape: Tape | None = None) -> Tensor:
    if kind not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {kind!r}")
    if kind == "none":
        out = Tensor(x.data.copy())
        if tape is not None:
            def _bwd_id():
                if out.grad is not None:
                    accumulate(x, out.grad)
            tape.record(_bwd_id)
        return out
    if kind == "relu":
        y = np.maximum(x.data, 0)
    elif kind == "leaky_relu":
        y = np.where(x.data >= 0, x.data, x.data * x.data.dtype.type(_LEAKY_SLOPE))
    else:  # tanh
        y = np.tanh(x.data)
    check_finite(y, f"{kind} output")
    out = Tensor(y)
    if tape is not None:
        if kind == "relu":
            def _bwd():
                if out.grad is None:
                    return
                accumulate(x, np.where(x.data > 0, out.grad, 0))
        elif kind == "leaky_relu":
            def _bwd():
                if out.grad is None:
                    return
                slope = x.data.dtype.type(_LEAKY_SLOPE)
                accumulate(x, np.where(x.data >= 0, out.grad, out.grad * slope))
        else:
            def _bwd():
                if out.grad is None:
                    return
                accumulate(x, out.grad * (1 - y * y))
        tape.record(_bwd)
    return out


def mean_abs_diff(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    """Scalar mean |a - b| (the L1 reconstruction measure)."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    _same_dtype(a, b)
    d = a.data - b.data
    n = d.size
    val = np.abs(d).mean(dtype=np.float64)
    out = Tensor(np.full((1, 1, 1, 1), val, dtype=a.dtype))
    check_finite(out.data, "mean_abs_diff output")
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            g = out.grad.reshape(-1)[0] / n
            da = (np.sign(d) * g).astype(a.dtype)
            accumulate(a, da)
            accumulate(b, -da)
        tape.record(_bwd)
    return out


def mean_sq_const(x: Tensor, c: float, tape: Tape | None = None) -> Tensor:
    """Scalar mean (x - c)^2 against a constant label."""
    if x.numel() == 0:
        raise ValueError("empty tensor")
    d = x.data - x.data.dtype.type(c)
    n = d.size
    val = (d * d).mean(dtype=np.float64)
    out = Tensor(np.full((1, 1, 1, 1), val, dtype=x.dtype))
    check_finite(out.data, "mean_sq_const output")
    if tape is not None:
        def _bwd():
            if out.grad is None:
                return
            g = out.grad.reshape(-1)[0]
            accumulate(x, (2.0 * g / n) * d)
        tape.record(_bwd)
    return out
