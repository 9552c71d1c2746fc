"""Slide container, binary PPM codec, and pixel range mapping.

A slide is an (H, W, 3) uint8 RGB image. Models consume tensors in
[-1, 1]; the mapping is x/127.5 - 1 with the inverse rounded via rint,
which reproduces every u8 value exactly on a round trip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..nncore.tensor import Tensor


@dataclass
class Slide:
    """RGB image with a free-form magnification label."""

    data: np.ndarray
    magnification_tag: str = "10x"

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"slide data must be (H, W, 3), got {self.data.shape}")
        if self.data.dtype != np.uint8:
            raise ValueError(f"slide data must be uint8, got {self.data.dtype}")
        self.data = np.ascontiguousarray(self.data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def slide_to_tensor(slide: Slide) -> Tensor:
    """Map u8 RGB to a (1, 3, H, W) float32 tensor in [-1, 1]."""
    arr = slide.data.astype(np.float32) / np.float32(127.5) - np.float32(1.0)
    return Tensor(arr.transpose(2, 0, 1)[None])


def tensor_to_slide(t: Tensor, magnification_tag: str = "10x") -> Slide:
    """Inverse of slide_to_tensor; values outside [-1, 1] are clipped."""
    if t.shape[0] != 1 or t.shape[1] != 3:
        raise ValueError(f"expected a (1, 3, H, W) tensor, got {t.shape}")
    arr = np.clip(t.data[0].astype(np.float64), -1.0, 1.0)
    arr = np.rint((arr + 1.0) * 127.5)
    return Slide(arr.astype(np.uint8).transpose(1, 2, 0), magnification_tag)


def write_ppm(slide: Slide, path) -> None:
    header = f"P6\n{slide.width} {slide.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(slide.data.tobytes())


def _next_token(raw: bytes, pos: int) -> tuple[bytes, int]:
    n = len(raw)
    while pos < n:
        c = raw[pos : pos + 1]
        if c == b"#":  # comment runs to end of line
            while pos < n and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise DataError("truncated PPM header")
    return raw[start:pos], pos


def read_ppm(path, magnification_tag: str = "10x") -> Slide:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] != b"P6":
        raise DataError(f"not a binary PPM (P6) file: {path}")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(raw, pos)
        if not tok.isdigit():
            raise DataError(f"malformed PPM header token {tok!r} in {path}")
        fields.append(int(tok))
    w, h, maxval = fields
    if w < 1 or h < 1:
        raise DataError(f"degenerate PPM dimensions {w}x{h} in {path}")
    if maxval != 255:
        raise DataError(f"unsupported PPM maxval {maxval} in {path} (want 255)")
    pos += 1  # single whitespace byte after maxval
    need = w * h * 3
    pixels = raw[pos : pos + need]
    if len(pixels) != need:
        raise DataError(f"PPM pixel payload is {len(pixels)} bytes, want {need}: {path}")
    data = np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3).copy()
    return Slide(data, magnification_tag)


def _fold_indices(idx: np.ndarray, n: int) -> np.ndarray:
    # reflect-101 about both edges, valid for arbitrary overhang
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    j = np.abs(idx) % period
    return np.where(j >= n, period - j, j)


def extract_window(slide: Slide, x0: int, y0: int, size: int) -> Tensor:
    """Crop a size x size window; out-of-bounds pixels reflect about the
    slide edges (reflect-101). The window must intersect the slide."""
    if size < 1:
        raise ValueError("window size must be positive")
    if x0 + size <= 0 or x0 >= slide.width or y0 + size <= 0 or y0 >= slide.height:
        raise ValueError(
            f"window ({x0},{y0})+{size} lies entirely outside the "
            f"{slide.width}x{slide.height} slide"
        )
    ix = _fold_indices(np.arange(x0, x0 + size), slide.width)
    iy = _fold_indices(np.arange(y0, y0 + size), slide.height)
    crop = slide.data[iy[:, None], ix[None, :]]
    return slide_to_tensor(Slide(crop, slide.magnification_tag))
