"""Band-limited random scalar fields built from integer cosine sums.

A field is a sum of at most 16 cosine components with wavelengths of
192 to 512 pixels, accumulated in fixed point and min-max mapped onto
a per-seed value range. The long wavelengths produce smooth regional
structure: whole neighborhoods share a density level, which is what
makes per-tile statistics differ across a slide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trig import COS_I, TURN

_FIELD_TAG = 0x4649454C

# phase step per pixel carries 8 fractional bits
_FRAC = 8


@dataclass
class FeatureField:
    """Smooth per-pixel density and orientation maps for one tissue."""

    width: int
    height: int
    blob_density: np.ndarray  # (H, W) float64 in [0, 1]
    fiber_orientation: np.ndarray  # (H, W) float64 in [0, pi)
    seed: int


def _cosine_accum(rng: np.random.Generator, w: int, h: int, n_comp: int) -> np.ndarray:
    lam = rng.integers(192, 513, n_comp)
    direction = rng.integers(0, TURN, n_comp)
    phase = rng.integers(0, TURN, n_comp)
    amp = rng.integers(2048, 4097, n_comp)

    xs = np.arange(w, dtype=np.int64)
    ys = np.arange(h, dtype=np.int64)
    total = np.zeros((h, w), dtype=np.int64)
    for k in range(n_comp):
        c = int(COS_I[direction[k]])
        s = int(COS_I[(direction[k] + TURN // 4) % TURN])  # sine via phase shift
        # per-pixel phase step in table units, 8 fractional bits
        qx = round((c << _FRAC) / int(lam[k]))
        qy = round((s << _FRAC) / int(lam[k]))
        idx = (qx * xs[None, :] + qy * ys[:, None] + (int(phase[k]) << _FRAC)) >> _FRAC
        total += int(amp[k]) * COS_I[idx & (TURN - 1)]
    return total


def _minmax(total: np.ndarray, lo: float, hi: float) -> np.ndarray:
    mn = int(total.min())
    mx = int(total.max())
    if mx == mn:
        return np.full(total.shape, (lo + hi) / 2.0)
    # quantize to 1/4096 steps of the target range
    q = np.rint((total - mn) * (4096.0 / (mx - mn)))
    return lo + q * ((hi - lo) / 4096.0)


def _centered(total: np.ndarray, mean: float, gain: float) -> np.ndarray:
    """Standardize, place at the target mean, clip into [0, 1]."""
    z = total.astype(np.float64)
    std = float(z.std())
    if std == 0.0:
        return np.full(total.shape, mean)
    z = (z - float(z.mean())) / std
    v = np.clip(mean + gain * z, 0.0, 1.0)
    return np.rint(v * 4096.0) / 4096.0


def gen_feature_field(seed: int, w: int, h: int) -> FeatureField:
    if w < 64 or h < 64:
        raise ValueError(f"field dimensions must be at least 64, got {w}x{h}")
    rng = np.random.default_rng((seed, _FIELD_TAG))

    # the target mean varies seed to seed: that variation is the signal
    # the paired domain's feature amounts inherit
    n_comp = int(rng.integers(8, 17))
    mean = float(rng.uniform(0.25, 0.55))
    gain = float(rng.uniform(0.12, 0.30))
    blob = _centered(_cosine_accum(rng, w, h, n_comp), mean, gain)

    n_orient = int(rng.integers(2, 5))
    orient01 = _minmax(_cosine_accum(rng, w, h, n_orient), 0.0, 1.0)
    orient = orient01 * (np.pi * 4095.0 / 4096.0)

    return FeatureField(
        width=w, height=h, blob_density=blob, fiber_orientation=orient, seed=int(seed)
    )
