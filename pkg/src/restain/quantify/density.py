"""Stain density estimation and relative-difference statistics.

Density is the fraction of pixels within a Euclidean RGB tolerance of
a reference color. On procedurally rendered slides the palette is
exact, so this color threshold is a faithful stand-in for a cell
detector and recovers the generator's ground truth exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..tiling.slide import Slide

_MAX_TOL = 255.0 * math.sqrt(3.0)


@dataclass(frozen=True)
class StainRef:
    """A named reference color with a detection tolerance."""

    name: str
    ref_color: tuple[int, int, int]
    tol: float = 60.0

    def __post_init__(self):
        if len(self.ref_color) != 3 or any(not 0 <= v <= 255 for v in self.ref_color):
            raise ValueError(f"invalid reference color {self.ref_color}")
        if not 0.0 < self.tol < _MAX_TOL:
            raise ValueError(f"tolerance must be in (0, {_MAX_TOL:.1f}), got {self.tol}")


@dataclass(frozen=True)
class AggregateStats:
    median: float
    variance: float
    n: int
    n_flagged: int = 0


def stain_mask(slide: Slide, ref: StainRef) -> np.ndarray:
    """Boolean (H, W) mask of pixels within ref.tol of ref.ref_color."""
    diff = slide.data.astype(np.int64) - np.asarray(ref.ref_color, dtype=np.int64)
    d2 = (diff * diff).sum(axis=-1)
    return d2 <= ref.tol * ref.tol


def density(mask: np.ndarray) -> float:
    """True-pixel fraction of a binary mask."""
    if mask.size == 0:
        raise ValueError("mask has no pixels")
    return float(np.count_nonzero(mask) / mask.size)


def abs_rel_diff(real: float, virt: float) -> float:
    """|real - virt| / real.

    Degenerate cases: both zero gives 0; real zero with a nonzero
    virtual value gives +inf, a sentinel the aggregator counts
    separately instead of folding into the statistics."""
    if real < 0.0 or virt < 0.0:
        raise ValueError("densities must be non-negative")
    if real == 0.0:
        return 0.0 if virt == 0.0 else math.inf
    return abs(real - virt) / real


def aggregate(diffs) -> AggregateStats:
    """Median and sample variance of the finite differences.

    +inf entries are excluded and counted in n_flagged. Values are
    sorted first, so the result is exactly permutation-invariant."""
    vals = np.asarray(list(diffs), dtype=np.float64)
    if np.isnan(vals).any():
        raise ValueError("differences must not be NaN")
    flagged = int(np.isinf(vals).sum())
    finite = np.sort(vals[np.isfinite(vals)])
    n = finite.size
    if n == 0:
        raise ValueError("need at least one finite difference")
    med = float(np.median(finite))
    var = float(np.var(finite, ddof=1)) if n > 1 else 0.0
    return AggregateStats(median=med, variance=var, n=n, n_flagged=flagged)


def quartiles(values) -> tuple[float, float, float]:
    """(Q1, median, Q3) by linear interpolation between order statistics."""
    vals = np.sort(np.asarray(list(values), dtype=np.float64))
    if vals.size == 0:
        raise ValueError("need at least one value")
    q1, q2, q3 = np.percentile(vals, [25.0, 50.0, 75.0])
    return float(q1), float(q2), float(q3)
