"""Inference strategies over large slides.

Four ways to translate a slide whose normalization layers compute
statistics from their input:

- monolithic: one forward pass, statistics over the whole image. The
  seam-free reference, feasible only up to a pixel budget.
- naive: independent tiles on a non-overlapping grid, statistics per
  tile, outputs stitched directly. Fast, and visibly seamed whenever
  neighboring tiles have different statistics.
- global stats: like naive, but every normalization site is overridden
  with a precomputed table of frozen statistics.
- sliding: each effective tile is predicted from a larger window
  centered on it, statistics over the window, and only the central
  crop is kept. Windows overhang the slide via edge reflection.

All strategies write disjoint output regions (a pixel belongs to the
last tile covering it), so tile order cannot change the result.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..nncore import receptive_field
from ..nncore.tensor import ChannelStats, Tensor
from ..cyclegan.model import Model, forward
from .grid import TileGrid, make_grid, owner_segments
from .slide import Slide, extract_window, slide_to_tensor, tensor_to_slide


@dataclass
class LayerStatsTable:
    """Frozen per-channel statistics for every normalization site."""

    layers: dict[int, ChannelStats]

    def __len__(self) -> int:
        return len(self.layers)


def _check_table(model: Model, table: LayerStatsTable) -> None:
    want = set(range(model.n_in_sites))
    got = set(table.layers)
    if want != got:
        raise DataError(
            f"stats table covers layers {sorted(got)} but the model "
            f"has normalization sites {sorted(want)}"
        )


def run_monolithic(model: Model, slide: Slide, max_pixels: int = 4_000_000) -> Slide:
    if slide.width * slide.height > max_pixels:
        raise DataError(
            f"slide {slide.width}x{slide.height} exceeds the monolithic "
            f"budget of {max_pixels} pixels"
        )
    y = forward(model, slide_to_tensor(slide))
    return tensor_to_slide(y, slide.magnification_tag)


def _run_tiled(model: Model, slide: Slide, tile: int, overrides=None) -> Slide:
    grid = make_grid(slide.width, slide.height, tile, tile)
    xs = sorted({x for x, _ in grid.origins})
    ys = sorted({y for _, y in grid.origins})
    out = np.zeros((3, slide.height, slide.width), dtype=np.float32)
    for (oy, ey) in zip(ys, [s[1] for s in owner_segments(ys, tile, slide.height)]):
        for (ox, ex) in zip(xs, [s[1] for s in owner_segments(xs, tile, slide.width)]):
            crop = Slide(
                slide.data[oy : min(oy + tile, slide.height), ox : min(ox + tile, slide.width)],
                slide.magnification_tag,
            )
            pred = forward(model, slide_to_tensor(crop), overrides=overrides)
            out[:, oy:ey, ox:ex] = pred.data[0, :, : ey - oy, : ex - ox]
    return tensor_to_slide(Tensor(out[None]), slide.magnification_tag)


def run_naive(model: Model, slide: Slide, tile: int) -> Slide:
    """Independent per-tile statistics; the seam-prone baseline."""
    return _run_tiled(model, slide, tile)


def run_global_stats(model: Model, slide: Slide, table: LayerStatsTable, tile: int) -> Slide:
    _check_table(model, table)
    return _run_tiled(model, slide, tile, overrides=table.layers)


def run_sliding(model: Model, slide: Slide, effective: int = 128, window: int = 512) -> Slide:
    if window <= effective:
        raise ValueError(f"window ({window}) must exceed effective size ({effective})")
    if window % 2 or effective % 2:
        raise ValueError("window and effective sizes must be even")
    margin = (window - effective) // 2
    rf, _ = receptive_field(model.layer_specs())
    if margin < rf // 2:
        warnings.warn(
            f"window margin {margin} is below the receptive-field radius "
            f"{rf // 2}; context is truncated",
            stacklevel=2,
        )
    grid = make_grid(slide.width, slide.height, effective, effective)
    xs = sorted({x for x, _ in grid.origins})
    ys = sorted({y for _, y in grid.origins})
    out = np.zeros((3, slide.height, slide.width), dtype=np.float32)
    for (oy, ey) in zip(ys, [s[1] for s in owner_segments(ys, effective, slide.height)]):
        for (ox, ex) in zip(xs, [s[1] for s in owner_segments(xs, effective, slide.width)]):
            win = extract_window(slide, ox - margin, oy - margin, window)
            pred = forward(model, win)
            out[:, oy:ey, ox:ex] = pred.data[
                0, :, margin : margin + ey - oy, margin : margin + ex - ox
            ]
    return tensor_to_slide(Tensor(out[None]), slide.magnification_tag)


def pool_stats(samples: list[ChannelStats]) -> ChannelStats:
    """Combine per-sample statistics via the law of total variance.

    Pooled mean is the mean of means; pooled variance is
    E[var + mean^2] - E[mean]^2, clipped at zero against rounding."""
    if not samples:
        raise ValueError("need at least one stats sample to pool")
    sum_mean = np.zeros(samples[0].mean.shape[1], dtype=np.float64)
    sum_msq = np.zeros_like(sum_mean)
    count = 0
    pixels = 0
    for st in samples:
        sum_mean += st.mean.sum(axis=0)
        sum_msq += (st.var + st.mean**2).sum(axis=0)
        count += st.mean.shape[0]
        pixels += st.count * st.mean.shape[0]
    mean = (sum_mean / count)[None]
    var = np.maximum(sum_msq / count - mean**2, 0.0)
    return ChannelStats(mean=mean, var=var, count=pixels)


def collect_running_stats(model: Model, tiles: list[Tensor]) -> LayerStatsTable:
    """Forward every tile, then pool each layer's statistics."""
    if not tiles:
        raise ValueError("need at least one tile to collect statistics")
    per_site: dict[int, list[ChannelStats]] = {}
    for t in tiles:
        sink: dict[int, ChannelStats] = {}
        forward(model, t, stats_sink=sink)
        for site, st in sink.items():
            per_site.setdefault(site, []).append(st)
    return LayerStatsTable({site: pool_stats(sts) for site, sts in per_site.items()})


def write_stats_csv(table: LayerStatsTable, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["layer", "channel", "mean", "var", "count"])
        for site in sorted(table.layers):
            st = table.layers[site]
            for c in range(st.mean.shape[1]):
                writer.writerow(
                    [site, c, repr(float(st.mean[0, c])), repr(float(st.var[0, c])), st.count]
                )


def read_stats_csv(path) -> LayerStatsTable:
    rows: dict[int, dict[int, tuple[float, float]]] = {}
    counts: dict[int, int] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["layer", "channel", "mean", "var", "count"]:
            raise DataError(f"not a stats table (bad header {header!r}): {path}")
        for line in reader:
            try:
                site, c, mean, var = int(line[0]), int(line[1]), float(line[2]), float(line[3])
                counts[site] = int(line[4])
            except (ValueError, IndexError) as exc:
                raise DataError(f"malformed stats row {line!r} in {path}") from exc
            rows.setdefault(site, {})[c] = (mean, var)
    if not rows:
        raise DataError(f"empty stats table: {path}")
    layers = {}
    for site, chans in rows.items():
        if sorted(chans) != list(range(len(chans))):
            raise DataError(f"stats table layer {site} has gaps in its channels: {path}")
        mean = np.array([[chans[c][0] for c in range(len(chans))]], dtype=np.float64)
        var = np.array([[chans[c][1] for c in range(len(chans))]], dtype=np.float64)
        layers[site] = ChannelStats(mean=mean, var=var, count=counts[site])
    return LayerStatsTable(layers)
