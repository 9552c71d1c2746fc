"""Tile grid construction with edge clamping.

Origins advance by the stride; the last row and column are shifted
inward so every tile fits inside the slide (never padded outward).
A slide smaller than the tile yields a single tile at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TileGrid:
    tile: int
    stride: int
    width: int
    height: int
    origins: tuple[tuple[int, int], ...]  # (x0, y0), row-major

    def boundary_columns(self) -> list[int]:
        return sorted({x for x, _ in self.origins if 0 < x < self.width})

    def boundary_rows(self) -> list[int]:
        return sorted({y for _, y in self.origins if 0 < y < self.height})


def _axis_origins(limit: int, tile: int, stride: int) -> list[int]:
    if tile >= limit:
        return [0]
    xs = list(range(0, limit - tile + 1, stride))
    if xs[-1] != limit - tile:
        xs.append(limit - tile)  # clamp the final tile to the boundary
    return xs


def make_grid(w: int, h: int, tile: int, stride: int) -> TileGrid:
    if w < 1 or h < 1:
        raise ValueError(f"degenerate slide dimensions {w}x{h}")
    if stride < 1 or stride > tile:
        raise ValueError(f"need 0 < stride <= tile, got stride={stride} tile={tile}")
    xs = _axis_origins(w, tile, stride)
    ys = _axis_origins(h, tile, stride)
    origins = tuple((x, y) for y in ys for x in xs)
    return TileGrid(tile=tile, stride=stride, width=w, height=h, origins=origins)


def owner_segments(origins: list[int], tile: int, limit: int) -> list[tuple[int, int]]:
    """Half-open [start, end) output ownership per origin along one axis.

    Matches place-in-order-and-overwrite semantics: a pixel covered by
    several tiles belongs to the last one, so each tile owns the span up
    to the next origin. Spans are clipped to the axis limit."""
    segs = []
    for i, o in enumerate(origins):
        end = origins[i + 1] if i + 1 < len(origins) else limit
        segs.append((o, min(min(o + tile, limit), end)))
    return segs


def coverage_mask(grid: TileGrid) -> np.ndarray:
    """Write counts per pixel under owner-segment placement."""
    xs = sorted({x for x, _ in grid.origins})
    ys = sorted({y for _, y in grid.origins})
    mask = np.zeros((grid.height, grid.width), dtype=np.int32)
    for sy in owner_segments(ys, grid.tile, grid.height):
        for sx in owner_segments(xs, grid.tile, grid.width):
            mask[sy[0] : sy[1], sx[0] : sx[1]] += 1
    return mask
