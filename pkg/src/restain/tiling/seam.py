"""Seam-artifact index: boundary vs interior gradient ratio.

Adjacent-pixel absolute differences are pooled over every pair that
straddles a tile boundary (m_b) and over every other adjacent pair
(m_i); the index is (m_b + eps) / (m_i + eps). Unit-free, 1.0 for
images whose statistics do not change at tile boundaries.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .grid import TileGrid
from .slide import Slide

_EPS = 1e-6


def seam_index(slide: Slide, grid: TileGrid) -> float:
    cols = grid.boundary_columns()
    rows = grid.boundary_rows()
    if not cols and not rows:
        raise DataError("grid has no interior tile boundaries to measure")

    img = slide.data.astype(np.float64)
    dx = np.abs(np.diff(img, axis=1))  # pair j: columns (j, j+1)
    dy = np.abs(np.diff(img, axis=0))

    col_mask = np.zeros(dx.shape[1], dtype=bool)
    for x in cols:
        col_mask[x - 1] = True
    row_mask = np.zeros(dy.shape[0], dtype=bool)
    for y in rows:
        row_mask[y - 1] = True

    b_sum = float(dx[:, col_mask].sum() + dy[row_mask].sum())
    b_cnt = int(dx[:, col_mask].size + dy[row_mask].size)
    i_sum = float(dx[:, ~col_mask].sum() + dy[~row_mask].sum())
    i_cnt = int(dx[:, ~col_mask].size + dy[~row_mask].size)

    m_b = b_sum / b_cnt if b_cnt else 0.0
    m_i = i_sum / i_cnt if i_cnt else 0.0
    return (m_b + _EPS) / (m_i + _EPS)
