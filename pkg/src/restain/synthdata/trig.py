"""Fixed-point cosine table shared by field generation and rendering.

One full turn is 4096 table steps; values are scaled by 4096. All hot
paths index this table with integer phases, so pixel values never
depend on platform libm behavior. The table itself is built once from
math.cos; its entries sit far enough from rounding boundaries that any
faithful libm produces identical integers.
"""

from __future__ import annotations

import math

import numpy as np

TURN = 4096
SCALE = 4096

COS_I = np.array(
    [round(SCALE * math.cos(2.0 * math.pi * i / TURN)) for i in range(TURN)],
    dtype=np.int64,
)
SIN_I = np.array(
    [round(SCALE * math.sin(2.0 * math.pi * i / TURN)) for i in range(TURN)],
    dtype=np.int64,
)
