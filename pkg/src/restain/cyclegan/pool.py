"""Replay pool of generated images for discriminator training.

Randomness is derived from (seed, tag, query counter), so the decision
sequence is a pure function of the seed and how many queries happened.
Serializing (images, counter) is enough to resume identically.
"""

from __future__ import annotations

import numpy as np

from ..nncore import Tensor

_POOL_STREAM_TAG = 0x504F4F4C  # "POOL"


class ImagePool:
    def __init__(self, capacity: int, seed: int, tag: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.seed = seed
        self.tag = tag
        self.images: list[Tensor] = []
        self.counter = 0

    def __len__(self) -> int:
        return len(self.images)

    def query(self, img: Tensor) -> Tensor:
        """Store-and-return below capacity; afterwards return the input
        with p=0.5, else swap it against a uniformly chosen kept image.

        Decisions are per image along the batch axis, so one batch-K
        query and K single-image queries follow the same trace."""
        b = img.data.shape[0]
        if b == 1:
            return self._query_one(img)
        parts = [
            self._query_one(Tensor(np.ascontiguousarray(img.data[i : i + 1]))).data
            for i in range(b)
        ]
        return Tensor(np.concatenate(parts, axis=0))

    def _query_one(self, img: Tensor) -> Tensor:
        if len(self.images) < self.capacity:
            self.images.append(img.detach())
            return img
        rng = np.random.default_rng((self.seed, _POOL_STREAM_TAG, self.tag, self.counter))
        self.counter += 1
        if rng.random() < 0.5:
            return img
        idx = int(rng.integers(0, self.capacity))
        out = self.images[idx]
        self.images[idx] = img.detach()
        return out
