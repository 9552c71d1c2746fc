"""Training tile sets and paired evaluation slides.

Training tiles for the two domains come from disjoint seed namespaces
(unpaired data); evaluation pairs share one field per pair, so the B
slide is the pixel-aligned ground truth for the A slide. Seed streams
are namespaced per purpose and never overlap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..tiling.slide import Slide
from .field import FeatureField, gen_feature_field
from .render import DomainParams, fiber_mask, render_domain_a, render_domain_b

_TRAIN_A_TAG = 1
_TRAIN_B_TAG = 2
_EVAL_TAG = 3
_SHUFFLE_TAG = 0x53485546

_SOURCE_MIN = 256


@dataclass
class SynthSlidePair:
    slide_a: Slide
    slide_b: Slide
    field: FeatureField
    true_density_b: float


def child_seed(seed: int, tag: int, index: int) -> int:
    """Derived u64 seed; namespaces (tag) never collide in practice."""
    return int(np.random.SeedSequence((seed, tag, index)).generate_state(1, np.uint64)[0])


def _cut_tiles(slide: Slide, tile: int, stride: int) -> list[Slide]:
    tiles = []
    for y0 in range(0, slide.height - tile + 1, stride):
        for x0 in range(0, slide.width - tile + 1, stride):
            tiles.append(Slide(slide.data[y0 : y0 + tile, x0 : x0 + tile].copy()))
    return tiles


def make_training_set(
    n_tiles: int, tile_size: int, seed: int, params: DomainParams | None = None
) -> tuple[list[Slide], list[Slide]]:
    if n_tiles < 2:
        raise ValueError("need at least 2 tiles per domain")
    params = params or DomainParams()
    source = max(_SOURCE_MIN, 2 * tile_size)
    stride = max(1, tile_size // 2)

    out: list[list[Slide]] = []
    for tag, render in ((_TRAIN_A_TAG, render_domain_a), (_TRAIN_B_TAG, render_domain_b)):
        tiles: list[Slide] = []
        index = 0
        while len(tiles) < n_tiles:
            field = gen_feature_field(child_seed(seed, tag, index), source, source)
            tiles.extend(_cut_tiles(render(field, params), tile_size, stride))
            index += 1
        order = np.random.default_rng((seed, tag, _SHUFFLE_TAG)).permutation(len(tiles))
        out.append([tiles[i] for i in order[:n_tiles]])
    return out[0], out[1]


def make_eval_set(
    m_pairs: int, w: int, h: int, seed: int, params: DomainParams | None = None
) -> list[SynthSlidePair]:
    if m_pairs < 1:
        raise ValueError("need at least one evaluation pair")
    params = params or DomainParams()
    pairs = []
    for i in range(m_pairs):
        field = gen_feature_field(child_seed(seed, _EVAL_TAG, i), w, h)
        pairs.append(
            SynthSlidePair(
                slide_a=render_domain_a(field, params),
                slide_b=render_domain_b(field, params),
                field=field,
                true_density_b=float(fiber_mask(field, params).mean()),
            )
        )
    return pairs


def write_pair_sidecar(pair: SynthSlidePair, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["seed", "true_density_b", "mean_blob_density"])
        writer.writerow(
            [
                pair.field.seed,
                repr(pair.true_density_b),
                repr(float(pair.field.blob_density.mean())),
            ]
        )


def read_pair_sidecar(path) -> dict:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        row = next(reader, None)
    if header != ["seed", "true_density_b", "mean_blob_density"] or row is None:
        raise ValueError(f"not a pair sidecar: {path}")
    return {
        "seed": int(row[0]),
        "true_density_b": float(row[1]),
        "mean_blob_density": float(row[2]),
    }
