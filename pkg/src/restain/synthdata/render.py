"""Procedural renderers for the two stain domains.

Domain A scatters dark elliptical nuclei (rate proportional to the
density field) and small warm marker dots over a pale lavender
background. Domain B draws brown epithelial patches where the density
field exceeds a low threshold and purple fiber stripes, oriented by
the orientation field, where it exceeds a higher one. Both add seeded
integer speckle noise. Every pixel is computed in integer arithmetic,
so renders are byte-identical across platforms.

The fiber mask is exposed separately: its pixel fraction is the
ground-truth feature amount a translator should reproduce, and the
stripe colors stay within the quantification tolerance even after
speckle, so color-threshold density recovers it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tiling.slide import Slide
from .field import FeatureField, _cosine_accum, _minmax
from .trig import COS_I, SIN_I, TURN

_RENDER_A_TAG = 0x52454E41
_RENDER_B_TAG = 0x52454E42
_HIDDEN_TAG = 0x48494446

_STRIPE_WIDTH = 3
_STRIPE_PERIOD = 8


@dataclass(frozen=True)
class DomainParams:
    a_background: tuple[int, int, int] = (235, 230, 240)
    a_nucleus: tuple[int, int, int] = (80, 40, 130)
    a_marker: tuple[int, int, int] = (160, 80, 40)
    nucleus_radius: tuple[int, int] = (3, 6)
    b_background: tuple[int, int, int] = (250, 250, 205)
    b_fiber: tuple[int, int, int] = (128, 0, 128)
    b_epithelium: tuple[int, int, int] = (150, 90, 30)
    theta_fiber: float = 0.5
    theta_epi: float = 0.35
    noise_amplitude: int = 6
    # when on, an extra smooth field invisible to domain A suppresses
    # fibers in B, making B only partially predictable from A
    hidden_field: bool = False
    theta_hidden: float = 0.65

    def palette_a(self) -> tuple[tuple[int, int, int], ...]:
        return (self.a_background, self.a_nucleus, self.a_marker)

    def palette_b(self) -> tuple[tuple[int, int, int], ...]:
        return (self.b_background, self.b_fiber, self.b_epithelium)


def validate_params(params: DomainParams) -> None:
    """Colors must be u8 triples, well separated within each domain,
    and no color may appear in both domains."""
    for color in params.palette_a() + params.palette_b():
        if len(color) != 3 or any(not (0 <= v <= 255) for v in color):
            raise ValueError(f"invalid color {color}")
    for palette in (params.palette_a(), params.palette_b()):
        for i in range(len(palette)):
            for j in range(i + 1, len(palette)):
                d = _color_dist(palette[i], palette[j])
                if d < 40.0:
                    raise ValueError(
                        f"colors {palette[i]} and {palette[j]} are only "
                        f"{d:.1f} apart (need 40)"
                    )
    if set(params.palette_a()) & set(params.palette_b()):
        raise ValueError("a color appears in both domain palettes")
    if not 0.0 < params.theta_epi < params.theta_fiber < 1.0:
        raise ValueError("need 0 < theta_epi < theta_fiber < 1")
    if not 0.0 < params.theta_hidden < 1.0:
        raise ValueError("need 0 < theta_hidden < 1")
    if params.noise_amplitude < 0:
        raise ValueError("noise amplitude must be non-negative")


def _color_dist(a, b) -> float:
    return float(np.sqrt(sum((x - y) ** 2 for x, y in zip(a, b))))


def _draw_scatter(rng: np.random.Generator, field: FeatureField, params: DomainParams):
    """All random draws for domain A, in one fixed order."""
    h, w = field.height, field.width
    rmin, rmax = params.nucleus_radius
    n_nuc = (w * h) // 128
    n_mark = (w * h) // 256
    draws = {
        "nx": rng.integers(0, w, n_nuc),
        "ny": rng.integers(0, h, n_nuc),
        "nacc": rng.random(n_nuc),
        "nrx": rng.integers(rmin, rmax + 1, n_nuc),
        "nry": rng.integers(rmin, rmax + 1, n_nuc),
        "njit": rng.integers(-8, 9, (n_nuc, 3)),
        "mx": rng.integers(0, w, n_mark),
        "my": rng.integers(0, h, n_mark),
        "macc": rng.random(n_mark),
        "mr": rng.integers(1, 3, n_mark),
        "mjit": rng.integers(-8, 9, (n_mark, 3)),
    }
    draws["nkeep"] = draws["nacc"] < field.blob_density[draws["ny"], draws["nx"]]
    draws["mkeep"] = draws["macc"] < 0.5 * field.blob_density[draws["my"], draws["mx"]]
    return draws


def nucleus_centers(field: FeatureField, params: DomainParams | None = None) -> np.ndarray:
    """Accepted nucleus centers as an (n, 2) array of (x, y).

    Rejection sampling against the density field makes the expected
    count exactly linear in the field values."""
    params = params or DomainParams()
    rng = np.random.default_rng((field.seed, _RENDER_A_TAG))
    draws = _draw_scatter(rng, field, params)
    keep = draws["nkeep"]
    return np.stack([draws["nx"][keep], draws["ny"][keep]], axis=1)


def _paint_ellipse(img: np.ndarray, cx: int, cy: int, rx: int, ry: int, color: np.ndarray):
    h, w = img.shape[:2]
    x0, x1 = max(cx - rx, 0), min(cx + rx + 1, w)
    y0, y1 = max(cy - ry, 0), min(cy + ry + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    dx = np.arange(x0, x1, dtype=np.int64) - cx
    dy = np.arange(y0, y1, dtype=np.int64) - cy
    mask = (dx[None, :] ** 2) * ry * ry + (dy[:, None] ** 2) * rx * rx <= rx * rx * ry * ry
    img[y0:y1, x0:x1][mask] = color


def _speckle(img: np.ndarray, rng: np.random.Generator, amp: int) -> np.ndarray:
    noise = rng.integers(-amp, amp + 1, img.shape, dtype=np.int64)
    return np.clip(img + noise, 0, 255).astype(np.uint8)


def render_domain_a(field: FeatureField, params: DomainParams | None = None) -> Slide:
    params = params or DomainParams()
    validate_params(params)
    rng = np.random.default_rng((field.seed, _RENDER_A_TAG))
    draws = _draw_scatter(rng, field, params)

    img = np.full((field.height, field.width, 3), params.a_background, dtype=np.int64)
    base_n = np.array(params.a_nucleus, dtype=np.int64)
    for i in np.flatnonzero(draws["nkeep"]):
        color = np.clip(base_n + draws["njit"][i], 0, 255)
        _paint_ellipse(
            img, int(draws["nx"][i]), int(draws["ny"][i]),
            int(draws["nrx"][i]), int(draws["nry"][i]), color,
        )
    base_m = np.array(params.a_marker, dtype=np.int64)
    for i in np.flatnonzero(draws["mkeep"]):
        color = np.clip(base_m + draws["mjit"][i], 0, 255)
        r = int(draws["mr"][i])
        _paint_ellipse(img, int(draws["mx"][i]), int(draws["my"][i]), r, r, color)

    return Slide(_speckle(img, rng, params.noise_amplitude))


def hidden_mask(field: FeatureField, params: DomainParams | None = None) -> np.ndarray:
    """Region where the optional B-only field suppresses fibers.

    All false when the flag is off. When on, the region comes from a
    separate seeded stream, so nothing in domain A reveals it."""
    params = params or DomainParams()
    if not params.hidden_field:
        return np.zeros((field.height, field.width), dtype=bool)
    rng = np.random.default_rng((field.seed, _HIDDEN_TAG))
    raw = _cosine_accum(rng, field.width, field.height, 6)
    return _minmax(raw, 0.0, 1.0) > params.theta_hidden


def fiber_mask(field: FeatureField, params: DomainParams | None = None) -> np.ndarray:
    """Boolean mask of purple fiber pixels; its mean is the ground-truth
    feature density of domain B."""
    params = params or DomainParams()
    # orientation in [0, pi) maps to half the table
    k = np.rint(field.fiber_orientation * (TURN / 2 / np.pi)).astype(np.int64) & (TURN - 1)
    xs = np.arange(field.width, dtype=np.int64)
    ys = np.arange(field.height, dtype=np.int64)
    t = xs[None, :] * COS_I[k] + ys[:, None] * SIN_I[k]
    stripes = ((t >> 12) % _STRIPE_PERIOD) < _STRIPE_WIDTH
    mask = (field.blob_density > params.theta_fiber) & stripes
    if params.hidden_field:
        mask &= ~hidden_mask(field, params)
    return mask


def render_domain_b(field: FeatureField, params: DomainParams | None = None) -> Slide:
    params = params or DomainParams()
    validate_params(params)
    rng = np.random.default_rng((field.seed, _RENDER_B_TAG))

    img = np.full((field.height, field.width, 3), params.b_background, dtype=np.int64)
    img[field.blob_density > params.theta_epi] = params.b_epithelium
    img[fiber_mask(field, params)] = params.b_fiber
    return Slide(_speckle(img, rng, params.noise_amplitude))


def true_density_b(field: FeatureField, params: DomainParams | None = None) -> float:
    return float(fiber_mask(field, params).mean())
