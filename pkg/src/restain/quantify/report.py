"""Per-pair density reports, CSV emission, and boxplot rendering.

The boxplot is written as a self-contained SVG: one box per stain,
whiskers at the most extreme values within 1.5 IQR of the quartile
box, points beyond the fences drawn as circles. The convention is
stated in the file's desc element so the figure is self-describing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from ..errors import DataError
from ..tiling.slide import Slide
from .density import StainRef, abs_rel_diff, density, quartiles, stain_mask

_CSV_HEADER = ["pair_id", "stain", "density_real", "density_virtual", "abs_rel_diff"]


@dataclass(frozen=True)
class StainResult:
    stain: str
    density_real: float
    density_virtual: float
    abs_rel_diff: float


@dataclass(frozen=True)
class DensityReport:
    pair_id: str
    results: tuple[StainResult, ...]


def compute_report(
    pair_id: str, real: Slide, virtual: Slide, refs: list[StainRef]
) -> DensityReport:
    """Densities and relative differences for one slide pair."""
    if real.data.shape != virtual.data.shape:
        raise ValueError(
            f"pair {pair_id}: shape mismatch {real.data.shape} vs {virtual.data.shape}"
        )
    results = []
    for ref in refs:
        d_real = density(stain_mask(real, ref))
        d_virt = density(stain_mask(virtual, ref))
        results.append(
            StainResult(ref.name, d_real, d_virt, abs_rel_diff(d_real, d_virt))
        )
    return DensityReport(pair_id=pair_id, results=tuple(results))


def emit_csv(reports, path) -> None:
    """One row per (pair, stain); floats via repr for exact round trips."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_CSV_HEADER)
        for rep in reports:
            for r in rep.results:
                writer.writerow(
                    [
                        rep.pair_id,
                        r.stain,
                        repr(r.density_real),
                        repr(r.density_virtual),
                        repr(r.abs_rel_diff),
                    ]
                )


def read_density_csv(path) -> list[DensityReport]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != _CSV_HEADER:
        raise DataError(f"not a density report: {path}")
    by_pair: dict[str, list[StainResult]] = {}
    for row in rows[1:]:
        if len(row) != 5:
            raise DataError(f"malformed report row {row} in {path}")
        try:
            res = StainResult(row[1], float(row[2]), float(row[3]), float(row[4]))
        except ValueError as e:
            raise DataError(f"malformed report row {row} in {path}: {e}") from None
        by_pair.setdefault(row[0], []).append(res)
    return [DensityReport(pid, tuple(rs)) for pid, rs in by_pair.items()]


def _box_geometry(values: list[float]) -> dict:
    q1, med, q3 = quartiles(values)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = [v for v in values if lo_fence <= v <= hi_fence]
    return {
        "q1": q1,
        "med": med,
        "q3": q3,
        "lo": min(inside),
        "hi": max(inside),
        "outliers": [v for v in values if v < lo_fence or v > hi_fence],
    }


def emit_boxplot_svg(reports, path, title: str = "absolute relative difference") -> None:
    """One box per stain across all reports, finite values only."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    per_stain: dict[str, list[float]] = {}
    flagged: dict[str, int] = {}
    for rep in reports:
        for r in rep.results:
            if math.isfinite(r.abs_rel_diff):
                per_stain.setdefault(r.stain, []).append(r.abs_rel_diff)
            else:
                flagged[r.stain] = flagged.get(r.stain, 0) + 1
    if not per_stain:
        raise ValueError("no finite differences to plot")

    boxes = {name: _box_geometry(vals) for name, vals in sorted(per_stain.items())}
    vmax = max(
        max((g["hi"], *g["outliers"]), default=0.0) for g in boxes.values()
    )
    vmax = vmax * 1.05 if vmax > 0 else 1.0

    width_per = 120
    margin_l, margin_r, margin_t, margin_b = 64, 20, 36, 48
    plot_h = 280
    width = margin_l + width_per * len(boxes) + margin_r
    height = margin_t + plot_h + margin_b

    def ypix(v: float) -> float:
        return margin_t + plot_h * (1.0 - v / vmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        "<desc>Boxes span Q1 to Q3 with the median marked; quartiles use "
        "linear interpolation between order statistics; whiskers reach the "
        "most extreme values within 1.5 IQR of the box; values beyond the "
        "fences are drawn as circles. Variance aggregation elsewhere uses "
        "the sample (n-1) convention.</desc>",
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
    ]
    for i in range(5):
        v = vmax * i / 4
        y = ypix(v)
        parts.append(
            f'<line x1="{margin_l - 4}" y1="{y:.1f}" x2="{margin_l}" '
            f'y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{margin_l - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{v:.3g}</text>'
        )

    half = 28
    for idx, (name, g) in enumerate(boxes.items()):
        cx = margin_l + width_per * (idx + 0.5)
        parts.append(f'<g id="box-{name}">')
        for a, b in ((g["lo"], g["q1"]), (g["q3"], g["hi"])):
            parts.append(
                f'<line x1="{cx:.1f}" y1="{ypix(a):.1f}" x2="{cx:.1f}" '
                f'y2="{ypix(b):.1f}" stroke="black"/>'
            )
        for v in (g["lo"], g["hi"]):
            parts.append(
                f'<line x1="{cx - half / 2:.1f}" y1="{ypix(v):.1f}" '
                f'x2="{cx + half / 2:.1f}" y2="{ypix(v):.1f}" stroke="black"/>'
            )
        box_top, box_bot = ypix(g["q3"]), ypix(g["q1"])
        parts.append(
            f'<rect x="{cx - half:.1f}" y="{box_top:.1f}" width="{2 * half}" '
            f'height="{max(box_bot - box_top, 0.5):.1f}" fill="#d8c6e8" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{cx - half:.1f}" y1="{ypix(g["med"]):.1f}" '
            f'x2="{cx + half:.1f}" y2="{ypix(g["med"]):.1f}" '
            f'stroke="black" stroke-width="2"/>'
        )
        for v in g["outliers"]:
            parts.append(
                f'<circle cx="{cx:.1f}" cy="{ypix(v):.1f}" r="3" '
                f'fill="none" stroke="black"/>'
            )
        label = name if not flagged.get(name) else f"{name} ({flagged[name]} flagged)"
        parts.append(
            f'<text x="{cx:.1f}" y="{margin_t + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{margin_t + plot_h + 34}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">n={len(per_stain[name])}</text>'
        )
        parts.append("</g>")
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")
