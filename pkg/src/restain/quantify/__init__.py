from .density import (
    AggregateStats,
    StainRef,
    abs_rel_diff,
    aggregate,
    density,
    quartiles,
    stain_mask,
)
from .report import (
    DensityReport,
    StainResult,
    compute_report,
    emit_boxplot_svg,
    emit_csv,
    read_density_csv,
)

__all__ = [
    "StainRef",
    "AggregateStats",
    "stain_mask",
    "density",
    "abs_rel_diff",
    "aggregate",
    "quartiles",
    "DensityReport",
    "StainResult",
    "compute_report",
    "emit_csv",
    "read_density_csv",
    "emit_boxplot_svg",
]
