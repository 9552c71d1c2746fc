from .slide import (
    Slide,
    extract_window,
    read_ppm,
    slide_to_tensor,
    tensor_to_slide,
    write_ppm,
)
from .grid import TileGrid, coverage_mask, make_grid, owner_segments
from .strategies import (
    pool_stats,
    LayerStatsTable,
    collect_running_stats,
    read_stats_csv,
    run_global_stats,
    run_monolithic,
    run_naive,
    run_sliding,
    write_stats_csv,
)
from .seam import seam_index

__all__ = [
    "Slide",
    "slide_to_tensor",
    "tensor_to_slide",
    "read_ppm",
    "write_ppm",
    "extract_window",
    "TileGrid",
    "make_grid",
    "owner_segments",
    "coverage_mask",
    "LayerStatsTable",
    "pool_stats",
    "run_monolithic",
    "run_naive",
    "run_global_stats",
    "run_sliding",
    "collect_running_stats",
    "write_stats_csv",
    "read_stats_csv",
    "seam_index",
]
