"""Unpaired stain translation with seam-free tile-wise inference.

Subpackages:
    nncore    -- tensor kernels, manual reverse-mode autodiff, gradient checking
    cyclegan  -- model construction, losses, ADAM, synchronous training, checkpoints
    tiling    -- slide model, tile grids, inference strategies, seam index
    synthdata -- procedural two-domain synthetic stain data
    quantify  -- density-based validation protocol and reports
"""

__version__ = "0.1.0"
