"""Tiny raster writers for debug output (portable bitmap/graymap).

Grids are indexed [i, j] with i along x and j along y; rasters are written
row-major top-to-bottom, so node (i, j) lands at column i, row (n - j) —
the image is oriented like a plot, y up.
"""

from __future__ import annotations

import numpy as np


def _image_rows(a: np.ndarray) -> np.ndarray:
    """Reorient an [i, j]-indexed field into image rows (top row = max y)."""
    return a.T[::-1]


def write_pbm(mask: np.ndarray, dest) -> None:
    """Binary PBM (P4), 1 = set pixel.  Rows are padded to whole bytes."""
    img = _image_rows(np.asarray(mask).astype(bool))
    height, width = img.shape
    with open(dest, "wb") as fh:
        fh.write(f"P4\n{width} {height}\n".encode())
        packed = np.packbits(img, axis=1)  # pads each row to a byte boundary
        fh.write(packed.tobytes())


def write_pgm(values: np.ndarray, dest, vmin: float | None = None,
              vmax: float | None = None) -> None:
    """Binary PGM (P5), 8-bit, linearly scaled from [vmin, vmax]."""
    a = np.asarray(values, dtype=float)
    lo = float(np.min(a)) if vmin is None else vmin
    hi = float(np.max(a)) if vmax is None else vmax
    span = hi - lo
    if span <= 0:
        span = 1.0
    img = _image_rows(np.clip((a - lo) / span, 0.0, 1.0))
    data = np.round(img * 255).astype(np.uint8)
    height, width = data.shape
    with open(dest, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode())
        fh.write(data.tobytes())
