"""ASCII and portable-graymap rendering of 8x8 grids."""

from __future__ import annotations

import numpy as np

RAMP = " .:-=+*#%@"
LABEL_GLYPHS = "123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _levels(grid: np.ndarray, n: int, vmin=None, vmax=None) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    lo = grid.min() if vmin is None else vmin
    hi = grid.max() if vmax is None else vmax
    if hi <= lo:
        return np.zeros(grid.shape, dtype=np.int64)
    scaled = (np.clip(grid, lo, hi) - lo) / (hi - lo)
    return np.minimum((scaled * n).astype(np.int64), n - 1)


def ascii_heatmap(grid, vmin=None, vmax=None) -> str:
    """One glyph per cell, darkest for the lowest value in range."""
    lv = _levels(grid, len(RAMP), vmin, vmax)
    return "\n".join("".join(RAMP[v] for v in row) for row in lv) + "\n"


def ascii_labels(labels) -> str:
    labels = np.asarray(labels)
    out = []
    for row in labels:
        out.append("".join("." if v == 0 else LABEL_GLYPHS[(int(v) - 1) % len(LABEL_GLYPHS)] for v in row))
    return "\n".join(out) + "\n"


def pgm(grid, scale: int = 16, vmin=None, vmax=None) -> bytes:
    """Binary PGM (P5), each cell drawn as a ``scale`` x ``scale`` square."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    lv = _levels(grid, 256, vmin, vmax).astype(np.uint8)
    img = np.kron(lv, np.ones((scale, scale), dtype=np.uint8))
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def pgm_labels(labels, scale: int = 16) -> bytes:
    labels = np.asarray(labels)
    top = int(labels.max())
    return pgm(labels, scale, vmin=0, vmax=max(top, 1))
