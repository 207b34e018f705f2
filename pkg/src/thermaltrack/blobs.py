"""Connected components, local peaks and the per-scene feature vector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import ForegroundFrame

PEAK_RATIO = 1.2

# previously-scanned neighbours in a raster scan
_PRIOR_8 = ((0, -1), (-1, -1), (-1, 0), (-1, 1))
_PRIOR_4 = ((0, -1), (-1, 0))


@dataclass(frozen=True)
class LabelGrid:
    labels: np.ndarray
    n_components: int


@dataclass(frozen=True)
class Blob:
    label: int
    size: int
    cells: tuple[tuple[int, int], ...]
    peak_value: float


@dataclass(frozen=True)
class FeatureVector:
    active_pixels: int
    n_components: int
    max_component_size: int
    n_peaks: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.active_pixels, self.n_components, self.max_component_size, self.n_peaks],
            dtype=np.float64,
        )


class _UnionFind:
    def __init__(self):
        self.parent = [0]

    def make(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra < rb:
            self.parent[rb] = ra
        elif rb < ra:
            self.parent[ra] = rb


def label_mask(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Two-pass labeling of a boolean mask; labels are dense from 1."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    prior = _PRIOR_8 if connectivity == 8 else _PRIOR_4
    mask = np.asarray(mask, dtype=bool)
    rows, cols = mask.shape
    provisional = np.zeros((rows, cols), dtype=np.int64)
    uf = _UnionFind()

    for r in range(rows):
        for c in range(cols):
            if not mask[r, c]:
                continue
            seen = []
            for dr, dc in prior:
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols and provisional[rr, cc]:
                    seen.append(provisional[rr, cc])
            if not seen:
                provisional[r, c] = uf.make()
            else:
                lab = min(seen)
                provisional[r, c] = lab
                for other in seen:
                    uf.union(lab, other)

    labels = np.zeros_like(provisional)
    dense: dict[int, int] = {}
    for r in range(rows):
        for c in range(cols):
            p = provisional[r, c]
            if p:
                root = uf.find(p)
                if root not in dense:
                    dense[root] = len(dense) + 1
                labels[r, c] = dense[root]
    return labels, len(dense)


def label_components(
    fg: ForegroundFrame, connectivity: int = 8
) -> tuple[LabelGrid, list[Blob]]:
    """Label the active cells of ``fg``.

    Blobs come back sorted by size (largest first), ties by label.
    """
    labels, n = label_mask(fg.active, connectivity)
    labels.setflags(write=False)
    blobs = []
    for lab in range(1, n + 1):
        rr, cc = np.nonzero(labels == lab)
        cells = tuple((int(r), int(c)) for r, c in zip(rr, cc))
        peak = float(fg.values[rr, cc].max())
        blobs.append(Blob(lab, len(cells), cells, peak))
    blobs.sort(key=lambda b: (-b.size, b.label))
    return LabelGrid(labels, n), blobs


def peak_mask(fg: ForegroundFrame, ratio: float = PEAK_RATIO) -> np.ndarray:
    """Active cells whose delta exceeds the global max delta divided by ``ratio``."""
    if not fg.active.any():
        return np.zeros_like(fg.active)
    gmax = float(fg.values.max())
    return fg.active & (fg.values > gmax / ratio)


def detect_peaks(
    fg: ForegroundFrame,
    correction_factor: float = 1.0,
    ratio: float = PEAK_RATIO,
    connectivity: int = 8,
) -> int:
    """Count local temperature peaks in a foreground frame.

    Qualified cells sharing a 2x2 window (i.e. 8-adjacent) count as one
    peak, so a tall person lighting two neighbouring cells is counted once.
    The raw count is scaled by ``correction_factor`` and rounded half up.
    """
    if correction_factor <= 0:
        raise ValueError("correction_factor must be positive")
    qualified = peak_mask(fg, ratio)
    if not qualified.any():
        return 0
    _, raw = label_mask(qualified, connectivity)
    return int(math.floor(raw * correction_factor + 0.5))


def extract_features(
    fg: ForegroundFrame, correction_factor: float = 1.0, connectivity: int = 8
) -> FeatureVector:
    grid, blobs = label_components(fg, connectivity)
    return FeatureVector(
        active_pixels=fg.n_active,
        n_components=grid.n_components,
        max_component_size=blobs[0].size if blobs else 0,
        n_peaks=detect_peaks(fg, correction_factor, connectivity=connectivity),
    )
