"""Plain Lloyd k-means with k-means++ seeding, used as the unsupervised baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset

MAX_ITER = 300


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray
    k: int
    assignments: np.ndarray
    feature_dims: int
    # total within-cluster squared distance after seeding and each Lloyd step
    distortion_history: tuple[float, ...] = field(default=(), compare=False)
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def distortion(self) -> float:
        return self.distortion_history[-1]


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1)


def _seed(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(X, X[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a centre already; take an unused one
            unused = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(unused))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dist(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def kmeans_cluster(
    data: Dataset, k: int, feature_dims: int = 4, seed: int = 0, normalize: bool = False
) -> KMeansModel:
    """Cluster feature rows into ``k`` groups.

    ``feature_dims=3`` drops the peak count. With ``normalize`` the features
    are z-scored first (constant features only centred); centroids are
    reported in the original feature units.
    """
    if feature_dims not in (3, 4):
        raise ValueError("feature_dims must be 3 or 4")
    if not 1 <= k <= len(data):
        raise ValueError(f"k must be in [1, {len(data)}]")
    X = data.X[:, :feature_dims]
    center = X.mean(axis=0) if normalize else np.zeros(feature_dims)
    scale = X.std(axis=0) if normalize else np.ones(feature_dims)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - center) / scale

    rng = np.random.default_rng(seed)
    C = _seed(Z, k, rng)
    assign = _sq_dist(Z, C).argmin(axis=1)
    history = [float(((Z - C[assign]) ** 2).sum())]
    for _ in range(MAX_ITER):
        for j in range(k):
            members = assign == j
            if members.any():
                C[j] = Z[members].mean(axis=0)
        new = _sq_dist(Z, C).argmin(axis=1)
        history.append(float(((Z - C[new]) ** 2).sum()))
        if np.array_equal(new, assign):
            break
        assign = new
    return KMeansModel(C * scale + center, k, assign, feature_dims, tuple(history), center, scale)


def purity(assignments: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose label is the majority label of their cluster."""
    total = 0
    for c in np.unique(assignments):
        _, counts = np.unique(labels[assignments == c], return_counts=True)
        total += counts.max()
    return total / len(labels)
