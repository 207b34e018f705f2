"""Cross-validated parameter search and held-out evaluation."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .dataset import CLASSES, Dataset
from .svm import DEFAULT_TOL, SvmModel, train_svm

DEFAULT_C_GRID = tuple(2.0**p for p in range(-1, 8))
DEFAULT_GAMMA_GRID = tuple(2.0**p for p in range(-10, 2))
DEFAULT_FOLDS = 10


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: np.ndarray  # rows: true count, columns: predicted count
    per_class_recall: tuple[float, ...]
    classes: tuple[int, ...] = CLASSES

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


@dataclass(frozen=True)
class CVResult:
    C: float
    gamma: float
    fold_accuracies: tuple[float, ...]
    # mean fold accuracy for every (C, gamma) on the grid
    scores: dict

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))


def stratified_folds(y: np.ndarray, folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per row; each class is shuffled then dealt round-robin."""
    rng = np.random.default_rng(seed)
    out = np.empty(len(y), dtype=np.int64)
    offset = 0
    for lab in np.unique(y):
        idx = np.flatnonzero(y == lab)
        idx = idx[rng.permutation(len(idx))]
        out[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return out


def _fold_scores(data, fold_of, folds, C, gamma, tol):
    accs = []
    for f in range(folds):
        train = data.subset(np.flatnonzero(fold_of != f))
        val = data.subset(np.flatnonzero(fold_of == f))
        if len(np.unique(train.y)) < 2:
            accs.append(float(np.mean(val.y == train.y[0])))
            continue
        model = train_svm(train, C, gamma, tol)
        accs.append(float(np.mean(model.predict_many(val.X) == val.y)))
    return tuple(accs)


def cross_validate(
    data: Dataset,
    C_grid=DEFAULT_C_GRID,
    gamma_grid=DEFAULT_GAMMA_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
) -> CVResult:
    """Grid search over (C, gamma) by stratified k-fold accuracy.

    Ties on mean accuracy go to the smaller C, then the smaller gamma.
    Results do not depend on ``threads``.
    """
    C_grid, gamma_grid = list(C_grid), list(gamma_grid)
    if not C_grid or not gamma_grid:
        raise InputError("parameter grid is empty")
    if not 2 <= folds <= len(data):
        raise InputError(f"folds must be in [2, {len(data)}]")
    fold_of = stratified_folds(data.y, folds, seed)
    grid = sorted(itertools.product(C_grid, gamma_grid))

    def run(point):
        return _fold_scores(data, fold_of, folds, point[0], point[1], tol)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, grid))
    else:
        results = [run(p) for p in grid]
    scores = {p: float(np.mean(r)) for p, r in zip(grid, results)}
    best = min(range(len(grid)), key=lambda i: (-scores[grid[i]], grid[i]))
    C, gamma = grid[best]
    return CVResult(float(C), float(gamma), results[best], scores)


def evaluate(model: SvmModel, test: Dataset, classes=CLASSES) -> EvalReport:
    if len(test) == 0:
        raise InputError("test set is empty")
    pred = model.predict_many(test.X)
    index = {c: i for i, c in enumerate(classes)}
    conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(test.y, pred):
        conf[index[int(t)], index[int(p)]] += 1
    rows = conf.sum(axis=1)
    recall = tuple(
        float(conf[i, i] / rows[i]) if rows[i] else float("nan") for i in range(len(classes))
    )
    conf.setflags(write=False)
    return EvalReport(float(np.trace(conf) / conf.sum()), conf, recall, tuple(classes))


def format_report(report: EvalReport, structured: bool = False) -> str:
    """Human-readable report, or key=value lines plus a matrix block."""
    recall = ["n/a" if np.isnan(r) else f"{r:.4f}" for r in report.per_class_recall]
    if structured:
        lines = [
            f"accuracy={report.accuracy!r}",
            f"total={report.total}",
            "classes=" + ",".join(str(c) for c in report.classes),
            "per_class_recall=" + ",".join(recall),
            "[confusion]",
        ]
        lines += [",".join(str(v) for v in row) for row in report.confusion]
        return "\n".join(lines) + "\n"
    width = max(5, len(str(report.confusion.max())) + 1)
    head = "true\\pred" + "".join(f"{c:>{width}}" for c in report.classes)
    lines = [f"accuracy: {report.accuracy:.4f} ({np.trace(report.confusion)}/{report.total})", head]
    for c, row in zip(report.classes, report.confusion):
        lines.append(f"{c:>9}" + "".join(f"{v:>{width}}" for v in row))
    lines.append("recall:   " + "  ".join(f"{c}={r}" for c, r in zip(report.classes, recall)))
    return "\n".join(lines) + "\n"
