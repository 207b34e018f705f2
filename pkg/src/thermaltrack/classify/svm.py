"""Soft-margin RBF support vector machine, one-vs-one over people counts.

Each binary sub-model solves the dual

    max_a  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0

by sequential two-coordinate ascent: every step picks the pair that violates
the KKT conditions the most (second-order working set selection) and solves
the two-variable subproblem analytically.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DegenerateDataError, FormatError, InputError, ParseError
from .dataset import Dataset

log = logging.getLogger(__name__)

MODEL_HEADER = "thermal-track-svm v1"
DEFAULT_TOL = 1e-3
TAU = 1e-12


@njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of the (minimised) dual objective
    it = 0
    while it < max_iter:
        # i: maximal violator among indices allowed to move "up"
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0:
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    diff = gmax + G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        if -(diff * diff) / quad <= obj_min:
                            obj_min = -(diff * diff) / quad
                            j = t
            else:
                if alpha[t] < C:
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    diff = gmax - G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        if -(diff * diff) / quad <= obj_min:
                            obj_min = -(diff * diff) / quad
                            j = t
        if gmax + gmax2 < tol or i < 0 or j < 0:
            break
        it += 1

        old_i = alpha[i]
        old_j = alpha[j]
        qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[i, t] * di + y[j] * K[j, t] * dj)
    return alpha, G, it


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-gamma * d2)


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    """Dual objective value (to be maximised)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    bias: float
    n_iter: int


def _bias(alpha: np.ndarray, G: np.ndarray, y: np.ndarray, C: float) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        at_upper = alpha >= C
        at_lower = ~at_upper
        # bounds on rho implied by the bound-constrained points
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = 0.5 * (ub + lb)
        else:
            rho = ub if np.isfinite(ub) else lb
    return -float(rho)


def solve_dual(
    K: np.ndarray, y: np.ndarray, C: float, tol: float = DEFAULT_TOL, max_iter: int = 10_000_000
) -> DualSolution:
    """Solve the binary dual for labels ``y`` in {-1, +1}."""
    y = np.asarray(y, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    alpha, G, it = _smo(K, y, float(C), float(tol), int(max_iter))
    if it >= max_iter:
        log.warning("dual solver hit max_iter=%d before reaching tol=%g", max_iter, tol)
    return DualSolution(alpha, _bias(alpha, G, y, C), int(it))


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Normalizer":
        return cls(X.mean(axis=0), X.std(axis=0))

    @property
    def scale(self) -> np.ndarray:
        # constant features are centred but not scaled
        return np.where(self.std > 0, self.std, 1.0)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


@dataclass(frozen=True)
class BinarySvm:
    positive: int
    negative: int
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    C: float
    gamma: float

    def decision(self, Xn: np.ndarray) -> np.ndarray:
        """Signed margin on normalized rows; positive favours ``positive``."""
        K = rbf_kernel(np.atleast_2d(Xn), self.support_vectors, self.gamma)
        return K @ self.dual_coef + self.bias


def train_binary(
    Xn: np.ndarray, y_pm: np.ndarray, C: float, gamma: float, tol: float = DEFAULT_TOL,
    K: np.ndarray | None = None, classes: tuple[int, int] = (1, -1),
) -> BinarySvm:
    if K is None:
        K = rbf_kernel(Xn, Xn, gamma)
    sol = solve_dual(K, y_pm, C, tol)
    sv = sol.alpha > 0
    return BinarySvm(
        classes[0], classes[1], Xn[sv].copy(), (sol.alpha * y_pm)[sv], sol.bias, C, gamma
    )


@dataclass(frozen=True)
class SvmModel:
    C: float
    gamma: float
    classes: tuple[int, ...]
    normalizer: Normalizer
    pairs: tuple[BinarySvm, ...]

    def votes(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Per-class vote counts and summed winning margins, both (n, n_classes)."""
        Xn = self.normalizer.transform(np.atleast_2d(X))
        idx = {c: k for k, c in enumerate(self.classes)}
        votes = np.zeros((len(Xn), len(self.classes)), dtype=np.int64)
        margin = np.zeros((len(Xn), len(self.classes)))
        for sub in self.pairs:
            f = sub.decision(Xn)
            pos = f >= 0
            for mask, cls in ((pos, sub.positive), (~pos, sub.negative)):
                votes[mask, idx[cls]] += 1
                margin[mask, idx[cls]] += np.abs(f[mask])
        return votes, margin

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not np.all(np.isfinite(X)):
            raise InputError("non-finite feature value")
        votes, margin = self.votes(X)
        out = np.empty(len(X), dtype=np.int64)
        for n in range(len(X)):
            # most votes, then largest summed margin, then smallest label
            k = max(range(len(self.classes)), key=lambda c: (votes[n, c], margin[n, c], -c))
            out[n] = self.classes[k]
        return out


def _as_row(x) -> np.ndarray:
    if hasattr(x, "as_array"):
        x = x.as_array()
    return np.asarray(x, dtype=np.float64)


def predict(model: SvmModel, x) -> int:
    """Predicted people count for one feature vector."""
    return int(model.predict_many(_as_row(x)[None, :])[0])


def train_svm(data: Dataset, C: float, gamma: float, tol: float = DEFAULT_TOL) -> SvmModel:
    """Train one binary RBF-SVM per class pair on z-scored features."""
    if C <= 0 or gamma <= 0:
        raise InputError("C and gamma must be positive")
    if len(data) == 0:
        raise DegenerateDataError("training data is empty")
    if not np.all(np.isfinite(data.X)):
        raise InputError("non-finite feature value")
    classes = tuple(int(c) for c in np.unique(data.y))
    if len(classes) < 2:
        raise DegenerateDataError(f"need at least 2 classes, got {classes}")
    norm = Normalizer.fit(data.X)
    Xn = norm.transform(data.X)
    K_all = rbf_kernel(Xn, Xn, gamma)
    pairs = []
    for a, b in itertools.combinations(classes, 2):
        idx = np.flatnonzero((data.y == a) | (data.y == b))
        y_pm = np.where(data.y[idx] == a, 1.0, -1.0)
        K = K_all[np.ix_(idx, idx)]
        pairs.append(train_binary(Xn[idx], y_pm, C, gamma, tol, K=K, classes=(a, b)))
    return SvmModel(float(C), float(gamma), classes, norm, tuple(pairs))


# -- model file -------------------------------------------------------------


def _f(v) -> str:
    return repr(float(v))


def format_model(model: SvmModel) -> str:
    lines = [
        MODEL_HEADER,
        f"C {_f(model.C)}",
        f"gamma {_f(model.gamma)}",
        "classes " + " ".join(str(c) for c in model.classes),
        "normalization",
        "mean " + " ".join(_f(v) for v in model.normalizer.mean),
        "std " + " ".join(_f(v) for v in model.normalizer.std),
    ]
    for sub in model.pairs:
        lines.append(
            f"pair {sub.positive} {sub.negative} C {_f(sub.C)} gamma {_f(sub.gamma)} "
            f"bias {_f(sub.bias)} n_sv {len(sub.dual_coef)}"
        )
        for sv, coef in zip(sub.support_vectors, sub.dual_coef):
            label = sub.positive if coef > 0 else sub.negative
            lines.append(f"{label} {_f(coef)} " + " ".join(_f(v) for v in sv))
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> SvmModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        found = lines[0].strip() if lines else "<empty>"
        raise FormatError(f"expected model header {MODEL_HEADER!r}, found {found!r}")
    pos = 1

    def take(key: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file, expected {key!r}", pos + 1)
        parts = lines[pos].split()
        if not parts or parts[0] != key:
            raise ParseError(f"expected {key!r}", pos + 1)
        pos += 1
        return parts[1:]

    try:
        C = float(take("C")[0])
        gamma = float(take("gamma")[0])
        classes = tuple(int(c) for c in take("classes"))
        take("normalization")
        mean = np.array([float(v) for v in take("mean")])
        std = np.array([float(v) for v in take("std")])
        pairs = []
        while pos < len(lines) and lines[pos].startswith("pair"):
            head = take("pair")
            fields = dict(zip(head[2::2], head[3::2]))
            n_sv = int(fields["n_sv"])
            rows = []
            for _ in range(n_sv):
                if pos >= len(lines):
                    raise ParseError("truncated support vector block", pos + 1)
                rows.append([float(v) for v in lines[pos].split()[1:]])
                pos += 1
            rows = np.array(rows).reshape(n_sv, -1)
            pairs.append(
                BinarySvm(
                    int(head[0]), int(head[1]), rows[:, 1:].copy(), rows[:, 0].copy(),
                    float(fields["bias"]), float(fields["C"]), float(fields["gamma"]),
                )
            )
        take("end")
    except (ValueError, KeyError, IndexError) as exc:
        raise ParseError(f"malformed model file: {exc}", pos + 1) from None
    return SvmModel(C, gamma, classes, Normalizer(mean, std), tuple(pairs))


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_model(model))


def load_model(path) -> SvmModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
