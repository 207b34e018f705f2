from collections import deque

import numpy as np
import pytest

from thermaltrack.frames import ForegroundFrame

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def flood_fill_partition(mask, connectivity=8):
    """Set of frozensets of cells, one per connected component (BFS)."""
    mask = np.asarray(mask, dtype=bool)
    rows, cols = mask.shape
    if connectivity == 8:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    seen = np.zeros_like(mask)
    parts = set()
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c] or seen[r, c]:
                continue
            comp = []
            q = deque([(r, c)])
            seen[r, c] = True
            while q:
                cr, cc = q.popleft()
                comp.append((cr, cc))
                for dr, dc in steps:
                    nr, nc = cr + dr, cc + dc
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        q.append((nr, nc))
            parts.add(frozenset(comp))
    return parts


def label_partition(labels):
    labels = np.asarray(labels)
    return {
        frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(labels == k))))
        for k in range(1, int(labels.max()) + 1)
    }


def brute_ncc(a, b, max_lag):
    """Double-loop normalized cross-correlation; returns {lag: value}."""
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    a0 = [v - ma for v in a]
    b0 = [v - mb for v in b]
    ea = sum(v * v for v in a0)
    eb = sum(v * v for v in b0)
    out = {}
    for k in range(-max_lag, max_lag + 1):
        s = 0.0
        for t in range(n):
            if 0 <= t + k < n:
                s += a0[t] * b0[t + k]
        out[k] = s / (ea * eb) ** 0.5 if ea > 0 and eb > 0 else 0.0
    return out


def qp_dual_objective(K, y, C):
    """Reference dual optimum from a general-purpose QP solver (cvxopt)."""
    from cvxopt import matrix, solvers

    n = len(y)
    y = np.asarray(y, dtype=np.float64)
    Q = np.outer(y, y) * K
    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-12
    solvers.options["reltol"] = 1e-12
    solvers.options["feastol"] = 1e-12
    sol = solvers.qp(
        matrix(Q + 1e-12 * np.eye(n)),
        matrix(-np.ones(n)),
        matrix(np.vstack([-np.eye(n), np.eye(n)])),
        matrix(np.concatenate([np.zeros(n), np.full(n, float(C))])),
        matrix(y[None, :]),
        matrix(0.0),
    )
    a = np.clip(np.array(sol["x"]).ravel(), 0.0, C)
    return float(a.sum() - 0.5 * a @ Q @ a)


def kkt_violation(alpha, bias, K, y, C):
    """Largest KKT violation of a dual solution, measured on y*f(x) - 1."""
    m = y * (K @ (alpha * y) + bias) - 1.0
    lower = alpha <= 0
    upper = alpha >= C
    free = ~lower & ~upper
    worst = 0.0
    if lower.any():
        worst = max(worst, float(np.max(-m[lower])))
    if upper.any():
        worst = max(worst, float(np.max(m[upper])))
    if free.any():
        worst = max(worst, float(np.max(np.abs(m[free]))))
    return worst


def fg_from_mask(mask, value=10.0, threshold=5.0):
    mask = np.asarray(mask, dtype=bool)
    return ForegroundFrame.from_values(np.where(mask, value, 0.0), threshold)


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
