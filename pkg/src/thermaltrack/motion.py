"""Walking direction and speed from per-pixel cross-correlation delays.

Each cell's background-subtracted time series is correlated against its
neighbours. A person crossing the grid excites adjacent cells one after the
other, so the lag at peak correlation between neighbours encodes direction,
and its magnitude gives speed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .frames import COLS, FIELD_OF_VIEW_M, ROWS, BackgroundModel, SceneSequence

CELL_PITCH_M = FIELD_OF_VIEW_M / COLS
DIRECTIONS = ("left_to_right", "right_to_left", "up_to_down", "down_to_up")
NONE = "none"
OPPOSITE = {
    "left_to_right": "right_to_left",
    "right_to_left": "left_to_right",
    "up_to_down": "down_to_up",
    "down_to_up": "up_to_down",
    NONE: NONE,
}
DEFAULT_CORR_THRESHOLD = 0.5
DEFAULT_DELAY_THRESHOLD = 2
MIN_VOTES = 3
DEFAULT_SMOOTH = 3


@dataclass(frozen=True)
class PixelTimeSeries:
    cell: tuple[int, int]
    samples: np.ndarray
    sample_rate: float = 10.0


@dataclass(frozen=True)
class SeriesGrid:
    """Per-cell time series stored as one ``(8, 8, T)`` array."""

    data: np.ndarray
    sample_rate: float = 10.0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[:2] != (ROWS, COLS):
            raise ValueError("series grid must have shape (8, 8, T)")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def length(self) -> int:
        return self.data.shape[2]

    def __getitem__(self, cell: tuple[int, int]) -> PixelTimeSeries:
        r, c = cell
        return PixelTimeSeries((r, c), self.data[r, c], self.sample_rate)

    def reversed(self) -> "SeriesGrid":
        return SeriesGrid(self.data[:, :, ::-1], self.sample_rate)

    def transposed(self) -> "SeriesGrid":
        return SeriesGrid(self.data.transpose(1, 0, 2), self.sample_rate)


@dataclass(frozen=True)
class CrossCorrResult:
    reference: tuple[int, int]
    peak_correlation: np.ndarray
    delay: np.ndarray
    sentinel: int


@dataclass(frozen=True)
class MotionEstimate:
    direction: str
    mean_adjacent_lag: float | None
    speed: float | None
    confidence: float
    votes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.direction == NONE) != (self.speed is None):
            raise ValueError("speed is reported exactly when a direction is found")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


def _moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centred running mean along axis 0, edges padded by repetition."""
    if window == 1:
        return x
    half = window // 2
    padded = np.concatenate([np.repeat(x[:1], half, 0), x, np.repeat(x[-1:], half, 0)])
    c = np.cumsum(padded, axis=0)
    c = np.concatenate([np.zeros_like(c[:1]), c])
    return (c[window:] - c[:-window]) / window


def pixel_series(
    seq: SceneSequence, bg: BackgroundModel, threshold: float | None = None, smooth: int = 1
) -> SeriesGrid:
    """Background-subtracted delta of every cell over time.

    ``smooth`` (odd, in frames) applies a centred running mean first. With
    ``threshold`` set, samples at or below it are then zeroed so that only
    active readings take part in the correlation. Under heavy background
    noise this is what keeps neighbouring cells from correlating on noise.
    """
    if len(seq) == 0:
        raise InputError("sequence is empty")
    if smooth < 1 or smooth % 2 == 0:
        raise ValueError("smooth must be a positive odd number of frames")
    deltas = _moving_average(seq.stack() - bg.mean[None, :, :], smooth)
    if threshold is not None:
        deltas = np.where(deltas > threshold, deltas, 0.0)
    return SeriesGrid(np.moveaxis(deltas, 0, -1), seq.sample_rate)


def gated_series(seq: SceneSequence, bg: BackgroundModel, smooth: int = DEFAULT_SMOOTH) -> SeriesGrid:
    """Smoothed series gated at the background's default threshold.

    Frame noise is independent from frame to frame, so averaging ``smooth``
    frames shrinks it by sqrt(smooth); the gate shrinks with it.
    """
    return pixel_series(seq, bg, bg.default_threshold() / np.sqrt(smooth), smooth)


def _samples(x) -> np.ndarray:
    if isinstance(x, PixelTimeSeries):
        x = x.samples
    return np.asarray(x, dtype=np.float64)


def xcorr_curve(a, b, max_lag: int) -> np.ndarray:
    """Normalized zero-mean cross-correlation for lags ``-max_lag..max_lag``.

    Entry ``max_lag + k`` is ``sum_t a[t] * b[t + k]`` over the overlap,
    divided by the full-length energies of both series. A constant series
    gives an all-zero curve.
    """
    a, b = _samples(a), _samples(b)
    n = len(a)
    if len(b) != n:
        raise InputError(f"series lengths differ: {n} vs {len(b)}")
    if n < 2:
        raise InputError("series need at least 2 samples")
    if not 0 <= max_lag < n:
        raise InputError(f"max_lag must be in [0, {n - 1}]")
    a0 = a - a.mean()
    b0 = b - b.mean()
    denom = np.sqrt(np.dot(a0, a0) * np.dot(b0, b0))
    curve = np.zeros(2 * max_lag + 1)
    if denom == 0.0:
        return curve
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            s = np.dot(a0[: n - k], b0[k:])
        else:
            s = np.dot(a0[-k:], b0[: n + k])
        curve[max_lag + k] = s / denom
    return curve


def _argmax_lag(curve: np.ndarray, max_lag: int) -> int:
    best = curve.max()
    ties = [k - max_lag for k in np.flatnonzero(curve == best)]
    return min(ties, key=lambda k: (abs(k), k))


def normalized_xcorr(a, b, max_lag: int) -> tuple[float, int]:
    """Peak normalized correlation and its lag in samples.

    A positive lag means ``b`` happens later than ``a``. Ties go to the lag
    of smallest magnitude, then to the negative one. Constant input yields
    ``(0.0, 0)``.
    """
    curve = xcorr_curve(a, b, max_lag)
    if not curve.any():
        return 0.0, 0
    k = _argmax_lag(curve, max_lag)
    return float(curve[max_lag + k]), k


def refine_lag(curve: np.ndarray, max_lag: int, lag: int) -> float:
    """Sub-sample lag from a three-point fit around the integer peak.

    Uses a Gaussian fit (a parabola through the log values) when all three
    points are positive, and a plain parabola otherwise.
    """
    i = max_lag + lag
    if i == 0 or i == len(curve) - 1:
        return float(lag)
    y0, y1, y2 = curve[i - 1], curve[i], curve[i + 1]
    if y0 > 0 and y1 > 0 and y2 > 0:
        y0, y1, y2 = np.log(y0), np.log(y1), np.log(y2)
    den = y0 - 2.0 * y1 + y2
    if den >= 0:
        return float(lag)
    offset = 0.5 * (y0 - y2) / den
    return lag + float(np.clip(offset, -0.5, 0.5))


def default_max_lag(length: int) -> int:
    return max(0, min(length // 2, length - 1))


def sentinel_delay(max_lag: int) -> int:
    return -(max_lag + 1)


def delay_analysis(
    series: SeriesGrid,
    reference: tuple[int, int],
    max_lag: int | None = None,
    corr_threshold: float = DEFAULT_CORR_THRESHOLD,
) -> CrossCorrResult:
    """Correlate one reference cell against all 64 cells.

    Cells whose peak correlation falls below ``corr_threshold`` get the
    sentinel delay ``-(max_lag + 1)``.
    """
    r0, c0 = reference
    if not (0 <= r0 < ROWS and 0 <= c0 < COLS):
        raise InputError(f"reference {reference} outside the grid")
    if max_lag is None:
        max_lag = default_max_lag(series.length)
    sentinel = sentinel_delay(max_lag)
    corr = np.zeros((ROWS, COLS))
    delay = np.full((ROWS, COLS), sentinel, dtype=np.int64)
    ref = series.data[r0, c0]
    for r in range(ROWS):
        for c in range(COLS):
            rho, k = normalized_xcorr(ref, series.data[r, c], max_lag)
            corr[r, c] = rho
            if rho >= corr_threshold:
                delay[r, c] = k
    corr.setflags(write=False)
    delay.setflags(write=False)
    return CrossCorrResult((r0, c0), corr, delay, sentinel)


def adjacent_pairs():
    """(first, second, axis) for every horizontal then vertical neighbour pair."""
    for r in range(ROWS):
        for c in range(COLS - 1):
            yield (r, c), (r, c + 1), "h"
    for r in range(ROWS - 1):
        for c in range(COLS):
            yield (r, c), (r + 1, c), "v"


def pair_votes(
    series: SeriesGrid,
    corr_threshold: float = DEFAULT_CORR_THRESHOLD,
    delay_threshold: int = DEFAULT_DELAY_THRESHOLD,
    max_lag: int | None = None,
) -> list[tuple[str, int, float]]:
    """Direction votes of adjacent cell pairs as ``(direction, delay, refined_lag)``."""
    if max_lag is None:
        max_lag = default_max_lag(series.length)
    votes = []
    for first, second, axis in adjacent_pairs():
        curve = xcorr_curve(series.data[first], series.data[second], max_lag)
        if not curve.any():
            continue
        k = _argmax_lag(curve, max_lag)
        if curve[max_lag + k] < corr_threshold or not 1 <= abs(k) <= delay_threshold:
            continue
        if axis == "h":
            direction = "left_to_right" if k > 0 else "right_to_left"
        else:
            direction = "up_to_down" if k > 0 else "down_to_up"
        votes.append((direction, k, refine_lag(curve, max_lag, k)))
    return votes


def infer_direction(
    series: SeriesGrid,
    corr_threshold: float = DEFAULT_CORR_THRESHOLD,
    delay_threshold: int = DEFAULT_DELAY_THRESHOLD,
    max_lag: int | None = None,
    min_votes: int = MIN_VOTES,
    cell_pitch: float = CELL_PITCH_M,
) -> MotionEstimate:
    """Vote on the walking direction over all adjacent cell pairs.

    A horizontal pair votes left_to_right when the right cell lags the left
    one by 1..``delay_threshold`` samples (right_to_left for the mirrored
    lag); vertical pairs vote up_to_down/down_to_up the same way. The winner
    needs at least ``min_votes`` and a strict plurality. Speed is the cell
    pitch divided by the mean sub-sample lag of the winning votes.
    """
    if not 0 < corr_threshold < 1:
        raise ValueError("corr_threshold must lie in (0, 1)")
    if delay_threshold < 1:
        raise ValueError("delay_threshold must be >= 1")
    if series.length < 2:
        raise InputError("need at least 2 frames to infer motion")
    votes = pair_votes(series, corr_threshold, delay_threshold, max_lag)
    tally = Counter(d for d, _, _ in votes)
    counts = {d: tally.get(d, 0) for d in DIRECTIONS}
    total = sum(counts.values())
    ranked = sorted(counts.values(), reverse=True)
    top = ranked[0]
    if top < min_votes or top == ranked[1]:
        conf = top / total if total else 0.0
        return MotionEstimate(NONE, None, None, conf, counts)
    winner = next(d for d in DIRECTIONS if counts[d] == top)
    lag = float(np.mean([abs(fine) for d, _, fine in votes if d == winner]))
    speed = cell_pitch / (lag / series.sample_rate)
    return MotionEstimate(winner, lag, speed, top / total, counts)
