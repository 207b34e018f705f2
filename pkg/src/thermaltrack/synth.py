"""Synthetic thermal scenes with ground truth.

People are isotropic Gaussian heat bumps on top of an i.i.d. noisy
background. Everything is driven by an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blobs import extract_features
from .classify.dataset import Dataset
from .frames import (
    COLS,
    DEFAULT_SAMPLE_RATE,
    ROWS,
    T_MAX,
    T_MIN,
    BackgroundModel,
    SceneSequence,
    ThermalFrame,
    build_background,
    subtract_background,
)
from .motion import CELL_PITCH_M, DIRECTIONS, MotionEstimate

QUANT_STEP = 0.25
SEPARATIONS = (0.5, 1.0, 2.0, 3.0)
PEAK_DELTA_RANGE = (8.0, 16.0)
DEFAULT_SIGMA = 0.7
N_BACKGROUND = 164

_rc = np.arange(ROWS, dtype=np.float64)[:, None]
_cc = np.arange(COLS, dtype=np.float64)[None, :]


@dataclass(frozen=True)
class PersonSpec:
    position: tuple[float, float]
    peak_delta: float = 12.0
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if self.peak_delta <= 0 or self.sigma <= 0:
            raise ValueError("peak_delta and sigma must be positive")

    def bump(self) -> np.ndarray:
        r, c = self.position
        d2 = (_rc - r) ** 2 + (_cc - c) ** 2
        return self.peak_delta * np.exp(-d2 / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class WalkSpec:
    direction: str
    speed: float
    person: PersonSpec = field(default_factory=lambda: PersonSpec((3.5, 3.5)))
    # position across the direction of travel, in cells
    lane: float = 3.5

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.speed <= 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class SynthConfig:
    bg_mean: float = 97.0
    bg_std: float = 5.0
    sample_rate: float = DEFAULT_SAMPLE_RATE
    seed: int = 0
    quantize: bool = True
    quant_step: float = QUANT_STEP

    def __post_init__(self):
        if self.bg_std < 0:
            raise ValueError("bg_std must be >= 0")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _finish(cfg: SynthConfig, cells: np.ndarray) -> np.ndarray:
    if cfg.quantize:
        cells = np.round(cells / cfg.quant_step) * cfg.quant_step
    return np.clip(cells, T_MIN, T_MAX)


def _noise(cfg: SynthConfig, rng: np.random.Generator, shape) -> np.ndarray:
    if cfg.bg_std == 0:
        return np.full(shape, cfg.bg_mean)
    return rng.normal(cfg.bg_mean, cfg.bg_std, size=shape)


def gen_background(
    cfg: SynthConfig, n_frames: int, rng: np.random.Generator | None = None
) -> list[ThermalFrame]:
    """``n_frames`` person-free frames with per-cell i.i.d. noise."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = cfg.rng() if rng is None else rng
    raw = _finish(cfg, _noise(cfg, rng, (n_frames, ROWS, COLS)))
    step = 1000.0 / cfg.sample_rate
    return [ThermalFrame(raw[i], i * step) for i in range(n_frames)]


def gen_static_scene(
    cfg: SynthConfig,
    persons: Sequence[PersonSpec],
    rng: np.random.Generator | None = None,
    timestamp: float = 0.0,
) -> ThermalFrame:
    rng = cfg.rng() if rng is None else rng
    cells = _noise(cfg, rng, (ROWS, COLS))
    for p in persons:
        r, c = p.position
        if not (0 <= r <= ROWS - 1 and 0 <= c <= COLS - 1):
            raise ValueError(f"person at {p.position} is outside the grid")
        cells = cells + p.bump()
    return ThermalFrame(_finish(cfg, cells), timestamp)


def walk_positions(walk: WalkSpec, n_frames: int, sample_rate: float) -> np.ndarray:
    """(row, col) of the person per frame; the crossing is centred in time."""
    v = walk.speed / CELL_PITCH_M / sample_rate  # cells per frame
    t = np.arange(n_frames) - (n_frames - 1) / 2.0
    along = {
        "left_to_right": 3.5 + v * t,
        "right_to_left": 3.5 - v * t,
        "up_to_down": 3.5 + v * t,
        "down_to_up": 3.5 - v * t,
    }[walk.direction]
    lane = np.full(n_frames, walk.lane)
    if walk.direction in ("left_to_right", "right_to_left"):
        return np.column_stack([lane, along])
    return np.column_stack([along, lane])


def gen_walk_sequence(
    cfg: SynthConfig,
    walk: WalkSpec,
    duration: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[SceneSequence, MotionEstimate]:
    """A single person crossing the grid edge to edge along one axis.

    The person moves ``speed / cell_pitch`` cells per second; the midpoint of
    the sequence puts them at the grid centre.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = cfg.rng() if rng is None else rng
    n = max(1, int(round(duration * cfg.sample_rate)))
    pos = walk_positions(walk, n, cfg.sample_rate)
    noise = _noise(cfg, rng, (n, ROWS, COLS))
    p = walk.person
    frames = []
    step = 1000.0 / cfg.sample_rate
    for i in range(n):
        bump = PersonSpec((pos[i, 0], pos[i, 1]), p.peak_delta, p.sigma).bump()
        frames.append(ThermalFrame(_finish(cfg, noise[i] + bump), i * step))
    lag = CELL_PITCH_M / walk.speed * cfg.sample_rate
    truth = MotionEstimate(walk.direction, lag, walk.speed, 1.0)
    return SceneSequence(tuple(frames), cfg.sample_rate), truth


def _place(rng: np.random.Generator, k: int, min_sep: float, tries: int = 200):
    lo, hi = 0.0, float(ROWS - 1)
    for _ in range(tries):
        pts = []
        for _ in range(k):
            for _ in range(tries):
                cand = rng.uniform(lo, hi, size=2)
                if all(np.hypot(*(cand - q)) >= min_sep for q in pts):
                    pts.append(cand)
                    break
            else:
                break
        if len(pts) == k:
            return pts
    return None


def random_persons(rng: np.random.Generator, k: int) -> list[PersonSpec]:
    """``k`` people at a random minimum separation and random heights."""
    while True:
        sep = float(rng.choice(SEPARATIONS))
        pts = _place(rng, k, sep)
        if pts is not None:
            break
    heights = rng.uniform(*PEAK_DELTA_RANGE, size=k)
    return [PersonSpec((float(p[0]), float(p[1])), float(h)) for p, h in zip(pts, heights)]


@dataclass(frozen=True)
class Corpus:
    """Raw scenes behind a synthetic dataset."""

    frames: tuple[ThermalFrame, ...]
    labels: np.ndarray
    background: BackgroundModel


def gen_corpus_scenes(
    cfg: SynthConfig, per_class: int, n_background: int = N_BACKGROUND
) -> Corpus:
    """Balanced scenes with 1..4 people, classes interleaved 1,2,3,4,1,2,..."""
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    rng = cfg.rng()
    bg = build_background(gen_background(cfg, n_background, rng))
    frames, labels = [], []
    step = 1000.0 / cfg.sample_rate
    for _ in range(per_class):
        for k in (1, 2, 3, 4):
            persons = random_persons(rng, k)
            frames.append(gen_static_scene(cfg, persons, rng, timestamp=len(frames) * step))
            labels.append(k)
    return Corpus(tuple(frames), np.array(labels, dtype=np.int64), bg)


def featurize(
    frames: Sequence[ThermalFrame],
    bg: BackgroundModel,
    threshold: float | None = None,
    correction_factor: float = 1.0,
) -> np.ndarray:
    return np.array(
        [
            extract_features(subtract_background(f, bg, threshold), correction_factor).as_array()
            for f in frames
        ]
    ).reshape(-1, 4)


def gen_corpus(
    cfg: SynthConfig,
    per_class: int,
    threshold: float | None = None,
    correction_factor: float = 1.0,
    n_background: int = N_BACKGROUND,
) -> Dataset:
    """Labelled feature dataset with ``per_class`` scenes for each count 1..4."""
    corpus = gen_corpus_scenes(cfg, per_class, n_background)
    X = featurize(corpus.frames, corpus.background, threshold, correction_factor)
    return Dataset(X, corpus.labels)
