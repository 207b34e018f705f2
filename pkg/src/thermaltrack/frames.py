"""Frame data model, CSV ingestion, background modeling and subtraction.

A frame is an 8x8 grid of temperatures in degrees Fahrenheit. Files hold one
frame per line as 64 comma-separated values in row-major order (row 0 at the
top, column 0 at the left). Lines starting with ``#`` are headers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, ParseError, RangeError

ROWS = 8
COLS = 8
N_CELLS = ROWS * COLS
T_MIN = -4.0
T_MAX = 212.0
DEFAULT_SAMPLE_RATE = 10.0
THRESHOLD_FLOOR = 4.0
FIELD_OF_VIEW_M = 2.5


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ThermalFrame:
    cells: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        cells = _frozen(self.cells)
        if cells.shape != (ROWS, COLS):
            raise ValueError(f"frame must be {ROWS}x{COLS}, got {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise RangeError("frame contains non-finite values")
        if cells.min() < T_MIN or cells.max() > T_MAX:
            raise RangeError(
                f"cell value outside [{T_MIN}, {T_MAX}] F: "
                f"min={cells.min()}, max={cells.max()}"
            )
        object.__setattr__(self, "cells", cells)


@dataclass(frozen=True)
class SceneSequence:
    frames: tuple[ThermalFrame, ...]
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        frames = tuple(self.frames)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        stamps = [f.timestamp for f in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i) -> ThermalFrame:
        return self.frames[i]

    def stack(self) -> np.ndarray:
        """Frames as a ``(T, 8, 8)`` array."""
        if not self.frames:
            return np.zeros((0, ROWS, COLS))
        return np.stack([f.cells for f in self.frames])

    @classmethod
    def from_array(cls, data, sample_rate: float = DEFAULT_SAMPLE_RATE) -> "SceneSequence":
        data = np.asarray(data, dtype=np.float64)
        step = 1000.0 / sample_rate
        frames = tuple(ThermalFrame(d, i * step) for i, d in enumerate(data))
        return cls(frames, sample_rate)


@dataclass(frozen=True)
class BackgroundModel:
    mean: np.ndarray
    std: np.ndarray
    n_frames: int

    def __post_init__(self):
        mean, std = _frozen(self.mean), _frozen(self.std)
        if mean.shape != (ROWS, COLS) or std.shape != (ROWS, COLS):
            raise ValueError("background grids must be 8x8")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if np.any(std < 0):
            raise ValueError("std must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def default_threshold(self) -> float:
        """Twice the mean per-cell std, but never below 4 F."""
        return max(THRESHOLD_FLOOR, 2.0 * float(self.std.mean()))


@dataclass(frozen=True)
class ForegroundFrame:
    values: np.ndarray
    active: np.ndarray = field(repr=False)
    threshold_used: float

    def __post_init__(self):
        values = _frozen(self.values)
        active = np.array(self.active, dtype=bool)
        active.setflags(write=False)
        if values.shape != active.shape:
            raise ValueError("values and active mask differ in shape")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "active", active)

    @classmethod
    def from_values(cls, values, threshold: float) -> "ForegroundFrame":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, values > threshold, float(threshold))

    @property
    def n_active(self) -> int:
        return int(self.active.sum())


def _parse_row(line: str, lineno: int) -> list[float]:
    parts = line.split(",")
    if len(parts) != N_CELLS:
        raise ParseError(f"expected {N_CELLS} fields, got {len(parts)}", lineno)
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ParseError("non-numeric field", lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite field", lineno)
    return vals


def parse_sequence(source: str, sample_rate: float = DEFAULT_SAMPLE_RATE) -> SceneSequence:
    """Parse frame-CSV text into a sequence; timestamps are synthesized."""
    step = 1000.0 / sample_rate
    frames = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        vals = _parse_row(line, lineno)
        lo, hi = min(vals), max(vals)
        if lo < T_MIN or hi > T_MAX:
            bad = lo if lo < T_MIN else hi
            raise RangeError(f"line {lineno}: value {bad} outside [{T_MIN}, {T_MAX}] F")
        grid = np.array(vals).reshape(ROWS, COLS)
        frames.append(ThermalFrame(grid, len(frames) * step))
    return SceneSequence(tuple(frames), sample_rate)


def read_sequence(path, sample_rate: float = DEFAULT_SAMPLE_RATE) -> SceneSequence:
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh.read(), sample_rate)


def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips exactly
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop negative zero
    return repr(v)


def format_row(values: Iterable[float]) -> str:
    return ",".join(_fmt(v) for v in values)


def format_frames(frames: Iterable[ThermalFrame | np.ndarray], header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend("#" + h for h in header.splitlines())
    for f in frames:
        cells = f.cells if isinstance(f, ThermalFrame) else np.asarray(f)
        lines.append(format_row(cells.ravel()))
    return "\n".join(lines) + "\n"


def format_grid(grid, header: str | None = None, fmt=_fmt) -> str:
    """An 8x8 grid written as 8 lines of 8 comma-separated values."""
    grid = np.asarray(grid)
    lines = ["#" + header] if header else []
    lines.extend(",".join(fmt(v) for v in row) for row in grid)
    return "\n".join(lines) + "\n"


def parse_grid(lines: Sequence[str], first_lineno: int = 1) -> np.ndarray:
    """Read 64 values laid out either as one line or as 8 lines of 8."""
    vals: list[float] = []
    for offset, raw in enumerate(lines):
        line = raw.strip()
        if not line:
            continue
        try:
            vals.extend(float(p) for p in line.split(","))
        except ValueError:
            raise ParseError("non-numeric field", first_lineno + offset) from None
    if len(vals) != N_CELLS:
        raise ParseError(f"grid needs {N_CELLS} values, got {len(vals)}", first_lineno)
    return np.array(vals).reshape(ROWS, COLS)


def build_background(frames: Sequence[ThermalFrame]) -> BackgroundModel:
    """Per-pixel mean and population std over person-free frames."""
    if len(frames) == 0:
        raise EmptyInputError("background needs at least one frame")
    stack = np.stack([f.cells for f in frames])
    return BackgroundModel(stack.mean(axis=0), stack.std(axis=0), len(frames))


def subtract_background(
    frame: ThermalFrame, bg: BackgroundModel, threshold: float | None = None
) -> ForegroundFrame:
    """Frame minus the background mean; cells above ``threshold`` are active.

    Negative deltas are kept in ``values``. ``threshold`` defaults to
    :meth:`BackgroundModel.default_threshold`.
    """
    if threshold is None:
        threshold = bg.default_threshold()
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return ForegroundFrame.from_values(frame.cells - bg.mean, threshold)


def format_background(bg: BackgroundModel) -> str:
    return (
        f"#n_frames={bg.n_frames}\n"
        + format_grid(bg.mean, header="mean")
        + format_grid(bg.std, header="std")
    )


def parse_background(source: str) -> BackgroundModel:
    sections: dict[str, list[str]] = {}
    starts: dict[str, int] = {}
    n_frames = None
    current = None
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            key = line[1:].strip()
            if key.startswith("n_frames="):
                try:
                    n_frames = int(key.split("=", 1)[1])
                except ValueError:
                    raise ParseError("bad n_frames header", lineno) from None
                current = None
            elif key in ("mean", "std"):
                current = key
                sections[key] = []
                starts[key] = lineno + 1
            else:
                current = None
        elif line:
            if current is None:
                raise ParseError("data outside a #mean/#std section", lineno)
            sections[current].append(line)
    for key in ("mean", "std"):
        if key not in sections:
            raise ParseError(f"missing #{key} section")
    if n_frames is None:
        raise ParseError("missing #n_frames header")
    mean = parse_grid(sections["mean"], starts["mean"])
    std = parse_grid(sections["std"], starts["std"])
    return BackgroundModel(mean, std, n_frames)


def read_background(path) -> BackgroundModel:
    with open(path, encoding="utf-8") as fh:
        return parse_background(fh.read())
