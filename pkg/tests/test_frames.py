import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thermaltrack.errors import EmptyInputError, ParseError, RangeError
from thermaltrack.frames import (
    BackgroundModel,
    ThermalFrame,
    build_background,
    format_background,
    format_frames,
    parse_background,
    parse_sequence,
    subtract_background,
)
from thermaltrack.synth import SynthConfig, gen_background

temps = arrays(np.float64, (8, 8), elements=st.floats(-4.0, 212.0, allow_nan=False))


def test_parse_single_row_of_zeros():
    seq = parse_sequence(",".join(["0"] * 64) + "\n")
    assert len(seq) == 1
    assert np.all(seq[0].cells == 0.0)


def test_parse_synthesizes_timestamps():
    row = ",".join(["97.0"] * 64)
    seq = parse_sequence(f"#header\n{row}\n{row}\n", sample_rate=10)
    assert [f.timestamp for f in seq.frames] == [0.0, 100.0]


def test_parse_rejects_short_row():
    with pytest.raises(ParseError, match="line 1"):
        parse_sequence(",".join(["0"] * 63))


def test_parse_reports_line_number_after_header():
    good = ",".join(["0"] * 64)
    with pytest.raises(ParseError, match="line 3"):
        parse_sequence(f"#h\n{good}\n1,2,x\n")


def test_parse_rejects_out_of_range():
    with pytest.raises(RangeError):
        parse_sequence(",".join(["213"] + ["0"] * 63))
    with pytest.raises(RangeError):
        parse_sequence(",".join(["-4.25"] + ["0"] * 63))


def test_frame_invariants():
    with pytest.raises(ValueError):
        ThermalFrame(np.zeros((8, 7)))
    with pytest.raises(RangeError):
        ThermalFrame(np.full((8, 8), 300.0))


def test_frames_round_trip_exactly():
    rng = np.random.default_rng(3)
    frames = [ThermalFrame(rng.uniform(-4, 212, (8, 8)), i * 100.0) for i in range(5)]
    seq = parse_sequence(format_frames(frames))
    for a, b in zip(frames, seq.frames):
        assert np.array_equal(a.cells, b.cells)


def test_background_constant_frames():
    frames = [ThermalFrame(np.full((8, 8), 97.0), i) for i in range(164)]
    bg = build_background(frames)
    assert np.all(bg.mean == 97.0)
    assert np.all(bg.std == 0.0)
    assert bg.n_frames == 164


def test_background_two_point():
    bg = build_background([ThermalFrame(np.full((8, 8), 96.0)), ThermalFrame(np.full((8, 8), 98.0), 1)])
    assert np.allclose(bg.mean, 97.0)
    assert np.allclose(bg.std, 1.0)


def test_background_empty():
    with pytest.raises(EmptyInputError):
        build_background([])


def test_background_680_frames_in_reported_band():
    bg = build_background(gen_background(SynthConfig(seed=11), 680))
    # standard error of the mean is 5 / sqrt(680) ~ 0.19 F
    assert bg.mean.min() >= 96.0 and bg.mean.max() <= 98.0


def test_background_file_round_trip():
    bg = build_background(gen_background(SynthConfig(seed=2), 50))
    back = parse_background(format_background(bg))
    assert np.array_equal(back.mean, bg.mean)
    assert np.array_equal(back.std, bg.std)
    assert back.n_frames == 50


def test_background_file_requires_sections():
    with pytest.raises(ParseError):
        parse_background("#n_frames=3\n#mean\n" + "1,2\n")


def test_default_threshold_floor_and_scaling():
    flat = BackgroundModel(np.full((8, 8), 97.0), np.zeros((8, 8)), 1)
    assert flat.default_threshold() == 4.0
    noisy = BackgroundModel(np.full((8, 8), 97.0), np.full((8, 8), 5.0), 10)
    assert noisy.default_threshold() == 10.0


def test_subtract_own_background_is_silent():
    f = ThermalFrame(np.random.default_rng(0).uniform(90, 100, (8, 8)))
    fg = subtract_background(f, build_background([f]), 0.0)
    assert np.all(fg.values == 0.0)
    assert fg.n_active == 0


def test_subtract_typical_temperatures():
    bg = BackgroundModel(np.full((8, 8), 97.0), np.zeros((8, 8)), 1)
    cells = np.full((8, 8), 97.0)
    cells[1, 1] = 106.0
    cells[2, 2] = 113.0
    fg = subtract_background(ThermalFrame(cells), bg, 10.0)
    assert fg.values[1, 1] == 9.0 and not fg.active[1, 1]
    assert fg.values[2, 2] == 16.0 and fg.active[2, 2]


def test_negative_deltas_are_kept():
    bg = BackgroundModel(np.full((8, 8), 97.0), np.zeros((8, 8)), 1)
    fg = subtract_background(ThermalFrame(np.full((8, 8), 90.0)), bg, 0.0)
    assert np.all(fg.values == -7.0)
    assert fg.n_active == 0


def test_active_count_matches_brute_force():
    rng = np.random.default_rng(5)
    bg = build_background(gen_background(SynthConfig(seed=5), 30))
    for _ in range(50):
        f = ThermalFrame(rng.uniform(85, 115, (8, 8)))
        thr = float(rng.uniform(0, 15))
        fg = subtract_background(f, bg, thr)
        count = 0
        for r in range(8):
            for c in range(8):
                if f.cells[r, c] - bg.mean[r, c] > thr:
                    count += 1
        assert fg.n_active == count


@settings(max_examples=100, deadline=None)
@given(cells=temps, base=temps, thr=st.floats(0, 50))
def test_reconstruction_identity(cells, base, thr):
    bg = BackgroundModel(base, np.zeros((8, 8)), 1)
    fg = subtract_background(ThermalFrame(cells), bg, thr)
    assert np.allclose(fg.values + bg.mean, cells, rtol=0, atol=1e-12)
    assert np.array_equal(fg.active, fg.values > thr)


@settings(max_examples=100, deadline=None)
@given(cells=temps, t1=st.floats(0, 100), t2=st.floats(0, 100))
def test_threshold_monotonicity(cells, t1, t2):
    lo, hi = sorted((t1, t2))
    bg = BackgroundModel(np.full((8, 8), 97.0), np.zeros((8, 8)), 1)
    f = ThermalFrame(cells)
    assert subtract_background(f, bg, hi).n_active <= subtract_background(f, bg, lo).n_active


def test_background_only_corpus_has_zero_mean_foreground():
    frames = gen_background(SynthConfig(seed=4), 200)
    bg = build_background(frames)
    total = np.mean([subtract_background(f, bg).values.mean() for f in frames])
    assert abs(total) < 1e-9
