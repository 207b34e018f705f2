import numpy as np
import pytest

from conftest import flood_fill_partition
from thermaltrack.blobs import extract_features
from thermaltrack.frames import BackgroundModel, build_background, subtract_background
from thermaltrack.synth import (
    PersonSpec,
    SynthConfig,
    WalkSpec,
    gen_background,
    gen_corpus,
    gen_corpus_scenes,
    gen_static_scene,
    gen_walk_sequence,
    random_persons,
)

NOISY_BG = BackgroundModel(np.full((8, 8), 97.0), np.full((8, 8), 5.0), 164)


def test_zero_std_background_is_flat():
    frames = gen_background(SynthConfig(bg_std=0.0, seed=1), 5)
    assert all(np.all(f.cells == 97.0) for f in frames)


def test_background_statistics():
    frames = gen_background(SynthConfig(seed=0), 10000)
    bg = build_background(frames)
    assert np.all(np.abs(bg.mean - 97.0) <= 0.2)
    assert abs(bg.std.mean() - 5.0) < 0.1


def test_defaults_sit_in_reported_background_band():
    cfg = SynthConfig()
    assert 96.0 <= cfg.bg_mean <= 98.0
    assert cfg.bg_std == 5.0
    assert cfg.sample_rate == 10.0


def test_quantized_and_in_range():
    frames = gen_background(SynthConfig(seed=3, bg_std=60.0), 200)
    stack = np.stack([f.cells for f in frames])
    assert stack.min() >= -4.0 and stack.max() <= 212.0
    assert np.all(np.mod(stack, 0.25) == 0)


def test_unquantized_values_are_continuous():
    f = gen_background(SynthConfig(seed=3, quantize=False), 1)[0]
    assert not np.all(np.mod(f.cells, 0.25) == 0)


def test_scene_without_people_is_background():
    cfg = SynthConfig(seed=9)
    scene = gen_static_scene(cfg, [])
    assert np.array_equal(scene.cells, gen_background(cfg, 1)[0].cells)


def test_centered_person_is_global_max():
    scene = gen_static_scene(SynthConfig(bg_std=0.0), [PersonSpec((3, 5), 12.0, 0.7)])
    assert np.unravel_index(scene.cells.argmax(), (8, 8)) == (3, 5)
    assert scene.cells[3, 5] == 109.0


def test_person_outside_grid_rejected():
    with pytest.raises(ValueError):
        gen_static_scene(SynthConfig(), [PersonSpec((9.0, 1.0))])


def test_two_separated_people_give_two_components():
    rng = np.random.default_rng(21)
    cfg = SynthConfig(bg_std=0.0, quantize=False)
    for _ in range(100):
        while True:
            a, b = rng.uniform(0, 7, size=(2, 2))
            if np.hypot(*(a - b)) >= 3.0:
                break
        persons = [PersonSpec(tuple(a), h) for a, h in zip((a, b), rng.uniform(8, 16, 2))]
        # heads just above the threshold may not light any cell; keep the ones that do
        fg = subtract_background(gen_static_scene(cfg, persons), NOISY_BG)
        lit = [p for p in persons if (p.bump() > fg.threshold_used).any()]
        if len(lit) < 2:
            continue
        fv = extract_features(fg)
        assert fv.n_components == len(flood_fill_partition(fg.active)) == 2


def test_walk_crosses_all_columns_in_one_second():
    cfg = SynthConfig(bg_std=0.0)
    seq, truth = gen_walk_sequence(cfg, WalkSpec("left_to_right", 2.5), 1.0)
    assert len(seq) == 10
    hottest_cols = [int(np.unravel_index(f.cells.argmax(), (8, 8))[1]) for f in seq.frames]
    assert hottest_cols[0] == 0 and hottest_cols[-1] == 7
    assert hottest_cols == sorted(hottest_cols)
    assert truth.mean_adjacent_lag == pytest.approx(1.25)
    assert truth.speed == 2.5


@pytest.mark.parametrize("direction", ["left_to_right", "right_to_left", "up_to_down", "down_to_up"])
def test_walk_axes(direction):
    seq, _ = gen_walk_sequence(SynthConfig(bg_std=0.0), WalkSpec(direction, 2.5), 1.0)
    first = np.unravel_index(seq[0].cells.argmax(), (8, 8))
    last = np.unravel_index(seq[-1].cells.argmax(), (8, 8))
    expected = {
        "left_to_right": ((3, 0), (3, 7)),
        "right_to_left": ((3, 7), (3, 0)),
        "up_to_down": ((0, 3), (7, 3)),
        "down_to_up": ((7, 3), (0, 3)),
    }[direction]
    assert (tuple(map(int, first)), tuple(map(int, last))) == expected


def test_walking_speeds_give_one_to_two_sample_lags():
    for speed in np.linspace(2.5, 3.0, 6):
        _, truth = gen_walk_sequence(SynthConfig(bg_std=0.0), WalkSpec("up_to_down", speed), 1.0)
        assert 1.0 <= truth.mean_adjacent_lag <= 2.0


def test_corpus_sizes_and_balance():
    one = gen_corpus(SynthConfig(seed=1), 1)
    assert one.y.tolist() == [1, 2, 3, 4]
    full = gen_corpus(SynthConfig(seed=7), 150)
    assert full.X.shape == (600, 4)
    assert np.bincount(full.y).tolist() == [0, 150, 150, 150, 150]


def test_corpus_is_reproducible():
    a = gen_corpus_scenes(SynthConfig(seed=5), 10)
    b = gen_corpus_scenes(SynthConfig(seed=5), 10)
    c = gen_corpus_scenes(SynthConfig(seed=6), 10)
    assert all(np.array_equal(x.cells, y.cells) for x, y in zip(a.frames, b.frames))
    assert np.array_equal(a.background.mean, b.background.mean)
    assert not all(np.array_equal(x.cells, y.cells) for x, y in zip(a.frames, c.frames))


def test_random_persons_respect_separation_choices():
    rng = np.random.default_rng(0)
    for k in (1, 2, 3, 4):
        for _ in range(20):
            persons = random_persons(rng, k)
            assert len(persons) == k
            assert all(8.0 <= p.peak_delta <= 16.0 for p in persons)
            pts = np.array([p.position for p in persons])
            assert pts.min() >= 0 and pts.max() <= 7
            if k > 1:
                d = min(np.hypot(*(a - b)) for i, a in enumerate(pts) for b in pts[i + 1:])
                assert d >= 0.5
