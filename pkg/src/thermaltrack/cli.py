"""Command-line entry point: ``thermaltrack <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import render
from .blobs import label_components
from .classify import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
    Dataset,
    cross_validate,
    evaluate,
    format_model,
    format_report,
    load_model,
    train_svm,
)
from .classify.evaluation import DEFAULT_FOLDS
from .errors import InputError, ParseError, ThermalTrackError
from .frames import (
    build_background,
    format_background,
    format_frames,
    format_grid,
    read_background,
    read_sequence,
    subtract_background,
)
from .motion import (
    DEFAULT_CORR_THRESHOLD,
    DEFAULT_DELAY_THRESHOLD,
    DEFAULT_SMOOTH,
    DIRECTIONS,
    delay_analysis,
    infer_direction,
    pixel_series,
)
from .synth import (
    PersonSpec,
    SynthConfig,
    WalkSpec,
    featurize,
    gen_background,
    gen_corpus_scenes,
    gen_walk_sequence,
)

log = logging.getLogger("thermaltrack")


class UsageError(ThermalTrackError):
    pass


# -- argument helpers ---------------------------------------------------------


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v

    return conv


def _non_negative(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {text}")
    return v


def _odd(text):
    v = int(text)
    if v < 1 or v % 2 == 0:
        raise argparse.ArgumentTypeError(f"must be a positive odd integer, got {text}")
    return v


def _cell(text):
    try:
        r, c = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW,COL, got {text!r}") from None
    if not (0 <= r < 8 and 0 <= c < 8):
        raise argparse.ArgumentTypeError(f"cell {text} outside the 8x8 grid")
    return r, c


def _float_list(text):
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("grid values must be positive")
    return vals


def _need_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {p}")
    return p


def _need_out(path) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise OSError(f"output directory is not writable: {parent}")
    return p


def write_outputs(outputs: dict[Path, bytes | str]) -> None:
    """Write every file or none: temp files first, then rename into place."""
    staged = []
    try:
        for path, data in outputs.items():
            if isinstance(data, str):
                data = data.encode("utf-8")
            fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
            staged.append((tmp, path))
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def read_labels(path, n_frames: int) -> np.ndarray:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                idx, lab = (int(p) for p in line.split(","))
            except ValueError:
                raise ParseError("expected <frame_index>,<label>", lineno) from None
            labels[idx] = lab
    missing = [i for i in range(n_frames) if i not in labels]
    if missing or len(labels) != n_frames:
        raise ParseError(f"labels file covers {len(labels)} of {n_frames} frames")
    return np.array([labels[i] for i in range(n_frames)], dtype=np.int64)


def format_labels(labels) -> str:
    return "#frame_index,label\n" + "".join(f"{i},{int(v)}\n" for i, v in enumerate(labels))


def _data_paths(args):
    if args.data:
        d = Path(args.data)
        return d / "frames.csv", d / "labels.csv", d / "background.csv"
    if not (args.frames and args.labels and args.background):
        raise UsageError("give --data DIR or all of --frames, --labels, --background")
    return Path(args.frames), Path(args.labels), Path(args.background)


def _load_dataset(args, paths) -> Dataset:
    frames_p, labels_p, bg_p = paths
    seq = read_sequence(frames_p, args.sample_rate)
    bg = read_background(bg_p)
    y = read_labels(labels_p, len(seq))
    X = featurize(seq.frames, bg, args.threshold, args.correction_factor)
    return Dataset(X, y)


# -- subcommands ------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        bg_mean=args.bg_mean, bg_std=args.bg_std, sample_rate=args.sample_rate,
        seed=args.seed, quantize=not args.no_quantize,
    )
    out = Path(args.output)
    if args.corpus:
        if out.exists() and not out.is_dir():
            raise OSError(f"not a directory: {out}")
        if not out.exists():
            _need_out(out)
        corpus = gen_corpus_scenes(cfg, args.per_class, args.n_background)
        out.mkdir(exist_ok=True)
        write_outputs({
            out / "frames.csv": format_frames(corpus.frames),
            out / "labels.csv": format_labels(corpus.labels),
            out / "background.csv": format_background(corpus.background),
        })
        print(f"wrote {len(corpus.frames)} scenes ({args.per_class} per class) to {out}/")
    elif args.walk:
        _need_out(out)
        stem = out.with_suffix("")
        truth_p = Path(f"{stem}.truth.csv")
        bg_p = Path(f"{stem}.bg.csv")
        rng = cfg.rng()
        bg = build_background(gen_background(cfg, args.n_background, rng))
        person = PersonSpec((3.5, 3.5), args.peak_delta)
        walk = WalkSpec(args.walk, args.speed, person, args.lane)
        seq, truth = gen_walk_sequence(cfg, walk, args.duration, rng)
        write_outputs({
            out: format_frames(seq.frames),
            truth_p: f"#direction,speed_mps\n{truth.direction},{truth.speed!r}\n",
            bg_p: format_background(bg),
        })
        print(f"wrote {len(seq)}-frame {args.walk} walk at {args.speed} m/s to {out}")
    else:
        _need_out(out)
        frames = gen_background(cfg, args.background)
        write_outputs({out: format_frames(frames)})
        print(f"wrote {len(frames)} background frames to {out}")
    return 0


def cmd_background(args) -> int:
    src = _need_file(args.frames)
    out = _need_out(args.output)
    seq = read_sequence(src, args.sample_rate)
    bg = build_background(seq.frames)
    write_outputs({out: format_background(bg)})
    print(
        f"background from {bg.n_frames} frames: mean {bg.mean.min():.2f}..{bg.mean.max():.2f} F, "
        f"default threshold {bg.default_threshold():.2f} F"
    )
    return 0


def cmd_train(args) -> int:
    paths = _data_paths(args)
    for p in paths:
        _need_file(p)
    out = _need_out(args.output)
    if (args.C is None) != (args.gamma is None):
        raise UsageError("--C and --gamma must be given together")
    data = _load_dataset(args, paths)
    if args.C is not None:
        C, gamma = args.C, args.gamma
        print(f"fixed parameters: C={C!r} gamma={gamma!r} (cross-validation skipped)")
    else:
        cv = cross_validate(
            data, args.c_grid, args.gamma_grid, args.folds, seed=args.seed, threads=args.threads
        )
        C, gamma = cv.C, cv.gamma
        print(f"cross-validation: {args.folds} folds over {len(cv.scores)} grid points")
        print(f"best C={C!r} gamma={gamma!r} mean CV accuracy={cv.mean_accuracy:.4f}")
        print("fold accuracies: " + " ".join(f"{a:.4f}" for a in cv.fold_accuracies))
    model = train_svm(data, C, gamma)
    train_acc = evaluate(model, data).accuracy
    write_outputs({out: format_model(model)})
    print(f"training accuracy: {train_acc:.4f} on {len(data)} scenes")
    print(f"model written to {out}")
    return 0


def cmd_predict(args) -> int:
    model_p, frames_p, bg_p = (_need_file(p) for p in (args.model, args.frames, args.background))
    model = load_model(model_p)
    seq = read_sequence(frames_p, args.sample_rate)
    X = featurize(seq.frames, read_background(bg_p), args.threshold, args.correction_factor)
    for i, lab in enumerate(model.predict_many(X)):
        print(f"{i},{lab}")
    return 0


def cmd_evaluate(args) -> int:
    model_p = _need_file(args.model)
    paths = _data_paths(args)
    for p in paths:
        _need_file(p)
    report_p = _need_out(args.report) if args.report else None
    model = load_model(model_p)
    report = evaluate(model, _load_dataset(args, paths))
    print(format_report(report), end="")
    if report_p:
        write_outputs({report_p: format_report(report, structured=args.format == "kv")})
    return 0


def cmd_motion(args) -> int:
    seq_p, bg_p = _need_file(args.sequence), _need_file(args.background)
    dump_p = _need_out(args.dump_out) if args.dump_out else None
    seq = read_sequence(seq_p, args.sample_rate)
    if len(seq) < 2:
        raise InputError(f"sequence has {len(seq)} frame(s); motion needs at least 2")
    bg = read_background(bg_p)
    if args.no_gate:
        series = pixel_series(seq, bg, None, args.smooth)
    else:
        gate = args.threshold if args.threshold is not None else bg.default_threshold()
        # averaging shrinks frame noise by sqrt(smooth); the gate follows
        series = pixel_series(seq, bg, gate / np.sqrt(args.smooth), args.smooth)
    est = infer_direction(series, args.corr_threshold, args.delay_threshold, args.max_lag)
    print(f"direction: {est.direction}")
    if est.speed is not None:
        print(f"mean adjacent lag: {est.mean_adjacent_lag:.3f} samples")
        print(f"speed: {est.speed:.3f} m/s")
    else:
        print("mean adjacent lag: n/a")
        print("speed: n/a")
    print(f"confidence: {est.confidence:.3f}")
    print("votes: " + " ".join(f"{d}={est.votes[d]}" for d in DIRECTIONS))
    if args.dump_delay:
        res = delay_analysis(series, args.dump_delay, args.max_lag, args.corr_threshold)
        text = format_grid(
            res.delay,
            header=f"delay reference={res.reference[0]},{res.reference[1]} sentinel={res.sentinel}",
            fmt=lambda v: str(int(v)),
        )
        if dump_p:
            write_outputs({dump_p: text})
        else:
            print(text, end="")
    return 0


def cmd_render(args) -> int:
    frames_p = _need_file(args.frames)
    bg_p = _need_file(args.background) if args.background else None
    out = _need_out(args.output) if args.output else None
    if args.mode != "raw" and bg_p is None:
        raise UsageError(f"--mode {args.mode} needs --background")
    if args.format == "pgm" and out is None:
        raise UsageError("pgm output needs -o PATH")
    seq = read_sequence(frames_p, args.sample_rate)
    if not 0 <= args.index < len(seq):
        raise InputError(f"frame index {args.index} out of range (file has {len(seq)} frames)")
    frame = seq[args.index]
    if args.mode == "raw":
        grid, is_labels = frame.cells, False
    else:
        fg = subtract_background(frame, read_background(bg_p), args.threshold)
        if args.mode == "foreground":
            grid, is_labels = fg.values, False
        else:
            grid, is_labels = label_components(fg)[0].labels, True
    if args.format == "pgm":
        data = render.pgm_labels(grid, args.scale) if is_labels else render.pgm(grid, args.scale)
    else:
        data = render.ascii_labels(grid) if is_labels else render.ascii_heatmap(grid)
    if out:
        write_outputs({out: data})
    else:
        sys.stdout.write(data)
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threshold", type=_non_negative, default=None,
                        help="activity threshold in F (default: 2x mean background std, min 4)")
    common.add_argument("--correction-factor", type=_positive(float), default=1.0,
                        help="peak-count correction factor (default 1.0)")
    common.add_argument("--sample-rate", type=_positive(float), default=10.0,
                        help="frames per second (default 10)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="thermaltrack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate synthetic scenes")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--corpus", action="store_true", help="labelled 1-4 person corpus")
    mode.add_argument("--walk", choices=DIRECTIONS, help="single-person walk sequence")
    mode.add_argument("--background", type=_positive(int), metavar="N",
                      help="N person-free background frames")
    s.add_argument("--per-class", type=_positive(int), default=150)
    s.add_argument("--n-background", type=_positive(int), default=164)
    s.add_argument("--speed", type=_positive(float), default=2.5, help="walk speed, m/s")
    s.add_argument("--duration", type=_positive(float), default=1.0, help="walk length, s")
    s.add_argument("--peak-delta", type=_positive(float), default=12.0,
                   help="walker's peak temperature above background, F")
    s.add_argument("--lane", type=float, default=3.5, help="walk position across travel, cells")
    s.add_argument("--bg-mean", type=float, default=97.0)
    s.add_argument("--bg-std", type=_non_negative, default=5.0)
    s.add_argument("--no-quantize", action="store_true")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("background", parents=[common], help="build a background model")
    b.add_argument("frames", help="frame CSV of person-free frames")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_background)

    def data_flags(q):
        q.add_argument("--data", help="directory with frames.csv, labels.csv, background.csv")
        q.add_argument("--frames")
        q.add_argument("--labels")
        q.add_argument("--background")

    t = sub.add_parser("train", parents=[common], help="train the people-count SVM")
    data_flags(t)
    t.add_argument("--C", type=_positive(float), default=None)
    t.add_argument("--gamma", type=_positive(float), default=None)
    t.add_argument("--folds", type=_positive(int), default=DEFAULT_FOLDS)
    t.add_argument("--c-grid", type=_float_list, default=list(DEFAULT_C_GRID),
                   help="comma-separated C values (default 2^-1..2^7)")
    t.add_argument("--gamma-grid", type=_float_list, default=list(DEFAULT_GAMMA_GRID),
                   help="comma-separated gamma values (default 2^-10..2^1)")
    t.add_argument("--threads", type=_positive(int), default=1)
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common], help="predict people counts")
    pr.add_argument("--model", required=True)
    pr.add_argument("--frames", required=True)
    pr.add_argument("--background", required=True)
    pr.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", parents=[common], help="accuracy and confusion matrix")
    data_flags(e)
    e.add_argument("--model", required=True)
    e.add_argument("--report", help="also write the report to this file")
    e.add_argument("--format", choices=("text", "kv"), default="text",
                   help="report file format (kv: key=value plus matrix block)")
    e.set_defaults(func=cmd_evaluate)

    m = sub.add_parser("motion", parents=[common], help="walking direction and speed")
    m.add_argument("--sequence", required=True)
    m.add_argument("--background", required=True)
    m.add_argument("--corr-threshold", type=_fraction, default=DEFAULT_CORR_THRESHOLD)
    m.add_argument("--delay-threshold", type=_positive(int), default=DEFAULT_DELAY_THRESHOLD)
    m.add_argument("--max-lag", type=int, default=None)
    m.add_argument("--smooth", type=_odd, default=DEFAULT_SMOOTH,
                   help=f"running-mean window in frames before gating (default {DEFAULT_SMOOTH})")
    m.add_argument("--no-gate", action="store_true",
                   help="correlate raw deltas instead of zeroing sub-threshold samples")
    m.add_argument("--dump-delay", type=_cell, metavar="ROW,COL",
                   help="print the delay matrix against this 0-based reference cell")
    m.add_argument("--dump-out", help="write the delay matrix here instead of stdout")
    m.set_defaults(func=cmd_motion)

    r = sub.add_parser("render", parents=[common], help="render a frame as ASCII or PGM")
    r.add_argument("--frames", required=True)
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--mode", choices=("raw", "foreground", "labels"), default="raw")
    r.add_argument("--background")
    r.add_argument("--format", choices=("ascii", "pgm"), default="ascii")
    r.add_argument("--scale", type=_positive(int), default=16)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"thermaltrack {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ThermalTrackError, ValueError, OSError) as exc:
        print(f"thermaltrack {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
