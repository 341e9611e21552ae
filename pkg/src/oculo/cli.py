"""Command-line front end: analyze sessions, process cohorts, synthesize data.

Exit codes: 0 success, 1 usage, 2 parse error, 3 analysis error,
4 batch with no analyzable session. Output files are written to a
temporary name and renamed, so failures leave no partial files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .cohort import (
    CohortRow,
    CohortTable,
    boxplot_csv,
    boxplot_stats,
    boxplot_svg,
    normalize_cohort,
    parse_group_file,
)
from .errors import AllSessionsFailed, AnalysisError, OculoError, ParseError
from .features import AnalysisConfig, extract_features
from .saccade import DetectionConfig
from .session_io import (
    COLUMN_FIELDS,
    FeatureSet,
    RawSession,
    StimulusTrack,
    Task,
    parse_binary_session,
    parse_stimulus_log,
    read_feature_report,
    serialize_session,
    serialize_stimulus_log,
    write_feature_report,
)
from .signal_prep import DEFAULT_FOV_HALF_ANGLE_DEG, FilterConfig
from .features import FixationConfig
from .synth import (
    GroundTruth,
    ProtocolConfig,
    SubjectModel,
    TrialTruth,
    generate_protocol,
    ground_truth_csv,
    synthesize_gaze,
)

SESSION_FILENAME = "session.bin"
_SYNTH_TASK_GAP_US = 1_000_000

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_ANALYSIS = 3
EXIT_ALL_FAILED = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sg-window", type=int, default=9, help="Savitzky-Golay window (odd)")
    p.add_argument("--sg-order", type=int, default=3, help="Savitzky-Golay polynomial order")
    p.add_argument("--fov-half-deg", type=float, default=DEFAULT_FOV_HALF_ANGLE_DEG,
                   help="half field-of-view used for normalization")
    p.add_argument("--amp-factor", type=float, default=0.5,
                   help="saccade threshold as a fraction of trace std")
    p.add_argument("--baseline-ms", type=float, default=100.0,
                   help="pre-stimulus baseline window")
    p.add_argument("--fix-threshold-frac", type=float, default=0.05,
                   help="fixation threshold as a fraction of cleaned gradient std")
    p.add_argument("--min-fix-ms", type=float, default=50.0,
                   help="minimum fixation length; shorter ones are microfixations")
    p.add_argument("--zscore-cutoff", type=float, default=3.5,
                   help="modified Z-score outlier cutoff")
    p.add_argument("--speed-radius", type=int, default=20,
                   help="samples around the saccade point searched for peak speed")


def _analysis_config(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        fov_half_angle_deg=args.fov_half_deg,
        filter=FilterConfig(args.sg_window, args.sg_order),
        detection=DetectionConfig(args.amp_factor, args.baseline_ms),
        fixation=FixationConfig(args.fix_threshold_frac, args.min_fix_ms,
                                args.zscore_cutoff, args.speed_radius),
    )


def _load_session_dir(session_dir: Path) -> tuple[RawSession, list[StimulusTrack]]:
    bin_path = session_dir / SESSION_FILENAME
    session = parse_binary_session(bin_path.read_bytes(), session_id=session_dir.name)
    tracks = []
    for log in sorted(session_dir.glob("stimulus_*.log")):
        tracks.append(parse_stimulus_log(log.read_text()))
    return session, tracks


def _write_reports(features: FeatureSet, out_dir: Path, fmt: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        _atomic_write(out_dir / "features.csv", write_feature_report(features, "csv"))
    if fmt in ("json", "both"):
        _atomic_write(out_dir / "features.json", write_feature_report(features, "json"))


def _print_features(features: FeatureSet) -> None:
    for col, name in COLUMN_FIELDS:
        v = getattr(features, name)
        print(f"{col:>4} = {'null' if v is None else repr(v)}")


def cmd_analyze(args: argparse.Namespace) -> int:
    session_dir = Path(args.session_dir)
    if not (session_dir / SESSION_FILENAME).is_file():
        print(f"error: {session_dir / SESSION_FILENAME} not found", file=sys.stderr)
        return EXIT_USAGE
    session, tracks = _load_session_dir(session_dir)
    features = extract_features(session, tracks, _analysis_config(args))
    out_dir = Path(args.out) if args.out else session_dir
    _write_reports(features, out_dir, args.format)
    _print_features(features)
    return EXIT_OK


def _session_dirs(cohort_dir: Path) -> list[Path]:
    return sorted(
        p for p in cohort_dir.iterdir() if p.is_dir() and (p / SESSION_FILENAME).is_file()
    )


def cmd_batch(args: argparse.Namespace) -> int:
    cohort_dir = Path(args.cohort_dir)
    groups = parse_group_file(Path(args.groups).read_text())
    out_dir = Path(args.out) if args.out else cohort_dir / "analysis"
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _analysis_config(args)
    rows: list[CohortRow] = []
    failures: list[tuple[str, str]] = []
    for sdir in _session_dirs(cohort_dir):
        subject = sdir.name
        try:
            session, tracks = _load_session_dir(sdir)
            features = extract_features(session, tracks, config)
        except OculoError as exc:
            failures.append((subject, f"{type(exc).__name__}: {exc}"))
            continue
        feat_dir = out_dir / "features"
        feat_dir.mkdir(exist_ok=True)
        _atomic_write(feat_dir / f"{subject}.csv", write_feature_report(features, "csv"))
        if subject not in groups:
            failures.append((subject, "no group assignment"))
            continue
        rows.append(CohortRow(subject, groups[subject], features))
    failure_lines = "session,error\n" + "".join(f"{s},{e}\n" for s, e in failures)
    _atomic_write(out_dir / "failures.csv", failure_lines.encode())
    if not rows:
        raise AllSessionsFailed(f"no analyzable session in {cohort_dir}")
    _emit_boxplots(CohortTable(rows), out_dir)
    print(f"analyzed {len(rows)} sessions, {len(failures)} failures -> {out_dir}")
    return EXIT_OK


def _emit_boxplots(table: CohortTable, out_dir: Path) -> None:
    stats = boxplot_stats(normalize_cohort(table))
    _atomic_write(out_dir / "boxplots.csv", boxplot_csv(stats).encode())
    _atomic_write(out_dir / "boxplots.svg", boxplot_svg(stats).encode())


def cmd_report(args: argparse.Namespace) -> int:
    features_dir = Path(args.features_dir)
    groups = parse_group_file(Path(args.groups).read_text())
    rows = []
    for path in sorted(features_dir.glob("*.csv")):
        subject = path.stem
        if subject not in groups:
            continue
        rows.append(CohortRow(subject, groups[subject], read_feature_report(path.read_bytes())))
    if not rows:
        raise AllSessionsFailed(f"no feature files matching {args.groups} in {features_dir}")
    out_dir = Path(args.out) if args.out else features_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    _emit_boxplots(CohortTable(rows), out_dir)
    print(f"wrote boxplots for {len(rows)} subjects -> {out_dir}")
    return EXIT_OK


_SYNTH_TASKS = {
    "reflex": Task.REFLEX,
    "anti": Task.ANTI,
    "memory-training": Task.MEMORY_TRAINING,
    "memory": Task.MEMORY_MAIN,
    "pursuit": Task.PURSUIT,
}
# `--task all` bundles the four-task acquisition run; the guided memory
# training phase is generated only when asked for explicitly
_ALL_TASKS = (Task.REFLEX, Task.ANTI, Task.MEMORY_MAIN, Task.PURSUIT)


def _shift_track(track: StimulusTrack, offset_us: int) -> StimulusTrack:
    events = tuple(
        replace(e, timestamp_us=e.timestamp_us + offset_us) for e in track.events
    )
    return StimulusTrack(track.task, events, track.pursuit_frequency_hz)


def _shift_truth(truth: GroundTruth, offset_ms: float) -> GroundTruth:
    shifted = [
        replace(t, onset_ms=t.onset_ms + offset_ms,
                saccade_end_ms=t.saccade_end_ms + offset_ms,
                window_end_ms=t.window_end_ms + offset_ms)
        for t in truth.trials
    ]
    return GroundTruth(truth.task, shifted, truth.pursuit_amplitude_deg,
                       truth.pursuit_frequency_hz)


def cmd_synth(args: argparse.Namespace) -> int:
    seed = int(os.environ.get("OCULO_SEED", args.seed))
    subject = SubjectModel(
        latency_mean_ms=args.latency_mean,
        latency_sd_ms=args.latency_sd,
        saccade_gain=args.gain,
        peak_speed_deg_per_ms=args.peak_speed,
        anti_error_prob=args.anti_error_prob,
        memory_error_prob=args.memory_error_prob,
        fixation_noise_deg=args.noise_deg,
        pursuit_gain=args.pursuit_gain,
    )
    tasks = _ALL_TASKS if args.task == "all" else (_SYNTH_TASKS[args.task],)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    import numpy as np

    all_ts, all_origins, all_dirs = [], [], []
    truths, logs = [], []
    offset_us = 0
    for i, task in enumerate(tasks):
        config = ProtocolConfig(task=task, repetitions=args.reps, rate_hz=args.rate_hz,
                                interval_range_s=(args.interval_min, args.interval_max),
                                seed=seed + i)
        track = generate_protocol(config)
        session, truth = synthesize_gaze(track, subject, seed=seed + 100 + i,
                                         rate_hz=args.rate_hz)
        track = _shift_track(track, offset_us)
        truth = _shift_truth(truth, offset_us / 1000.0)
        all_ts.append(session.timestamps_us + np.uint64(offset_us))
        all_origins.append(session.origins)
        all_dirs.append(session.directions)
        truths.append(truth)
        logs.append((f"stimulus_{task.value}.log", serialize_stimulus_log(track)))
        offset_us += int(session.timestamps_us[-1]) + _SYNTH_TASK_GAP_US
    combined = RawSession(
        timestamps_us=np.concatenate(all_ts),
        origins=np.concatenate(all_origins),
        directions=np.concatenate(all_dirs),
        device_rate_hz=args.rate_hz,
        session_id=out_dir.name,
    )
    _atomic_write(out_dir / SESSION_FILENAME, serialize_session(combined))
    for name, text in logs:
        _atomic_write(out_dir / name, text.encode())
    _atomic_write(out_dir / "ground_truth.csv", ground_truth_csv(truths).encode())
    print(f"wrote synthetic session ({', '.join(t.value for t in tasks)}) -> {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oculo",
                     description="Eye-movement biomarker pipeline for MR gaze recordings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract the eleven parameters from one session")
    p.add_argument("session_dir", help="directory with session.bin and stimulus_*.log")
    p.add_argument("--out", help="output directory (default: the session directory)")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("batch", help="analyze a cohort directory and emit boxplots")
    p.add_argument("cohort_dir", help="directory of session subdirectories")
    p.add_argument("--groups", required=True, help="subject_id,group assignment file")
    p.add_argument("--out", help="output directory (default: <cohort>/analysis)")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("report", help="boxplots from already-extracted feature files")
    p.add_argument("features_dir", help="directory of per-subject feature CSVs")
    p.add_argument("--groups", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic session with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=tuple(_SYNTH_TASKS) + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0,
                   help="generator seed (env OCULO_SEED overrides)")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--rate-hz", type=int, default=30)
    p.add_argument("--interval-min", type=float, default=1.0)
    p.add_argument("--interval-max", type=float, default=3.0)
    p.add_argument("--latency-mean", type=float, default=250.0)
    p.add_argument("--latency-sd", type=float, default=30.0)
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--peak-speed", type=float, default=0.45)
    p.add_argument("--anti-error-prob", type=float, default=0.0)
    p.add_argument("--memory-error-prob", type=float, default=0.0)
    p.add_argument("--noise-deg", type=float, default=0.0)
    p.add_argument("--pursuit-gain", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except AllSessionsFailed as exc:
        print(f"batch failed: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    except AnalysisError as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
