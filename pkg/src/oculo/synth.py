"""Protocol generation and ground-truth gaze synthesis.

Stimulus protocols follow the acquisition procedure: saccadic tasks show
a central pre-cue before each peripheral point, points land at +/-10 or
+/-20 degrees, and every display interval is drawn uniformly from 1-3 s.
The pursuit target swings between -15 and +15 degrees at 0.2 or 0.4 Hz.

The subject model renders each saccade as a logistic step whose peak
velocity matches peak_speed_deg_per_ms, plants anti/memory direction
errors as Bernoulli draws (realized labels are recorded, never expected
counts), and adds Gaussian fixation noise. All randomness comes from a
PCG64 generator, a named algorithm with published constants, so a seed
reproduces sessions byte for byte; draws are consumed in event order,
noise last.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .session_io import (
    RawSession,
    StimulusEvent,
    StimulusTrack,
    Task,
)

_PROTOCOL_START_S = 1.0  # pre-roll so the first stimulus has a baseline
_SESSION_TAIL_S = 1.5    # recording continues past the last event


@dataclass(frozen=True)
class ProtocolConfig:
    task: Task = Task.REFLEX
    repetitions: Optional[int] = None  # 10 for memory training, else 30
    interval_range_s: tuple[float, float] = (1.0, 3.0)
    positions_deg: tuple[float, ...] = (-20.0, -10.0, 10.0, 20.0)
    pursuit_amp_deg: float = 15.0
    pursuit_freqs_hz: tuple[float, ...] = (0.2, 0.4)
    rate_hz: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.interval_range_s
        if not (0 < lo <= hi):
            raise ValueError("interval range must be positive and ordered")
        if self.repetitions is not None and self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.rate_hz < 1:
            raise ValueError("rate_hz must be >= 1")

    @property
    def effective_repetitions(self) -> int:
        if self.repetitions is not None:
            return self.repetitions
        return 10 if self.task is Task.MEMORY_TRAINING else 30


@dataclass(frozen=True)
class SubjectModel:
    latency_mean_ms: float = 250.0
    latency_sd_ms: float = 30.0
    saccade_gain: float = 1.0
    peak_speed_deg_per_ms: float = 0.45
    anti_error_prob: float = 0.0
    memory_error_prob: float = 0.0
    fixation_noise_deg: float = 0.0
    pursuit_gain: float = 1.0
    pursuit_lag_ms: float = 100.0

    def __post_init__(self) -> None:
        for p in (self.anti_error_prob, self.memory_error_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("error probabilities must lie in [0, 1]")
        if self.saccade_gain <= 0 or self.pursuit_gain <= 0:
            raise ValueError("gains must be positive")
        if self.peak_speed_deg_per_ms <= 0:
            raise ValueError("peak speed must be positive")
        if self.fixation_noise_deg < 0:
            raise ValueError("noise must be non-negative")


@dataclass(frozen=True)
class TrialTruth:
    task: Task
    trial_index: int
    stimulus_deg: float
    onset_ms: float
    aim_deg: float
    latency_ms: float
    label: Optional[str]          # "correct" / "incorrect" / None
    saccade_end_ms: float
    window_end_ms: float


@dataclass
class GroundTruth:
    task: Task
    trials: list[TrialTruth] = field(default_factory=list)
    pursuit_amplitude_deg: Optional[float] = None
    pursuit_frequency_hz: Optional[float] = None

    @property
    def mean_latency_ms(self) -> Optional[float]:
        lats = [t.latency_ms for t in self.trials]
        return float(np.mean(lats)) if lats else None

    @property
    def incorrect_ratio(self) -> Optional[float]:
        labeled = [t for t in self.trials if t.label is not None]
        if not labeled:
            return None
        wrong = sum(1 for t in labeled if t.label == "incorrect")
        return wrong / len(labeled)


def generate_protocol(config: ProtocolConfig) -> StimulusTrack:
    """Deterministic stimulus track for one task under the config's seed."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    if config.task is Task.PURSUIT:
        return _pursuit_protocol(config, rng)
    events = []
    t_s = _PROTOCOL_START_S
    lo, hi = config.interval_range_s
    for trial in range(config.effective_repetitions):
        events.append(StimulusEvent(int(round(t_s * 1e6)), 0.0, True, trial))
        t_s += rng.uniform(lo, hi)
        pos = float(config.positions_deg[rng.integers(0, len(config.positions_deg))])
        events.append(StimulusEvent(int(round(t_s * 1e6)), pos, False, trial))
        t_s += rng.uniform(lo, hi)
    return StimulusTrack(config.task, tuple(events))


def _pursuit_protocol(config: ProtocolConfig, rng: np.random.Generator) -> StimulusTrack:
    freq = float(config.pursuit_freqs_hz[rng.integers(0, len(config.pursuit_freqs_hz))])
    cycles = config.effective_repetitions
    n = int(round(cycles / freq * config.rate_hz))
    events = []
    for k in range(n):
        t_rel_s = k / config.rate_hz
        # one full swing runs -15 -> +15 -> -15
        pos = -config.pursuit_amp_deg * np.cos(2.0 * np.pi * freq * t_rel_s)
        t_us = int(round((_PROTOCOL_START_S + t_rel_s) * 1e6))
        events.append(StimulusEvent(t_us, float(pos), False, int(freq * t_rel_s)))
    return StimulusTrack(Task.PURSUIT, tuple(events), pursuit_frequency_hz=freq)


def _sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def synthesize_gaze(
    track: StimulusTrack,
    subject: SubjectModel = SubjectModel(),
    seed: int = 0,
    rate_hz: int = 30,
    session_id: str = "synthetic",
) -> tuple[RawSession, GroundTruth]:
    """Render a session responding to the track, with per-trial ground truth."""
    rng = np.random.Generator(np.random.PCG64(seed))
    last_ms = track.events[-1].timestamp_us / 1000.0 if track.events else 0.0
    n = int(round((last_ms / 1000.0 + _SESSION_TAIL_S) * rate_hz)) + 1
    t_us = np.round(np.arange(n) * 1e6 / rate_hz).astype(np.uint64)
    t_ms = t_us.astype(np.float64) / 1000.0
    if track.task is Task.PURSUIT:
        deg, truth = _pursuit_gaze(track, subject, t_ms)
    else:
        deg, truth = _saccadic_gaze(track, subject, rng, t_ms, rate_hz)
    if subject.fixation_noise_deg > 0:
        deg = deg + rng.normal(0.0, subject.fixation_noise_deg, n)
    theta = np.radians(deg)
    directions = np.column_stack([np.sin(theta), np.zeros(n), np.cos(theta)])
    session = RawSession(
        timestamps_us=t_us,
        origins=np.zeros((n, 3)),
        directions=directions,
        device_rate_hz=rate_hz,
        session_id=session_id,
    )
    return session, truth


def _saccadic_gaze(
    track: StimulusTrack,
    subject: SubjectModel,
    rng: np.random.Generator,
    t_ms: np.ndarray,
    rate_hz: int,
) -> tuple[np.ndarray, GroundTruth]:
    latency_floor = 2.0 * 1000.0 / rate_hz
    periph = track.peripheral_events()
    truth = GroundTruth(track.task)
    deg = np.zeros_like(t_ms)
    aim = 0.0
    periph_seen = 0
    for ev in track.events:
        onset_ms = ev.timestamp_us / 1000.0
        latency = max(latency_floor, rng.normal(subject.latency_mean_ms, subject.latency_sd_ms))
        if ev.is_central:
            target, label = 0.0, None
        else:
            target, label = _peripheral_aim(track.task, subject, rng, periph, periph_seen)
            periph_seen += 1
        delta = target - aim
        start_ms = onset_ms + latency
        tau = max(abs(delta) / (4.0 * subject.peak_speed_deg_per_ms), 1e-3)
        if delta != 0.0:
            deg += delta * _sigmoid((t_ms - (start_ms + 3.0 * tau)) / tau)
        if not ev.is_central:
            window_end = (
                periph[periph_seen].timestamp_us / 1000.0
                if periph_seen < len(periph)
                else float(t_ms[-1])
            )
            truth.trials.append(
                TrialTruth(
                    task=track.task,
                    trial_index=ev.trial_index,
                    stimulus_deg=ev.position_deg,
                    onset_ms=onset_ms,
                    aim_deg=target,
                    latency_ms=latency,
                    label=label,
                    saccade_end_ms=start_ms + 6.0 * tau,
                    window_end_ms=window_end,
                )
            )
        aim = target
    return deg, truth


def _peripheral_aim(
    task: Task,
    subject: SubjectModel,
    rng: np.random.Generator,
    periph: list[StimulusEvent],
    index: int,
) -> tuple[float, Optional[str]]:
    pos = periph[index].position_deg
    gain = subject.saccade_gain
    if task is Task.REFLEX:
        return gain * pos, None
    if task is Task.ANTI:
        err = bool(rng.random() < subject.anti_error_prob)
        return (gain * pos, "incorrect") if err else (-gain * pos, "correct")
    # memory tasks aim at the previous stimulus location; the first trial has
    # no predecessor and is never scored
    err = bool(rng.random() < subject.memory_error_prob)
    if index == 0:
        return gain * pos, None
    prev = periph[index - 1].position_deg
    if task is Task.MEMORY_TRAINING:
        return gain * prev, None  # guided phase: no planted errors, not scored
    # a planted error (chasing the current point) only reads as incorrect
    # when the current point sits on the other side of the previous one
    if err and np.sign(pos) != np.sign(prev):
        return gain * pos, "incorrect"
    return gain * prev, "correct"


def _pursuit_gaze(
    track: StimulusTrack, subject: SubjectModel, t_ms: np.ndarray
) -> tuple[np.ndarray, GroundTruth]:
    freq = track.pursuit_frequency_hz
    amp = max(abs(e.position_deg) for e in track.events)
    t0_ms = track.events[0].timestamp_us / 1000.0
    tau_s = np.clip(t_ms - subject.pursuit_lag_ms - t0_ms, 0.0, None) / 1000.0
    deg = -subject.pursuit_gain * amp * np.cos(2.0 * np.pi * freq * tau_s)
    truth = GroundTruth(
        Task.PURSUIT,
        pursuit_amplitude_deg=subject.pursuit_gain * amp,
        pursuit_frequency_hz=freq,
    )
    return deg, truth


def ground_truth_csv(truths: list[GroundTruth]) -> str:
    """Per-trial ground truth rows; pursuit tasks emit one summary row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["task", "trial_index", "stimulus_deg", "onset_ms", "aim_deg", "latency_ms",
         "label", "saccade_end_ms", "window_end_ms", "pursuit_amp_deg", "pursuit_freq_hz"]
    )
    for gt in truths:
        if gt.task is Task.PURSUIT:
            w.writerow([gt.task.value, "", "", "", "", "", "", "", "",
                        repr(gt.pursuit_amplitude_deg), repr(gt.pursuit_frequency_hz)])
            continue
        for tr in gt.trials:
            w.writerow(
                [gt.task.value, tr.trial_index, repr(tr.stimulus_deg), repr(tr.onset_ms),
                 repr(tr.aim_deg), repr(tr.latency_ms), tr.label or "",
                 repr(tr.saccade_end_ms), repr(tr.window_end_ms), "", ""]
            )
    return buf.getvalue()
