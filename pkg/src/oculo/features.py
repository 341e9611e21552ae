"""The eleven per-session clinical parameters.

Reflex: latency, speed, amplitudes at 10/20 degrees, fixation time.
Anti: latency of the first correctly directed saccade, incorrect ratio.
Memory: incorrect ratio against the previous stimulus side.
Pursuit: mean/std of gaze speed and RMS of acceleration.

All speeds and accelerations are reported in degrees (per ms, per ms^2),
converted from FOV units via the trace's half field-of-view angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateGradient,
    FeatureUndefined,
    MissingStimulusClass,
    NoCorrectSaccades,
    NoSaccadesDetected,
    TooFewTrials,
    TraceTooShort,
    WrongTask,
)
from .saccade import (
    DetectionConfig,
    SaccadeMatch,
    detect_saccades,
    pre_stimulus_baseline,
    signal_std,
    stimulus_windows,
)
from .session_io import FeatureSet, RawSession, StimulusTrack, Task
from .signal_prep import (
    DEFAULT_FOV_HALF_ANGLE_DEG,
    FilterConfig,
    GazeTrace,
    gradient,
    horizontal_trace,
    savgol_filter,
    slice_trace,
)

# z-score constant from the modified Z-score definition: 0.6745 * (x - median) / MAD
_MODIFIED_Z_SCALE = 0.6745


@dataclass(frozen=True)
class FixationConfig:
    threshold_fraction: float = 0.05
    min_fixation_ms: float = 50.0
    zscore_cutoff: float = 3.5
    speed_radius_samples: int = 20

    def __post_init__(self) -> None:
        if min(self.threshold_fraction, self.min_fixation_ms, self.zscore_cutoff) <= 0:
            raise ValueError("fixation config values must be positive")
        if self.speed_radius_samples <= 0:
            raise ValueError("speed_radius_samples must be positive")


def _present(matches: Sequence[SaccadeMatch]) -> list[SaccadeMatch]:
    return [m for m in matches if m.present]


def reflex_latency(matches: Sequence[SaccadeMatch]) -> float:
    """Mean saccade-minus-stimulus time over stimuli with a response."""
    present = _present(matches)
    if not present:
        raise NoSaccadesDetected("no saccade points to average")
    return float(np.mean([m.latency_ms for m in present]))


def filtered_gradient(trace: GazeTrace, filter_config: FilterConfig) -> GazeTrace:
    """Gradient of the (already filtered) trace, smoothed once more."""
    return savgol_filter(gradient(trace), filter_config)


def reflex_speed(
    trace: GazeTrace,
    matches: Sequence[SaccadeMatch],
    config: FixationConfig = FixationConfig(),
    filter_config: FilterConfig = FilterConfig(),
) -> float:
    """Mean over saccades of the peak filtered speed near the saccade point."""
    radius = config.speed_radius_samples
    if len(trace) <= 2 * radius:
        raise TraceTooShort(f"need more than {2 * radius} samples")
    present = _present(matches)
    if not present:
        raise NoSaccadesDetected("no saccade points")
    g = np.abs(filtered_gradient(trace, filter_config).values)
    speeds = []
    for m in present:
        lo = max(0, m.saccade_index - radius)
        hi = min(len(g), m.saccade_index + radius + 1)
        speeds.append(np.max(g[lo:hi]))
    return float(np.mean(speeds)) * trace.fov_half_angle_deg


def reflex_amplitudes(
    trace: GazeTrace,
    track: StimulusTrack,
    detection: DetectionConfig = DetectionConfig(),
) -> tuple[float, float]:
    """Mean absolute gaze displacement from the trial baseline, in degrees,
    over all samples whose zero-order-held stimulus is at 10 resp. 20 deg."""
    buckets: dict[float, list[np.ndarray]] = {10.0: [], 20.0: []}
    t = trace.timestamps_ms
    events = track.events
    for i, ev in enumerate(events):
        if ev.is_central:
            continue
        aim = abs(ev.position_deg)
        if aim not in buckets:
            continue
        start = ev.timestamp_us / 1000.0
        # the held stimulus changes at the next event of any kind
        end = events[i + 1].timestamp_us / 1000.0 if i + 1 < len(events) else np.inf
        baseline = pre_stimulus_baseline(trace, start, detection.baseline_window_ms)
        lo = np.searchsorted(t, start, side="left")
        hi = len(t) if np.isinf(end) else np.searchsorted(t, end, side="left")
        if hi > lo:
            buckets[aim].append(np.abs(trace.values[lo:hi] - baseline))
    if not buckets[10.0] or not buckets[20.0]:
        raise MissingStimulusClass("track lacks 10 or 20 degree stimuli")
    amp10 = float(np.mean(np.concatenate(buckets[10.0]))) * trace.fov_half_angle_deg
    amp20 = float(np.mean(np.concatenate(buckets[20.0]))) * trace.fov_half_angle_deg
    return amp10, amp20


def gradient_threshold(g_abs: np.ndarray, config: FixationConfig) -> float:
    """Gaze-stabilization threshold: a fraction of the standard deviation of
    the gradient magnitudes after modified-Z-score outlier removal."""
    median = float(np.median(g_abs))
    mad = float(np.median(np.abs(g_abs - median)))
    if mad == 0.0:
        raise DegenerateGradient("gradient MAD is zero")
    z = _MODIFIED_Z_SCALE * (g_abs - median) / mad
    cleaned = g_abs[np.abs(z) <= config.zscore_cutoff]
    return config.threshold_fraction * float(np.std(cleaned))


def fixation_times(
    trace: GazeTrace,
    matches: Sequence[SaccadeMatch],
    track: StimulusTrack,
    config: FixationConfig = FixationConfig(),
    filter_config: FilterConfig = FilterConfig(),
) -> float:
    """Mean post-saccade fixation duration.

    From each saccade point, a fixation starts at the first sample whose
    filtered gradient magnitude drops below the stabilization threshold
    and ends at the next sample at or above it (or at the window end).
    Fixations shorter than min_fixation_ms are microfixations: discarded,
    with the scan resuming from their end. A trial whose window holds only
    microfixations contributes the longest of them.
    """
    present = _present(matches)
    if not present:
        raise NoSaccadesDetected("no saccade points")
    g = np.abs(filtered_gradient(trace, filter_config).values)
    threshold = gradient_threshold(g, config)
    t = trace.timestamps_ms
    n = len(t)
    windows = {ev: (start, end) for ev, start, end in stimulus_windows(track)}
    durations = []
    for m in present:
        _, window_end = windows[m.stimulus]
        end_time = float(min(window_end, t[-1]))
        fixation = None
        micro: list[float] = []
        i = m.saccade_index + 1  # the datapoint must come after the saccade
        while True:
            while i < n and t[i] < window_end and g[i] >= threshold:
                i += 1
            if i >= n or t[i] >= window_end:
                break
            start_i = i
            while i < n and t[i] < window_end and g[i] < threshold:
                i += 1
            if i < n and t[i] < window_end:
                duration = t[i] - t[start_i]  # ended by gradient rising again
            else:
                duration = end_time - t[start_i]  # truncated by the window
            if duration >= config.min_fixation_ms:
                fixation = duration
                break
            micro.append(duration)
        if fixation is not None:
            durations.append(fixation)
        elif micro:
            durations.append(max(micro))
    if not durations:
        raise NoSaccadesDetected("no fixation measurable in any trial window")
    return float(np.mean(durations))


def anti_latency(
    trace: GazeTrace,
    track: StimulusTrack,
    detection: DetectionConfig = DetectionConfig(),
) -> float:
    """Mean latency of the first saccade in the correct (mirror) direction;
    an initial wrong-direction crossing does not end the search."""
    if track.task is not Task.ANTI:
        raise WrongTask("anti latency requires an anti-saccade track")
    if len(trace) < 2:
        raise TraceTooShort("trace too short")
    threshold = detection.amplitude_factor * signal_std(trace)
    t = trace.timestamps_ms
    v = trace.values
    latencies = []
    for ev, start, end in stimulus_windows(track):
        baseline = pre_stimulus_baseline(trace, start, detection.baseline_window_ms)
        correct_sign = -np.sign(ev.position_deg)
        lo = np.searchsorted(t, start, side="left")
        hi = len(t) if np.isinf(end) else np.searchsorted(t, end, side="left")
        disp = v[lo:hi] - baseline
        hit = (np.abs(disp) > threshold) & (np.sign(disp) == correct_sign)
        if hit.any():
            latencies.append(t[lo + int(np.argmax(hit))] - start)
    if not latencies:
        raise NoCorrectSaccades("no correctly directed saccades")
    return float(np.mean(latencies))


def anti_incorrect_ratio(
    trace: GazeTrace,
    track: StimulusTrack,
    detection: DetectionConfig = DetectionConfig(),
) -> float:
    """Fraction of responded stimuli whose first saccade went toward them."""
    if track.task is not Task.ANTI:
        raise WrongTask("anti ratio requires an anti-saccade track")
    responded = _present(detect_saccades(trace, track, detection))
    if not responded:
        raise NoSaccadesDetected("no saccades in any stimulus window")
    incorrect = sum(
        1 for m in responded if m.displacement_sign == np.sign(m.stimulus.position_deg)
    )
    return incorrect / len(responded)


def memory_incorrect_ratio(
    trace: GazeTrace,
    track: StimulusTrack,
    detection: DetectionConfig = DetectionConfig(),
) -> float:
    """Fraction of responded stimuli (beyond the first) whose first saccade
    went to the opposite side of the previous stimulus."""
    if track.task is not Task.MEMORY_MAIN:
        raise WrongTask("memory ratio requires the main memory track")
    periph = track.peripheral_events()
    if len(periph) < 2:
        raise TooFewTrials("memory scoring needs at least 2 peripheral stimuli")
    matches = detect_saccades(trace, track, detection)
    correct = incorrect = 0
    for i, m in enumerate(matches):
        if i == 0 or not m.present:  # trial 0 has no predecessor
            continue
        if m.displacement_sign == np.sign(periph[i - 1].position_deg):
            correct += 1
        else:
            incorrect += 1
    total = correct + incorrect
    if total == 0:
        raise NoSaccadesDetected("no scorable memory saccades")
    return incorrect / total


def pursuit_features(trace: GazeTrace) -> tuple[float, float, float]:
    """(speed_mean, speed_std, accel_rms) in deg/ms and deg/ms^2.

    Speed is the gradient of the absolute gaze signal; its mean is taken
    over magnitudes, its std over the signed series. Acceleration is the
    second derivative of the signed signal.
    """
    if len(trace) < 3:
        raise TraceTooShort("pursuit features need at least 3 samples")
    fov = trace.fov_half_angle_deg
    speed = gradient(trace.with_values(np.abs(trace.values))).values * fov
    accel = gradient(gradient(trace)).values * fov
    return (
        float(np.mean(np.abs(speed))),
        float(np.std(speed)),
        float(np.sqrt(np.mean(accel**2))),
    )


# --- whole-session assembly -------------------------------------------------

# how far beyond the task's stimulus events the trace segment extends
_SEGMENT_PRE_MS = 500.0
_SEGMENT_POST_MS = 2000.0


@dataclass(frozen=True)
class AnalysisConfig:
    fov_half_angle_deg: float = DEFAULT_FOV_HALF_ANGLE_DEG
    filter: FilterConfig = FilterConfig()
    detection: DetectionConfig = DetectionConfig()
    fixation: FixationConfig = FixationConfig()


def task_segment(trace: GazeTrace, track: StimulusTrack) -> GazeTrace:
    """Slice the session trace around one task's stimulus events."""
    first = track.events[0].timestamp_us / 1000.0
    last = track.events[-1].timestamp_us / 1000.0
    if track.task is Task.PURSUIT:
        return slice_trace(trace, first, last)
    return slice_trace(trace, first - _SEGMENT_PRE_MS, last + _SEGMENT_POST_MS)


def extract_features(
    session: RawSession,
    tracks: Sequence[StimulusTrack],
    config: AnalysisConfig = AnalysisConfig(),
) -> FeatureSet:
    """Run the full per-session pipeline; tasks that yield no valid events
    leave their parameters absent rather than failing the session."""
    trace = horizontal_trace(session, config.fov_half_angle_deg)
    features = FeatureSet()
    for track in tracks:
        if not track.events:
            continue
        filtered = savgol_filter(task_segment(trace, track), config.filter)
        if track.task is Task.PURSUIT:
            ssd, sss, ssa = pursuit_features(filtered)
            features.pursuit_speed_mean_deg_per_ms = ssd
            features.pursuit_speed_std_deg_per_ms = sss
            features.pursuit_accel_rms_deg_per_ms2 = ssa
            continue
        if track.task is Task.REFLEX:
            matches = detect_saccades(filtered, track, config.detection)
            features.reflex_latency_ms = _absent_on_undefined(reflex_latency, matches)
            features.reflex_speed_deg_per_ms = _absent_on_undefined(
                reflex_speed, filtered, matches, config.fixation, config.filter
            )
            amps = _absent_on_undefined(reflex_amplitudes, filtered, track, config.detection)
            if amps is not None:
                features.reflex_amp10_deg, features.reflex_amp20_deg = amps
            features.reflex_fixation_ms = _absent_on_undefined(
                fixation_times, filtered, matches, track, config.fixation, config.filter
            )
        elif track.task is Task.ANTI:
            features.anti_latency_ms = _absent_on_undefined(
                anti_latency, filtered, track, config.detection
            )
            features.anti_incorrect_ratio = _absent_on_undefined(
                anti_incorrect_ratio, filtered, track, config.detection
            )
        elif track.task is Task.MEMORY_MAIN:
            features.memory_incorrect_ratio = _absent_on_undefined(
                memory_incorrect_ratio, filtered, track, config.detection
            )
        # MEMORY_TRAINING is parsed but contributes no parameters
    return features


def _absent_on_undefined(fn, *args):
    try:
        return fn(*args)
    except FeatureUndefined:
        return None
