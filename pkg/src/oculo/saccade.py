"""Saccade-point detection shared by the reflex, anti, and memory tasks.

A saccade point for a peripheral stimulus is the first sample, between
that stimulus and the next peripheral one, whose displacement from the
pre-stimulus baseline strictly exceeds half the standard deviation of
the whole filtered task trace. Central pre-cue points delimit trials but
are never matched targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TraceTooShort, WrongTask
from .session_io import StimulusEvent, StimulusTrack, Task
from .signal_prep import GazeTrace


@dataclass(frozen=True)
class DetectionConfig:
    amplitude_factor: float = 0.5
    baseline_window_ms: float = 100.0

    def __post_init__(self) -> None:
        if self.amplitude_factor <= 0:
            raise ValueError("amplitude_factor must be positive")
        if self.baseline_window_ms <= 0:
            raise ValueError("baseline_window_ms must be positive")


@dataclass(frozen=True)
class SaccadeMatch:
    """A peripheral stimulus paired with its detected response, if any."""

    stimulus: StimulusEvent
    saccade_timestamp_ms: Optional[float] = None
    saccade_index: Optional[int] = None
    displacement_sign: Optional[int] = None

    @property
    def present(self) -> bool:
        return self.saccade_index is not None

    @property
    def latency_ms(self) -> Optional[float]:
        if not self.present:
            return None
        return self.saccade_timestamp_ms - self.stimulus.timestamp_us / 1000.0


def signal_std(trace: GazeTrace) -> float:
    """Population standard deviation of the trace values."""
    if len(trace) < 2:
        raise TraceTooShort("std needs at least 2 samples")
    return float(np.std(trace.values))


def pre_stimulus_baseline(
    trace: GazeTrace, stimulus_ms: float, baseline_window_ms: float
) -> float:
    """Mean trace value over the window ending at stimulus onset.

    The window is half-open, [onset - w, onset): a sample exactly at onset
    belongs to the response, not the baseline. Falls back to the last
    sample before the stimulus (or the first sample of the trace) when the
    window holds no samples.
    """
    t = trace.timestamps_ms
    lo = np.searchsorted(t, stimulus_ms - baseline_window_ms, side="left")
    hi = np.searchsorted(t, stimulus_ms, side="left")
    if hi > lo:
        return float(np.mean(trace.values[lo:hi]))
    if hi > 0:
        return float(trace.values[hi - 1])
    return float(trace.values[0])


def stimulus_windows(track: StimulusTrack) -> list[tuple[StimulusEvent, float, float]]:
    """(event, window_start_ms, window_end_ms) per peripheral stimulus; the
    window is half-open and closed by the next peripheral stimulus."""
    periph = track.peripheral_events()
    out = []
    for i, ev in enumerate(periph):
        start = ev.timestamp_us / 1000.0
        end = periph[i + 1].timestamp_us / 1000.0 if i + 1 < len(periph) else np.inf
        out.append((ev, start, end))
    return out


def detect_saccades(
    trace: GazeTrace, track: StimulusTrack, config: DetectionConfig = DetectionConfig()
) -> list[SaccadeMatch]:
    """Match each peripheral stimulus to its first threshold-crossing sample.

    The caller passes the already-filtered trace; detection itself never
    filters. Ties at the threshold do not trigger (strict inequality).
    """
    if track.task is Task.PURSUIT:
        raise WrongTask("saccade detection applies to saccadic tasks only")
    if len(trace) < 2:
        raise TraceTooShort("trace too short for detection")
    threshold = config.amplitude_factor * signal_std(trace)
    t = trace.timestamps_ms
    v = trace.values
    matches = []
    for ev, start, end in stimulus_windows(track):
        baseline = pre_stimulus_baseline(trace, start, config.baseline_window_ms)
        lo = np.searchsorted(t, start, side="left")
        hi = len(t) if np.isinf(end) else np.searchsorted(t, end, side="left")
        crossing = np.abs(v[lo:hi] - baseline) > threshold
        if crossing.any():
            j = lo + int(np.argmax(crossing))
            sign = 1 if v[j] - baseline > 0 else -1
            matches.append(SaccadeMatch(ev, float(t[j]), j, sign))
        else:
            matches.append(SaccadeMatch(ev))
    return matches
