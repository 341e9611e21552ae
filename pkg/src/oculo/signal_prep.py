"""Horizontal trace extraction and the shared numerical kernels.

The horizontal gaze angle is the arcsine of the unit direction's x
component; origin translation is ignored because stimulus positions are
angular, relative to the head. Angles are normalized to field-of-view
units (angle / fov_half_angle_deg), so 1.0 marks the edge of view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadOrder, BadWindow, EmptySession, EmptyTrack, TraceTooShort
from .session_io import GazeSample, RawSession, StimulusTrack

DEFAULT_FOV_HALF_ANGLE_DEG = 26.5


@dataclass
class GazeTrace:
    """Uniformly indexed horizontal series; also reused for derived series."""

    timestamps_ms: np.ndarray
    values: np.ndarray
    fov_half_angle_deg: float = DEFAULT_FOV_HALF_ANGLE_DEG

    def __post_init__(self) -> None:
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps_ms.shape != self.values.shape:
            raise ValueError("timestamps and values must have equal length")
        if len(self.timestamps_ms) > 1 and not np.all(np.diff(self.timestamps_ms) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if not np.isfinite(self.values).all():
            raise ValueError("trace values must be finite")
        if self.fov_half_angle_deg <= 0:
            raise ValueError("fov_half_angle_deg must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values: np.ndarray) -> "GazeTrace":
        return GazeTrace(self.timestamps_ms, values, self.fov_half_angle_deg)


@dataclass(frozen=True)
class FilterConfig:
    window: int = 9
    polyorder: int = 3

    def __post_init__(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise BadWindow(f"window must be odd and >= 3, got {self.window}")
        if self.polyorder < 1 or self.polyorder >= self.window:
            raise BadOrder(f"polyorder must be in [1, window), got {self.polyorder}")


def gaze_position(sample: GazeSample) -> np.ndarray:
    """Gaze point in device frame: origin plus unit direction."""
    return np.asarray(sample.origin, dtype=np.float64) + np.asarray(
        sample.direction, dtype=np.float64
    )


def horizontal_trace(
    session: RawSession, fov_half_angle_deg: float = DEFAULT_FOV_HALF_ANGLE_DEG
) -> GazeTrace:
    """FOV-normalized horizontal angle series with ms timestamps."""
    if len(session) == 0:
        raise EmptySession("session has no samples")
    if fov_half_angle_deg <= 0:
        raise ValueError("fov_half_angle_deg must be positive")
    x = np.clip(session.directions[:, 0], -1.0, 1.0)
    angles_deg = np.degrees(np.arcsin(x))
    return GazeTrace(
        timestamps_ms=session.timestamps_us.astype(np.float64) / 1000.0,
        values=angles_deg / fov_half_angle_deg,
        fov_half_angle_deg=fov_half_angle_deg,
    )


def savgol_kernel(config: FilterConfig) -> np.ndarray:
    """Least-squares polynomial smoothing weights for the window's center.

    Row 0 of the pseudoinverse of the Vandermonde design matrix: applying
    these weights to a window equals evaluating the fitted polynomial at
    the central sample. Weights sum to 1 (a constant passes unchanged).
    """
    half = (config.window - 1) // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    design = np.vander(x, config.polyorder + 1, increasing=True)
    return np.linalg.pinv(design)[0]


def savgol_filter(trace: GazeTrace, config: FilterConfig = FilterConfig()) -> GazeTrace:
    """Smooth a trace; edges use a one-sided polynomial fit, no padding."""
    n = len(trace)
    if n < config.window:
        raise TraceTooShort(f"need at least {config.window} samples, got {n}")
    values = trace.values
    half = (config.window - 1) // 2
    kernel = savgol_kernel(config)
    out = np.convolve(values, kernel[::-1], mode="same")
    # edge samples: fit the polynomial to the one-sided end window and
    # evaluate it at the edge positions instead of inventing padding
    idx = np.arange(config.window, dtype=np.float64)
    head = np.polyfit(idx, values[: config.window], config.polyorder)
    out[:half] = np.polyval(head, idx[:half])
    tail = np.polyfit(idx, values[n - config.window:], config.polyorder)
    out[n - half:] = np.polyval(tail, idx[config.window - half:])
    return trace.with_values(out)


def gradient(trace: GazeTrace) -> GazeTrace:
    """Time derivative per millisecond: central differences over actual
    timestamp spacing on the interior, one-sided at both ends."""
    n = len(trace)
    if n < 2:
        raise TraceTooShort("gradient needs at least 2 samples")
    t = trace.timestamps_ms
    v = trace.values
    g = np.empty(n, dtype=np.float64)
    g[1:-1] = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    g[0] = (v[1] - v[0]) / (t[1] - t[0])
    g[-1] = (v[-1] - v[-2]) / (t[-1] - t[-2])
    return trace.with_values(g)


def resample_stimuli(track: StimulusTrack, timestamps_ms: np.ndarray) -> GazeTrace:
    """Zero-order hold of stimulus positions at the given gaze timestamps.

    Each output point carries the latest event position at or before it;
    points before the first event carry 0.
    """
    if not track.events:
        raise EmptyTrack("stimulus track has no events")
    timestamps_ms = np.asarray(timestamps_ms, dtype=np.float64)
    ev_t = np.array([e.timestamp_us for e in track.events], dtype=np.float64) / 1000.0
    ev_pos = np.array([e.position_deg for e in track.events], dtype=np.float64)
    idx = np.searchsorted(ev_t, timestamps_ms, side="right") - 1
    held = np.where(idx >= 0, ev_pos[np.clip(idx, 0, None)], 0.0)
    return GazeTrace(timestamps_ms, held, fov_half_angle_deg=1.0)


def slice_trace(trace: GazeTrace, start_ms: float, end_ms: float) -> GazeTrace:
    """Sub-trace with timestamps in [start_ms, end_ms]."""
    lo = np.searchsorted(trace.timestamps_ms, start_ms, side="left")
    hi = np.searchsorted(trace.timestamps_ms, end_ms, side="right")
    return GazeTrace(
        trace.timestamps_ms[lo:hi], trace.values[lo:hi], trace.fov_half_angle_deg
    )
