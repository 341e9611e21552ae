"""Shared builders and independent oracle implementations.

Oracles here deliberately avoid the package's own code paths: quartiles
by explicit sort-and-interpolate, Savitzky-Golay weights via per-impulse
polyfit, gradients via index loops.
"""

from __future__ import annotations

import numpy as np
import pytest

from oculo.session_io import StimulusEvent, StimulusTrack, Task
from oculo.signal_prep import GazeTrace

RATE_HZ = 30.0
DT_MS = 1000.0 / RATE_HZ
FOV = 26.5


def make_trace(values, dt_ms: float = DT_MS, t0_ms: float = 0.0, fov: float = FOV) -> GazeTrace:
    values = np.asarray(values, dtype=np.float64)
    t = t0_ms + np.arange(len(values)) * dt_ms
    return GazeTrace(t, values, fov)


def make_track(task: Task, events, freq=None) -> StimulusTrack:
    """events: iterable of (t_ms, position_deg, is_central, trial_index)."""
    evs = tuple(
        StimulusEvent(int(round(t * 1000)), float(p), bool(c), int(i))
        for t, p, c, i in events
    )
    return StimulusTrack(task, evs, pursuit_frequency_hz=freq)


def deg(values, fov: float = FOV) -> np.ndarray:
    """Convert degrees to FOV units."""
    return np.asarray(values, dtype=np.float64) / fov


# --- independent oracles -----------------------------------------------------


def oracle_savgol_weights(window: int, order: int) -> np.ndarray:
    """Central SG weights via polyfit of unit impulses (no linear algebra
    shared with the implementation)."""
    half = (window - 1) // 2
    x = np.arange(-half, half + 1, dtype=float)
    w = np.zeros(window)
    for j in range(window):
        impulse = np.zeros(window)
        impulse[j] = 1.0
        w[j] = np.polyval(np.polyfit(x, impulse, order), 0.0)
    return w


def oracle_gradient(t_ms: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Index-loop central differences, one-sided at the ends."""
    n = len(v)
    g = np.zeros(n)
    for i in range(n):
        if i == 0:
            g[i] = (v[1] - v[0]) / (t_ms[1] - t_ms[0])
        elif i == n - 1:
            g[i] = (v[n - 1] - v[n - 2]) / (t_ms[n - 1] - t_ms[n - 2])
        else:
            g[i] = (v[i + 1] - v[i - 1]) / (t_ms[i + 1] - t_ms[i - 1])
    return g


def oracle_quartiles(values) -> tuple[float, float, float, float, float]:
    """Sort-based linear interpolation of the 25/50/75 percentiles."""
    xs = sorted(values)
    n = len(xs)

    def pct(q: float) -> float:
        if n == 1:
            return xs[0]
        pos = q * (n - 1)
        lo = int(np.floor(pos))
        hi = int(np.ceil(pos))
        frac = pos - lo
        return xs[lo] * (1 - frac) + xs[hi] * frac

    return xs[0], pct(0.25), pct(0.5), pct(0.75), xs[-1]


def oracle_population_std(values) -> float:
    """Two-pass textbook population standard deviation."""
    values = list(values)
    m = sum(values) / len(values)
    return (sum((v - m) ** 2 for v in values) / len(values)) ** 0.5


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
