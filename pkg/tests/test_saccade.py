import numpy as np
import pytest

from conftest import DT_MS, FOV, deg, make_trace, make_track, oracle_population_std
from oculo.errors import TraceTooShort, WrongTask
from oculo.saccade import DetectionConfig, detect_saccades, signal_std
from oculo.session_io import Task


def step_session(jump_ms=1200.0, target_deg=10.0, n=90, start_deg=0.0):
    """Trace holding start_deg, jumping to target_deg at jump_ms."""
    t = np.arange(n) * DT_MS
    values = np.where(t < jump_ms, deg(start_deg), deg(start_deg + target_deg))
    return make_trace(values)


class TestSignalStd:
    def test_constant_trace(self):
        assert signal_std(make_trace(np.full(10, 0.4))) == 0.0

    def test_symmetric_two_point(self):
        assert signal_std(make_trace([-1.0, 1.0] * 8)) == 1.0

    def test_matches_two_pass_oracle(self, rng):
        values = rng.uniform(-1, 1, size=500)
        assert signal_std(make_trace(values)) == pytest.approx(
            oracle_population_std(values), abs=1e-12
        )

    def test_too_short(self):
        with pytest.raises(TraceTooShort):
            signal_std(make_trace([0.1]))


class TestDetectSaccades:
    def test_ideal_step_detected_at_jump(self):
        # stimulus at 1000 ms, gaze steps 200 ms later; trace std ~0.18 FOV
        trace = step_session()
        track = make_track(Task.REFLEX, [(900, 0, True, 0), (1000, 10, False, 0)])
        assert 0.15 < signal_std(trace) < 0.20
        (m,) = detect_saccades(trace, track)
        assert m.present
        assert m.saccade_timestamp_ms == pytest.approx(1200.0, abs=1e-9)
        assert m.latency_ms == pytest.approx(200.0, abs=1e-9)
        assert m.displacement_sign == 1

    def test_flat_trace_yields_absent_matches(self):
        trace = make_trace(np.full(150, 0.2))
        track = make_track(
            Task.REFLEX,
            [(1000, 10, False, 0), (2000, -20, False, 1), (3000, 20, False, 2)],
        )
        matches = detect_saccades(trace, track)
        assert len(matches) == 3
        assert all(not m.present for m in matches)

    def test_late_response_attributed_to_next_window_only(self):
        # response crosses threshold only after the second stimulus appears
        trace = step_session(jump_ms=2400.0, target_deg=10.0)
        track = make_track(
            Task.REFLEX,
            [(1000, 10, False, 0), (2000, 10, False, 1)],
        )
        first, second = detect_saccades(trace, track)
        assert not first.present
        assert second.present
        assert second.saccade_timestamp_ms == pytest.approx(2400.0, abs=1e-9)

    def test_window_containment_invariant(self, rng):
        values = rng.normal(0, 0.1, size=400)
        trace = make_trace(values)
        events = [(500 + 1200 * i, float(rng.choice([-20, -10, 10, 20])), False, i)
                  for i in range(8)]
        track = make_track(Task.REFLEX, events)
        periph = track.peripheral_events()
        for i, m in enumerate(detect_saccades(trace, track)):
            if not m.present:
                continue
            start = periph[i].timestamp_us / 1000.0
            end = periph[i + 1].timestamp_us / 1000.0 if i + 1 < len(periph) else np.inf
            assert start <= m.saccade_timestamp_ms < end

    def test_translation_invariance(self, rng):
        values = rng.normal(0, 0.05, size=300)
        track = make_track(Task.REFLEX, [(1000, 10, False, 0), (4000, -10, False, 1)])
        base = detect_saccades(make_trace(values), track)
        shifted = detect_saccades(make_trace(values + 0.37), track)
        assert [m.saccade_index for m in base] == [m.saccade_index for m in shifted]

    def test_reflection_equivariance(self, rng):
        values = rng.normal(0, 0.05, size=300).cumsum() * 0.05
        track = make_track(Task.REFLEX, [(1000, 10, False, 0), (4000, -20, False, 1)])
        mirror = make_track(Task.REFLEX, [(1000, -10, False, 0), (4000, 20, False, 1)])
        a = detect_saccades(make_trace(values), track)
        b = detect_saccades(make_trace(-values), mirror)
        assert [m.saccade_index for m in a] == [m.saccade_index for m in b]
        for ma, mb in zip(a, b):
            if ma.present:
                assert mb.displacement_sign == -ma.displacement_sign

    def test_lower_amplitude_factor_never_later(self, rng):
        values = rng.normal(0, 0.08, size=600).cumsum() * 0.02
        events = [(400 + 900 * i, float(rng.choice([-20, -10, 10, 20])), False, i)
                  for i in range(12)]
        track = make_track(Task.REFLEX, events)
        trace = make_trace(values)
        strict = detect_saccades(trace, track, DetectionConfig(amplitude_factor=0.5))
        loose = detect_saccades(trace, track, DetectionConfig(amplitude_factor=0.25))
        for s, l in zip(strict, loose):
            if s.present:
                assert l.present and l.saccade_index <= s.saccade_index

    def test_tie_at_threshold_does_not_trigger(self):
        # values alternate exactly +/- 1: std = 1, threshold = 0.5; with the
        # baseline at +1 a displacement of exactly 0.5 must not fire
        values = np.array([1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, -1.0, -1.0, 1.0, -1.0])
        sd = signal_std(make_trace(values))
        track = make_track(Task.REFLEX, [(100, 10, False, 0)])
        # baseline is 1.0; the 0.5-valued samples displace by exactly the threshold
        cfg = DetectionConfig(amplitude_factor=0.5 / sd)
        (m,) = detect_saccades(make_trace(values), track, cfg)
        assert m.saccade_index == 8  # first strict exceedance, not the 0.5 ties

    def test_pursuit_track_rejected(self):
        track = make_track(Task.PURSUIT, [(0, 0.0, False, 0)])
        with pytest.raises(WrongTask):
            detect_saccades(make_trace(np.zeros(10)), track)

    def test_central_events_are_not_targets(self):
        trace = step_session()
        track = make_track(
            Task.REFLEX,
            [(500, 0, True, 0), (1000, 10, False, 0), (2500, 0, True, 1)],
        )
        matches = detect_saccades(trace, track)
        assert len(matches) == 1
        assert matches[0].stimulus.position_deg == 10
