"""On-disk formats: binary gaze recordings, stimulus logs, feature reports.

Binary session layout (little-endian):

    magic   4s   "OMR1"
    version u16  (currently 1)
    rate_hz u16  nominal device sampling rate
    count   u32  number of samples
    samples count * { timestamp_us u64, origin 3*f32, direction 3*f32 }

Stimulus logs are line-delimited text: a header line ``# task=<name>``
(pursuit logs may append ``freq_hz=<f>``) followed by records
``timestamp_us,position_deg,is_central,trial_index``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BadMagic,
    IllegalPosition,
    MalformedRecord,
    NonFiniteField,
    NonMonotonicTimestamps,
    TruncatedPayload,
    UnknownTask,
)

MAGIC = b"OMR1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHI")
_SAMPLE_DTYPE = np.dtype([("t", "<u8"), ("o", "<f4", 3), ("d", "<f4", 3)])

# |norm - 1| beyond this is treated as corruption, not storage round-off
_DIRECTION_NORM_TOL = 1e-3

SACCADIC_POSITIONS_DEG = (-20.0, -10.0, 0.0, 10.0, 20.0)
PURSUIT_MAX_DEG = 15.0


class Task(Enum):
    REFLEX = "reflex"
    ANTI = "anti"
    MEMORY_TRAINING = "memory_training"
    MEMORY_MAIN = "memory_main"
    PURSUIT = "pursuit"

    @property
    def is_saccadic(self) -> bool:
        return self is not Task.PURSUIT


@dataclass(frozen=True)
class GazeSample:
    timestamp_us: int
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]


@dataclass
class RawSession:
    """Parsed gaze recording; arrays are parallel and sample-ordered."""

    timestamps_us: np.ndarray  # uint64, strictly increasing
    origins: np.ndarray        # (n, 3) float64
    directions: np.ndarray     # (n, 3) float64, unit length
    device_rate_hz: int
    session_id: str = ""

    def __post_init__(self) -> None:
        self.timestamps_us = np.asarray(self.timestamps_us, dtype=np.uint64)
        self.origins = np.asarray(self.origins, dtype=np.float64).reshape(-1, 3)
        self.directions = np.asarray(self.directions, dtype=np.float64).reshape(-1, 3)
        n = len(self.timestamps_us)
        if self.origins.shape[0] != n or self.directions.shape[0] != n:
            raise ValueError("session arrays must have equal lengths")

    def __len__(self) -> int:
        return len(self.timestamps_us)

    @property
    def samples(self) -> list[GazeSample]:
        return [
            GazeSample(int(t), tuple(o), tuple(d))
            for t, o, d in zip(self.timestamps_us, self.origins, self.directions)
        ]

    @classmethod
    def from_samples(
        cls, samples: Iterable[GazeSample], device_rate_hz: int, session_id: str = ""
    ) -> "RawSession":
        samples = list(samples)
        return cls(
            timestamps_us=np.array([s.timestamp_us for s in samples], dtype=np.uint64),
            origins=np.array([s.origin for s in samples], dtype=np.float64).reshape(-1, 3),
            directions=np.array([s.direction for s in samples], dtype=np.float64).reshape(-1, 3),
            device_rate_hz=device_rate_hz,
            session_id=session_id,
        )


@dataclass(frozen=True)
class StimulusEvent:
    timestamp_us: int
    position_deg: float
    is_central: bool
    trial_index: int


@dataclass
class StimulusTrack:
    task: Task
    events: tuple[StimulusEvent, ...]
    pursuit_frequency_hz: Optional[float] = None

    def __post_init__(self) -> None:
        self.events = tuple(self.events)

    def peripheral_events(self) -> list[StimulusEvent]:
        return [e for e in self.events if not e.is_central]


def parse_binary_session(data: bytes, session_id: str = "") -> RawSession:
    """Parse a binary gaze recording; never raises anything but ParseError."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not a gaze session file")
    if len(data) < _HEADER.size:
        raise TruncatedPayload("header truncated")
    _, version, rate_hz, count = _HEADER.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise BadMagic(f"unsupported format version {version}")
    payload = data[_HEADER.size:]
    if len(payload) != count * _SAMPLE_DTYPE.itemsize:
        raise TruncatedPayload(
            f"expected {count * _SAMPLE_DTYPE.itemsize} payload bytes, got {len(payload)}"
        )
    raw = np.frombuffer(payload, dtype=_SAMPLE_DTYPE)
    ts = raw["t"].copy()
    if count > 1 and not np.all(ts[1:] > ts[:-1]):
        raise NonMonotonicTimestamps("timestamps not strictly increasing")
    origins = raw["o"].astype(np.float64)
    directions = raw["d"].astype(np.float64)
    if not (np.isfinite(origins).all() and np.isfinite(directions).all()):
        raise NonFiniteField("NaN/Inf in origin or direction")
    if count:
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > _DIRECTION_NORM_TOL):
            raise NonFiniteField("direction norm too far from 1")
        directions = directions / norms[:, None]
    return RawSession(ts, origins, directions, int(rate_hz), session_id)


def serialize_session(session: RawSession) -> bytes:
    """Inverse of parse_binary_session (directions stored as float32)."""
    out = bytearray(_HEADER.pack(MAGIC, FORMAT_VERSION, session.device_rate_hz, len(session)))
    rec = np.empty(len(session), dtype=_SAMPLE_DTYPE)
    rec["t"] = session.timestamps_us
    rec["o"] = session.origins.astype(np.float32)
    rec["d"] = session.directions.astype(np.float32)
    out += rec.tobytes()
    return bytes(out)


_TASK_BY_NAME = {t.value: t for t in Task}


def parse_stimulus_log(text: str | bytes) -> StimulusTrack:
    """Parse a stimulus log, validating positions against the task's set."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("#"):
        raise UnknownTask("missing task header line")
    task, freq = _parse_header(lines[0])
    events = []
    prev_ts = None
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        parts = ln.split(",")
        if len(parts) != 4:
            raise MalformedRecord(f"expected 4 fields, got {len(parts)}: {ln!r}")
        try:
            ts = int(parts[0])
            pos = float(parts[1])
            central = _parse_bool(parts[2])
            trial = int(parts[3])
        except ValueError as exc:
            raise MalformedRecord(f"bad field in record {ln!r}") from exc
        if not math.isfinite(pos):
            raise MalformedRecord(f"non-finite position in record {ln!r}")
        if prev_ts is not None and ts <= prev_ts:
            raise NonMonotonicTimestamps("stimulus timestamps not strictly increasing")
        prev_ts = ts
        _validate_position(task, pos, central)
        events.append(StimulusEvent(ts, pos, central, trial))
    if task is Task.PURSUIT and freq is None and len(events) >= 3:
        freq = _estimate_pursuit_frequency(events)
    return StimulusTrack(task, tuple(events), freq if task is Task.PURSUIT else None)


def _parse_header(line: str) -> tuple[Task, Optional[float]]:
    fields = dict(
        kv.split("=", 1) for kv in line.lstrip("#").split() if "=" in kv
    )
    name = fields.get("task")
    if name is None or name not in _TASK_BY_NAME:
        raise UnknownTask(f"unknown task in header {line!r}")
    freq = None
    if "freq_hz" in fields:
        try:
            freq = float(fields["freq_hz"])
        except ValueError as exc:
            raise MalformedRecord(f"bad freq_hz in header {line!r}") from exc
        if not math.isfinite(freq) or freq <= 0:
            raise MalformedRecord(f"bad freq_hz in header {line!r}")
    return _TASK_BY_NAME[name], freq


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true"):
        return True
    if v in ("0", "false"):
        return False
    raise ValueError(s)


def _validate_position(task: Task, pos: float, central: bool) -> None:
    if task.is_saccadic:
        if not any(abs(pos - p) < 1e-9 for p in SACCADIC_POSITIONS_DEG):
            raise IllegalPosition(f"position {pos} not in {SACCADIC_POSITIONS_DEG}")
        if central != (abs(pos) < 1e-9):
            raise IllegalPosition(f"is_central flag inconsistent with position {pos}")
    else:
        if abs(pos) > PURSUIT_MAX_DEG + 1e-6:
            raise IllegalPosition(f"pursuit position {pos} outside +/-{PURSUIT_MAX_DEG}")
        if central:
            raise IllegalPosition("pursuit events cannot be central")


def _estimate_pursuit_frequency(events: Sequence[StimulusEvent]) -> Optional[float]:
    """Zero-crossing estimate snapped to the protocol's allowed frequencies."""
    pos = np.array([e.position_deg for e in events])
    t_s = np.array([e.timestamp_us for e in events]) / 1e6
    sign = np.signbit(pos)
    crossings = np.nonzero(sign[1:] != sign[:-1])[0]
    if len(crossings) < 2:
        return None
    span = t_s[crossings[-1]] - t_s[crossings[0]]
    if span <= 0:
        return None
    f = (len(crossings) - 1) / (2.0 * span)
    return min((0.2, 0.4), key=lambda c: abs(c - f))


def serialize_stimulus_log(track: StimulusTrack) -> str:
    header = f"# task={track.task.value}"
    if track.task is Task.PURSUIT and track.pursuit_frequency_hz is not None:
        header += f" freq_hz={track.pursuit_frequency_hz!r}"
    lines = [header]
    for e in track.events:
        lines.append(f"{e.timestamp_us},{e.position_deg!r},{int(e.is_central)},{e.trial_index}")
    return "\n".join(lines) + "\n"


# --- feature reports -------------------------------------------------------

REPORT_COLUMNS = ("RL", "RSD", "RA10", "RA20", "RAFT", "AL", "AISR", "MISR", "SSD", "SSA", "SSS")

# report column -> FeatureSet field, in emission order
COLUMN_FIELDS = (
    ("RL", "reflex_latency_ms"),
    ("RSD", "reflex_speed_deg_per_ms"),
    ("RA10", "reflex_amp10_deg"),
    ("RA20", "reflex_amp20_deg"),
    ("RAFT", "reflex_fixation_ms"),
    ("AL", "anti_latency_ms"),
    ("AISR", "anti_incorrect_ratio"),
    ("MISR", "memory_incorrect_ratio"),
    ("SSD", "pursuit_speed_mean_deg_per_ms"),
    ("SSA", "pursuit_accel_rms_deg_per_ms2"),
    ("SSS", "pursuit_speed_std_deg_per_ms"),
)


@dataclass
class FeatureSet:
    """The eleven per-session oculomotor parameters; None marks absent tasks."""

    reflex_latency_ms: Optional[float] = None
    reflex_speed_deg_per_ms: Optional[float] = None
    reflex_amp10_deg: Optional[float] = None
    reflex_amp20_deg: Optional[float] = None
    reflex_fixation_ms: Optional[float] = None
    anti_latency_ms: Optional[float] = None
    anti_incorrect_ratio: Optional[float] = None
    memory_incorrect_ratio: Optional[float] = None
    pursuit_speed_mean_deg_per_ms: Optional[float] = None
    pursuit_accel_rms_deg_per_ms2: Optional[float] = None
    pursuit_speed_std_deg_per_ms: Optional[float] = None

    def __post_init__(self) -> None:
        for _, name in COLUMN_FIELDS:
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, float(v))

    def as_dict(self) -> dict[str, Optional[float]]:
        return {name: getattr(self, name) for _, name in COLUMN_FIELDS}


def write_feature_report(features: FeatureSet, fmt: str = "csv") -> bytes:
    """Serialize a FeatureSet; field order is fixed, absent values explicit."""
    if fmt == "csv":
        header = ",".join(col for col, _ in COLUMN_FIELDS)
        row = ",".join(
            "" if getattr(features, name) is None else repr(getattr(features, name))
            for _, name in COLUMN_FIELDS
        )
        return (header + "\n" + row + "\n").encode()
    if fmt == "json":
        return (json.dumps(features.as_dict(), indent=2) + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}")


def read_feature_report(data: bytes | str, fmt: str = "csv") -> FeatureSet:
    if isinstance(data, bytes):
        data = data.decode()
    if fmt == "csv":
        lines = [ln for ln in data.splitlines() if ln.strip()]
        if len(lines) != 2:
            raise MalformedRecord("feature CSV must have a header and one row")
        cols = lines[0].split(",")
        vals = lines[1].split(",")
        if tuple(cols) != REPORT_COLUMNS or len(vals) != len(cols):
            raise MalformedRecord("feature CSV columns do not match report schema")
        kwargs = {}
        for (_, name), v in zip(COLUMN_FIELDS, vals):
            kwargs[name] = None if v == "" else float(v)
        return FeatureSet(**kwargs)
    if fmt == "json":
        obj = json.loads(data)
        return FeatureSet(**{name: obj.get(name) for _, name in COLUMN_FIELDS})
    raise ValueError(f"unknown report format {fmt!r}")
