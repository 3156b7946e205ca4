"""Sensor traces, phone state, scenarios and analysis windows.

Trace file layout (CSV)::

    sensortrace,1
    scenario=f,duration=180,screen_interactive=0,bluetooth_audio=0,wired_headphone=0,placement=Pocket
    accel,0,0.12,-0.3,0.98
    noise,0,61.2
    light,0,340
    ...

Rows are ``channel,t,v1[,v2,v3]``; floats carry 9 significant digits.
Line numbers in parse errors count data rows, the first row after the
header being line 1.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp

FORMAT_TAG = "sensortrace"
FORMAT_VERSION = 1
ACCEL_RATE = 50.0
ENV_RATE = 5.0
WINDOW_RATE = 50.0


class TraceFormatError(ValueError):
    pass


class Scenario(enum.Enum):
    QuietRoad = "a"
    Highway = "b"
    SpecificPlaces = "c"
    PublicTransport = "d"
    Car = "e"
    Restaurant = "f"

    @property
    def letter(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return "abcdef".index(self.value)

    @classmethod
    def parse(cls, tag: str) -> "Scenario":
        tag = tag.strip()
        for s in cls:
            if tag == s.value or tag.lower() == s.name.lower():
                return s
        raise ValueError(f"unknown scenario tag {tag!r}")


class Placement(enum.Enum):
    Pocket = "Pocket"
    InHand = "InHand"


@dataclass(frozen=True)
class PhoneState:
    screen_interactive: bool = False
    bluetooth_audio: bool = False
    wired_headphone: bool = False
    placement: Placement = Placement.Pocket

    @property
    def audio_route_external(self) -> bool:
        return self.bluetooth_audio or self.wired_headphone


def _check_channel(name: str, t: np.ndarray):
    if t.size == 0:
        raise ValueError(f"channel empty: {name}")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError(f"timestamps not strictly increasing in channel {name}")


@dataclass(frozen=True, eq=False)
class SensorTrace:
    """Multi-channel recording. Arrays are made read-only on construction.

    ``accel`` is ``(n, 4)``: t, ax, ay, az in m/s^2 with gravity removed.
    ``noise`` and ``light`` are ``(n, 2)``: t, level (dB or lux).
    """

    scenario: Scenario
    accel: np.ndarray
    noise: np.ndarray
    light: np.ndarray
    phone: PhoneState = field(default_factory=PhoneState)
    duration: float = 0.0

    def __post_init__(self):
        for name, width in (("accel", 4), ("noise", 2), ("light", 2)):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[1] != width:
                if arr.size == 0:
                    raise ValueError(f"channel empty: {name}")
                raise ValueError(f"{name} must have {width} columns")
            _check_channel(name, arr[:, 0])
            if arr[0, 0] < 0 or arr[-1, 0] > self.duration + 1e-9:
                raise ValueError(f"{name} samples fall outside [0, {self.duration}]")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    def __eq__(self, other):
        if not isinstance(other, SensorTrace):
            return NotImplemented
        return (
            self.scenario == other.scenario
            and self.phone == other.phone
            and self.duration == other.duration
            and all(
                np.array_equal(getattr(self, c), getattr(other, c))
                for c in ("accel", "noise", "light")
            )
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Window:
    """A slice of a trace with every channel on the same 50 Hz grid."""

    trace_ref: str
    start: float
    length: float
    accel: np.ndarray  # (n, 3)
    noise: np.ndarray  # (n,)
    light: np.ndarray  # (n,)
    phone: PhoneState = field(default_factory=PhoneState)
    scenario: Scenario | None = None

    @property
    def n_samples(self) -> int:
        return self.noise.shape[0]


def cut_window(trace: SensorTrace, start: float, length: float, trace_ref: str = "") -> Window:
    """Extract ``[start, start + length)`` resampled to 50 Hz on every channel."""
    if length <= 0:
        raise ValueError("empty window")
    if start < 0 or start + length > trace.duration + 1e-9:
        raise ValueError(
            f"window [{start}, {start + length}] outside trace span [0, {trace.duration}]"
        )
    span = (start, start + length)
    accel = dsp.resample_nn(trace.accel[:, 0], trace.accel[:, 1:], WINDOW_RATE, span)
    noise = dsp.resample_nn(trace.noise[:, 0], trace.noise[:, 1], WINDOW_RATE, span)
    light = dsp.resample_nn(trace.light[:, 0], trace.light[:, 1], WINDOW_RATE, span)
    for arr in (accel, noise, light):
        arr.setflags(write=False)
    return Window(trace_ref, float(start), float(length), accel, noise, light,
                  trace.phone, trace.scenario)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _dumps(trace: SensorTrace) -> str:
    p = trace.phone
    buf = io.StringIO()
    buf.write(f"{FORMAT_TAG},{FORMAT_VERSION}\n")
    buf.write(
        f"scenario={trace.scenario.letter},duration={_fmt(trace.duration)},"
        f"screen_interactive={int(p.screen_interactive)},bluetooth_audio={int(p.bluetooth_audio)},"
        f"wired_headphone={int(p.wired_headphone)},placement={p.placement.value}\n"
    )
    for row in trace.accel:
        buf.write("accel," + ",".join(_fmt(x) for x in row) + "\n")
    for name in ("noise", "light"):
        for t, v in getattr(trace, name):
            buf.write(f"{name},{_fmt(t)},{_fmt(v)}\n")
    return buf.getvalue()


def save_trace(trace: SensorTrace, path) -> None:
    for name in ("accel", "noise", "light"):
        if getattr(trace, name).shape[0] == 0:
            raise ValueError(f"channel empty: {name}")
    Path(path).write_text(_dumps(trace), encoding="ascii")


def _parse_header(lines: list[str]) -> tuple[Scenario, float, PhoneState]:
    if len(lines) < 2:
        raise TraceFormatError("missing header")
    tag = lines[0].strip().split(",")
    if len(tag) != 2 or tag[0] != FORMAT_TAG:
        raise TraceFormatError(f"header line 1: expected '{FORMAT_TAG},<version>'")
    if tag[1] != str(FORMAT_VERSION):
        raise TraceFormatError(f"header line 1: unsupported version {tag[1]}")
    fields = {}
    for item in lines[1].strip().split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise TraceFormatError(f"header line 2: malformed field {item!r}")
        fields[key] = value
    try:
        scenario = Scenario.parse(fields["scenario"])
        duration = float(fields["duration"])
        phone = PhoneState(
            screen_interactive=fields.get("screen_interactive", "0") == "1",
            bluetooth_audio=fields.get("bluetooth_audio", "0") == "1",
            wired_headphone=fields.get("wired_headphone", "0") == "1",
            placement=Placement(fields.get("placement", "Pocket")),
        )
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"header line 2: {exc}") from None
    return scenario, duration, phone


def loads_trace(text: str) -> SensorTrace:
    lines = text.splitlines()
    scenario, duration, phone = _parse_header(lines)
    widths = {"accel": 4, "noise": 2, "light": 2}
    rows: dict[str, list[list[float]]] = {k: [] for k in widths}
    for lineno, line in enumerate(lines[2:], start=1):
        if not line.strip():
            continue
        parts = line.strip().split(",")
        channel = parts[0]
        if channel not in widths:
            raise TraceFormatError(f"unknown channel {channel!r} at line {lineno}")
        if len(parts) - 1 != widths[channel]:
            raise TraceFormatError(f"malformed row at line {lineno}")
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError:
            raise TraceFormatError(f"malformed row at line {lineno}") from None
        prev = rows[channel]
        if prev and values[0] <= prev[-1][0]:
            raise TraceFormatError(f"non-monotonic at line {lineno}")
        prev.append(values)
    for name, data in rows.items():
        if not data:
            raise TraceFormatError(f"channel empty: {name}")
    try:
        return SensorTrace(scenario, np.array(rows["accel"]), np.array(rows["noise"]),
                           np.array(rows["light"]), phone, duration)
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from None


def load_trace(path) -> SensorTrace:
    return loads_trace(Path(path).read_text(encoding="ascii"))
