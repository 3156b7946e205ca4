"""Seeded synthetic sensor traces, conversations and labelled datasets.

Everything here is a pure function of its inputs and an integer seed.
Per-trial randomness is derived from ``(seed, ...)`` tuples through
:class:`numpy.random.SeedSequence`, so trial ``i`` gets the same stream no
matter how trials are scheduled.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import dsp
from .trace import (ACCEL_RATE, ENV_RATE, PhoneState, Placement, Scenario,
                    SensorTrace, Window, cut_window)

SUCCESS = "SuccessfulInvasion"
FAILURE = "UnsuccessfulInvasion"
INVASION_CLASSES = (FAILURE, SUCCESS)

POCKET_LIGHT_FACTOR = 0.02
IN_HAND_ACCEL_FACTOR = 0.8


class MotionProfile(enum.Enum):
    Walking = "Walking"
    Riding = "Riding"
    Seated = "Seated"


@dataclass(frozen=True)
class ScenarioParams:
    """Statistical description of one scenario's sensor channels.

    ``session_std`` spreads the per-trace mean noise level (different
    roads, restaurants, buses); ``noise_std`` is sample-to-sample jitter.
    """

    noise_mean: float
    noise_std: float
    light_mean: float
    light_std: float
    motion_profile: MotionProfile
    gait_freq: float
    accel_amp: float
    burst_rate: float
    session_std: float = 3.0
    dip_fraction: float = 0.25
    placeholder: bool = False

    def __post_init__(self):
        if min(self.noise_std, self.light_std, self.session_std) < 0:
            raise ValueError("standard deviations must be non-negative")
        if not 0 <= self.gait_freq <= 4:
            raise ValueError("gait_freq must lie in [0, 4] Hz")
        if self.accel_amp < 0 or self.burst_rate < 0:
            raise ValueError("accel_amp and burst_rate must be non-negative")
        if not 0 <= self.dip_fraction <= 1:
            raise ValueError("dip_fraction must lie in [0, 1]")


# Synthetic anchors, ordinally consistent with the collected scenarios.
DEFAULT_PARAMS: dict[Scenario, ScenarioParams] = {
    Scenario.QuietRoad: ScenarioParams(35, 2, 800, 60, MotionProfile.Walking, 1.8, 3.0, 0.5),
    Scenario.Highway: ScenarioParams(70, 3, 1000, 80, MotionProfile.Walking, 2.0, 3.5, 2.0),
    Scenario.SpecificPlaces: ScenarioParams(55, 3, 400, 40, MotionProfile.Walking, 1.7, 2.5, 1.0,
                                            placeholder=True),
    Scenario.PublicTransport: ScenarioParams(65, 3, 300, 40, MotionProfile.Riding, 0.0, 0.6, 2.0),
    Scenario.Car: ScenarioParams(50, 2, 500, 50, MotionProfile.Seated, 0.0, 0.05, 0.5),
    Scenario.Restaurant: ScenarioParams(68, 3, 350, 40, MotionProfile.Seated, 0.0, 0.1, 3.0),
}


def params_to_json(params: dict[Scenario, ScenarioParams]) -> dict:
    out = {}
    for scenario, p in params.items():
        d = asdict(p)
        d["motion_profile"] = p.motion_profile.value
        out[scenario.letter] = d
    return {"version": 1, "scenarios": out}


def params_from_json(data: dict) -> dict[Scenario, ScenarioParams]:
    table = dict(DEFAULT_PARAMS)
    for tag, d in data.get("scenarios", {}).items():
        d = dict(d)
        d["motion_profile"] = MotionProfile(d["motion_profile"])
        table[Scenario.parse(tag)] = ScenarioParams(**d)
    return table


def load_params(path) -> dict[Scenario, ScenarioParams]:
    return params_from_json(json.loads(Path(path).read_text()))


def derive_seed(*parts: int) -> int:
    """Fold an integer tuple into one 63-bit seed."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _quantize(x: np.ndarray, decimals: int) -> np.ndarray:
    # rint(m)/10^d is the correctly rounded double of a short decimal, so
    # it survives a 9-significant-digit text round trip unchanged.
    scale = 10.0**decimals
    return np.rint(np.asarray(x) * scale) / scale


def _accel(profile: MotionProfile, p: ScenarioParams, t: np.ndarray, phone: PhoneState,
           rng: np.random.Generator) -> np.ndarray:
    n = t.size
    amp = p.accel_amp * (IN_HAND_ACCEL_FACTOR if phone.placement is Placement.InHand else 1.0)
    if amp == 0:
        return np.zeros((n, 3))
    if profile is MotionProfile.Walking:
        freq = p.gait_freq * (1.0 + 0.02 * rng.standard_normal())
        theta = 2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi)
        # One non-negative pulse per step times a swaying unit direction, so
        # |a| itself is periodic at the step rate rather than rectified.
        pulse = 1.0 + 0.8 * np.cos(theta) + 0.2 * np.cos(2 * theta - 0.5)
        sway = np.column_stack([0.4 * np.sin(theta + 0.8), 0.25 * np.sin(theta + 1.9),
                                np.ones(n)])
        sway /= np.linalg.norm(sway, axis=1, keepdims=True)
        base = pulse[:, None] * sway
        return amp * (base + 0.1 * rng.standard_normal((n, 3)))
    if profile is MotionProfile.Riding:
        white = rng.standard_normal((n, 3))
        band = dsp.filter_apply(dsp.butterworth_lowpass(4, 3.0, ACCEL_RATE), white)
        band /= max(float(np.std(band)), 1e-12)
        return amp * band
    return amp * rng.standard_normal((n, 3))


def _noise(p: ScenarioParams, t: np.ndarray, duration: float, rng: np.random.Generator) -> np.ndarray:
    session = p.noise_mean + p.session_std * rng.standard_normal()
    level = session + p.noise_std * rng.standard_normal(t.size)
    n_bursts = rng.poisson(p.burst_rate * duration / 60.0)
    for _ in range(n_bursts):
        start = rng.uniform(0, duration)
        length = rng.uniform(0.5, 2.0)
        size = rng.uniform(5.0, 15.0)
        sign = -1.0 if rng.random() < p.dip_fraction else 1.0
        level[(t >= start) & (t < start + length)] += sign * size
    return level


def generate_trace(scenario: Scenario, duration: float, phone: PhoneState,
                   params: ScenarioParams, seed: int) -> SensorTrace:
    """Synthesize one labelled trace of ``duration`` seconds."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    t_acc = np.arange(int(round(duration * ACCEL_RATE))) / ACCEL_RATE
    t_env = np.arange(int(round(duration * ENV_RATE))) / ENV_RATE

    accel = _quantize(_accel(params.motion_profile, params, t_acc, phone, rng), 6)
    noise = _quantize(_noise(params, t_env, duration, rng), 3)
    factor = POCKET_LIGHT_FACTOR if phone.placement is Placement.Pocket else 1.0
    light = params.light_mean * factor + params.light_std * factor * rng.standard_normal(t_env.size)
    light = _quantize(np.clip(light, 0.0, None), 3)

    return SensorTrace(
        scenario,
        np.column_stack([t_acc, accel]),
        np.column_stack([t_env, noise]),
        np.column_stack([t_env, light]),
        phone,
        float(duration),
    )


def trial_phone(trial: int) -> PhoneState:
    """Both collected postures, alternating by trial index."""
    placement = Placement.Pocket if trial % 2 == 0 else Placement.InHand
    return PhoneState(placement=placement)


# Conversation model -------------------------------------------------------

DEFAULT_VOCABULARY: dict[str, float] = {
    "the": 60, "i": 45, "you": 45, "to": 40, "and": 38, "a": 35, "it": 30, "is": 28,
    "that": 26, "we": 22, "yeah": 20, "so": 18, "know": 16, "what": 16, "do": 15,
    "okay": 8, "right": 12, "think": 10, "then": 10, "time": 8, "well": 9, "see": 8,
    "call": 6, "later": 5, "today": 5, "tomorrow": 4, "dinner": 3, "work": 5,
    "ok": 3.0, "oh": 4.0, "good": 4.0, "go": 5.0, "cake": 0.3, "google": 1.0,
}

WORDS_PER_MINUTE = 150.0


@dataclass(frozen=True)
class Segment:
    """A 20-second slice of call audio, abstracted to its token stream."""

    segment_id: int
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class ConversationModel:
    vocabulary: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_VOCABULARY))
    calls_per_hour: float = 2.0
    mean_call_minutes: float = 3.0
    segment_seconds: float = 20.0
    words_per_minute: float = WORDS_PER_MINUTE

    def next_call(self, rng: np.random.Generator) -> tuple[float, float]:
        """Minutes until the next call, and that call's length in minutes."""
        wait = rng.exponential(60.0 / self.calls_per_hour)
        length = self.segment_seconds / 60.0 + rng.exponential(self.mean_call_minutes)
        return float(wait), float(length)

    def call_segments(self, minutes: float, rng: np.random.Generator,
                      first_id: int = 0) -> list[Segment]:
        n_segments = int(minutes * 60.0 // self.segment_seconds)
        words = list(self.vocabulary)
        weights = np.array([self.vocabulary[w] for w in words], dtype=float)
        weights /= weights.sum()
        per_segment = max(1, int(round(self.words_per_minute * self.segment_seconds / 60.0)))
        out = []
        for i in range(n_segments):
            idx = rng.choice(len(words), size=per_segment, p=weights)
            out.append(Segment(first_id + i, tuple(words[j] for j in idx)))
        return out


# Labelled datasets --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LabeledWindow:
    window: Window
    trace: SensorTrace
    label: str
    scenario: Scenario
    seed: int
    trial: int


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    items: tuple[LabeledWindow, ...]

    def __len__(self):
        return len(self.items)

    @property
    def labels(self) -> list[str]:
        return [it.label for it in self.items]

    def by_scenario(self, scenario: Scenario) -> list[LabeledWindow]:
        return [it for it in self.items if it.scenario is scenario]


# (window, scenario, rng) -> label
Labeler = Callable[[Window, Scenario, np.random.Generator], str]


def generate_dataset(spec: Sequence[tuple[Scenario, int, float]],
                     params: dict[Scenario, ScenarioParams],
                     labeler: Labeler, seed: int) -> LabeledDataset:
    """One labelled full-length window per trial of every ``spec`` entry.

    ``spec`` rows are ``(scenario, trials, duration_seconds)``.
    """
    spec = list(spec)
    if not spec:
        raise ValueError("empty dataset spec")
    items = []
    for scenario, trials, duration in spec:
        if trials < 1:
            raise ValueError(f"trials must be >= 1 for scenario {scenario.letter}")
        for trial in range(trials):
            trace_seed = derive_seed(seed, scenario.index, trial)
            trace = generate_trace(scenario, duration, trial_phone(trial), params[scenario],
                                   trace_seed)
            window = cut_window(trace, 0.0, duration, trace_ref=f"{scenario.letter}-{trial:04d}")
            label_rng = np.random.default_rng(derive_seed(seed, scenario.index, trial, 1))
            items.append(LabeledWindow(window, trace, labeler(window, scenario, label_rng),
                                       scenario, trace_seed, trial))
    return LabeledDataset(tuple(items))


def all_scenarios_spec(trials: int, duration: float = 180.0) -> list[tuple[Scenario, int, float]]:
    return [(s, trials, duration) for s in Scenario]


def with_params(params: dict[Scenario, ScenarioParams], scenario: Scenario, **changes):
    out = dict(params)
    out[scenario] = replace(params[scenario], **changes)
    return out
