"""Four-phase attack lifecycle driven by simulated events.

P1 waits for a call, P2 records segments until the activation key is
assembled, P3 senses the environment window by window, P4 plays the key and
one command. A trial ends in ``Done`` or stops early when the key never
completes or no window is judged suitable.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import features as feats
from . import keyphrase as kp
from .defenses import AttackContext, DefenseConfig, apply_defense
from .forest import ForestModel
from .scenegen import (DEFAULT_PARAMS, FAILURE, SUCCESS, ConversationModel, ScenarioParams,
                       derive_seed, generate_trace, trial_phone)
from .trace import Placement, Scenario, Window, cut_window
from .trigger import (DEFAULT_GATE_DB, DEFAULT_THRESHOLD, TriggerDecision, VolumePolicy, decide,
                      gated_hold, playback_volume, standby_gate)

DEFAULT_RECOGNITION = 0.95
WINDOW_SECONDS = 180.0
ATTACK_MINUTES = 0.25


class TransitionError(RuntimeError):
    pass


class CalibrationError(RuntimeError):
    def __init__(self, message: str, residuals: Mapping[str, float]):
        super().__init__(f"{message}; residuals={dict(residuals)}")
        self.residuals = dict(residuals)


class Phase(enum.Enum):
    P1_CallMonitor = "P1"
    P2_RecordSynthesize = "P2"
    P3_EnvironmentMonitor = "P3"
    P4_Attack = "P4"
    Done = "Done"


class Event(enum.Enum):
    CallStarted = "CallStarted"
    SegmentAvailable = "SegmentAvailable"
    CallEnded = "CallEnded"
    WindowElapsed = "WindowElapsed"
    DecisionMade = "DecisionMade"
    AttackCompleted = "AttackCompleted"


_CALL_EVENTS = (Event.CallStarted, Event.SegmentAvailable, Event.CallEnded)


def step(phase: Phase, event: Event, *, key_complete: bool = False, launch: bool = False,
         more_commands: bool = False) -> Phase:
    """Next phase, or :class:`TransitionError` for an event the phase does not accept.

    Once the key is complete call monitoring is off, so call events leave
    P3 and P4 unchanged.
    """
    P = Phase
    if phase is P.P1_CallMonitor:
        if event is Event.CallStarted:
            return P.P2_RecordSynthesize
    elif phase is P.P2_RecordSynthesize:
        if event is Event.SegmentAvailable:
            return P.P3_EnvironmentMonitor if key_complete else P.P2_RecordSynthesize
        if event is Event.CallEnded:
            return P.P3_EnvironmentMonitor if key_complete else P.P1_CallMonitor
    elif phase is P.P3_EnvironmentMonitor:
        if event in _CALL_EVENTS or event is Event.WindowElapsed:
            return P.P3_EnvironmentMonitor
        if event is Event.DecisionMade:
            return P.P4_Attack if launch else P.P3_EnvironmentMonitor
    elif phase is P.P4_Attack:
        if event in _CALL_EVENTS:
            return P.P4_Attack
        if event is Event.AttackCompleted:
            return P.P3_EnvironmentMonitor if more_commands else P.Done
    raise TransitionError(f"event {event.value} is illegal in phase {phase.value}")


@dataclass
class AttackMachine:
    """Stateful wrapper that remembers what the phase transitions relied on."""

    phase: Phase = Phase.P1_CallMonitor
    key_complete: bool = False
    last_launch: bool = False
    history: list[Phase] = field(default_factory=list)

    def fire(self, event: Event, *, key_complete: bool = False, launch: bool = False,
             more_commands: bool = False) -> Phase:
        if event is Event.SegmentAvailable and self.phase is Phase.P2_RecordSynthesize:
            self.key_complete = self.key_complete or key_complete
        if event is Event.DecisionMade:
            self.last_launch = launch
        new = step(self.phase, event, key_complete=self.key_complete, launch=launch,
                   more_commands=more_commands)
        self.history.append(new)
        self.phase = new
        return new


# Notice model -------------------------------------------------------------

def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class NoticeModel:
    """Probability that the user hears the playback.

    ``logistic(slope * (volume - attenuation - ambient - offset - base_margin))``
    where attenuation is non-zero only for a phone in a pocket.
    """

    base_margin: float = 3.0
    slope: float = 1.0
    pocket_attenuation: float = 8.0
    scenario_offset: dict[Scenario, float] = field(default_factory=lambda: {s: 0.0 for s in Scenario})
    recognition: dict[Scenario, float] = field(
        default_factory=lambda: {s: DEFAULT_RECOGNITION for s in Scenario})
    calibrated: bool = False
    residuals: dict[Scenario, float] = field(default_factory=dict)

    def attenuation(self, placement: Placement) -> float:
        return self.pocket_attenuation if placement is Placement.Pocket else 0.0

    def probability(self, scenario: Scenario, ambient: float, volume: float,
                    placement: Placement = Placement.InHand) -> float:
        x = (volume - self.attenuation(placement) - ambient
             - self.scenario_offset.get(scenario, 0.0) - self.base_margin)
        return _logistic(self.slope * x)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "base_margin": self.base_margin,
            "slope": self.slope,
            "pocket_attenuation": self.pocket_attenuation,
            "scenario_offset": {s.letter: v for s, v in self.scenario_offset.items()},
            "recognition": {s.letter: v for s, v in self.recognition.items()},
            "calibrated": self.calibrated,
            "residuals": {s.letter: v for s, v in self.residuals.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "NoticeModel":
        conv = lambda d: {Scenario.parse(k): float(v) for k, v in d.items()}  # noqa: E731
        base = cls()
        return cls(
            float(data["base_margin"]), float(data["slope"]), float(data["pocket_attenuation"]),
            {**base.scenario_offset, **conv(data["scenario_offset"])},
            {**base.recognition, **conv(data.get("recognition", {}))},
            bool(data["calibrated"]), conv(data.get("residuals", {})),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "NoticeModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def notice(model: NoticeModel, scenario: Scenario, ambient: float, volume: float,
           rng: np.random.Generator, placement: Placement = Placement.InHand) -> bool:
    if not model.calibrated:
        raise ValueError("notice model is not calibrated")
    return bool(rng.random() < model.probability(scenario, ambient, volume, placement))


@dataclass(frozen=True)
class ScenarioTarget:
    noticed: int
    succeeded: int
    trials: int

    @property
    def notice_rate(self) -> float:
        return self.noticed / self.trials

    @property
    def success_rate(self) -> float:
        return self.succeeded / self.trials


# Field outcomes per scenario: being noticed, successfully attacked, trials.
FIELD_TARGETS: dict[Scenario, ScenarioTarget] = {
    Scenario.QuietRoad: ScenarioTarget(20, 0, 20),
    Scenario.Highway: ScenarioTarget(0, 18, 20),
    Scenario.SpecificPlaces: ScenarioTarget(24, 13, 40),
    Scenario.PublicTransport: ScenarioTarget(0, 17, 20),
    Scenario.Car: ScenarioTarget(20, 0, 20),
    Scenario.Restaurant: ScenarioTarget(0, 19, 20),
}


def window_ambient(window: Window) -> float:
    """Ambient level the volume policy sees: mean of the smoothed noise channel."""
    return float(np.mean(feats.smooth_env(window.noise)))


def playback_level(policy: VolumePolicy, ambient: float) -> float:
    return max(playback_volume(ambient, policy))


def _excess(model: NoticeModel, policy: VolumePolicy, window: Window) -> float:
    """Playback level at the listener minus ambient, before offset and margin."""
    ambient = window_ambient(window)
    return playback_level(policy, ambient) - model.attenuation(window.phone.placement) - ambient


def calibrate_notice(model: NoticeModel, targets: Mapping[Scenario, ScenarioTarget],
                     params: Mapping[Scenario, ScenarioParams] = DEFAULT_PARAMS,
                     policy: VolumePolicy = VolumePolicy(), trials: int = 1000, seed: int = 0,
                     window_seconds: float = WINDOW_SECONDS, tolerance: float = 0.05,
                     max_iter: int = 60) -> NoticeModel:
    """Fit one offset per scenario so the expected notice rate hits its target.

    The expected rate over ``trials`` generated windows is monotone in the
    offset, so bisection applies. Targets of exactly 0 or 1 are approached
    to within 0.2 %. Command recognition per scenario is set from the
    unnoticed trials that still failed.
    """
    missing = [s.letter for s in Scenario if s not in targets]
    if missing:
        raise ValueError(f"targets missing for scenarios {missing}")
    offsets, recognition, residuals = {}, {}, {}
    for scenario in Scenario:
        target = targets[scenario]
        excess = np.array([
            _excess(model, policy, cut_window(
                generate_trace(scenario, window_seconds, trial_phone(t), params[scenario],
                               derive_seed(seed, t)), 0.0, window_seconds))
            for t in range(trials)
        ])

        def rate(offset):
            z = model.slope * (excess - offset - model.base_margin)
            return float(np.mean(1.0 / (1.0 + np.exp(-z))))

        goal = min(max(target.notice_rate, 0.002), 0.998)
        lo, hi = -150.0, 150.0
        if not rate(hi) <= goal <= rate(lo):
            raise CalibrationError(f"target for scenario {scenario.letter} not bracketed",
                                   {scenario.letter: rate(0.0) - target.notice_rate})
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            r = rate(mid)
            if abs(r - goal) < 1e-4:
                break
            if r > goal:
                lo = mid
            else:
                hi = mid
        else:
            raise CalibrationError(f"no convergence for scenario {scenario.letter}",
                                   {scenario.letter: r - target.notice_rate})
        residuals[scenario] = r - target.notice_rate
        if abs(residuals[scenario]) > tolerance:
            raise CalibrationError("calibration residual above tolerance",
                                   {s.letter: v for s, v in residuals.items()})
        offsets[scenario] = mid
        unnoticed = target.trials - target.noticed
        recognition[scenario] = (target.succeeded / unnoticed if unnoticed
                                 else model.recognition.get(scenario, DEFAULT_RECOGNITION))
    return replace(model, scenario_offset=offsets, recognition=recognition, calibrated=True,
                   residuals=residuals)


def make_labeler(model: NoticeModel, policy: VolumePolicy = VolumePolicy(),
                 activation_prob: float = 1.0, include_recognition: bool = True):
    """Ground-truth labeller: would an attack at this window succeed?

    With ``include_recognition`` off the label asks only whether playback
    goes unnoticed. Draws are made either way so the label stream does not
    shift with the flag.
    """

    def label(window: Window, scenario: Scenario, rng: np.random.Generator) -> str:
        ambient = window_ambient(window)
        noticed = notice(model, scenario, ambient, playback_level(policy, ambient), rng,
                         window.phone.placement)
        activated = rng.random() < activation_prob
        recognized = rng.random() < model.recognition[scenario]
        ok = not noticed and activated and (recognized or not include_recognition)
        return SUCCESS if ok else FAILURE

    return label


# Resource ledger ----------------------------------------------------------

@dataclass(frozen=True)
class PowerRates:
    """mAh per minute for each phase and sensing regime."""

    p1: float = 0.2
    p2: float = 0.1
    p3_50hz: float = 0.8
    p3_10hz: float = 0.5
    p3_gated: float = 0.4
    p4: float = 0.1

    def rate(self, phase: Phase, sensing_rate: float = 50.0, gated: bool = False) -> float:
        if phase is Phase.P1_CallMonitor:
            return self.p1
        if phase is Phase.P2_RecordSynthesize:
            return self.p2
        if phase is Phase.P4_Attack:
            return self.p4
        if phase is Phase.P3_EnvironmentMonitor:
            if gated:
                return self.p3_gated
            return float(np.interp(sensing_rate, [10.0, 50.0], [self.p3_10hz, self.p3_50hz]))
        return 0.0


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    ram_mb: dict[Phase, float]
    cpu_pct: dict[Phase, float]


_P = Phase
DEVICE_PROFILES = {
    "galaxy-s9": DeviceProfile(
        "galaxy-s9",
        {_P.P1_CallMonitor: 15, _P.P2_RecordSynthesize: 22, _P.P3_EnvironmentMonitor: 26,
         _P.P4_Attack: 25},
        {_P.P1_CallMonitor: 0, _P.P2_RecordSynthesize: 0, _P.P3_EnvironmentMonitor: 7,
         _P.P4_Attack: 0},
    ),
    "pixel-2": DeviceProfile(
        "pixel-2",
        {_P.P1_CallMonitor: 17, _P.P2_RecordSynthesize: 35, _P.P3_EnvironmentMonitor: 35,
         _P.P4_Attack: 35},
        {_P.P1_CallMonitor: 0, _P.P2_RecordSynthesize: 0, _P.P3_EnvironmentMonitor: 7,
         _P.P4_Attack: 0},
    ),
}

# Average size of one stored file, KB.
FILE_SIZES_KB = {"voice": 180.9, "accel": 91.7, "light": 4.4, "noise": 5.4}
SENSOR_RETENTION_MINUTES = 3.0


@dataclass(frozen=True)
class ResourceLedger:
    rates: PowerRates = PowerRates()
    device: DeviceProfile = DEVICE_PROFILES["galaxy-s9"]
    minutes: dict[str, float] = field(default_factory=dict)  # phase or "P3-gated" -> minutes
    power_mah: dict[str, float] = field(default_factory=dict)
    ram_mb_minutes: float = 0.0
    cpu_pct_minutes: float = 0.0
    files_kb: dict[str, float] = field(default_factory=dict)

    @property
    def total_power_mah(self) -> float:
        return float(sum(self.power_mah.values()))

    @property
    def total_minutes(self) -> float:
        return float(sum(self.minutes.values()))

    def with_file(self, name: str) -> "ResourceLedger":
        return replace(self, files_kb={**self.files_kb, name: FILE_SIZES_KB[name]})

    def summary(self) -> dict:
        total = self.total_minutes
        return {
            "minutes": dict(sorted(self.minutes.items())),
            "power_mah": dict(sorted(self.power_mah.items())),
            "power_total_mah": self.total_power_mah,
            "ram_avg_mb": self.ram_mb_minutes / total if total else 0.0,
            "cpu_avg_pct": self.cpu_pct_minutes / total if total else 0.0,
            "disk_kb": float(sum(self.files_kb.values())),
        }


def ledger_accumulate(ledger: ResourceLedger, phase: Phase, minutes: float,
                      sensing_rate: float = 50.0, gated: bool = False) -> ResourceLedger:
    if minutes < 0:
        raise ValueError("minutes must be non-negative")
    if minutes == 0:
        return ledger
    key = phase.value + ("-gated" if gated and phase is Phase.P3_EnvironmentMonitor else "")
    mah = ledger.rates.rate(phase, sensing_rate, gated) * minutes
    return replace(
        ledger,
        minutes={**ledger.minutes, key: ledger.minutes.get(key, 0.0) + minutes},
        power_mah={**ledger.power_mah, key: ledger.power_mah.get(key, 0.0) + mah},
        ram_mb_minutes=ledger.ram_mb_minutes + ledger.device.ram_mb.get(phase, 0.0) * minutes,
        cpu_pct_minutes=ledger.cpu_pct_minutes + ledger.device.cpu_pct.get(phase, 0.0) * minutes,
    )


# Trials -------------------------------------------------------------------

class Protocol(enum.Enum):
    # Play once per trial whatever the detector says, as in the field study.
    Collection = "collection"
    # Play only when the detector launches.
    IED = "ied"


@dataclass(frozen=True)
class TrialConfig:
    opportunity_model: ForestModel
    motion_model: ForestModel
    notice_model: NoticeModel
    commands: tuple[str, ...]
    params: Mapping[Scenario, ScenarioParams] = field(default_factory=lambda: dict(DEFAULT_PARAMS))
    policy: VolumePolicy = VolumePolicy()
    lexicon: kp.Lexicon = field(default_factory=kp.default_lexicon)
    capture_mode: kp.CaptureMode = kp.CaptureMode.WordBased
    success: kp.SuccessConfig = kp.SuccessConfig()
    conversation: ConversationModel = field(default_factory=ConversationModel)
    protocol: Protocol = Protocol.IED
    threshold: float = DEFAULT_THRESHOLD
    window_seconds: float = WINDOW_SECONDS
    max_windows: int = 20
    gating: bool = False
    gate_threshold: float = DEFAULT_GATE_DB
    sensing_rate: float = 50.0
    capture_horizon_minutes: float = 30 * 24 * 60.0
    power: PowerRates = PowerRates()
    device: str = "galaxy-s9"
    defense: DefenseConfig | None = None


@dataclass(frozen=True)
class TrialRecord:
    scenario: Scenario
    trial: int
    seed: int
    placement: str
    key_complete: bool
    calls: int
    timeline: tuple[tuple[str, float], ...]
    windows: int
    gated_windows: int
    ied_launch: bool
    launched: bool
    p_success: float | None
    ambient: float | None
    activation_volume: float | None
    command_volume: float | None
    command: str | None
    noticed: bool
    command_recognized: bool
    blocked: bool
    succeeded: bool
    ledger: dict

    def row(self) -> dict:
        return {
            "scenario": self.scenario.letter,
            "trial": self.trial,
            "placement": self.placement,
            "key_complete": int(self.key_complete),
            "calls": self.calls,
            "windows": self.windows,
            "gated_windows": self.gated_windows,
            "ied_launch": int(self.ied_launch),
            "launched": int(self.launched),
            "p_success": "" if self.p_success is None else f"{self.p_success:.6f}",
            "ambient_db": "" if self.ambient is None else f"{self.ambient:.3f}",
            "activation_db": "" if self.activation_volume is None else f"{self.activation_volume:.3f}",
            "command_db": "" if self.command_volume is None else f"{self.command_volume:.3f}",
            "noticed": int(self.noticed),
            "command_recognized": int(self.command_recognized),
            "blocked": int(self.blocked),
            "succeeded": int(self.succeeded),
            "power_mah": f"{self.ledger['power_total_mah']:.6f}",
        }

    def to_json(self) -> dict:
        d = asdict(self)
        d["scenario"] = self.scenario.letter
        d["timeline"] = [list(x) for x in self.timeline]
        return d


def _capture_key(config: TrialConfig, rng, machine: AttackMachine, ledger: ResourceLedger,
                 timeline: list):
    """Run P1/P2 until the key is complete or the horizon passes."""
    conv = config.conversation
    state = kp.start_capture(config.capture_mode, config.lexicon)
    elapsed, calls, seg_id = 0.0, 0, 0
    while not state.complete:
        wait, length = conv.next_call(rng)
        if elapsed + wait > config.capture_horizon_minutes:
            rest = config.capture_horizon_minutes - elapsed
            ledger = ledger_accumulate(ledger, Phase.P1_CallMonitor, rest)
            timeline.append((Phase.P1_CallMonitor.value, rest))
            return None, ledger, calls
        elapsed += wait
        ledger = ledger_accumulate(ledger, Phase.P1_CallMonitor, wait)
        timeline.append((Phase.P1_CallMonitor.value, wait))
        machine.fire(Event.CallStarted)
        calls += 1
        segments = conv.call_segments(length, rng, seg_id)
        seg_id += len(segments)
        recorded = length
        for i, seg in enumerate(segments):
            state = kp.feed_segment(state, seg, config.lexicon)
            machine.fire(Event.SegmentAvailable, key_complete=state.complete)
            if state.complete:
                recorded = (i + 1) * conv.segment_seconds / 60.0
                break
        elapsed += recorded
        ledger = ledger_accumulate(ledger, Phase.P2_RecordSynthesize, recorded)
        timeline.append((Phase.P2_RecordSynthesize.value, recorded))
        if not state.complete:
            machine.fire(Event.CallEnded)
    return kp.synthesize(state, config.success), ledger.with_file("voice"), calls


def run_trial(scenario: Scenario, config: TrialConfig, seed: int, trial: int = 0) -> TrialRecord:
    """Simulate one victim from install to the end of the first attack."""
    rng = np.random.default_rng(seed)
    phone = trial_phone(trial)
    machine = AttackMachine()
    ledger = ResourceLedger(config.power, DEVICE_PROFILES[config.device])
    timeline: list[tuple[str, float]] = []

    key, ledger, calls = _capture_key(config, rng, machine, ledger, timeline)

    def record(**kw):
        base = dict(scenario=scenario, trial=trial, seed=seed, placement=phone.placement.value,
                    key_complete=key is not None, calls=calls, timeline=tuple(timeline),
                    windows=0, gated_windows=0, ied_launch=False, launched=False,
                    p_success=None, ambient=None, activation_volume=None, command_volume=None,
                    command=None, noticed=False, command_recognized=False, blocked=False,
                    succeeded=False, ledger=ledger.summary())
        base.update(kw)
        return TrialRecord(**base)

    if key is None:
        return record()

    forced = config.protocol is Protocol.Collection
    max_windows = 1 if forced else config.max_windows
    decision: TriggerDecision | None = None
    windows = gated_windows = 0
    minutes = config.window_seconds / 60.0
    for w in range(max_windows):
        trace = generate_trace(scenario, config.window_seconds, phone, config.params[scenario],
                               int(rng.integers(2**63 - 1)))
        window = cut_window(trace, 0.0, config.window_seconds, trace_ref=f"{seed}-{w}")
        windows += 1
        if config.gating and not standby_gate(window_ambient(window), config.gate_threshold):
            decision = gated_hold(window, config.policy)
            gated_windows += 1
            ledger = ledger_accumulate(ledger, Phase.P3_EnvironmentMonitor, minutes, gated=True)
            ledger = ledger.with_file("noise")
            timeline.append(("P3-gated", minutes))
        else:
            decision = decide(window, phone, config.opportunity_model, config.motion_model,
                              config.policy, config.threshold)
            ledger = ledger_accumulate(ledger, Phase.P3_EnvironmentMonitor, minutes,
                                       config.sensing_rate)
            for name in ("accel", "light", "noise"):
                ledger = ledger.with_file(name)
            timeline.append((Phase.P3_EnvironmentMonitor.value, minutes))
        if forced or decision.launch:
            break
        machine.fire(Event.DecisionMade, launch=False)
        machine.fire(Event.WindowElapsed)

    ied_launch = decision.launch
    common = dict(windows=windows, gated_windows=gated_windows, ied_launch=ied_launch,
                  p_success=None if decision.gated else decision.p_success,
                  ambient=decision.ambient, activation_volume=decision.activation_volume,
                  command_volume=decision.command_volume)
    if not (forced or ied_launch):
        return record(timeline=tuple(timeline), ledger=ledger.summary(), **common)

    machine.fire(Event.DecisionMade, launch=True)
    # Fixed draw order keeps streams aligned across configurations.
    command = config.commands[int(rng.integers(len(config.commands)))]
    loudest = max(decision.activation_volume, decision.command_volume)
    noticed = notice(config.notice_model, scenario, decision.ambient, loudest, rng,
                     phone.placement)
    activated = key.activates(rng)
    recognized = activated and bool(rng.random() < config.notice_model.recognition[scenario])
    blocked = False
    if config.defense is not None:
        blocked = apply_defense(config.defense, AttackContext.attack(phone), rng)
    ledger = ledger_accumulate(ledger, Phase.P4_Attack, ATTACK_MINUTES)
    timeline.append((Phase.P4_Attack.value, ATTACK_MINUTES))
    machine.fire(Event.AttackCompleted, more_commands=False)
    assert machine.phase is Phase.Done
    return record(timeline=tuple(timeline), ledger=ledger.summary(), launched=True,
                  command=command, noticed=noticed, command_recognized=recognized,
                  blocked=blocked, succeeded=(not noticed) and recognized and not blocked,
                  **common)


def load_commands(path) -> tuple[str, ...]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    commands = tuple(ln for ln in lines if ln and not ln.startswith("#"))
    if not commands:
        raise ValueError(f"no commands in {path}")
    return commands


def apply_targets_json(data: Mapping) -> dict[Scenario, ScenarioTarget]:
    return {Scenario.parse(k): ScenarioTarget(**v) for k, v in data.items()}


def targets_to_json(targets: Mapping[Scenario, ScenarioTarget]) -> dict:
    return {s.letter: asdict(t) for s, t in targets.items()}


def successes(records: Sequence[TrialRecord]) -> int:
    return sum(r.succeeded for r in records)
