"""Launch/hold decisions and playback volume for one sensing window."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import features as feats
from .forest import ForestModel
from .scenegen import SUCCESS
from .trace import PhoneState, Window

DEFAULT_THRESHOLD = 0.6
DEFAULT_GATE_DB = 50.0
DEFAULT_MARGIN_DB = 1.0
SHOUT_CEILING_DB = 80.0

# (ambient, minimum activation volume, minimum command volume), all dB.
DEFAULT_ANCHORS = (
    (30.0, 44.0, 40.0),
    (41.0, 44.0, 40.0),
    (52.0, 54.0, 54.0),
    (68.0, 67.0, 67.0),
    (73.0, 75.0, 76.0),
)


@dataclass(frozen=True)
class VolumePolicy:
    anchors: tuple[tuple[float, float, float], ...] = DEFAULT_ANCHORS
    margin: float = DEFAULT_MARGIN_DB
    ceiling: float = SHOUT_CEILING_DB

    def __post_init__(self):
        if not self.anchors:
            raise ValueError("policy needs at least one anchor")
        ambient = [a[0] for a in self.anchors]
        if any(b <= a for a, b in zip(ambient, ambient[1:])):
            raise ValueError("anchors must be sorted by strictly increasing ambient level")

    def to_json(self) -> dict:
        return {
            "version": 1,
            "margin": self.margin,
            "ceiling": self.ceiling,
            "anchors": [{"ambient": a, "activation": b, "command": c} for a, b, c in self.anchors],
        }

    @classmethod
    def from_json(cls, data: dict) -> "VolumePolicy":
        anchors = tuple((float(r["ambient"]), float(r["activation"]), float(r["command"]))
                        for r in data["anchors"])
        return cls(anchors, float(data.get("margin", DEFAULT_MARGIN_DB)),
                   float(data.get("ceiling", SHOUT_CEILING_DB)))

    @classmethod
    def load(cls, path) -> "VolumePolicy":
        return cls.from_json(json.loads(Path(path).read_text()))


def playback_volume(ambient: float, policy: VolumePolicy = VolumePolicy()) -> tuple[float, float]:
    """Activation and command volume for an ambient level.

    Piecewise-linear between anchors, clamped to the end rows, plus the
    policy margin.
    """
    a = np.array(policy.anchors, dtype=float)
    activation = float(np.interp(ambient, a[:, 0], a[:, 1])) + policy.margin
    command = float(np.interp(ambient, a[:, 0], a[:, 2])) + policy.margin
    return activation, command


def standby_gate(noise_level: float, gate_threshold: float = DEFAULT_GATE_DB) -> bool:
    """True when ambient noise is loud enough to wake the full sensor set."""
    return noise_level >= gate_threshold


@dataclass(frozen=True)
class TriggerDecision:
    launch: bool
    p_success: float
    activation_volume: float
    command_volume: float
    gated: bool = False
    ambient: float = float("nan")
    features: feats.FeatureVector | None = None
    reason: str = ""


def decide(window: Window, phone: PhoneState | None, opportunity_model: ForestModel,
           motion_model: ForestModel, policy: VolumePolicy = VolumePolicy(),
           threshold: float = DEFAULT_THRESHOLD) -> TriggerDecision:
    """Launch iff the screen is idle, audio plays on the speaker and the
    opportunity model's success probability exceeds ``threshold``."""
    if opportunity_model is None or motion_model is None:
        raise ValueError("decide needs trained opportunity and motion models")
    phone = window.phone if phone is None else phone
    col = opportunity_model.class_index(SUCCESS)
    fv = feats.assemble(window, motion_model, phone)
    p_success = float(opportunity_model.predict_proba(fv.as_array()[None, :])[0, col])
    activation, command = playback_volume(fv.noise_mean, policy)

    if phone.screen_interactive:
        launch, reason = False, "screen interactive"
    elif phone.audio_route_external:
        launch, reason = False, "audio routed to external device"
    elif max(activation, command) > policy.ceiling:
        launch, reason = False, "required volume above ceiling"
    elif p_success > threshold:
        launch, reason = True, "opportunity"
    else:
        launch, reason = False, "below threshold"
    return TriggerDecision(launch, p_success, activation, command, False, fv.noise_mean, fv,
                           reason)


def gated_hold(window: Window, policy: VolumePolicy = VolumePolicy()) -> TriggerDecision:
    """Decision taken in standby: only the microphone ran, so no launch."""
    ambient = float(np.mean(feats.smooth_env(window.noise)))
    activation, command = playback_volume(ambient, policy)
    return TriggerDecision(False, 0.0, activation, command, True, ambient, None, "standby")
