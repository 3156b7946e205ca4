"""Simulated countermeasures applied to playback events.

Each defence is a predicate over an :class:`AttackContext`: does the
assistant refuse this utterance? The same predicates run on benign owner
commands so their usability cost can be measured.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .trace import PhoneState, Placement


class Defense(enum.Enum):
    SourceCheck = "SourceCheck"
    ContinuousAuth = "ContinuousAuth"
    MagneticDetect = "MagneticDetect"


class Source(enum.Enum):
    BuiltInSpeaker = "speaker"
    Owner = "owner"


@dataclass(frozen=True)
class DefenseConfig:
    kind: Defense
    magnetic_fn_rate: float = 0.05
    magnetic_fp_rate: float = 0.1
    # Share of legitimate commands spoken without touching the phone (driving etc.).
    hands_free_fraction: float = 0.3
    other_devices_nearby: bool = False

    def __post_init__(self):
        for name in ("magnetic_fn_rate", "magnetic_fp_rate", "hands_free_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class AttackContext:
    source: Source
    body_vibration: bool
    other_devices_nearby: bool = False

    @classmethod
    def attack(cls, phone: PhoneState | None = None, other_devices_nearby: bool = False):
        # Playback from the speaker never carries the owner's body vibration.
        return cls(Source.BuiltInSpeaker, False, other_devices_nearby)

    @classmethod
    def legitimate(cls, held: bool, other_devices_nearby: bool = False):
        return cls(Source.Owner, held, other_devices_nearby)


def apply_defense(config: DefenseConfig, ctx: AttackContext, rng: np.random.Generator) -> bool:
    """True when the defence blocks the utterance. Draws exactly one uniform."""
    u = rng.random()
    if config.kind is Defense.SourceCheck:
        return ctx.source is Source.BuiltInSpeaker
    if config.kind is Defense.ContinuousAuth:
        return not ctx.body_vibration
    if ctx.source is Source.BuiltInSpeaker:
        return bool(u >= config.magnetic_fn_rate)
    return bool(ctx.other_devices_nearby and u < config.magnetic_fp_rate)


@dataclass(frozen=True)
class DefenseEvaluation:
    kind: Defense
    attacks: int
    attacks_blocked: int
    benign: int
    benign_blocked: int

    @property
    def attack_block_rate(self) -> float:
        return self.attacks_blocked / self.attacks if self.attacks else 0.0

    @property
    def false_reject_rate(self) -> float:
        return self.benign_blocked / self.benign if self.benign else 0.0

    def to_json(self) -> dict:
        return {"defense": self.kind.value, "attacks": self.attacks,
                "attacks_blocked": self.attacks_blocked, "attack_block_rate": self.attack_block_rate,
                "benign": self.benign, "benign_blocked": self.benign_blocked,
                "false_reject_rate": self.false_reject_rate}


def evaluate_defense(config: DefenseConfig, attacks: int, benign: int, seed: int) -> DefenseEvaluation:
    """Block rate on speaker playback and false-reject rate on owner commands."""
    rng = np.random.default_rng([seed, 0xDEF])
    blocked = sum(
        apply_defense(config, AttackContext.attack(PhoneState(placement=Placement.Pocket),
                                                   config.other_devices_nearby), rng)
        for _ in range(attacks)
    )
    rejected = 0
    for _ in range(benign):
        held = bool(rng.random() >= config.hands_free_fraction)
        ctx = AttackContext.legitimate(held, config.other_devices_nearby)
        rejected += apply_defense(config, ctx, rng)
    return DefenseEvaluation(config.kind, attacks, blocked, benign, rejected)
