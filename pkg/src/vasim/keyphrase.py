"""Activation-keyword capture over annotated transcript segments.

Audio is abstracted away: a call yields 20-second segments of word tokens,
and a lexicon supplies each token's syllables. Word-based capture needs the
keyword words themselves; syllable-based capture needs only their syllables,
taken from any words that contain them.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .scenegen import Segment

WORD_BASED_SUCCESS = 1.0
SYLLABLE_BASED_SUCCESS = 0.4


class CaptureMode(enum.Enum):
    WordBased = "WordBased"
    SyllableBased = "SyllableBased"


DEFAULT_LEXICON = {
    "keyword": ["ok", "google"],
    "entries": {
        "ok": ["o", "k"],
        "google": ["goo", "gle"],
        "oh": ["o"],
        "cake": ["k", "ke"],
        "good": ["goo", "d"],
        # Loose by design: the open syllable of "go" stands in for "gle".
        "go": ["gle"],
    },
}


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, tuple[str, ...]]
    keyword: tuple[str, ...]

    def __post_init__(self):
        missing = [w for w in self.keyword if w not in self.entries]
        if missing:
            raise ValueError(f"keyword words lack lexicon entries: {missing}")

    @classmethod
    def from_json(cls, data: dict) -> "Lexicon":
        entries = {w.lower(): tuple(s) for w, s in data["entries"].items()}
        return cls(entries, tuple(w.lower() for w in data["keyword"]))

    def to_json(self) -> dict:
        return {"keyword": list(self.keyword),
                "entries": {w: list(s) for w, s in self.entries.items()}}

    @classmethod
    def load(cls, path) -> "Lexicon":
        return cls.from_json(json.loads(Path(path).read_text()))

    def syllables(self, token: str) -> tuple[str, ...]:
        """Annotation of ``token``; words outside the lexicon carry none."""
        return self.entries.get(token.lower(), ())

    def needed_units(self, mode: CaptureMode) -> tuple[str, ...]:
        if mode is CaptureMode.WordBased:
            return self.keyword
        return tuple(s for w in self.keyword for s in self.entries[w])


def default_lexicon() -> Lexicon:
    return Lexicon.from_json(DEFAULT_LEXICON)


def syllabify(word: str, lexicon: Lexicon) -> tuple[str, ...]:
    try:
        return lexicon.entries[word.lower()]
    except KeyError:
        raise KeyError(f"unknown word {word!r}") from None


@dataclass(frozen=True)
class CaptureState:
    mode: CaptureMode
    needed: tuple[str, ...]
    captured: dict[str, int] = field(default_factory=dict)  # unit -> source segment id

    @property
    def complete(self) -> bool:
        return all(u in self.captured for u in self.needed)


def start_capture(mode: CaptureMode, lexicon: Lexicon) -> CaptureState:
    return CaptureState(mode, lexicon.needed_units(mode))


def feed_segment(state: CaptureState, segment: Segment | Iterable[str], lexicon: Lexicon,
                 segment_id: int | None = None) -> CaptureState:
    """Capture any still-missing units present in ``segment``.

    The first sighting of a unit wins. A complete state is returned
    unchanged, since monitoring stops once the key can be synthesised.
    """
    if state.complete:
        return state
    if isinstance(segment, Segment):
        tokens, seg_id = segment.tokens, segment.segment_id
    else:
        tokens, seg_id = tuple(segment), segment_id if segment_id is not None else -1
    present: set[str] = set()
    for tok in tokens:
        tok = tok.lower()
        if state.mode is CaptureMode.WordBased:
            present.add(tok)
        else:
            present.update(lexicon.syllables(tok))
    captured = dict(state.captured)
    for unit in state.needed:
        if unit not in captured and unit in present:
            captured[unit] = seg_id
    return CaptureState(state.mode, state.needed, captured)


@dataclass(frozen=True)
class SuccessConfig:
    word_based: float = WORD_BASED_SUCCESS
    syllable_based: float = SYLLABLE_BASED_SUCCESS

    def for_mode(self, mode: CaptureMode) -> float:
        return self.word_based if mode is CaptureMode.WordBased else self.syllable_based


@dataclass(frozen=True)
class ActivationKey:
    units: tuple[str, ...]
    mode: CaptureMode
    activation_success_prob: float
    sources: tuple[int, ...] = ()

    def activates(self, rng: np.random.Generator) -> bool:
        """One playback attempt against the assistant's keyword check."""
        return bool(rng.random() < self.activation_success_prob)


def synthesize(state: CaptureState, config: SuccessConfig = SuccessConfig()) -> ActivationKey:
    if not state.complete:
        raise ValueError("capture incomplete")
    return ActivationKey(state.needed, state.mode, config.for_mode(state.mode),
                         tuple(state.captured[u] for u in state.needed))
