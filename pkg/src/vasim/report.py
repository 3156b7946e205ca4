"""Plain-text tables and two-column CSV emitters."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping

import numpy as np

from .dsp import butterworth_lowpass
from .forest import EvalMetrics
from .lifecycle import FIELD_TARGETS, ScenarioTarget
from .simulation import ScenarioAggregate
from .trace import Scenario
from .trigger import VolumePolicy, playback_volume


def xy_csv(x: Iterable[float], y: Iterable[float], header=("x", "y")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, b in zip(x, y):
        w.writerow([a if isinstance(a, str) else format(a, ".9g"),
                    "" if b is None else format(b, ".9g")])
    return buf.getvalue()


def filter_response_data(order: int = 4, cutoff: float = 5.0, rate: float = 50.0,
                         points: int = 512) -> tuple[np.ndarray, np.ndarray]:
    coeffs = butterworth_lowpass(order, cutoff, rate)
    # Nyquist itself is left out: the bilinear design has a zero there (-inf dB).
    freqs = np.linspace(0.0, rate / 2, points + 1)[:-1]
    return freqs, coeffs.magnitude_db(freqs)


def policy_curve(policy: VolumePolicy, lo: float = 25.0, hi: float = 80.0, step: float = 0.5):
    ambient = np.arange(lo, hi + step / 2, step)
    vols = np.array([playback_volume(a, policy) for a in ambient])
    return ambient, vols[:, 0], vols[:, 1]


def success_table(aggregates: Mapping[Scenario, ScenarioAggregate],
                  targets: Mapping[Scenario, ScenarioTarget] = FIELD_TARGETS) -> str:
    head = f"{'scenario':<18}{'trials':>7}{'launched':>9}{'noticed':>8}{'succeeded':>10}" \
           f"{'rate':>8}{'field':>8}"
    lines = [head, "-" * len(head)]
    for s, a in aggregates.items():
        rate = "-" if a.success_rate is None else f"{100 * a.success_rate:.1f}%"
        ref = f"{100 * targets[s].success_rate:.1f}%" if s in targets else "-"
        lines.append(f"({s.letter}) {s.name:<14}{a.trials:>7}{a.launched:>9}{a.noticed:>8}"
                     f"{a.succeeded:>10}{rate:>8}{ref:>8}")
    return "\n".join(lines) + "\n"


def metrics_table(m: EvalMetrics) -> str:
    lines = [f"{'class':<24}{'precision':>10}{'recall':>8}{'f1':>8}{'support':>9}"]
    for c in m.class_order:
        cm = m.per_class[c]
        lines.append(f"{c:<24}{cm.precision:>10.3f}{cm.recall:>8.3f}{cm.f1:>8.3f}{cm.support:>9}")
    lines.append(f"{'macro avg':<24}{m.macro_precision:>10.3f}{m.macro_recall:>8.3f}"
                 f"{m.macro_f1:>8.3f}")
    lines.append(f"{'weighted avg':<24}{m.weighted_precision:>10.3f}{m.weighted_recall:>8.3f}"
                 f"{m.weighted_f1:>8.3f}")
    lines.append(f"accuracy {m.accuracy:.3f}")
    if m.warning:
        lines.append(f"warning: {m.warning}")
    return "\n".join(lines) + "\n"
