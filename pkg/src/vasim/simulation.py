"""Batch trial execution and the aggregated simulation report."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .lifecycle import FIELD_TARGETS, TrialConfig, TrialRecord, run_trial
from .scenegen import derive_seed
from .trace import Scenario

REPORT_VERSION = 1


def trial_seed(seed: int, scenario: Scenario, trial: int) -> int:
    return derive_seed(seed, scenario.index, trial, 0x51)


def _run_chunk(config: TrialConfig, jobs: list[tuple[Scenario, int, int]]) -> list[TrialRecord]:
    return [run_trial(s, config, seed, trial) for s, trial, seed in jobs]


@dataclass(frozen=True)
class ScenarioAggregate:
    scenario: Scenario
    trials: int
    launched: int
    noticed: int
    blocked: int
    succeeded: int

    @property
    def success_rate(self) -> float | None:
        """Successes over launched attacks; None when nothing launched."""
        return self.succeeded / self.launched if self.launched else None

    @property
    def launch_rate(self) -> float:
        return self.launched / self.trials if self.trials else 0.0

    def to_json(self) -> dict:
        return {"scenario": self.scenario.letter, "name": self.scenario.name,
                "trials": self.trials, "launched": self.launched, "noticed": self.noticed,
                "blocked": self.blocked, "succeeded": self.succeeded,
                "success_rate": self.success_rate, "launch_rate": self.launch_rate}


def aggregate(records: Iterable[TrialRecord]) -> dict[Scenario, ScenarioAggregate]:
    out = {}
    records = list(records)
    for s in Scenario:
        rs = [r for r in records if r.scenario is s]
        if rs:
            out[s] = ScenarioAggregate(s, len(rs), sum(r.launched for r in rs),
                                       sum(r.noticed for r in rs), sum(r.blocked for r in rs),
                                       sum(r.succeeded for r in rs))
    return out


@dataclass(frozen=True)
class SimulationReport:
    settings: dict
    records: tuple[TrialRecord, ...]

    @property
    def aggregates(self) -> dict[Scenario, ScenarioAggregate]:
        return aggregate(self.records)

    def ledger_totals(self) -> dict:
        n = len(self.records)
        power = sum(r.ledger["power_total_mah"] for r in self.records)
        minutes = sum(sum(r.ledger["minutes"].values()) for r in self.records)
        p3 = sum(r.ledger["power_mah"].get("P3", 0.0) + r.ledger["power_mah"].get("P3-gated", 0.0)
                 for r in self.records)
        p3_min = sum(r.ledger["minutes"].get("P3", 0.0) + r.ledger["minutes"].get("P3-gated", 0.0)
                     for r in self.records)
        return {
            "trials": n,
            "power_total_mah": power,
            "minutes_total": minutes,
            "p3_power_mah": p3,
            "p3_minutes": p3_min,
            "p3_mah_per_minute": p3 / p3_min if p3_min else 0.0,
            "mean_power_per_trial_mah": power / n if n else 0.0,
        }

    def to_json(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "settings": self.settings,
            "aggregates": [a.to_json() for a in self.aggregates.values()],
            "ledger": self.ledger_totals(),
            "trials": [r.to_json() for r in self.records],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def trials_csv(self) -> str:
        buf = io.StringIO()
        rows = [r.row() for r in self.records]
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "name", "trials", "launched", "noticed", "blocked", "succeeded",
                    "success_rate", "field_success_rate"])
        for s, a in self.aggregates.items():
            rate = "" if a.success_rate is None else f"{a.success_rate:.4f}"
            w.writerow([s.letter, s.name, a.trials, a.launched, a.noticed, a.blocked, a.succeeded,
                        rate, f"{FIELD_TARGETS[s].success_rate:.4f}"])
        return buf.getvalue()


def simulate(config: TrialConfig, trials: int, seed: int,
             scenarios: Sequence[Scenario] = tuple(Scenario), jobs: int = 1,
             settings: dict | None = None) -> SimulationReport:
    """Run ``trials`` per scenario. Output is independent of ``jobs``."""
    work = [(s, t, trial_seed(seed, s, t)) for s in scenarios for t in range(trials)]
    if jobs > 1 and len(work) > 1:
        n = min(jobs, len(work))
        chunks = [work[i::n] for i in range(n)]
        with ProcessPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(_run_chunk, [config] * n, chunks))
        by_key = {}
        for chunk, part in zip(chunks, parts):
            for (s, t, _), rec in zip(chunk, part):
                by_key[(s.index, t)] = rec
        records = [by_key[(s.index, t)] for s, t, _ in work]
    else:
        records = _run_chunk(config, work)
    return SimulationReport(dict(settings or {}), tuple(records))


# Accepted success-rate bands per scenario for the field-study consistency check.
FIELD_BANDS: dict[Scenario, tuple[float, float]] = {
    Scenario.QuietRoad: (0.0, 0.05),
    Scenario.Highway: (0.85, 0.95),
    Scenario.SpecificPlaces: (0.265, 0.385),
    Scenario.PublicTransport: (0.80, 0.90),
    Scenario.Car: (0.0, 0.05),
    Scenario.Restaurant: (0.92, 0.98),
}


def band_failures(aggregates: dict[Scenario, ScenarioAggregate],
                  bands: dict[Scenario, tuple[float, float]] = FIELD_BANDS) -> list[str]:
    """Scenarios whose success rate falls outside its band (None counts as 0)."""
    bad = []
    for s, (lo, hi) in bands.items():
        if s not in aggregates:
            continue
        rate = aggregates[s].success_rate or 0.0
        if not lo - 1e-12 <= rate <= hi + 1e-12:
            bad.append(f"{s.letter}: {rate:.4f} not in [{lo}, {hi}]")
    return bad
