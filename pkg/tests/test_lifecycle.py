import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vasim import lifecycle as L
from vasim import scenegen as sg
from vasim.defenses import Defense, DefenseConfig
from vasim.trace import Placement, Scenario, cut_window

P, E = L.Phase, L.Event


# State machine ------------------------------------------------------------

@pytest.mark.parametrize("phase,event,kw,want", [
    (P.P1_CallMonitor, E.CallStarted, {}, P.P2_RecordSynthesize),
    (P.P2_RecordSynthesize, E.SegmentAvailable, dict(key_complete=True), P.P3_EnvironmentMonitor),
    (P.P2_RecordSynthesize, E.SegmentAvailable, {}, P.P2_RecordSynthesize),
    (P.P2_RecordSynthesize, E.CallEnded, {}, P.P1_CallMonitor),
    (P.P2_RecordSynthesize, E.CallEnded, dict(key_complete=True), P.P3_EnvironmentMonitor),
    (P.P3_EnvironmentMonitor, E.CallStarted, {}, P.P3_EnvironmentMonitor),
    (P.P3_EnvironmentMonitor, E.DecisionMade, dict(launch=True), P.P4_Attack),
    (P.P3_EnvironmentMonitor, E.DecisionMade, {}, P.P3_EnvironmentMonitor),
    (P.P4_Attack, E.AttackCompleted, {}, P.Done),
    (P.P4_Attack, E.AttackCompleted, dict(more_commands=True), P.P3_EnvironmentMonitor),
])
def test_step_examples(phase, event, kw, want):
    assert L.step(phase, event, **kw) is want


@pytest.mark.parametrize("phase,event", [
    (P.P1_CallMonitor, E.WindowElapsed), (P.P1_CallMonitor, E.DecisionMade),
    (P.P2_RecordSynthesize, E.DecisionMade), (P.P4_Attack, E.WindowElapsed),
    (P.Done, E.CallStarted), (P.P1_CallMonitor, E.AttackCompleted),
])
def test_illegal_events(phase, event):
    with pytest.raises(L.TransitionError, match="illegal"):
        L.step(phase, event)


SYMBOLS = [
    (E.CallStarted, {}), (E.SegmentAvailable, {}), (E.SegmentAvailable, dict(key_complete=True)),
    (E.CallEnded, {}), (E.WindowElapsed, {}), (E.DecisionMade, {}),
    (E.DecisionMade, dict(launch=True)), (E.AttackCompleted, {}),
    (E.AttackCompleted, dict(more_commands=True)),
]


def test_no_attack_without_key_and_launch_exhaustive():
    """Every legal event sequence up to length 12.

    The machine's future depends only on (phase, key_complete), so walking
    that frontier depth by depth covers all sequences exactly.
    """
    frontier = {(P.P1_CallMonitor, False)}
    seen_p4 = False
    for _ in range(12):
        nxt = set()
        for phase, key in frontier:
            for event, kw in SYMBOLS:
                m = L.AttackMachine(phase, key)
                try:
                    new = m.fire(event, **kw)
                except L.TransitionError:
                    continue
                if new is P.P4_Attack and phase is not P.P4_Attack:
                    assert m.key_complete and m.last_launch and event is E.DecisionMade
                    seen_p4 = True
                if m.phase in (P.P3_EnvironmentMonitor, P.P4_Attack, P.Done):
                    assert m.key_complete
                nxt.add((m.phase, m.key_complete))
        frontier = nxt
    assert seen_p4
    assert (P.Done, True) in frontier


@given(st.lists(st.sampled_from(range(len(SYMBOLS))), max_size=30))
def test_random_sequences_respect_safety(seq):
    m = L.AttackMachine()
    for i in seq:
        event, kw = SYMBOLS[i]
        before = m.phase
        try:
            m.fire(event, **kw)
        except L.TransitionError:
            assert m.phase is before
            continue
        if m.phase is P.P4_Attack:
            assert m.key_complete


# Notice model -------------------------------------------------------------

def test_notice_limits_and_midpoint():
    m = replace(L.NoticeModel(base_margin=3.0), calibrated=True)
    assert m.probability(Scenario.Car, 60.0, 63.0) == 0.5
    assert m.probability(Scenario.Car, 60.0, -1e6) == 0.0
    assert m.probability(Scenario.Car, 60.0, 1e6) == 1.0
    assert m.probability(Scenario.Car, 60.0, 71.0, Placement.Pocket) == 0.5


@given(st.floats(-200, 200), st.floats(0.01, 5), st.floats(-50, 50))
def test_notice_probability_is_logistic(x, slope, offset):
    m = L.NoticeModel(slope=slope, base_margin=0.0,
                      scenario_offset={s: offset for s in Scenario})
    p = m.probability(Scenario.Highway, 50.0, 50.0 + x)
    z = slope * (x - offset)
    want = 1 / (1 + math.exp(-z)) if z > -700 else 0.0
    assert 0.0 <= p <= 1.0 and p == pytest.approx(want, abs=1e-12)


def test_notice_requires_calibration():
    with pytest.raises(ValueError, match="calibrated"):
        L.notice(L.NoticeModel(), Scenario.Car, 50, 50, np.random.default_rng(0))


def test_notice_deterministic_given_rng():
    m = replace(L.NoticeModel(), calibrated=True)
    a = [L.notice(m, Scenario.Car, 50, 53, np.random.default_rng(5)) for _ in range(3)]
    assert len(set(a)) == 1


def test_notice_model_round_trip(notice_model, tmp_path):
    notice_model.save(tmp_path / "n.json")
    assert L.NoticeModel.load(tmp_path / "n.json") == notice_model


def _fresh_notice_rate(model, scenario, n=1000, seed=777):
    rng = np.random.default_rng(seed)
    hits = 0
    for t in range(n):
        tr = sg.generate_trace(scenario, 180.0, sg.trial_phone(t), sg.DEFAULT_PARAMS[scenario],
                               sg.derive_seed(seed, t))
        w = cut_window(tr, 0.0, 180.0)
        amb = L.window_ambient(w)
        hits += L.notice(model, scenario, amb, L.playback_level(L.VolumePolicy(), amb), rng,
                         w.phone.placement)
    return hits / n


def test_calibrated_zero_target_rarely_noticed(notice_model):
    assert _fresh_notice_rate(notice_model, Scenario.Highway) <= 0.05


def test_calibrated_full_target_almost_always_noticed(notice_model):
    assert _fresh_notice_rate(notice_model, Scenario.QuietRoad) >= 0.95


def test_calibration_residuals(notice_model):
    assert notice_model.calibrated
    for s, t in L.FIELD_TARGETS.items():
        assert abs(notice_model.residuals[s]) <= 0.05
    # Recognition comes from unnoticed trials that still failed.
    assert notice_model.recognition[Scenario.Highway] == pytest.approx(18 / 20)
    assert notice_model.recognition[Scenario.SpecificPlaces] == pytest.approx(13 / 16)
    assert notice_model.recognition[Scenario.QuietRoad] == L.DEFAULT_RECOGNITION


def test_symmetric_targets_give_identical_offsets():
    params = {s: sg.DEFAULT_PARAMS[Scenario.Highway] for s in Scenario}
    targets = {s: L.ScenarioTarget(6, 10, 20) for s in Scenario}
    m = L.calibrate_notice(L.NoticeModel(), targets, params, trials=40, seed=3)
    assert len(set(m.scenario_offset.values())) == 1


def test_calibration_errors():
    with pytest.raises(ValueError, match="missing"):
        L.calibrate_notice(L.NoticeModel(), {Scenario.Car: L.ScenarioTarget(1, 0, 1)}, trials=5)
    with pytest.raises(L.CalibrationError) as exc:
        L.calibrate_notice(L.NoticeModel(), L.FIELD_TARGETS, trials=10, max_iter=2)
    assert exc.value.residuals
    with pytest.raises(L.CalibrationError, match="bracketed"):
        L.calibrate_notice(L.NoticeModel(slope=1e-4), L.FIELD_TARGETS, trials=10)


# Ledger -------------------------------------------------------------------

@pytest.mark.parametrize("rate,gated,want", [(50.0, False, 8.0), (10.0, False, 5.0),
                                             (50.0, True, 4.0)])
def test_ledger_p3_rates(rate, gated, want):
    led = L.ledger_accumulate(L.ResourceLedger(), P.P3_EnvironmentMonitor, 10.0, rate, gated)
    assert led.total_power_mah == pytest.approx(want)


def test_ledger_other_phases_and_zero():
    led = L.ResourceLedger()
    assert L.ledger_accumulate(led, P.P1_CallMonitor, 0.0) is led
    for ph, r in ((P.P1_CallMonitor, 0.2), (P.P2_RecordSynthesize, 0.1), (P.P4_Attack, 0.1)):
        assert L.ledger_accumulate(led, ph, 5.0).total_power_mah == pytest.approx(5 * r)
    with pytest.raises(ValueError):
        L.ledger_accumulate(led, P.P1_CallMonitor, -1.0)


@given(st.sampled_from(list(P)[:4]), st.floats(0, 1e4), st.floats(0, 1e4), st.booleans())
def test_ledger_linear(phase, t1, t2, gated):
    a = L.ledger_accumulate(L.ledger_accumulate(L.ResourceLedger(), phase, t1, gated=gated),
                            phase, t2, gated=gated)
    b = L.ledger_accumulate(L.ResourceLedger(), phase, t1 + t2, gated=gated)
    assert a.total_power_mah == pytest.approx(b.total_power_mah, rel=1e-12, abs=1e-9)
    assert a.total_minutes == pytest.approx(b.total_minutes, rel=1e-12, abs=1e-9)
    assert a.total_power_mah >= 0


def test_ledger_files():
    led = L.ResourceLedger().with_file("voice").with_file("accel").with_file("accel")
    assert led.summary()["disk_kb"] == pytest.approx(180.9 + 91.7)


# Trials -------------------------------------------------------------------

def test_run_trial_deterministic(trial_config):
    a = L.run_trial(Scenario.Highway, trial_config, 12345, 3)
    b = L.run_trial(Scenario.Highway, trial_config, 12345, 3)
    assert a == b
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


@given(st.integers(0, 2**32), st.sampled_from(list(Scenario)))
def test_record_invariants(trial_config, seed, scenario):
    for cfg in (trial_config, replace(trial_config, protocol=L.Protocol.IED, max_windows=2)):
        r = L.run_trial(scenario, cfg, seed)
        if r.succeeded:
            assert r.launched and not r.noticed and r.command_recognized and not r.blocked
        if r.launched:
            assert r.key_complete and r.command in cfg.commands
        if cfg.protocol is L.Protocol.IED and r.launched:
            assert r.ied_launch
        assert r.ledger["power_total_mah"] >= 0


def test_quiet_road_never_succeeds(trial_config):
    for cfg in (trial_config, replace(trial_config, protocol=L.Protocol.IED)):
        assert L.successes([L.run_trial(Scenario.QuietRoad, cfg, s, s) for s in range(20)]) == 0


def test_restaurant_success_rate(trial_config):
    recs = [L.run_trial(Scenario.Restaurant, trial_config, 50_000 + s, s) for s in range(1000)]
    assert L.successes(recs) / 1000 == pytest.approx(0.95, abs=0.03)


@pytest.mark.parametrize("scenario", list(Scenario))
def test_source_check_blocks_everything(trial_config, scenario):
    cfg = replace(trial_config, defense=DefenseConfig(Defense.SourceCheck))
    recs = [L.run_trial(scenario, cfg, s, s) for s in range(30)]
    assert L.successes(recs) == 0
    assert all(r.blocked for r in recs if r.launched)


def test_unreachable_key_stops_in_p1(trial_config):
    cfg = replace(trial_config, capture_horizon_minutes=1.0)
    r = L.run_trial(Scenario.Restaurant, cfg, 8)
    if not r.key_complete:
        assert not r.launched and r.windows == 0
        assert sum(m for ph, m in r.timeline) == pytest.approx(1.0)


def test_gating_uses_standby_rate(trial_config):
    cfg = replace(trial_config, protocol=L.Protocol.IED, gating=True, max_windows=3)
    r = L.run_trial(Scenario.QuietRoad, cfg, 4)
    assert r.gated_windows == r.windows == 3
    assert r.ledger["power_mah"]["P3-gated"] == pytest.approx(0.4 * 9.0)


def test_syllable_mode_lowers_success(trial_config):
    word = [L.run_trial(Scenario.Restaurant, trial_config, s, s) for s in range(200)]
    syl = replace(trial_config, capture_mode=L.kp.CaptureMode.SyllableBased)
    syl_recs = [L.run_trial(Scenario.Restaurant, syl, s, s) for s in range(200)]
    rate = L.successes(syl_recs) / max(1, sum(r.launched for r in syl_recs))
    assert rate < L.successes(word) / 200
    assert rate == pytest.approx(0.4 * 0.95, abs=0.12)


def test_load_commands(tmp_path):
    from importlib import resources
    cmds = L.load_commands(resources.files("vasim") / "data" / "commands.txt")
    assert len(cmds) == 20
    (tmp_path / "c.txt").write_text("# only comments\n\n")
    with pytest.raises(ValueError):
        L.load_commands(tmp_path / "c.txt")
