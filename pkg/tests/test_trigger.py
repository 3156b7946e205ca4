import json
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from vasim import scenegen as sg
from vasim import trigger as T
from vasim.trace import PhoneState, Placement, Scenario, cut_window

RAW = T.VolumePolicy(margin=0.0)


def interp_oracle(x, xs, ys):
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def window_for(scenario, seed, phone=None, duration=180.0):
    phone = phone or PhoneState(placement=Placement.InHand)
    tr = sg.generate_trace(scenario, duration, phone, sg.DEFAULT_PARAMS[scenario], seed)
    return cut_window(tr, 0.0, duration)


# Volume policy ------------------------------------------------------------

@pytest.mark.parametrize("ambient,want", [
    (30.0, (44.0, 40.0)), (41.0, (44.0, 40.0)), (52.0, (54.0, 54.0)),
    (68.0, (67.0, 67.0)), (73.0, (75.0, 76.0)), (46.5, (49.0, 47.0)),
    (10.0, (44.0, 40.0)), (95.0, (75.0, 76.0)),
])
def test_table_rows_and_interpolation(ambient, want):
    assert T.playback_volume(ambient, RAW) == pytest.approx(want, abs=1e-12)


def test_default_margin_adds_one_db():
    assert T.playback_volume(52.0) == pytest.approx((55.0, 55.0))


@given(st.floats(0, 120), st.floats(0, 120))
def test_volume_monotone(a, b):
    lo, hi = sorted((a, b))
    va, vb = T.playback_volume(lo), T.playback_volume(hi)
    assert va[0] <= vb[0] and va[1] <= vb[1]


@given(st.floats(0, 120))
def test_volume_matches_linear_oracle(x):
    xs, act, cmd = zip(*T.DEFAULT_ANCHORS)
    got = T.playback_volume(x, RAW)
    assert got[0] == pytest.approx(interp_oracle(x, xs, act), abs=1e-9)
    assert got[1] == pytest.approx(interp_oracle(x, xs, cmd), abs=1e-9)


def test_policy_validation_and_round_trip():
    with pytest.raises(ValueError):
        T.VolumePolicy(anchors=((40, 1, 1), (40, 2, 2)))
    with pytest.raises(ValueError):
        T.VolumePolicy(anchors=())
    p = T.VolumePolicy(margin=2.5, ceiling=77.0)
    assert T.VolumePolicy.from_json(json.loads(json.dumps(p.to_json()))) == p
    shipped = resources.files("vasim") / "data" / "policy.json"
    assert T.VolumePolicy.load(shipped) == T.VolumePolicy()


# Standby gate -------------------------------------------------------------

@pytest.mark.parametrize("level,want", [(55, True), (45, False), (50, True), (49.999, False)])
def test_standby_gate(level, want):
    assert T.standby_gate(level, 50.0) is want


def test_gated_hold_never_launches():
    d = T.gated_hold(window_for(Scenario.QuietRoad, 1, duration=20.0))
    assert d.gated and not d.launch and d.features is None


# Decisions ----------------------------------------------------------------

def test_screen_and_audio_gates(models):
    w = window_for(Scenario.Restaurant, 3)
    opp, mot = models.opportunity, models.motion
    for phone in (PhoneState(screen_interactive=True), PhoneState(bluetooth_audio=True),
                  PhoneState(wired_headphone=True)):
        d = T.decide(w, phone, opp, mot, threshold=0.0)
        assert not d.launch


def test_threshold_extremes(models):
    for seed in range(5):
        w = window_for(Scenario.Highway, seed)
        assert not T.decide(w, None, models.opportunity, models.motion, threshold=1.0).launch
        d = T.decide(w, None, models.opportunity, models.motion, threshold=0.0)
        assert d.launch == (d.p_success > 0.0)


def test_ceiling_blocks_launch(models):
    w = window_for(Scenario.Restaurant, 4)
    low = T.VolumePolicy(ceiling=60.0)
    d = T.decide(w, None, models.opportunity, models.motion, low, threshold=0.0)
    assert not d.launch and d.reason == "required volume above ceiling"


def test_decision_deterministic_and_volumes(models):
    w = window_for(Scenario.PublicTransport, 2)
    a = T.decide(w, None, models.opportunity, models.motion)
    b = T.decide(w, None, models.opportunity, models.motion)
    assert (a.launch, a.p_success, a.activation_volume) == (b.launch, b.p_success,
                                                           b.activation_volume)
    assert (a.activation_volume, a.command_volume) == T.playback_volume(a.ambient)


def test_launch_implies_table_minima(models):
    for seed in range(10):
        d = T.decide(window_for(Scenario.Restaurant, seed), None, models.opportunity,
                     models.motion)
        if d.launch:
            need = T.playback_volume(d.ambient, RAW)
            assert d.activation_volume >= need[0] and d.command_volume >= need[1]


def test_untrained_model_error(models):
    with pytest.raises(ValueError):
        T.decide(window_for(Scenario.Car, 0, duration=10.0), None, None, models.motion)


def test_quiet_road_holds(models):
    for seed in range(20):
        assert not T.decide(window_for(Scenario.QuietRoad, seed), None, models.opportunity,
                            models.motion).launch


def test_restaurant_mostly_launches(models):
    launches = sum(T.decide(window_for(Scenario.Restaurant, 1000 + s), None,
                            models.opportunity, models.motion).launch for s in range(100))
    assert launches >= 90
