import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vasim.trace import (PhoneState, Placement, Scenario, SensorTrace, TraceFormatError,
                         cut_window, load_trace, loads_trace, save_trace)

HEADER = "sensortrace,1\nscenario=f,duration=1,screen_interactive=0,bluetooth_audio=0," \
         "wired_headphone=0,placement=Pocket\n"


def make_trace(duration=2.0, scenario=Scenario.Restaurant, phone=PhoneState(), seed=0):
    rng = np.random.default_rng(seed)
    ta = np.arange(int(duration * 50)) / 50
    te = np.arange(int(duration * 5)) / 5
    accel = np.column_stack([ta, np.round(rng.standard_normal((ta.size, 3)), 6)])
    noise = np.column_stack([te, np.round(60 + rng.standard_normal(te.size), 3)])
    light = np.column_stack([te, np.round(300 + rng.standard_normal(te.size), 3)])
    return SensorTrace(scenario, accel, noise, light, phone, duration)


def test_scenario_enum():
    assert [s.letter for s in Scenario] == list("abcdef")
    assert Scenario.parse("f") is Scenario.Restaurant
    assert Scenario.parse("quietroad") is Scenario.QuietRoad
    assert Scenario.Car.index == 4
    with pytest.raises(ValueError, match="unknown scenario"):
        Scenario.parse("g")


def test_phone_state_audio_route():
    assert not PhoneState().audio_route_external
    assert PhoneState(bluetooth_audio=True).audio_route_external
    assert PhoneState(wired_headphone=True).audio_route_external


def test_full_length_file_loads(tmp_path):
    trace = make_trace(180.0)
    path = tmp_path / "f.csv"
    save_trace(trace, path)
    back = load_trace(path)
    assert back.duration == 180.0 and back.accel.shape[0] == 9000
    assert back == trace


def test_non_monotonic_names_line():
    text = HEADER + "accel,0.00,0,0,0\naccel,0.02,0,0,0\naccel,0.02,0,0,0\n"
    with pytest.raises(TraceFormatError, match="non-monotonic at line 3"):
        loads_trace(text)


@pytest.mark.parametrize("body,message", [
    ("accel,0,1,2\n", "malformed row at line 1"),
    ("accel,0,a,2,3\n", "malformed row at line 1"),
    ("gyro,0,1,2,3\n", "unknown channel 'gyro' at line 1"),
    ("accel,0,0,0,0\nnoise,0,50\n", "channel empty: light"),
])
def test_parse_errors(body, message):
    with pytest.raises(TraceFormatError, match=message):
        loads_trace(HEADER + body)


def test_header_errors():
    with pytest.raises(TraceFormatError, match="missing header"):
        loads_trace("sensortrace,1\n")
    with pytest.raises(TraceFormatError, match="unsupported version"):
        loads_trace("sensortrace,2\nscenario=a,duration=1\n")
    with pytest.raises(TraceFormatError, match="unknown scenario"):
        loads_trace("sensortrace,1\nscenario=z,duration=1\naccel,0,0,0,0\n")


def test_save_is_byte_identical(tmp_path):
    trace = make_trace()
    save_trace(trace, tmp_path / "a.csv")
    save_trace(trace, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_empty_channel_rejected():
    with pytest.raises(ValueError, match="channel empty"):
        SensorTrace(Scenario.Car, np.empty((0, 4)), np.array([[0, 1.0]]), np.array([[0, 1.0]]),
                    PhoneState(), 1.0)


def test_trace_arrays_read_only():
    trace = make_trace()
    with pytest.raises(ValueError):
        trace.accel[0, 1] = 5.0


phones = st.builds(PhoneState, st.booleans(), st.booleans(), st.booleans(),
                   st.sampled_from(list(Placement)))


@given(st.sampled_from(list(Scenario)), phones, st.integers(0, 2**32 - 1),
       st.floats(0.4, 5.0))
def test_round_trip_property(scenario, phone, seed, duration):
    duration = round(duration, 1)
    trace = make_trace(duration, scenario, phone, seed)
    text_trace = loads_trace(_dump(trace))
    assert text_trace == trace


def _dump(trace):
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "t.csv"
        save_trace(trace, p)
        return p.read_text()


def test_cut_window_full_length():
    trace = make_trace(180.0)
    w = cut_window(trace, 0.0, 180.0)
    assert w.accel.shape == (9000, 3) and w.noise.shape == (9000,) and w.light.shape == (9000,)
    # 5 Hz noise sample at t=0 is the nearest neighbour of the 0.02 s grid point.
    assert w.noise[1] == trace.noise[0, 1]
    assert w.scenario is trace.scenario and w.phone == trace.phone


@given(st.floats(0.2, 6.0))
def test_window_channels_equal_length(duration):
    duration = round(duration, 2)
    trace = make_trace(duration)
    w = cut_window(trace, 0.0, duration)
    n = int(round(duration * 50))
    assert w.accel.shape[0] == w.noise.shape[0] == w.light.shape[0] == n


def test_cut_window_errors():
    trace = make_trace(2.0)
    with pytest.raises(ValueError, match="empty window"):
        cut_window(trace, 0.0, 0.0)
    with pytest.raises(ValueError, match="outside trace span"):
        cut_window(trace, 1.0, 2.0)
    with pytest.raises(ValueError, match="outside trace span"):
        cut_window(trace, -0.1, 1.0)
