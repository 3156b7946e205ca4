import os

import pytest
from hypothesis import HealthCheck, settings

from vasim import pipeline
from vasim.forest import ForestParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SMALL_FOREST = ForestParams(n_estimators=40, max_depth=10)


@pytest.fixture(scope="session")
def notice_model():
    """Notice model calibrated on 400 traces per scenario."""
    return pipeline.calibrated_notice(11, trials=400)


@pytest.fixture(scope="session")
def small_dataset(notice_model):
    return pipeline.labelled_dataset(notice_model, 11, trials=40)


@pytest.fixture(scope="session")
def models(small_dataset):
    return pipeline.train_models(small_dataset, pipeline.DEFAULT_PARAMS, 11, SMALL_FOREST)


@pytest.fixture(scope="session")
def trial_config(models, notice_model):
    from importlib import resources

    from vasim.lifecycle import Protocol, TrialConfig, load_commands
    commands = load_commands(resources.files("vasim") / "data" / "commands.txt")
    return TrialConfig(models.opportunity, models.motion, notice_model, commands,
                       protocol=Protocol.Collection)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
