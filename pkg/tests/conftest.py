import json
from pathlib import Path

import pytest

from enginetrainer.fixtures import build_verano_scenario
from enginetrainer.scenario import action_name, topological_order
from enginetrainer.session import Mode, ScoringRules, start_session

DATA_DIR = Path(__file__).parent / "data"
VALID_DIR = DATA_DIR / "valid"
INVALID_DIR = DATA_DIR / "invalid"


@pytest.fixture(scope="session")
def verano():
    return build_verano_scenario()


@pytest.fixture
def default_rules(verano):
    return ScoringRules.default_for(verano)


def perfect_inputs(scenario):
    """(step_id, tool, torque, action) tuples for a flawless ordered run."""
    steps = scenario.step_by_id()
    return [
        (sid, steps[sid].required_tool, steps[sid].required_torque,
         action_name(steps[sid].action))
        for sid in topological_order(scenario)
    ]


def run_perfect(scenario, mode=Mode.EXAMINATION, hints=None, session_id=None):
    from enginetrainer.session import NO_HINTS
    session = start_session(scenario, mode, hints or NO_HINTS,
                            session_id=session_id)
    for sid, tool, torque, action in perfect_inputs(scenario):
        outcome = session.attempt(sid, tool_id=tool, torque=torque, action=action)
        assert outcome.accepted
    return session


def load_corpus(directory):
    return sorted(directory.glob("*.json"))
