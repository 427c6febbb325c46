from __future__ import annotations

from pathlib import Path

import pytest

from dwg.compiler import compile_model
from dwg.dsl import parse_model_source
from dwg.ontology import load_ontology_paths

MODELS = Path(__file__).resolve().parent.parent / "models"
GOLDEN = Path(__file__).resolve().parent / "golden"


def load_bundled(name: str):
    store = load_ontology_paths([str(MODELS / f"{name}.onto")])
    model = parse_model_source((MODELS / f"{name}.dwg").read_text(encoding="utf-8"), store)
    ir = compile_model(model, store)
    return ir, store


@pytest.fixture(scope="session")
def restaurant():
    return load_bundled("restaurant")


@pytest.fixture(scope="session")
def medic():
    return load_bundled("medic")


@pytest.fixture(scope="session")
def twostep():
    return load_bundled("twostep")


def assert_history_ok(state, ir) -> None:
    """Check the unrolled-history invariants after an operation."""
    last_user = None
    last_system = None
    for i, turn in enumerate(state.history):
        assert turn.index == i
        assert turn.previous == (i - 1 if i else None)
        if turn.kind == "user":
            last_user = i
        else:
            assert turn.kind == "system"
            last_system = i
            assert turn.node is not None and 0 <= turn.node < len(ir.nodes)
            if turn.response_to is not None:
                assert turn.response_to < i
                assert state.history[turn.response_to].kind == "user"
    assert state.current_user_step == last_user
    assert state.current_system_step == last_system
    assert 0 <= state.current_node < len(ir.nodes)
    for entry in state.topic_stack:
        assert ir.nodes[entry].spec.resume
    assert state.immediate_chain_depth <= ir.config.max_immediate_chain


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {status}: {name}")
