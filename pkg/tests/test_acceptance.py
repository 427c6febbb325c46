"""Acceptance suite: one test per release criterion, at its stated tolerance.

The conftest hook prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import time

import pytest

from dwg.compiler import compile_model, compute_metrics, emit_dot, expand_assertions, metrics_from_counts
from dwg.conditions import Seq, Term, match_grammar
from dwg.dsl import parse_model_source
from dwg.errors import CompileError, ConditionError
from dwg.ontology import load_ontology, normalize_tokens
from dwg.runtime import DialogueEngine, run_replay
from tests.conftest import GOLDEN, MODELS, load_bundled
from tests.test_compiler import parse_dot
from tests.test_conditions import run_agreement
from tests.test_runtime import RULE_FIXTURE_DWG, RULE_FIXTURE_ONTO, chain_model, single_rule_oracle, nested_topic_engine


def test_restaurant_transcript_verbatim(restaurant):
    ir, store = restaurant
    script = (MODELS / "restaurant.replay").read_text(encoding="utf-8")
    started = time.perf_counter()
    result = run_replay(ir, store, script)
    elapsed = time.perf_counter() - started
    assert result.ok, [f.describe() for f in result.failures]
    system_lines = [line[3:] for line in result.transcript if line.startswith("S: ")]
    assert "In what city?" in system_lines
    assert "How about McDonalds?" in system_lines
    assert "Got it – Su Hong on 4256 El Camino Real?" in system_lines
    assert elapsed < 1.0


def test_body_part_branching_and_extraction(medic):
    ir, store = medic
    started = time.perf_counter()

    engine = DialogueEngine(ir, store)
    state, _ = engine.start_session()
    engine.process_utterance(state, "There is bleeding!")
    engine.process_utterance(state, "yes")
    engine.process_utterance(state, "The arm is bleeding.")
    assert state.current_node == ir.node_by_id("node_limb").index
    assert state.session_facts.has_triple("currentUser", "hemorrhageLocation", "Arm")

    state2, _ = engine.start_session()
    engine.process_utterance(state2, "There is bleeding!")
    engine.process_utterance(state2, "yes")
    engine.process_utterance(state2, "It is the neck.")
    assert state2.current_node == ir.node_by_id("node_head_or_neck").index
    assert state2.session_facts.has_triple("currentUser", "hemorrhageLocation", "Neck")

    assert time.perf_counter() - started < 1.0


def test_grammar_matcher_examples_and_oracle_agreement():
    store = load_ontology("""
    (defclass Neg (:lexical "not" "no"))
    (defclass Ampl (:lexical "very" "so" "really"))
    (defclass PosDesc (:lexical "good" "well" "fine"))
    """)
    expr = Seq((Term("Neg"), Term("Ampl"), Term("PosDesc")))
    assert match_grammar(expr, normalize_tokens("not very good"), store)
    assert match_grammar(expr, normalize_tokens("not so well"), store)
    assert match_grammar(expr, normalize_tokens("very good"), store) is None

    started = time.perf_counter()
    run_agreement(1000, seed=20260810)  # asserts 100% agreement with the oracle
    assert time.perf_counter() - started < 30.0


def test_metrics_formulas_reproduce_reference_numerals():
    chatpal = metrics_from_counts(109, 291, 2520)
    assert chatpal.rpn_display == "2.7"
    assert chatpal.apn_display == "23"
    assert chatpal.reduction_display == "83.0"

    medic_row = metrics_from_counts(29, 26, 374)
    assert medic_row.rpn_display == "0.9"
    assert medic_row.reduction_display == "48.7"


def test_interpreter_equals_single_rule_oracle():
    store = load_ontology(RULE_FIXTURE_ONTO)
    ir = compile_model(parse_model_source(RULE_FIXTURE_DWG, store), store)
    engine = DialogueEngine(ir, store)
    state, _ = engine.start_session()
    engine.process_utterance(state, "hello there")

    pre_history = list(state.history)
    engine.process_utterance(state, "In Palo Alto!")
    new_user = [t for t in state.history if t.kind == "user"][-1]
    predicted = single_rule_oracle(pre_history + [new_user], engine)
    assert predicted is not None

    actual = state.history[-1]
    assert (actual.node, actual.messages, actual.response_to) == (
        predicted["node"], predicted["messages"], predicted["response_to"],
    )
    assert state.current_system_step == actual.index
    assert state.current_node == predicted["node"]


def test_control_properties():
    # (a) k nested trigger suspensions followed by k returns restore the node
    for k in range(1, 6):
        engine = nested_topic_engine(k)
        state, _ = engine.start_session()
        origin = state.current_node
        for i in range(1, k + 1):
            engine.process_utterance(state, f"k{i}")
        assert len(state.topic_stack) == k
        for _ in range(k):
            engine.process_utterance(state, "done")
        assert state.current_node == origin
        assert state.topic_stack == []

    # (b) an immediate cycle halts with a diagnostic within the chain limit
    store = load_ontology('(defclass Spin (:lexical "spin"))')
    cycle_src = """
    (defnode start (:initial) (:message "hi") (:transition (Spin loop_a)))
    (defnode loop_a (:immediate) (:transition (Spin loop_b)))
    (defnode loop_b (:immediate) (:transition (Spin loop_a)))
    """
    ir = compile_model(parse_model_source(cycle_src, store), store)
    engine = DialogueEngine(ir, store)
    state, _ = engine.start_session()
    engine.process_utterance(state, "spin")
    assert any("immediate chain limit" in d for d in state.diagnostics)
    assert state.immediate_chain_depth <= ir.config.max_immediate_chain
    assert engine.process_utterance(state, "hello") == [ir.config.fallback_message]

    # (c) full-transcript determinism across 3 runs of every bundled script
    for name in ("restaurant", "medic", "twostep"):
        ir, store = load_bundled(name)
        script = (MODELS / f"{name}.replay").read_text(encoding="utf-8")
        runs = ["\n".join(run_replay(ir, store, script).transcript) for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]
        assert run_replay(ir, store, script).ok


def test_compiler_hygiene():
    store = load_ontology("(defclass A)")

    # unresolved references fail naming the offending id
    unresolved = {
        "missing_node": "(defnode a (:transition (A missing_node)))",
        "NoSuchClass": "(defnode a (:condition NoSuchClass))",
        "ghost": '(defnode a (:message "x {((:ind ghost) (p))}"))',
    }
    for needle, src in unresolved.items():
        with pytest.raises((CompileError, ConditionError)) as exc:
            compile_model(parse_model_source(src, store), store)
        assert needle in exc.value.message

    # golden expansions are byte-stable across runs
    for name in ("restaurant", "medic", "twostep"):
        ir, _ = load_bundled(name)
        text = "\n".join(str(a) for a in expand_assertions(ir)) + "\n"
        again = "\n".join(str(a) for a in expand_assertions(ir)) + "\n"
        assert text == again
        assert text == (GOLDEN / f"{name}.assertions").read_text(encoding="utf-8")

    # DOT parses and its counts equal the IR's
    for name in ("restaurant", "medic", "twostep"):
        ir, _ = load_bundled(name)
        metrics = compute_metrics(ir)
        nodes, edges = parse_dot(emit_dot(ir))
        real = [n for n in nodes if n != "__trigger__"]
        assert len(real) == metrics.node_count
        assert len([e for e in edges if "dashed" not in e[2]]) == metrics.edge_count
        assert len([e for e in edges if "dashed" in e[2]]) == metrics.trigger_count
