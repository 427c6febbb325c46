"""The dialogue engine: interprets a compiled workflow graph over a live
session.

Each user turn runs a fixed pipeline: tokenize and lexicon-map, recognize an
intent, fill slots, harvest extract-and-store directives, then pick what
fires, in priority order, local out-edges, global triggers, intent
re-execution, a missing-slot prompt, and finally the fallback message.
Entering a node runs its directives, renders its messages, and follows
immediate chains up to the configured limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .compiler import WorkflowIr
from .conditions import DialogueView, eval_condition, eval_path, match_mapped
from .dsl import HoleSegment, MessageTemplate, NodeSpec, SelectDirective, SlotRef, TextSegment
from .errors import SessionError
from .ontology import (
    FactOverlay,
    LexMatch,
    Literal,
    OntologyStore,
    conforms_to,
    fillers,
    normalize_tokens,
)

SESSION_VERSION = "dwg-session/1"

INCOMPLETE = "incomplete"
COMPLETELY_SPECIFIED = "completely_specified"
EXECUTED = "executed"


@dataclass
class IntentInstance:
    """A recognized user request and the slot values gathered for it so far."""

    intent: str
    slots: dict[str, str | Literal] = field(default_factory=dict)
    status: str = INCOMPLETE
    changed: bool = False  # an executed intent gained a new filler
    response_node: int | None = None  # node whose entry produced the response

    def to_dict(self) -> dict:
        return {
            "intent": self.intent,
            "slots": {p: _encode_value(v) for p, v in self.slots.items()},
            "status": self.status,
            "changed": self.changed,
            "response_node": self.response_node,
        }

    @staticmethod
    def from_dict(doc: dict) -> "IntentInstance":
        return IntentInstance(
            intent=doc["intent"],
            slots={p: _decode_value(v) for p, v in doc["slots"].items()},
            status=doc["status"],
            changed=doc["changed"],
            response_node=doc["response_node"],
        )


@dataclass
class Turn:
    kind: str  # "user" | "system"
    index: int
    # user turns
    text: str = ""
    tokens: tuple[str, ...] = ()
    mapped: tuple[LexMatch, ...] = ()
    intent: str | None = None  # intent class recognized on this turn
    # system turns
    node: int | None = None
    messages: tuple[str, ...] = ()
    diagnostic: bool = False
    # links
    previous: int | None = None
    response_to: int | None = None


@dataclass
class DialogueState:
    """The unrolled dialogue history plus interpreter position and memory."""

    history: list[Turn] = field(default_factory=list)
    current_node: int = 0
    topic_stack: list[int] = field(default_factory=list)
    pending_intent: IntentInstance | None = None
    session_facts: FactOverlay | None = None
    bindings: dict[str, str] = field(default_factory=dict)
    immediate_chain_depth: int = 0
    diagnostics: list[str] = field(default_factory=list)

    @property
    def current_user_step(self) -> int | None:
        for turn in reversed(self.history):
            if turn.kind == "user":
                return turn.index
        return None

    @property
    def current_system_step(self) -> int | None:
        for turn in reversed(self.history):
            if turn.kind == "system":
                return turn.index
        return None


class DialogueEngine:
    """Interprets one compiled graph; sessions are independent DialogueStates."""

    def __init__(self, ir: WorkflowIr, store: OntologyStore):
        self.ir = ir
        self.store = store
        self.config = ir.config

    # -- session lifecycle ---------------------------------------------------

    def start_session(self) -> tuple[DialogueState, list[str]]:
        state = DialogueState(
            current_node=self.ir.initial,
            session_facts=FactOverlay(self.store.facts),
        )
        outputs: list[str] = []
        view = DialogueView(bindings=state.bindings)
        self.enter_node(state, self.ir.initial, view, outputs)
        return state, outputs

    def process_utterance(self, state: DialogueState, text: str) -> list[str]:
        tokens = normalize_tokens(text)
        items = self.store.lexicon.item_stream(tokens)
        user_turn = self._append_turn(state, Turn(
            kind="user", index=0, text=text, tokens=tuple(tokens), mapped=items,
        ))

        recognized = self._recognize_intent(items)
        if recognized is not None:
            state.pending_intent = IntentInstance(intent=recognized)
            self._recompute_status(state.pending_intent)
            user_turn.intent = recognized

        became_cs = self.fill_slots(state, items)
        view = DialogueView(
            tokens=tuple(tokens), items=items,
            intent=state.pending_intent, bindings=state.bindings,
        )

        # The node that asked harvests the answer before transition selection.
        self._apply_extracts(state, self.ir.nodes[state.current_node].spec)

        outputs: list[str] = []
        entry = self._choose_edge(state, state.current_node, view)
        if entry is None:
            entry = self._choose_trigger(state, view)
        if entry is None:
            entry = self._reexecution_target(state, view, became_cs)

        if entry is not None:
            self.enter_node(state, entry, view, outputs)
            pending = state.pending_intent
            if pending is not None and pending.status == COMPLETELY_SPECIFIED:
                pending.status = EXECUTED
                pending.changed = False
                pending.response_node = entry
        else:
            prompt = self._missing_slot_prompt(state)
            message = prompt if prompt is not None else self.config.fallback_message
            self._append_turn(state, Turn(
                kind="system", index=0, node=state.current_node, messages=(message,),
                response_to=user_turn.index,
            ))
            outputs.append(message)
        return outputs

    # -- pipeline pieces -----------------------------------------------------

    def _recognize_intent(self, items: tuple[LexMatch, ...]) -> str | None:
        for intent in self.store.schema.intents.values():
            for pattern in intent.patterns:
                if match_mapped(pattern, items, self.store.schema, self.store.facts) is not None:
                    return intent.id
        return None

    def fill_slots(self, state: DialogueState, items: tuple[LexMatch, ...]) -> bool:
        """Bind mapped terms to open slots of the pending intent.

        A term fills a slot only when it fits exactly one open slot, required
        slots considered first. Returns whether the intent became completely
        specified on this call.
        """
        pending = state.pending_intent
        if pending is None:
            return False
        decl = self.store.schema.intents.get(pending.intent)
        if decl is None:
            return False
        was_complete = pending.status in (COMPLETELY_SPECIFIED, EXECUTED)

        schema, facts = self.store.schema, self.store.facts
        for item in items:
            for term in item.terms:
                open_required = [
                    p for p, rng in decl.required_slots
                    if p not in pending.slots and conforms_to(term, rng, schema, facts)
                ]
                open_optional = [
                    p for p, rng in decl.optional_slots
                    if p not in pending.slots and conforms_to(term, rng, schema, facts)
                ]
                candidates = open_required if open_required else open_optional
                if len(candidates) != 1:
                    continue  # nothing fits, or ambiguous: leave the term unfiled
                prop = candidates[0]
                pending.slots[prop] = term
                if pending.status == EXECUTED:
                    pending.status = COMPLETELY_SPECIFIED
                    pending.changed = True
                break  # one slot per mapped item

        self._recompute_status(pending)
        return not was_complete and pending.status == COMPLETELY_SPECIFIED

    def _recompute_status(self, inst: IntentInstance) -> None:
        decl = self.store.schema.intents.get(inst.intent)
        if decl is None:
            return
        if inst.status == EXECUTED:
            return
        complete = all(p in inst.slots for p, _ in decl.required_slots)
        inst.status = COMPLETELY_SPECIFIED if complete else INCOMPLETE

    def _node_enabled(self, index: int, state: DialogueState, view: DialogueView) -> bool:
        cond = self.ir.nodes[index].spec.condition
        return cond is None or eval_condition(cond, self.store.schema, state.session_facts, view)

    def _choose_edge(self, state: DialogueState, index: int, view: DialogueView) -> int | None:
        for cond, target in self.ir.nodes[index].transitions:
            if eval_condition(cond, self.store.schema, state.session_facts, view) and \
                    self._node_enabled(target, state, view):
                return target
        return None

    def _choose_trigger(self, state: DialogueState, view: DialogueView) -> int | None:
        current = self.ir.nodes[state.current_node].spec
        if not current.allow_relinquish:
            return None
        for node in self.ir.nodes:
            if node.spec.trigger is None or node.index == state.current_node:
                continue
            if not self._node_enabled(node.index, state, view):
                continue
            if eval_condition(node.spec.trigger, self.store.schema, state.session_facts, view):
                if current.resume:
                    state.topic_stack.append(state.current_node)
                return node.index
        return None

    def _reexecution_target(self, state: DialogueState, view: DialogueView,
                            became_cs: bool) -> int | None:
        pending = state.pending_intent
        if pending is None or not (became_cs or pending.changed):
            return None
        if pending.response_node is None:
            return None
        if not self._node_enabled(pending.response_node, state, view):
            return None
        pending.changed = False
        return pending.response_node

    def _missing_slot_prompt(self, state: DialogueState) -> str | None:
        pending = state.pending_intent
        if pending is None or pending.status != INCOMPLETE:
            return None
        decl = self.store.schema.intents.get(pending.intent)
        if decl is None:
            return None
        for prop, rng in decl.required_slots:
            if prop not in pending.slots:
                label = self.store.lexicon.display_form(rng)
                return self.config.slot_prompt.format(slot=label)
        return None

    # -- node entry ----------------------------------------------------------

    def enter_node(self, state: DialogueState, index: int, view: DialogueView,
                   outputs: list[str]) -> None:
        """Run a node's entry effects and follow its immediate chain."""
        state.immediate_chain_depth = 0
        current = index
        while True:
            state.current_node = current
            spec = self.ir.nodes[current].spec
            self._apply_extracts(state, spec)
            if spec.select is not None:
                self._apply_select(state, spec.select)
            if spec.messages:
                messages = tuple(self.render_message(m, state) for m in spec.messages)
                self._append_turn(state, Turn(
                    kind="system", index=0, node=current, messages=messages,
                    response_to=state.current_user_step,
                ))
                outputs.extend(messages)
            if spec.topic_end and spec.end_behavior == "return":
                if state.topic_stack:
                    state.current_node = state.topic_stack.pop()
                else:
                    self._diagnose(state, f"topic end '{spec.id}' found an empty topic stack")
                return
            if spec.modal:
                return
            nxt = self._choose_edge(state, current, view)
            if nxt is None:
                return
            if state.immediate_chain_depth >= self.config.max_immediate_chain:
                message = (
                    f"immediate chain limit ({self.config.max_immediate_chain}) reached "
                    f"at node '{spec.id}'"
                )
                self._diagnose(state, message)
                self._append_turn(state, Turn(
                    kind="system", index=0, node=current, messages=(message,),
                    diagnostic=True, response_to=state.current_user_step,
                ))
                return
            state.immediate_chain_depth += 1
            current = nxt

    def _apply_extracts(self, state: DialogueState, spec: NodeSpec) -> None:
        if not spec.extract_store:
            return
        user_step = state.current_user_step
        if user_step is None:
            return
        turn = state.history[user_step]
        for directive in spec.extract_store:
            for item in turn.mapped:
                hit = next(
                    (t for t in item.terms
                     if conforms_to(t, directive.extract_class, self.store.schema, self.store.facts)),
                    None,
                )
                if hit is not None:
                    state.session_facts.assert_triple(directive.subject, directive.property, hit)
                    break  # first match wins

    def _apply_select(self, state: DialogueState, sel: SelectDirective) -> None:
        from .ontology import is_instance_of

        schema = self.store.schema
        facts = state.session_facts
        pending = state.pending_intent
        for candidate in facts.individuals():
            if not is_instance_of(candidate, sel.cls, schema, facts):
                continue
            ok = True
            for constraint in sel.constraints:
                value = constraint.value
                if isinstance(value, SlotRef):
                    if pending is None or value.prop not in pending.slots:
                        continue  # unfilled slot constraints do not restrict
                    value = pending.slots[value.prop]
                matches = False
                for obj in fillers(candidate, constraint.prop, schema, facts):
                    if isinstance(value, Literal):
                        matches = obj == value
                    else:
                        matches = conforms_to(obj, value, schema, facts)
                    if matches:
                        break
                if not matches:
                    ok = False
                    break
            if ok:
                state.bindings[sel.var] = candidate
                return
        state.bindings.pop(sel.var, None)
        self._diagnose(state, f"select ({sel.var} {sel.cls} ...) found no matching instance")

    def render_message(self, template: MessageTemplate, state: DialogueState) -> str:
        """Fill template holes from the fact view; unevaluable holes render as
        the configured placeholder and record a diagnostic."""
        parts: list[str] = []
        for seg in template.segments:
            if isinstance(seg, TextSegment):
                parts.append(seg.text)
                continue
            holds, witnesses = eval_path(
                seg.path, self.store.schema, state.session_facts, state.bindings
            )
            if not holds or not witnesses:
                parts.append(self.config.placeholder)
                self._diagnose(state, f"template hole {{{seg.raw}}} has no value")
                continue
            first = witnesses[0]
            if isinstance(first, Literal):
                parts.append(first.display())
            else:
                parts.append(self.store.lexicon.display_form(first))
        return "".join(parts)

    # -- bookkeeping -----------------------------------------------------------

    def _append_turn(self, state: DialogueState, turn: Turn) -> Turn:
        turn.index = len(state.history)
        turn.previous = turn.index - 1 if turn.index else None
        state.history.append(turn)
        return turn

    def _diagnose(self, state: DialogueState, message: str) -> None:
        state.diagnostics.append(message)

    # -- persistence -----------------------------------------------------------

    def save_session(self, state: DialogueState) -> dict:
        return {
            "version": SESSION_VERSION,
            "current_node": state.current_node,
            "topic_stack": list(state.topic_stack),
            "immediate_chain_depth": state.immediate_chain_depth,
            "pending_intent": state.pending_intent.to_dict() if state.pending_intent else None,
            "bindings": dict(state.bindings),
            "diagnostics": list(state.diagnostics),
            "session_facts": {
                "types": {i: list(state.session_facts.added.asserted_types(i))
                          for i in state.session_facts.added.individuals()},
                "triples": [
                    [s, p, _encode_value(o)] for s, p, o in state.session_facts.added.triples()
                ],
            },
            "history": [_turn_to_dict(t) for t in state.history],
        }

    def load_session(self, doc: dict) -> DialogueState:
        if not isinstance(doc, dict) or doc.get("version") != SESSION_VERSION:
            raise SessionError(f"unsupported session document (want {SESSION_VERSION})")
        n = len(self.ir.nodes)

        def check_node(value, what: str) -> None:
            if value is not None and not (isinstance(value, int) and 0 <= value < n):
                raise SessionError(f"{what} {value!r} is outside the workflow graph")

        check_node(doc.get("current_node"), "current node")
        for entry in doc.get("topic_stack", []):
            check_node(entry, "topic stack entry")

        state = DialogueState(
            current_node=doc["current_node"],
            topic_stack=list(doc.get("topic_stack", [])),
            immediate_chain_depth=doc.get("immediate_chain_depth", 0),
            bindings=dict(doc.get("bindings", {})),
            diagnostics=list(doc.get("diagnostics", [])),
            session_facts=FactOverlay(self.store.facts),
        )
        if doc.get("pending_intent") is not None:
            state.pending_intent = IntentInstance.from_dict(doc["pending_intent"])
            check_node(state.pending_intent.response_node, "intent response node")
            if state.pending_intent.intent not in self.store.schema.intents:
                raise SessionError(
                    f"pending intent '{state.pending_intent.intent}' is not declared"
                )
        facts_doc = doc.get("session_facts", {})
        for ind, types in facts_doc.get("types", {}).items():
            state.session_facts.added.add_individual(ind, types)
        for s, p, o in facts_doc.get("triples", []):
            state.session_facts.added.assert_triple(s, p, _decode_value(o))
        for turn_doc in doc.get("history", []):
            turn = _turn_from_dict(turn_doc)
            check_node(turn.node, "turn node")
            state.history.append(turn)
        return state


def _encode_value(value) -> object:
    if isinstance(value, Literal):
        return {"lit": value.value}
    return {"term": value}


def _decode_value(doc) -> str | Literal:
    if "lit" in doc:
        return Literal(doc["lit"])
    return doc["term"]


def _turn_to_dict(turn: Turn) -> dict:
    return {
        "kind": turn.kind,
        "index": turn.index,
        "text": turn.text,
        "tokens": list(turn.tokens),
        "mapped": [[m.start, m.end, list(m.terms)] for m in turn.mapped],
        "intent": turn.intent,
        "node": turn.node,
        "messages": list(turn.messages),
        "diagnostic": turn.diagnostic,
        "previous": turn.previous,
        "response_to": turn.response_to,
    }


def _turn_from_dict(doc: dict) -> Turn:
    return Turn(
        kind=doc["kind"],
        index=doc["index"],
        text=doc.get("text", ""),
        tokens=tuple(doc.get("tokens", ())),
        mapped=tuple(LexMatch(s, e, tuple(terms)) for s, e, terms in doc.get("mapped", ())),
        intent=doc.get("intent"),
        node=doc.get("node"),
        messages=tuple(doc.get("messages", ())),
        diagnostic=doc.get("diagnostic", False),
        previous=doc.get("previous"),
        response_to=doc.get("response_to"),
    )


# ---------------------------------------------------------------------------
# Replay scripts: lines of `U: <utterance>` and `E: <substring>` checks
# (`E=: <full line>` for exact matches) against the next unchecked output.


@dataclass(frozen=True)
class ReplayFailure:
    line_no: int
    turn_index: int
    expected: str
    actual: str | None
    exact: bool

    def describe(self) -> str:
        want = f"expected {'exactly' if self.exact else 'substring'} {self.expected!r}"
        got = "no output" if self.actual is None else repr(self.actual)
        return f"line {self.line_no} (user turn {self.turn_index}): {want}, got {got}"


@dataclass
class ReplayResult:
    failures: list[ReplayFailure] = field(default_factory=list)
    transcript: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_replay(ir: WorkflowIr, store: OntologyStore, script: str) -> ReplayResult:
    engine = DialogueEngine(ir, store)
    state, outputs = engine.start_session()
    result = ReplayResult(transcript=[f"S: {line}" for line in outputs])
    pending = list(outputs)
    cursor = 0
    turn_index = 0

    for line_no, raw in enumerate(script.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("U:"):
            text = line[2:].strip()
            outputs = engine.process_utterance(state, text)
            turn_index += 1
            result.transcript.append(f"U: {text}")
            result.transcript.extend(f"S: {out}" for out in outputs)
            pending = list(outputs)
            cursor = 0
        elif line.startswith("E=:") or line.startswith("E:"):
            exact = line.startswith("E=:")
            expected = line[3:].strip() if exact else line[2:].strip()
            actual = pending[cursor] if cursor < len(pending) else None
            cursor += 1
            matched = actual is not None and (
                actual == expected if exact else expected in actual
            )
            if not matched:
                result.failures.append(ReplayFailure(line_no, turn_index, expected, actual, exact))
        else:
            raise SessionError(f"replay script line {line_no}: expected 'U:', 'E:' or 'E=:'")
    return result
