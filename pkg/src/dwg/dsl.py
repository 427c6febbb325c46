"""Parser for dialogue model source (`.dwg` files).

A model is a sequence of ``defnode`` forms plus an optional ``defconfig``.
Node clauses cover conditions, messages, transitions, triggers,
extract-and-store directives, a select directive, and control annotations
(topic start/end, triggerable, relinquish, resume, immediate, initial).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import conditions
from .conditions import ConditionAst, PathExpr, parse_condition, parse_path
from .errors import ModelError, ParseError
from .ontology import Literal, OntologyStore
from .sexpr import SExpr, parse_sexprs


@dataclass(frozen=True)
class TextSegment:
    text: str


@dataclass(frozen=True)
class HoleSegment:
    path: PathExpr
    raw: str  # source text between the braces


@dataclass(frozen=True)
class MessageTemplate:
    raw: str
    segments: tuple[TextSegment | HoleSegment, ...]


@dataclass(frozen=True)
class ExtractDirective:
    extract_class: str
    subject: str
    property: str


@dataclass(frozen=True)
class SlotRef:
    """``$prop`` inside a select constraint: the pending intent's slot value."""

    prop: str


@dataclass(frozen=True)
class SelectConstraint:
    prop: str
    value: SlotRef | Literal | str  # str = fixed ontology term


@dataclass(frozen=True)
class SelectDirective:
    var: str
    cls: str
    constraints: tuple[SelectConstraint, ...] = ()


@dataclass(frozen=True)
class NodeSpec:
    id: str
    condition: ConditionAst | None = None
    messages: tuple[MessageTemplate, ...] = ()
    transitions: tuple[tuple[ConditionAst, str], ...] = ()  # source order matters
    trigger: ConditionAst | None = None
    extract_store: tuple[ExtractDirective, ...] = ()
    select: SelectDirective | None = None
    topic_start: bool = False
    topic_end: bool = False
    end_behavior: str | None = None  # "return" | "continue" when topic_end
    triggerable: bool = False
    allow_relinquish: bool = False
    resume: bool = False
    modal: bool = True
    initial: bool = False
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ModelConfig:
    fallback_message: str = "Sorry, I did not get that."
    max_immediate_chain: int = 32
    slot_prompt: str = "In what {slot}?"
    placeholder: str = "⟨?⟩"  # rendered for unevaluable template holes


@dataclass(frozen=True)
class DslModel:
    nodes: tuple[NodeSpec, ...]
    config: ModelConfig = ModelConfig()

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]


# ---------------------------------------------------------------------------
# Templates


def parse_template(text: str) -> MessageTemplate:
    """Split a message into literal text and ``{path expression}`` holes.

    ``{{`` and ``}}`` escape literal braces.
    """
    segments: list[TextSegment | HoleSegment] = []
    buf: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "{":
            if text[i + 1 : i + 2] == "{":
                buf.append("{")
                i += 2
                continue
            end = _hole_end(text, i)
            if end is None:
                raise ParseError(f"unbalanced '{{' in template: {text!r}")
            if buf:
                segments.append(TextSegment("".join(buf)))
                buf = []
            inner = text[i + 1 : end]
            forms = parse_sexprs(inner)
            if len(forms) != 1:
                raise ParseError(f"template hole must hold one path expression: {inner!r}")
            segments.append(HoleSegment(parse_path(forms[0], None), inner))
            i = end + 1
        elif ch == "}":
            if text[i + 1 : i + 2] == "}":
                buf.append("}")
                i += 2
                continue
            raise ParseError(f"unbalanced '}}' in template: {text!r}")
        else:
            buf.append(ch)
            i += 1
    if buf:
        segments.append(TextSegment("".join(buf)))
    if not segments:
        segments.append(TextSegment(""))
    return MessageTemplate(text, tuple(segments))


def _hole_end(text: str, start: int) -> int | None:
    depth = 0
    for j in range(start, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return j
    return None


# ---------------------------------------------------------------------------
# Model parsing

_FLAG_CLAUSES = {
    "topic-start": "topic_start",
    "triggerable": "triggerable",
    "allow-relinquish": "allow_relinquish",
    "resume": "resume",
    "initial": "initial",
}


def parse_model_source(text: str, store: OntologyStore) -> DslModel:
    return parse_model(parse_sexprs(text), store)


def parse_model(forms: list[SExpr], store: OntologyStore) -> DslModel:
    nodes: list[NodeSpec] = []
    seen: dict[str, SExpr] = {}
    config = ModelConfig()
    saw_config = False

    for form in forms:
        if not form.is_list() or not form.items or not form.items[0].is_symbol():
            raise ModelError("expected (defnode ...) or (defconfig ...)", form.line, form.col)
        head = form.items[0].value
        if head == "defconfig":
            if saw_config:
                raise ModelError("duplicate defconfig", form.line, form.col)
            saw_config = True
            config = _parse_config(form)
        elif head == "defnode":
            node = _parse_node(form, store)
            if node.id in seen:
                raise ModelError(f"duplicate node id '{node.id}'", form.line, form.col)
            seen[node.id] = form
            nodes.append(node)
        else:
            raise ModelError(f"unknown form '{head}'", form.line, form.col)

    if not nodes:
        raise ModelError("model declares no nodes")
    initials = [n for n in nodes if n.initial]
    if len(initials) > 1:
        raise ModelError(f"more than one initial node: {', '.join(n.id for n in initials)}")
    if not initials:
        # No explicit :initial flag: the first node opens the dialogue.
        nodes[0] = replace(nodes[0], initial=True)

    for node in nodes:
        if not node.modal and not node.transitions and not node.topic_end:
            raise ModelError(
                f"immediate node '{node.id}' needs a transition or a topic end",
                node.line, node.col,
            )
    return DslModel(tuple(nodes), config)


def _parse_config(form: SExpr) -> ModelConfig:
    cfg = ModelConfig()
    for clause in form.items[1:]:
        if not clause.is_list() or len(clause.items) < 1 or not clause.items[0].is_keyword():
            raise ModelError("expected (:option value) in defconfig", clause.line, clause.col)
        key = clause.items[0].value
        args = clause.items[1:]
        if key == "fallback-message":
            if len(args) != 1 or args[0].kind != "string":
                raise ModelError(":fallback-message expects one string", clause.line, clause.col)
            cfg = replace(cfg, fallback_message=args[0].value)
        elif key == "max-immediate-chain":
            if len(args) != 1 or args[0].kind != "number" or not isinstance(args[0].value, int):
                raise ModelError(":max-immediate-chain expects an integer", clause.line, clause.col)
            cfg = replace(cfg, max_immediate_chain=args[0].value)
        elif key == "slot-prompt":
            if len(args) != 1 or args[0].kind != "string":
                raise ModelError(":slot-prompt expects one string", clause.line, clause.col)
            cfg = replace(cfg, slot_prompt=args[0].value)
        elif key == "placeholder":
            if len(args) != 1 or args[0].kind != "string":
                raise ModelError(":placeholder expects one string", clause.line, clause.col)
            cfg = replace(cfg, placeholder=args[0].value)
        else:
            raise ModelError(f"unknown config option :{key}", clause.line, clause.col)
    return cfg


def _parse_node(form: SExpr, store: OntologyStore) -> NodeSpec:
    if len(form.items) < 2 or not form.items[1].is_symbol():
        raise ModelError("defnode needs a symbolic node id", form.line, form.col)
    node_id = form.items[1].value

    condition: ConditionAst | None = None
    trigger: ConditionAst | None = None
    select: SelectDirective | None = None
    messages: list[MessageTemplate] = []
    transitions: list[tuple[ConditionAst, str]] = []
    extracts: list[ExtractDirective] = []
    flags = {name: False for name in _FLAG_CLAUSES.values()}
    topic_end = False
    end_behavior: str | None = None
    modal = True

    for clause in form.items[2:]:
        if not clause.is_list() or not clause.items or not clause.items[0].is_keyword():
            raise ModelError(f"expected (:clause ...) in node '{node_id}'", clause.line, clause.col)
        key = clause.items[0].value
        args = clause.items[1:]

        if key in _FLAG_CLAUSES:
            if args:
                raise ModelError(f":{key} takes no arguments", clause.line, clause.col)
            if flags[_FLAG_CLAUSES[key]]:
                raise ModelError(f"duplicate :{key} in node '{node_id}'", clause.line, clause.col)
            flags[_FLAG_CLAUSES[key]] = True
        elif key == "immediate":
            if args:
                raise ModelError(":immediate takes no arguments", clause.line, clause.col)
            modal = False
        elif key == "condition":
            if condition is not None:
                raise ModelError(f"duplicate :condition in node '{node_id}'", clause.line, clause.col)
            if len(args) != 1:
                raise ModelError(":condition expects one expression", clause.line, clause.col)
            condition = parse_condition(args[0], store)
        elif key == "trigger":
            if trigger is not None:
                raise ModelError(f"duplicate :trigger in node '{node_id}'", clause.line, clause.col)
            if len(args) != 1:
                raise ModelError(":trigger expects one expression", clause.line, clause.col)
            trigger = parse_condition(args[0], store)
        elif key == "message":
            if len(args) != 1 or args[0].kind != "string":
                raise ModelError(":message expects one string", clause.line, clause.col)
            try:
                messages.append(parse_template(args[0].value))
            except ParseError as exc:
                raise ModelError(f"node '{node_id}': {exc.message}", clause.line, clause.col)
        elif key == "transition":
            if not args:
                raise ModelError(":transition needs at least one (condition target) entry",
                                 clause.line, clause.col)
            for entry in args:
                if not entry.is_list() or len(entry.items) != 2 or not entry.items[1].is_symbol():
                    raise ModelError("transition entry must be (condition target-node)",
                                     entry.line, entry.col)
                cond = parse_condition(entry.items[0], store)
                transitions.append((cond, entry.items[1].value))
        elif key == "extract-and-store":
            for entry in args:
                if not entry.is_list() or len(entry.items) != 3 or not all(
                    e.is_symbol() for e in entry.items
                ):
                    raise ModelError("extract entry must be (Class subject property)",
                                     entry.line, entry.col)
                cls, subject, prop = (e.value for e in entry.items)
                extracts.append(ExtractDirective(cls, subject, prop))
        elif key == "topic-end":
            if topic_end:
                raise ModelError(f"duplicate :topic-end in node '{node_id}'", clause.line, clause.col)
            if len(args) != 1 or not args[0].is_symbol() or args[0].value not in ("return", "continue"):
                raise ModelError(":topic-end expects 'return' or 'continue'", clause.line, clause.col)
            topic_end = True
            end_behavior = args[0].value
        elif key == "select":
            if select is not None:
                raise ModelError(f"duplicate :select in node '{node_id}'", clause.line, clause.col)
            if len(args) != 1:
                raise ModelError(":select expects one (var Class constraints...) form",
                                 clause.line, clause.col)
            select = _parse_select(args[0], node_id)
        else:
            raise ModelError(f"unknown clause :{key} in node '{node_id}'", clause.line, clause.col)

    if trigger is not None:
        flags["triggerable"] = True
    return NodeSpec(
        id=node_id,
        condition=condition,
        messages=tuple(messages),
        transitions=tuple(transitions),
        trigger=trigger,
        extract_store=tuple(extracts),
        select=select,
        topic_start=flags["topic_start"],
        topic_end=topic_end,
        end_behavior=end_behavior,
        triggerable=flags["triggerable"],
        allow_relinquish=flags["allow_relinquish"],
        resume=flags["resume"],
        modal=modal,
        initial=flags["initial"],
        line=form.line,
        col=form.col,
    )


def _parse_select(form: SExpr, node_id: str) -> SelectDirective:
    if not form.is_list() or len(form.items) < 2:
        raise ModelError("select must be (var Class (prop value)*)", form.line, form.col)
    var_expr, cls_expr, *rest = form.items
    if not var_expr.is_symbol() or not cls_expr.is_symbol():
        raise ModelError("select must be (var Class (prop value)*)", form.line, form.col)
    constraints: list[SelectConstraint] = []
    for pair in rest:
        if not pair.is_list() or len(pair.items) != 2 or not pair.items[0].is_symbol():
            raise ModelError("select constraint must be (property value)", pair.line, pair.col)
        prop = pair.items[0].value
        val = pair.items[1]
        if val.is_symbol():
            name = val.value
            if name.startswith("$"):
                constraints.append(SelectConstraint(prop, SlotRef(name[1:])))
            else:
                constraints.append(SelectConstraint(prop, name))
        elif val.kind in ("string", "number"):
            constraints.append(SelectConstraint(prop, Literal(val.value)))
        else:
            raise ModelError("select constraint value must be $slot, a term, or a literal",
                             val.line, val.col)
    return SelectDirective(var_expr.value, cls_expr.value, tuple(constraints))


# ---------------------------------------------------------------------------
# Pretty printing (re-parses to an equal model)


def format_model(model: DslModel) -> str:
    lines: list[str] = []
    cfg = model.config
    defaults = ModelConfig()
    opts = []
    if cfg.fallback_message != defaults.fallback_message:
        opts.append(f'(:fallback-message "{_escape(cfg.fallback_message)}")')
    if cfg.max_immediate_chain != defaults.max_immediate_chain:
        opts.append(f"(:max-immediate-chain {cfg.max_immediate_chain})")
    if cfg.slot_prompt != defaults.slot_prompt:
        opts.append(f'(:slot-prompt "{_escape(cfg.slot_prompt)}")')
    if cfg.placeholder != defaults.placeholder:
        opts.append(f'(:placeholder "{_escape(cfg.placeholder)}")')
    if opts:
        lines.append("(defconfig " + " ".join(opts) + ")")
        lines.append("")

    for node in model.nodes:
        lines.append(format_node(node))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def format_node(node: NodeSpec) -> str:
    out = [f"(defnode {node.id}"]
    if node.initial:
        out.append("  (:initial)")
    if not node.modal:
        out.append("  (:immediate)")
    if node.condition is not None:
        out.append(f"  (:condition {conditions.format_condition(node.condition)})")
    if node.trigger is not None:
        out.append(f"  (:trigger {conditions.format_condition(node.trigger)})")
    if node.topic_start:
        out.append("  (:topic-start)")
    if node.topic_end:
        out.append(f"  (:topic-end {node.end_behavior})")
    if node.allow_relinquish:
        out.append("  (:allow-relinquish)")
    if node.resume:
        out.append("  (:resume)")
    if node.triggerable and node.trigger is None:
        out.append("  (:triggerable)")
    for msg in node.messages:
        out.append(f'  (:message "{_escape(msg.raw)}")')
    if node.select is not None:
        sel = node.select
        parts = [sel.var, sel.cls]
        for c in sel.constraints:
            if isinstance(c.value, SlotRef):
                parts.append(f"({c.prop} ${c.value.prop})")
            elif isinstance(c.value, Literal):
                if isinstance(c.value.value, str):
                    parts.append(f'({c.prop} "{_escape(c.value.value)}")')
                else:
                    parts.append(f"({c.prop} {c.value.value!r})")
            else:
                parts.append(f"({c.prop} {c.value})")
        out.append(f"  (:select ({' '.join(parts)}))")
    for d in node.extract_store:
        out.append(f"  (:extract-and-store ({d.extract_class} {d.subject} {d.property}))")
    if node.transitions:
        entries = "\n".join(
            f"   ({conditions.format_condition(cond)} {target})" for cond, target in node.transitions
        )
        out.append(f"  (:transition\n{entries})")
    return "\n".join(out) + ")"


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
