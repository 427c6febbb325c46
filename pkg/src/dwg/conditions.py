"""The condition language: intent conditions, grammar expressions over
ontology terms, fact-base path expressions, and boolean combinators.

Grammar matching runs over the lexicon-mapped token stream: multi-token
surface forms collapse into one item, unmapped tokens stay as bare items
that only a gap can absorb.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .errors import ConditionError
from .ontology import (
    LexMatch,
    Literal,
    OntologySchema,
    OntologyStore,
    conforms_to,
    fillers,
    is_instance_of,
    is_subsumed_by,
    normalize_tokens,
)

# ---------------------------------------------------------------------------
# Grammar expressions


class GrammarExpr:
    pass


@dataclass(frozen=True)
class Term(GrammarExpr):
    term: str
    exact: bool = False  # exact=False accepts hyponyms / instances of the term


@dataclass(frozen=True)
class Seq(GrammarExpr):
    parts: tuple[GrammarExpr, ...]


@dataclass(frozen=True)
class Alt(GrammarExpr):
    parts: tuple[GrammarExpr, ...]


@dataclass(frozen=True)
class Opt(GrammarExpr):
    child: GrammarExpr


@dataclass(frozen=True)
class Star(GrammarExpr):
    child: GrammarExpr


@dataclass(frozen=True)
class Gap(GrammarExpr):
    max_tokens: int = 2


def can_match_empty(expr: GrammarExpr) -> bool:
    if isinstance(expr, Term):
        return False
    if isinstance(expr, Gap):
        return True
    if isinstance(expr, (Opt, Star)):
        return True
    if isinstance(expr, Seq):
        return all(can_match_empty(p) for p in expr.parts)
    if isinstance(expr, Alt):
        return any(can_match_empty(p) for p in expr.parts)
    raise TypeError(expr)


# ---------------------------------------------------------------------------
# Path expressions


@dataclass(frozen=True)
class PathStart:
    kind: str  # "individual" | "class" | "binding"
    name: str


@dataclass(frozen=True)
class PathStep:
    prop: str
    filter: str | None = None


@dataclass(frozen=True)
class PathExpr:
    start: PathStart
    steps: tuple[PathStep, ...] = ()
    negated: bool = False


# ---------------------------------------------------------------------------
# Conditions


class ConditionAst:
    pass


@dataclass(frozen=True)
class Always(ConditionAst):
    pass


@dataclass(frozen=True)
class IntentCond(ConditionAst):
    intent: str
    slot_constraints: tuple[tuple[str, str], ...] = ()  # (property, class)


@dataclass(frozen=True)
class GrammarCond(ConditionAst):
    expr: GrammarExpr


@dataclass(frozen=True)
class PathCond(ConditionAst):
    expr: PathExpr


@dataclass(frozen=True)
class Keywords(ConditionAst):
    terms: tuple[str, ...]


@dataclass(frozen=True)
class And(ConditionAst):
    parts: tuple[ConditionAst, ...]


@dataclass(frozen=True)
class Or(ConditionAst):
    parts: tuple[ConditionAst, ...]


@dataclass(frozen=True)
class Not(ConditionAst):
    child: ConditionAst


def condition_size(ast: ConditionAst) -> int:
    """Number of AST nodes: leaves count one, combinators one plus children."""
    if isinstance(ast, And) or isinstance(ast, Or):
        return 1 + sum(condition_size(p) for p in ast.parts)
    if isinstance(ast, Not):
        return 1 + condition_size(ast.child)
    return 1


# ---------------------------------------------------------------------------
# Parsing

_GRAMMAR_OPS = {"seq", "alt", "opt", "star", "gap", "term"}


def _resolve_term(name: str, store: OntologyStore | None, loc) -> None:
    if store is None:
        return
    if not store.schema.is_class(name) and not store.facts.has_individual(name):
        raise ConditionError(f"unresolved term '{name}'", loc.line, loc.col)


def parse_grammar(sexpr, store: OntologyStore | None) -> GrammarExpr:
    """Parse one grammar expression. A bare list is an implicit sequence."""
    if sexpr.is_symbol("_"):
        return Gap(2)
    if sexpr.is_symbol():
        _resolve_term(sexpr.value, store, sexpr)
        return Term(sexpr.value)
    if not sexpr.is_list():
        raise ConditionError("grammar expression must be a symbol or list", sexpr.line, sexpr.col)
    items = sexpr.items
    head = items[0].value if items and items[0].is_symbol() else None
    if head in _GRAMMAR_OPS:
        args = items[1:]
        if head == "term":
            if not args or not args[0].is_symbol():
                raise ConditionError("(term Name [:exact]) expected", sexpr.line, sexpr.col)
            exact = len(args) > 1 and args[1].is_keyword("exact")
            if len(args) > (2 if exact else 1):
                raise ConditionError("(term Name [:exact]) expected", sexpr.line, sexpr.col)
            _resolve_term(args[0].value, store, args[0])
            return Term(args[0].value, exact=exact)
        if head == "gap":
            if len(args) != 1 or args[0].kind != "number" or not isinstance(args[0].value, int):
                raise ConditionError("(gap N) expects an integer", sexpr.line, sexpr.col)
            return Gap(args[0].value)
        if head == "opt":
            if len(args) != 1:
                raise ConditionError("(opt expr) expects one argument", sexpr.line, sexpr.col)
            return Opt(parse_grammar(args[0], store))
        if head == "star":
            if len(args) != 1:
                raise ConditionError("(star expr) expects one argument", sexpr.line, sexpr.col)
            child = parse_grammar(args[0], store)
            if can_match_empty(child):
                raise ConditionError("star over a possibly-empty expression never terminates",
                                     sexpr.line, sexpr.col)
            return Star(child)
        parts = tuple(parse_grammar(a, store) for a in args)
        if head == "alt":
            if not parts:
                raise ConditionError("(alt ...) needs at least one alternative", sexpr.line, sexpr.col)
            return Alt(parts)
        return Seq(parts)
    return Seq(tuple(parse_grammar(item, store) for item in items))


def parse_path(sexpr, store: OntologyStore | None, allow_binding: bool = True) -> PathExpr:
    """Parse ``((:ind X) (prop [Filter])*)`` or ``((:class C) ...)``."""
    if not sexpr.is_list() or not sexpr.items:
        raise ConditionError("path expression must be a non-empty list", sexpr.line, sexpr.col)
    items = sexpr.items
    start_form = items[0]
    if not start_form.is_list() or len(start_form.items) != 2 or not start_form.items[0].is_keyword():
        raise ConditionError("path start must be (:ind X) or (:class C)", start_form.line, start_form.col)
    kind_kw = start_form.items[0].value
    name_expr = start_form.items[1]
    if not name_expr.is_symbol():
        raise ConditionError("path start needs a symbolic name", name_expr.line, name_expr.col)
    name = name_expr.value
    if kind_kw == "ind":
        if name.startswith("$"):
            if not allow_binding:
                raise ConditionError(f"binding '{name}' not allowed here", name_expr.line, name_expr.col)
            start = PathStart("binding", name[1:])
        else:
            if store is not None and not store.facts.has_individual(name):
                raise ConditionError(f"unresolved individual '{name}'", name_expr.line, name_expr.col)
            start = PathStart("individual", name)
    elif kind_kw == "class":
        if store is not None and not store.schema.is_class(name):
            raise ConditionError(f"unresolved class '{name}'", name_expr.line, name_expr.col)
        start = PathStart("class", name)
    else:
        raise ConditionError("path start must be (:ind X) or (:class C)", start_form.line, start_form.col)

    steps = []
    for step_form in items[1:]:
        if not step_form.is_list() or not 1 <= len(step_form.items) <= 2:
            raise ConditionError("path step must be (property [FilterClass])",
                                 step_form.line, step_form.col)
        prop_expr = step_form.items[0]
        if not prop_expr.is_symbol():
            raise ConditionError("path step property must be a symbol", prop_expr.line, prop_expr.col)
        prop = prop_expr.value
        if store is not None and not store.schema.is_property(prop):
            raise ConditionError(f"unresolved property '{prop}'", prop_expr.line, prop_expr.col)
        filt = None
        if len(step_form.items) == 2:
            filt_expr = step_form.items[1]
            if not filt_expr.is_symbol():
                raise ConditionError("path step filter must be a class name", filt_expr.line, filt_expr.col)
            filt = filt_expr.value
            if store is not None and not store.schema.is_class(filt):
                raise ConditionError(f"unresolved class '{filt}'", filt_expr.line, filt_expr.col)
        steps.append(PathStep(prop, filt))
    return PathExpr(start, tuple(steps))


def parse_condition(sexpr, store: OntologyStore) -> ConditionAst:
    """Parse a condition form against the loaded ontology.

    A bare symbol is shorthand: the name of an intent means an intent
    condition, any other class or instance means keyword spotting.
    """
    if sexpr.is_symbol("true"):
        return Always()
    if sexpr.is_symbol():
        name = sexpr.value
        if store.schema.is_intent(name):
            return IntentCond(name)
        if store.schema.is_class(name) or store.facts.has_individual(name):
            return Keywords((name,))
        raise ConditionError(f"unresolved term '{name}'", sexpr.line, sexpr.col)
    if not sexpr.is_list() or not sexpr.items or not sexpr.items[0].is_symbol():
        raise ConditionError("malformed condition", sexpr.line, sexpr.col)
    head = sexpr.items[0].value
    args = sexpr.items[1:]
    if head in ("and", "or"):
        if not args:
            raise ConditionError(f"({head} ...) needs at least one operand", sexpr.line, sexpr.col)
        parts = tuple(parse_condition(a, store) for a in args)
        return And(parts) if head == "and" else Or(parts)
    if head == "not":
        if len(args) != 1:
            raise ConditionError("(not ...) takes exactly one operand", sexpr.line, sexpr.col)
        return Not(parse_condition(args[0], store))
    if head == "grammar":
        if len(args) != 1:
            raise ConditionError("(grammar expr) takes exactly one expression", sexpr.line, sexpr.col)
        return GrammarCond(parse_grammar(args[0], store))
    if head == "path":
        negated = False
        if args and args[0].is_keyword("not"):
            negated = True
            args = args[1:]
        if len(args) != 1:
            raise ConditionError("(path [:not] ((:ind X) steps...)) expected", sexpr.line, sexpr.col)
        expr = parse_path(args[0], store)
        return PathCond(PathExpr(expr.start, expr.steps, negated))
    if head == "keywords":
        if not args:
            raise ConditionError("(keywords ...) needs at least one term", sexpr.line, sexpr.col)
        terms = []
        for a in args:
            if not a.is_symbol():
                raise ConditionError("keyword terms must be symbols", a.line, a.col)
            _resolve_term(a.value, store, a)
            terms.append(a.value)
        return Keywords(tuple(terms))
    if head == "intent":
        if not args or not args[0].is_symbol():
            raise ConditionError("(intent Name (slot Class)*) expected", sexpr.line, sexpr.col)
        name = args[0].value
        if not store.schema.is_intent(name):
            raise ConditionError(f"unresolved intent '{name}'", args[0].line, args[0].col)
        constraints = []
        for pair in args[1:]:
            if not pair.is_list() or len(pair.items) != 2:
                raise ConditionError("slot constraint must be (property Class)", pair.line, pair.col)
            prop, cls = pair.items
            if not prop.is_symbol() or not cls.is_symbol():
                raise ConditionError("slot constraint must be (property Class)", pair.line, pair.col)
            if not store.schema.is_property(prop.value):
                raise ConditionError(f"unresolved property '{prop.value}'", prop.line, prop.col)
            if not store.schema.is_class(cls.value):
                raise ConditionError(f"unresolved class '{cls.value}'", cls.line, cls.col)
            constraints.append((prop.value, cls.value))
        return IntentCond(name, tuple(constraints))
    raise ConditionError(f"unknown condition form '{head}'", sexpr.line, sexpr.col)


# ---------------------------------------------------------------------------
# Printers (canonical concrete syntax; parse(format(x)) == x)


def format_grammar(expr: GrammarExpr) -> str:
    if isinstance(expr, Term):
        return f"(term {expr.term} :exact)" if expr.exact else expr.term
    if isinstance(expr, Seq):
        return "(seq " + " ".join(format_grammar(p) for p in expr.parts) + ")" if expr.parts else "(seq)"
    if isinstance(expr, Alt):
        return "(alt " + " ".join(format_grammar(p) for p in expr.parts) + ")"
    if isinstance(expr, Opt):
        return f"(opt {format_grammar(expr.child)})"
    if isinstance(expr, Star):
        return f"(star {format_grammar(expr.child)})"
    if isinstance(expr, Gap):
        return f"(gap {expr.max_tokens})"
    raise TypeError(expr)


def format_path(expr: PathExpr) -> str:
    if expr.start.kind == "binding":
        start = f"(:ind ${expr.start.name})"
    elif expr.start.kind == "individual":
        start = f"(:ind {expr.start.name})"
    else:
        start = f"(:class {expr.start.name})"
    steps = "".join(
        f" ({s.prop} {s.filter})" if s.filter else f" ({s.prop})" for s in expr.steps
    )
    return f"({start}{steps})"


def format_condition(ast: ConditionAst) -> str:
    if isinstance(ast, Always):
        return "true"
    if isinstance(ast, IntentCond):
        if not ast.slot_constraints:
            return f"(intent {ast.intent})"
        slots = " ".join(f"({p} {c})" for p, c in ast.slot_constraints)
        return f"(intent {ast.intent} {slots})"
    if isinstance(ast, Keywords):
        return "(keywords " + " ".join(ast.terms) + ")"
    if isinstance(ast, GrammarCond):
        return f"(grammar {format_grammar(ast.expr)})"
    if isinstance(ast, PathCond):
        neg = ":not " if ast.expr.negated else ""
        return f"(path {neg}{format_path(ast.expr)})"
    if isinstance(ast, And):
        return "(and " + " ".join(format_condition(p) for p in ast.parts) + ")"
    if isinstance(ast, Or):
        return "(or " + " ".join(format_condition(p) for p in ast.parts) + ")"
    if isinstance(ast, Not):
        return f"(not {format_condition(ast.child)})"
    raise TypeError(ast)


def condition_label(ast: ConditionAst) -> str:
    """Compact human label for graph output. Not meant to be re-parsed."""
    if isinstance(ast, Keywords) and len(ast.terms) == 1:
        return ast.terms[0]
    if isinstance(ast, IntentCond):
        slots = ", ".join(f"{p}:{c}" for p, c in ast.slot_constraints)
        return f"{ast.intent}({slots})" if slots else ast.intent
    if isinstance(ast, And):
        return " & ".join(condition_label(p) for p in ast.parts)
    if isinstance(ast, Or):
        return " | ".join(condition_label(p) for p in ast.parts)
    if isinstance(ast, Not):
        return f"!{condition_label(ast.child)}"
    return format_condition(ast)


# ---------------------------------------------------------------------------
# Grammar matching: compiled to an epsilon-NFA and simulated over the
# lexicon-mapped item stream.


class MatchSpan(NamedTuple):
    start: int  # token indices, end exclusive
    end: int


class _Nfa:
    def __init__(self) -> None:
        self.eps: list[list[int]] = []
        self.steps: list[list[tuple[object, int]]] = []  # (matcher arg, dest)

    def new_state(self) -> int:
        self.eps.append([])
        self.steps.append([])
        return len(self.eps) - 1

    def closure(self, states: set[int]) -> set[int]:
        stack = list(states)
        seen = set(states)
        while stack:
            s = stack.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen


_ANY = object()  # gap transition marker


def _build_nfa(expr: GrammarExpr) -> tuple[_Nfa, int, int]:
    nfa = _Nfa()

    def build(e: GrammarExpr, entry: int) -> int:
        if isinstance(e, Term):
            out = nfa.new_state()
            nfa.steps[entry].append((e, out))
            return out
        if isinstance(e, Gap):
            cur = entry
            for _ in range(max(e.max_tokens, 0)):
                nxt = nfa.new_state()
                nfa.steps[cur].append((_ANY, nxt))
                nfa.eps[cur].append(nxt)
                cur = nxt
            return cur
        if isinstance(e, Seq):
            cur = entry
            for part in e.parts:
                cur = build(part, cur)
            return cur
        if isinstance(e, Alt):
            out = nfa.new_state()
            for part in e.parts:
                tail = build(part, entry)
                nfa.eps[tail].append(out)
            return out
        if isinstance(e, Opt):
            tail = build(e.child, entry)
            nfa.eps[entry].append(tail)
            return tail
        if isinstance(e, Star):
            tail = build(e.child, entry)
            nfa.eps[entry].append(tail)
            nfa.eps[tail].append(entry)
            return tail
        raise TypeError(e)

    start = nfa.new_state()
    accept = build(expr, start)
    return nfa, start, accept


def _item_matches(item: LexMatch, term: Term, schema: OntologySchema, facts) -> bool:
    if not item.terms:
        return False
    for candidate in item.terms:
        if term.exact:
            if candidate == term.term:
                return True
        elif conforms_to(candidate, term.term, schema, facts):
            return True
    return False


def match_mapped(expr: GrammarExpr, items: tuple[LexMatch, ...],
                 schema: OntologySchema, facts) -> MatchSpan | None:
    """First contiguous item run matched by ``expr``; None when nothing matches."""
    nfa, start, accept = _build_nfa(expr)
    for i in range(len(items) + 1):
        states = nfa.closure({start})
        if accept in states:
            span_start = items[i].start if i < len(items) else (items[-1].end if items else 0)
            return MatchSpan(span_start, span_start)
        for j in range(i, len(items)):
            item = items[j]
            nxt: set[int] = set()
            for s in states:
                for arg, dest in nfa.steps[s]:
                    if arg is _ANY or _item_matches(item, arg, schema, facts):  # type: ignore[arg-type]
                        nxt.add(dest)
            if not nxt:
                break
            states = nfa.closure(nxt)
            if accept in states:
                return MatchSpan(items[i].start, item.end)
    return None


def match_grammar(expr: GrammarExpr, tokens: list[str], store: OntologyStore) -> MatchSpan | None:
    """Map tokens through the lexicon, then match. Tokens must be normalized."""
    items = store.lexicon.item_stream(tokens)
    return match_mapped(expr, items, store.schema, store.facts)


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class DialogueView:
    """What the current turn exposes to conditions."""

    tokens: tuple[str, ...] = ()
    items: tuple[LexMatch, ...] = ()
    intent: object | None = None  # runtime IntentInstance; duck-typed
    bindings: Mapping[str, str] = field(default_factory=dict)


EMPTY_VIEW = DialogueView()


def eval_path(expr: PathExpr, schema: OntologySchema, facts,
              bindings: Mapping[str, str] | None = None) -> tuple[bool, tuple]:
    """Evaluate a path expression; returns (holds, witnesses).

    Witness order is deterministic: declaration order for class starts,
    assertion order along each step. A negated path flips the boolean and
    reports no witnesses.
    """
    bindings = bindings or {}
    if expr.start.kind == "binding":
        bound = bindings.get(expr.start.name)
        if bound is None:
            return (expr.negated, ())
        current: list = [bound]
    elif expr.start.kind == "individual":
        if not facts.has_individual(expr.start.name):
            return (expr.negated, ())
        current = [expr.start.name]
    else:
        current = [i for i in facts.individuals()
                   if is_instance_of(i, expr.start.name, schema, facts)]

    for step in expr.steps:
        gathered: list = []
        for value in current:
            if isinstance(value, Literal) or not facts.has_individual(value):
                continue
            for obj in fillers(value, step.prop, schema, facts):
                if step.filter is not None and not conforms_to(obj, step.filter, schema, facts):
                    continue
                if obj not in gathered:
                    gathered.append(obj)
        current = gathered

    holds = bool(current)
    if expr.negated:
        return (not holds, ())
    return (holds, tuple(current))


def _slot_value_fits(value, cls: str, schema: OntologySchema, facts) -> bool:
    return conforms_to(value, cls, schema, facts)


def eval_condition(ast: ConditionAst, schema: OntologySchema, facts,
                   view: DialogueView) -> bool:
    """Evaluate a condition; missing context evaluates false, never raises."""
    if isinstance(ast, Always):
        return True
    if isinstance(ast, And):
        return all(eval_condition(p, schema, facts, view) for p in ast.parts)
    if isinstance(ast, Or):
        return any(eval_condition(p, schema, facts, view) for p in ast.parts)
    if isinstance(ast, Not):
        return not eval_condition(ast.child, schema, facts, view)
    if isinstance(ast, Keywords):
        for item in view.items:
            for candidate in item.terms:
                if any(conforms_to(candidate, t, schema, facts) for t in ast.terms):
                    return True
        return False
    if isinstance(ast, GrammarCond):
        return match_mapped(ast.expr, view.items, schema, facts) is not None
    if isinstance(ast, PathCond):
        holds, _ = eval_path(ast.expr, schema, facts, view.bindings)
        return holds
    if isinstance(ast, IntentCond):
        inst = view.intent
        if inst is None or not schema.is_class(inst.intent):
            return False
        if not is_subsumed_by(inst.intent, ast.intent, schema):
            return False
        for prop, cls in ast.slot_constraints:
            value = inst.slots.get(prop)
            if value is None or not _slot_value_fits(value, cls, schema, facts):
                return False
        return True
    raise TypeError(ast)


def validate_path(expr: PathExpr, store: OntologyStore, known_bindings: set[str] | None = None) -> str | None:
    """Return the first unresolved id in a deferred-resolution path, if any."""
    if expr.start.kind == "individual" and not store.facts.has_individual(expr.start.name):
        return expr.start.name
    if expr.start.kind == "class" and not store.schema.is_class(expr.start.name):
        return expr.start.name
    for step in expr.steps:
        if not store.schema.is_property(step.prop):
            return step.prop
        if step.filter is not None and not store.schema.is_class(step.filter):
            return step.filter
    return None
