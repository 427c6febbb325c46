"""Minimal ontology store: class and property hierarchies, instances, triples,
and a surface-form lexicon.

This is the substrate every condition evaluates against. The schema (classes,
properties, intents) and the lexicon are immutable after loading and safe to
share; a ``FactBase`` is mutable and must stay confined to a single session.
"""

from __future__ import annotations

import string as _string
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import OntologyError, ParseError
from .sexpr import SExpr, parse_sexprs

_PUNCT = _string.punctuation + "“”‘’–—…¡¿"


def normalize_tokens(text: str | Iterable[str]) -> list[str]:
    """Lowercase, strip leading/trailing punctuation, split on whitespace."""
    raw = text.split() if isinstance(text, str) else list(text)
    out = []
    for tok in raw:
        tok = tok.lower().strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class Literal:
    """A string or numeric value in a triple, as opposed to a term reference."""

    value: str | int | float

    def display(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class PropertyDecl:
    id: str
    kind: str = "object"  # "object" | "data"
    domain: str | None = None
    range: str | None = None
    parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class IntentDecl:
    """A user-request class with typed slots and recognition patterns."""

    id: str
    required_slots: tuple[tuple[str, str], ...] = ()  # (property, range class)
    optional_slots: tuple[tuple[str, str], ...] = ()
    patterns: tuple = ()  # GrammarExpr values; parsed by the conditions module

    def slot_range(self, prop: str) -> str | None:
        for p, rng in self.required_slots + self.optional_slots:
            if p == prop:
                return rng
        return None


class OntologySchema:
    """Terminological knowledge: classes, subclass edges, properties, intents."""

    def __init__(self) -> None:
        self.classes: dict[str, tuple[str, ...]] = {}  # class -> direct parents
        self.properties: dict[str, PropertyDecl] = {}
        self.intents: dict[str, IntentDecl] = {}
        self._ancestors: dict[str, frozenset[str]] = {}
        self._prop_descendants: dict[str, frozenset[str]] = {}

    @property
    def subclass_edges(self) -> list[tuple[str, str]]:
        return [(c, p) for c, parents in self.classes.items() for p in parents]

    def is_class(self, name: str) -> bool:
        return name in self.classes

    def is_property(self, name: str) -> bool:
        return name in self.properties

    def is_intent(self, name: str) -> bool:
        return name in self.intents

    def ancestors(self, cls: str) -> frozenset[str]:
        """All superclasses of ``cls`` including itself."""
        if cls not in self.classes:
            raise OntologyError(f"unknown class '{cls}'")
        return self._ancestors[cls]

    def property_descendants(self, prop: str) -> frozenset[str]:
        """All subproperties of ``prop`` including itself."""
        if prop not in self.properties:
            raise OntologyError(f"unknown property '{prop}'")
        return self._prop_descendants[prop]

    def finalize(self) -> None:
        """Verify acyclicity and precompute closures. Called once by the loader."""
        self._ancestors = _transitive_up(self.classes, "subclass")
        prop_parents = {p: decl.parents for p, decl in self.properties.items()}
        prop_ancestors = _transitive_up(prop_parents, "subproperty")
        desc: dict[str, set[str]] = {p: set() for p in self.properties}
        for p, ups in prop_ancestors.items():
            for q in ups:
                desc[q].add(p)
        self._prop_descendants = {p: frozenset(s) for p, s in desc.items()}

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OntologySchema)
            and self.classes == other.classes
            and self.properties == other.properties
            and self.intents == other.intents
        )


def _transitive_up(parents: dict[str, tuple[str, ...]], relation: str) -> dict[str, frozenset[str]]:
    """Reflexive-transitive parent closure; raises on cycles, listing one."""
    closed: dict[str, frozenset[str]] = {}
    state: dict[str, int] = {}  # 1 = in progress, 2 = done

    def visit(node: str, trail: list[str]) -> frozenset[str]:
        if state.get(node) == 2:
            return closed[node]
        if state.get(node) == 1:
            cycle = trail[trail.index(node):] + [node]
            raise OntologyError(f"{relation} cycle: {' -> '.join(cycle)}")
        state[node] = 1
        trail.append(node)
        acc = {node}
        for parent in parents[node]:
            acc |= visit(parent, trail)
        trail.pop()
        state[node] = 2
        closed[node] = frozenset(acc)
        return closed[node]

    for name in parents:
        visit(name, [])
    return closed


Triple = tuple[str, str, "str | Literal"]


class FactBase:
    """Assertional knowledge: typed individuals and triples.

    Triple order is preserved (it drives deterministic witness selection),
    but equality is set-based so retract-then-assert restores the prior state.
    """

    def __init__(self) -> None:
        self._types: dict[str, tuple[str, ...]] = {}
        self._triples: list[Triple] = []
        self._triple_set: set[Triple] = set()

    def add_individual(self, name: str, types: Iterable[str] = ()) -> None:
        known = self._types.get(name, ())
        merged = list(known)
        for t in types:
            if t not in merged:
                merged.append(t)
        self._types[name] = tuple(merged)

    def has_individual(self, name: str) -> bool:
        return name in self._types

    def individuals(self) -> tuple[str, ...]:
        return tuple(self._types)

    def asserted_types(self, name: str) -> tuple[str, ...]:
        return self._types.get(name, ())

    def assert_triple(self, subject: str, prop: str, obj: str | Literal) -> None:
        triple = (subject, prop, obj)
        if triple not in self._triple_set:
            self._triples.append(triple)
            self._triple_set.add(triple)

    def retract_triple(self, subject: str, prop: str, obj: str | Literal) -> None:
        triple = (subject, prop, obj)
        if triple in self._triple_set:
            self._triple_set.remove(triple)
            self._triples.remove(triple)

    def has_triple(self, subject: str, prop: str, obj: str | Literal) -> bool:
        return (subject, prop, obj) in self._triple_set

    def triples(self) -> tuple[Triple, ...]:
        return tuple(self._triples)

    def triples_for(self, subject: str) -> tuple[Triple, ...]:
        return tuple(t for t in self._triples if t[0] == subject)

    def copy(self) -> "FactBase":
        dup = FactBase()
        dup._types = dict(self._types)
        dup._triples = list(self._triples)
        dup._triple_set = set(self._triple_set)
        return dup

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FactBase)
            and self._types == other._types
            and self._triple_set == other._triple_set
        )


class FactOverlay:
    """Read-through union of a session overlay on top of the domain facts.

    Writes land in the overlay only; the base is never mutated.
    """

    def __init__(self, base: FactBase, added: FactBase | None = None):
        self.base = base
        self.added = added if added is not None else FactBase()

    def has_individual(self, name: str) -> bool:
        return self.base.has_individual(name) or self.added.has_individual(name)

    def individuals(self) -> tuple[str, ...]:
        extra = tuple(i for i in self.added.individuals() if not self.base.has_individual(i))
        return self.base.individuals() + extra

    def asserted_types(self, name: str) -> tuple[str, ...]:
        base = self.base.asserted_types(name)
        extra = tuple(t for t in self.added.asserted_types(name) if t not in base)
        return base + extra

    def assert_triple(self, subject: str, prop: str, obj: str | Literal) -> None:
        if not self.base.has_triple(subject, prop, obj):
            self.added.assert_triple(subject, prop, obj)

    def has_triple(self, subject: str, prop: str, obj: str | Literal) -> bool:
        return self.base.has_triple(subject, prop, obj) or self.added.has_triple(subject, prop, obj)

    def triples_for(self, subject: str) -> tuple[Triple, ...]:
        base = self.base.triples_for(subject)
        extra = tuple(t for t in self.added.triples_for(subject) if t not in base)
        return base + extra


class LexMatch(NamedTuple):
    start: int
    end: int  # exclusive token index
    terms: tuple[str, ...]


@dataclass
class Lexicon:
    """Maps normalized surface forms (possibly multi-token) to ontology terms."""

    entries: dict[tuple[str, ...], tuple[str, ...]] = field(default_factory=dict)
    display: dict[str, str] = field(default_factory=dict)  # term -> preferred raw form
    relations: tuple[tuple[str, str, str], ...] = ()  # (kind, term, term)

    def add_entry(self, form: str, term: str) -> None:
        key = tuple(normalize_tokens(form))
        if not key:
            raise OntologyError(f"empty lexical form for '{term}'")
        terms = self.entries.get(key, ())
        if term not in terms:
            self.entries[key] = terms + (term,)
        self.display.setdefault(term, form)

    def display_form(self, term: str) -> str:
        return self.display.get(term, term)

    def map(self, tokens: list[str]) -> list[LexMatch]:
        """Longest-match-first, non-overlapping matches over normalized tokens."""
        if not self.entries:
            return []
        max_len = max(len(k) for k in self.entries)
        out: list[LexMatch] = []
        i = 0
        while i < len(tokens):
            hit = None
            for width in range(min(max_len, len(tokens) - i), 0, -1):
                key = tuple(tokens[i : i + width])
                if key in self.entries:
                    hit = LexMatch(i, i + width, self.entries[key])
                    break
            if hit is None:
                i += 1
            else:
                out.append(hit)
                i = hit.end
        return out

    def item_stream(self, tokens: list[str]) -> tuple[LexMatch, ...]:
        """Tokens folded into a stream of matched spans and unmatched singletons."""
        items: list[LexMatch] = []
        pos = 0
        for m in self.map(tokens):
            while pos < m.start:
                items.append(LexMatch(pos, pos + 1, ()))
                pos += 1
            items.append(m)
            pos = m.end
        while pos < len(tokens):
            items.append(LexMatch(pos, pos + 1, ()))
            pos += 1
        return tuple(items)


class OntologyStore(NamedTuple):
    schema: OntologySchema
    facts: FactBase
    lexicon: Lexicon

    def term_kind(self, name: str) -> str | None:
        if self.schema.is_class(name):
            return "class"
        if self.schema.is_property(name):
            return "property"
        if self.facts.has_individual(name):
            return "individual"
        return None


# ---------------------------------------------------------------------------
# Reasoning operations


def is_subsumed_by(a: str, b: str, schema: OntologySchema) -> bool:
    """True iff ``a`` equals ``b`` or reaches it through subclass edges."""
    if b not in schema.classes:
        raise OntologyError(f"unknown class '{b}'")
    return b in schema.ancestors(a)


def is_instance_of(individual: str, cls: str, schema: OntologySchema, facts) -> bool:
    """True iff some asserted type of the individual is subsumed by ``cls``."""
    if not facts.has_individual(individual):
        raise OntologyError(f"unknown individual '{individual}'")
    return any(is_subsumed_by(t, cls, schema) for t in facts.asserted_types(individual))


def fillers(individual: str, prop: str, schema: OntologySchema, facts) -> tuple:
    """All triple objects for the subject under ``prop`` or any subproperty.

    Order follows assertion order, with duplicates removed.
    """
    if not facts.has_individual(individual):
        raise OntologyError(f"unknown individual '{individual}'")
    props = schema.property_descendants(prop)
    out: list = []
    for _, q, obj in facts.triples_for(individual):
        if q in props and obj not in out:
            out.append(obj)
    return tuple(out)


def conforms_to(value, target: str, schema: OntologySchema, facts) -> bool:
    """Whether an utterance term or triple value fits a target term.

    A class target accepts subclasses and instances of the class; an
    individual target accepts only itself; literals fit nothing.
    """
    if isinstance(value, Literal):
        return False
    if schema.is_class(target):
        if schema.is_class(value):
            return is_subsumed_by(value, target, schema)
        if facts.has_individual(value):
            return is_instance_of(value, target, schema, facts)
        return False
    return value == target


def lexicon_map(tokens: list[str], lexicon: Lexicon) -> list[LexMatch]:
    return lexicon.map(tokens)


# ---------------------------------------------------------------------------
# Loading

_CLASS_CLAUSES = {"is-a", "lexical", "synonym-of", "antonym-of"}
_PROP_CLAUSES = {"kind", "domain", "range", "is-a"}
_INST_CLAUSES = {"type", "lexical", "props", "synonym-of", "antonym-of"}
_INTENT_CLAUSES = {"required", "optional", "patterns"}


def _clauses(form: SExpr, allowed: set[str], what: str) -> list[tuple[str, list[SExpr], SExpr]]:
    out = []
    for clause in form.items[2:]:
        if not clause.is_list() or not clause.items or not clause.items[0].is_keyword():
            raise OntologyError(f"expected (:clause ...) in {what}", clause.line, clause.col)
        key = clause.items[0].value
        if key not in allowed:
            raise OntologyError(f"unknown clause :{key} in {what}", clause.line, clause.col)
        out.append((key, list(clause.items[1:]), clause))
    return out


def _name_of(form: SExpr, what: str) -> str:
    if len(form.items) < 2 or not form.items[1].is_symbol():
        raise OntologyError(f"{what} needs a symbolic name", form.line, form.col)
    return form.items[1].value  # type: ignore[return-value]


def _symbols(args: list[SExpr], what: str) -> list[str]:
    names = []
    for a in args:
        if not a.is_symbol():
            raise OntologyError(f"expected symbol in {what}", a.line, a.col)
        names.append(a.value)
    return names


def _strings(args: list[SExpr], what: str) -> list[str]:
    vals = []
    for a in args:
        if a.kind != "string":
            raise OntologyError(f"expected string in {what}", a.line, a.col)
        vals.append(a.value)
    return vals


def load_ontology(source: str) -> OntologyStore:
    """Load a single ontology source text."""
    return load_ontology_forms(parse_sexprs(source))


def load_ontology_paths(paths: Iterable[str]) -> OntologyStore:
    """Load and merge several ontology files; later files may reference earlier ids."""
    forms: list[SExpr] = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            forms.extend(parse_sexprs(fh.read()))
    return load_ontology_forms(forms)


def load_ontology_forms(forms: list[SExpr]) -> OntologyStore:
    schema = OntologySchema()
    facts = FactBase()
    lexicon = Lexicon()
    relations: list[tuple[str, str, str]] = []

    heads = {"defclass", "defproperty", "definstance", "defintent"}
    for form in forms:
        if not form.is_list() or not form.items or not form.items[0].is_symbol():
            raise OntologyError("expected a (def... ) form", form.line, form.col)
        head = form.items[0].value
        if head not in heads:
            raise OntologyError(f"unknown form '{head}'", form.line, form.col)

    # First pass: register every name so later declarations can point anywhere.
    kinds: dict[str, str] = {}  # id -> defclass|defproperty|definstance|defintent
    for form in forms:
        head = form.items[0].value
        name = _name_of(form, head)
        if name in kinds:
            raise OntologyError(f"duplicate declaration of '{name}'", form.line, form.col)
        kinds[name] = head
        if head in ("defclass", "defintent"):
            schema.classes[name] = ()
        elif head == "defproperty":
            schema.properties[name] = PropertyDecl(name)
        else:
            facts.add_individual(name)

    def check_class(name: str, loc: SExpr) -> None:
        if name not in schema.classes:
            raise OntologyError(f"dangling reference: unknown class '{name}'", loc.line, loc.col)

    def check_term(name: str, loc: SExpr) -> None:
        if name not in schema.classes and not facts.has_individual(name):
            raise OntologyError(f"dangling reference: unknown term '{name}'", loc.line, loc.col)

    # Second pass: fill in declarations and facts.
    from . import conditions  # lazy: grammar patterns live in the conditions module

    pending_triples: list[tuple[str, str, str | Literal, SExpr]] = []
    for form in forms:
        head = form.items[0].value
        name = _name_of(form, head)

        if head == "defclass":
            for key, args, clause in _clauses(form, _CLASS_CLAUSES, f"class {name}"):
                if key == "is-a":
                    parents = _symbols(args, ":is-a")
                    for p in parents:
                        check_class(p, clause)
                    schema.classes[name] = schema.classes[name] + tuple(parents)
                elif key == "lexical":
                    for form_text in _strings(args, ":lexical"):
                        lexicon.add_entry(form_text, name)
                else:  # synonym-of / antonym-of
                    for other in _symbols(args, f":{key}"):
                        check_term(other, clause)
                        relations.append((key.split("-")[0], name, other))

        elif head == "defproperty":
            decl = schema.properties[name]
            kind, domain, rng, parents = decl.kind, decl.domain, decl.range, decl.parents
            for key, args, clause in _clauses(form, _PROP_CLAUSES, f"property {name}"):
                if key == "kind":
                    vals = _symbols(args, ":kind")
                    if vals != ["object"] and vals != ["data"]:
                        raise OntologyError(":kind must be object or data", clause.line, clause.col)
                    kind = vals[0]
                elif key == "domain":
                    (domain,) = _symbols(args, ":domain")
                    check_class(domain, clause)
                elif key == "range":
                    (rng,) = _symbols(args, ":range")
                    check_class(rng, clause)
                else:
                    ps = _symbols(args, ":is-a")
                    for p in ps:
                        if p not in schema.properties:
                            raise OntologyError(
                                f"dangling reference: unknown property '{p}'", clause.line, clause.col
                            )
                    parents = parents + tuple(ps)
            schema.properties[name] = PropertyDecl(name, kind, domain, rng, parents)

        elif head == "definstance":
            for key, args, clause in _clauses(form, _INST_CLAUSES, f"instance {name}"):
                if key == "type":
                    types = _symbols(args, ":type")
                    for t in types:
                        check_class(t, clause)
                    facts.add_individual(name, types)
                elif key == "lexical":
                    for form_text in _strings(args, ":lexical"):
                        lexicon.add_entry(form_text, name)
                elif key == "props":
                    for pair in args:
                        if not pair.is_list() or len(pair.items) != 2 or not pair.items[0].is_symbol():
                            raise OntologyError("expected (property value)", pair.line, pair.col)
                        prop = pair.items[0].value
                        if prop not in schema.properties:
                            raise OntologyError(
                                f"dangling reference: unknown property '{prop}'", pair.line, pair.col
                            )
                        val_expr = pair.items[1]
                        if val_expr.is_symbol():
                            check_term(val_expr.value, val_expr)
                            pending_triples.append((name, prop, val_expr.value, pair))
                        elif val_expr.kind in ("string", "number"):
                            pending_triples.append((name, prop, Literal(val_expr.value), pair))
                        else:
                            raise OntologyError("property value must be a term, string, or number",
                                                val_expr.line, val_expr.col)
                else:
                    for other in _symbols(args, f":{key}"):
                        check_term(other, clause)
                        relations.append((key.split("-")[0], name, other))

        else:  # defintent
            required: list[tuple[str, str]] = []
            optional: list[tuple[str, str]] = []
            patterns: list = []
            for key, args, clause in _clauses(form, _INTENT_CLAUSES, f"intent {name}"):
                if key in ("required", "optional"):
                    for pair in args:
                        if not pair.is_list() or len(pair.items) != 2:
                            raise OntologyError("expected (property RangeClass)", pair.line, pair.col)
                        prop, rng = _symbols(list(pair.items), f":{key}")
                        if prop not in schema.properties:
                            raise OntologyError(
                                f"dangling reference: unknown property '{prop}'", pair.line, pair.col
                            )
                        check_class(rng, pair)
                        (required if key == "required" else optional).append((prop, rng))
                else:
                    store = OntologyStore(schema, facts, lexicon)
                    for pat in args:
                        patterns.append(conditions.parse_grammar(pat, store))
            req_props = {p for p, _ in required}
            opt_props = {p for p, _ in optional}
            if req_props & opt_props:
                overlap = sorted(req_props & opt_props)
                raise OntologyError(
                    f"intent '{name}': slots {overlap} are both required and optional",
                    form.line, form.col,
                )
            schema.intents[name] = IntentDecl(name, tuple(required), tuple(optional), tuple(patterns))

    for subject, prop, obj, loc in pending_triples:
        facts.assert_triple(subject, prop, obj)

    lexicon.relations = tuple(relations)
    schema.finalize()
    return OntologyStore(schema, facts, lexicon)


# ---------------------------------------------------------------------------
# Serialization (round-trips through load_ontology)


def serialize_ontology(store: OntologyStore) -> str:
    from . import conditions

    schema, facts, lexicon = store
    lexicals: dict[str, list[str]] = {}
    for key, terms in lexicon.entries.items():
        for term in terms:
            lexicals.setdefault(term, [])
    for term, form in lexicon.display.items():
        lexicals.setdefault(term, [])
    for key, terms in lexicon.entries.items():
        for term in terms:
            # recover raw forms: display holds the first; remaining normalized keys
            joined = " ".join(key)
            if joined not in [normalize_and_join(f) for f in lexicals[term]]:
                preferred = lexicon.display.get(term)
                if preferred is not None and normalize_and_join(preferred) == joined:
                    lexicals[term].append(preferred)
                else:
                    lexicals[term].append(joined)

    rel_by_term: dict[str, list[tuple[str, str]]] = {}
    for kind, a, b in lexicon.relations:
        rel_by_term.setdefault(a, []).append((kind, b))

    def lex_clause(term: str) -> str:
        forms = lexicals.get(term, [])
        extra = "".join(f' (:{kind}-of {other})' for kind, other in rel_by_term.get(term, []))
        if not forms:
            return extra
        quoted = " ".join(f'"{f}"' for f in forms)
        return f" (:lexical {quoted})" + extra

    lines: list[str] = []
    for cls, parents in schema.classes.items():
        if cls in schema.intents:
            continue
        isa = f" (:is-a {' '.join(parents)})" if parents else ""
        lines.append(f"(defclass {cls}{isa}{lex_clause(cls)})")
    for prop in schema.properties.values():
        parts = [f"(defproperty {prop.id} (:kind {prop.kind})"]
        if prop.domain:
            parts.append(f"(:domain {prop.domain})")
        if prop.range:
            parts.append(f"(:range {prop.range})")
        if prop.parents:
            parts.append(f"(:is-a {' '.join(prop.parents)})")
        lines.append(" ".join(parts) + ")")
    for ind in facts.individuals():
        types = facts.asserted_types(ind)
        type_clause = f" (:type {' '.join(types)})" if types else ""
        props = []
        for _, p, obj in facts.triples_for(ind):
            if isinstance(obj, Literal):
                if isinstance(obj.value, str):
                    props.append(f'({p} "{obj.value}")')
                else:
                    props.append(f"({p} {obj.value!r})")
            else:
                props.append(f"({p} {obj})")
        prop_clause = f" (:props {' '.join(props)})" if props else ""
        lines.append(f"(definstance {ind}{type_clause}{lex_clause(ind)}{prop_clause})")
    for intent in schema.intents.values():
        parts = [f"(defintent {intent.id}"]
        if intent.required_slots:
            slots = " ".join(f"({p} {r})" for p, r in intent.required_slots)
            parts.append(f"(:required {slots})")
        if intent.optional_slots:
            slots = " ".join(f"({p} {r})" for p, r in intent.optional_slots)
            parts.append(f"(:optional {slots})")
        if intent.patterns:
            pats = " ".join(conditions.format_grammar(p) for p in intent.patterns)
            parts.append(f"(:patterns {pats})")
        lines.append(" ".join(parts) + ")")
    return "\n".join(lines) + "\n"


def normalize_and_join(form: str) -> str:
    return " ".join(normalize_tokens(form))
