"""Exception types shared across the toolchain."""

from __future__ import annotations


class DwgError(Exception):
    """Base error; optionally carries a source location (1-based line/column)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(self._render())

    def _render(self) -> str:
        if self.line is not None and self.col is not None:
            return f"{self.line}:{self.col}: {self.message}"
        if self.line is not None:
            return f"{self.line}: {self.message}"
        return self.message


class ParseError(DwgError):
    """Malformed s-expression or template text."""


class OntologyError(DwgError):
    """Bad ontology source: dangling references, cycles, namespace clashes."""


class ConditionError(DwgError):
    """Malformed or unresolvable condition, grammar, or path expression."""


class ModelError(DwgError):
    """Structurally invalid dialogue model source."""


class CompileError(DwgError):
    """Model fails graph-level validation during lowering."""


class SessionError(DwgError):
    """Corrupt or incompatible persisted session document."""
