"""Exception hierarchy shared by all tubeval modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List


class TubevalError(Exception):
    """Base class for all tubeval errors."""


class InputError(TubevalError):
    """An in-memory value violates a precondition (bad box, bad matrix shape, ...)."""


class ParseError(TubevalError):
    """A document is structurally malformed (not JSON, wrong shapes, missing keys)."""


@dataclass(frozen=True)
class DiagnosticEntry:
    instance_id: str
    rule: str
    message: str


@dataclass
class Diagnostics:
    """Machine-readable record of document validation problems."""

    errors: List[DiagnosticEntry] = field(default_factory=list)
    warnings: List[DiagnosticEntry] = field(default_factory=list)

    def error(self, instance_id: str, rule: str, message: str) -> None:
        self.errors.append(DiagnosticEntry(instance_id, rule, message))

    def warning(self, instance_id: str, rule: str, message: str) -> None:
        self.warnings.append(DiagnosticEntry(instance_id, rule, message))

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "errors": [vars(e) for e in self.errors],
            "warnings": [vars(w) for w in self.warnings],
        }


class ValidationError(TubevalError):
    """A well-formed document violates a validation rule.

    Carries the full Diagnostics so callers can report every broken rule,
    not just the first one.
    """

    def __init__(self, diagnostics: Diagnostics):
        self.diagnostics = diagnostics
        first = diagnostics.errors[0] if diagnostics.errors else None
        summary = (
            f"{len(diagnostics.errors)} validation error(s); first: "
            f"[{first.rule}] {first.message}" if first else "validation failed"
        )
        super().__init__(summary)
