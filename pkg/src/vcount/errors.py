"""Exception hierarchy shared by every module.

Each exception carries a short machine-readable ``code`` and an optional
``context`` mapping so the CLI can render it as structured JSON.
"""

from __future__ import annotations

from typing import Any


class VCountError(Exception):
    code = "error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class InputError(VCountError):
    """Malformed user input: files, schemas, configuration values."""

    code = "input_error"


class ParseError(InputError):
    code = "parse_error"


class ShapeError(InputError):
    code = "shape_error"


class NotSplittableError(VCountError):
    code = "not_splittable"


class ComplexityError(VCountError):
    code = "complexity_error"


class BudgetRefusal(VCountError):
    """Raised before doing any work when an instance exceeds a configured cap."""

    code = "budget_refusal"


class VerificationTimeout(VCountError):
    """A node or time limit was hit; neither SAT nor UNSAT was established."""

    code = "timeout"

    def __init__(self, message: str, stats: dict[str, Any] | None = None, **context: Any) -> None:
        super().__init__(message, **context)
        self.stats = dict(stats or {})
