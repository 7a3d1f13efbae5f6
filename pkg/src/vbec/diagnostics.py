"""Source spans and coded diagnostics shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, order=True)
class SourceSpan:
    """A 1-based location in a source file; ``length`` is in characters."""

    file: str
    line: int
    column: int
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self!r}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan("<register>", 1, 1, 0)


@dataclass(frozen=True)
class Diagnostic:
    """A single coded finding. Severity follows from the code prefix."""

    code: str
    message: str
    span: SourceSpan
    related: str | None = None
    severity: Severity = field(init=False)

    def __post_init__(self) -> None:
        if self.code[:1] == "E":
            sev = Severity.ERROR
        elif self.code[:1] == "W":
            sev = Severity.WARNING
        else:
            raise ValueError(f"diagnostic code must start with E or W: {self.code!r}")
        object.__setattr__(self, "severity", sev)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self) -> str:
        return f"{self.span}: {self.severity.value}[{self.code}]: {self.message}"

    def sort_key(self) -> tuple:
        s = self.span
        return (self.code, s.file, s.line, s.column, self.related or "", self.message)

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "message": self.message,
            "file": self.span.file,
            "line": self.span.line,
            "column": self.span.column,
            "length": self.span.length,
            "related": self.related,
        }


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=Diagnostic.sort_key)


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)
