"""Structured validation reports.

Validation never raises: every check appends a Violation and callers decide
what to do with the report.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    field_name: str
    message: str
    frame: int | None = None
    column: int | None = None
    value: object | None = None

    def __str__(self) -> str:
        loc = ""
        if self.frame is not None:
            loc += f" frame={self.frame}"
        if self.column is not None:
            loc += f" column={self.column}"
        val = f" value={self.value!r}" if self.value is not None else ""
        return f"{self.field_name}:{loc} {self.message}{val}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, field_name: str, message: str, frame: int | None = None,
            column: int | None = None, value: object | None = None) -> None:
        self.violations.append(Violation(field_name, message, frame, column, value))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __len__(self) -> int:
        return len(self.violations)

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)
