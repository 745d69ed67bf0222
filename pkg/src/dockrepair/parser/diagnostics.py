from __future__ import annotations

from dataclasses import dataclass

from ..tree import SourceSpan


class UnsupportedEncoding(ValueError):
    """Input bytes are not valid UTF-8."""


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning" | "info"
    message: str
    span: SourceSpan
    code: str = ""

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "line": self.span.start_line,
            "column": self.span.start_col,
        }
