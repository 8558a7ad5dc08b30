"""Source spans, diagnostics and the exceptions that carry them."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid span {self.line}:{self.column}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan("<generated>", 1, 1)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    message: str
    span: SourceSpan = field(default=NO_SPAN)

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def render(self) -> str:
        return f"{self.span}: {self.severity}[{self.code}]: {self.message}"

    def sort_key(self):
        return (self.span.file, self.span.line, self.span.column, self.code, self.message)


def error(code, message, span=NO_SPAN) -> Diagnostic:
    return Diagnostic(code, ERROR, message, span)


def warning(code, message, span=NO_SPAN) -> Diagnostic:
    return Diagnostic(code, WARNING, message, span)


def sort_diagnostics(diags):
    return sorted(diags, key=Diagnostic.sort_key)


class NestmlSyntaxError(Exception):
    """A single lexical or syntactic error."""

    def __init__(self, message, span, code="E0101"):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span
        self.code = code

    def diagnostic(self) -> Diagnostic:
        return error(self.code, self.message, self.span)


class ParseError(Exception):
    """Raised by ``parse_file`` when one or more syntax errors were found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))

    def diagnostics(self):
        return [e.diagnostic() for e in self.errors]
