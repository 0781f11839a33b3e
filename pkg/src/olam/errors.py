"""Error hierarchy with stable machine-readable codes."""
from __future__ import annotations


class OlamError(Exception):
    """Base error: a stable code, a message, and an optional (line, col) span."""

    def __init__(self, code: str, message: str, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"[{self.code}] line {self.span[0]}, col {self.span[1]}: {self.message}"
        return f"[{self.code}] {self.message}"


class ParseError(OlamError):
    pass


class CheckError(OlamError):
    """Kind or type assignment failure."""


class ReductionError(OlamError):
    pass


class OracleError(OlamError):
    pass


class TraceError(OlamError):
    pass


class TrustError(OlamError):
    pass
