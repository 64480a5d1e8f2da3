"""Shared exception and signal types."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument is outside the operation's domain."""


class DemandMoreBits(Exception):
    """More input bits are required.

    This is a signal, not a failure: decoders raise it when a stream ends
    mid-code, and the machine runner returns an instance of it to classify
    an input string as a proper prefix of a program.
    """

    def __init__(self, consumed: int = 0):
        super().__init__(consumed)
        self.consumed = consumed

    def __eq__(self, other):
        return type(other) is type(self) and other.consumed == self.consumed

    def __hash__(self):
        return hash((type(self), self.consumed))


class LoadError(Exception):
    """A persisted document is missing, corrupt, or from another machine revision."""


class ParseError(Exception):
    """Malformed text input; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnresolvedCandidate(Exception):
    """An answer was requested about a candidate the enumeration has not decided."""

    def __init__(self, index: int | None = None, candidate: str | None = None):
        detail = candidate if candidate is not None else ""
        super().__init__(f"candidate {index if index is not None else detail!r} undecided"
                         + (f" ({detail!r})" if index is not None and candidate is not None else ""))
        self.index = index
        self.candidate = candidate


class ContradictionError(Exception):
    """More programs halted than the supplied count allows; the count was wrong."""


class NotAProgram(Exception):
    """The given bit string is not a halting program of the machine."""


class EvaluationError(Exception):
    """A question evaluator failed; carries the 1-based question index."""

    def __init__(self, index: int):
        super().__init__(f"evaluator failed at index {index}")
        self.index = index
