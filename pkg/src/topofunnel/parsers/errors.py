from __future__ import annotations


class ParseError(ValueError):
    """Malformed input. ``offset`` is a byte offset, ``line`` a 1-based line number."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        where = []
        if offset is not None:
            where.append(f"offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.offset = offset
        self.line = line


class RecordError(ParseError):
    """A single record is unusable; lenient callers skip it and count it."""


class TruncatedError(ParseError):
    """Input ends inside a record. ``offset`` is where the incomplete record starts."""
