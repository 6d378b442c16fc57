"""Source locations, diagnostics, and byte-offset/position conversion.

All offsets in this package are byte offsets into the UTF-8 encoding of a
file. The language server converts them to line / UTF-16 column pairs at the
protocol boundary (see :class:`LineIndex`).
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class SourceLocation:
    """Half-open byte range ``[start, end)`` inside one file."""

    file_id: str
    start: int
    end: int

    def contains(self, offset: int) -> bool:
        return self.start <= offset < self.end

    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    loc: SourceLocation


def error(code: str, message: str, loc: SourceLocation) -> Diagnostic:
    return Diagnostic("error", code, message, loc)


def warning(code: str, message: str, loc: SourceLocation) -> Diagnostic:
    return Diagnostic("warning", code, message, loc)


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class LineIndex:
    """Maps byte offsets to (line, UTF-16 column) positions and back.

    Built once per document revision; lookups are O(log lines) plus the cost
    of decoding the target line (lines are short in practice).
    """

    def __init__(self, text: str):
        self._data = text.encode("utf-8")
        starts = [0]
        pos = self._data.find(b"\n")
        while pos != -1:
            starts.append(pos + 1)
            pos = self._data.find(b"\n", pos + 1)
        self._line_starts = starts

    @property
    def byte_length(self) -> int:
        return len(self._data)

    def to_position(self, offset: int) -> tuple[int, int]:
        offset = max(0, min(offset, len(self._data)))
        line = bisect.bisect_right(self._line_starts, offset) - 1
        prefix = self._data[self._line_starts[line] : offset]
        col = _utf16_len(prefix.decode("utf-8", errors="replace"))
        return (line, col)

    def to_offset(self, line: int, character: int) -> int:
        if line < 0:
            return 0
        if line >= len(self._line_starts):
            return len(self._data)
        start = self._line_starts[line]
        end = (
            self._line_starts[line + 1] - 1
            if line + 1 < len(self._line_starts)
            else len(self._data)
        )
        text = self._data[start:end].decode("utf-8", errors="replace")
        units = 0
        offset = start
        for ch in text:
            if units >= character:
                break
            units += _utf16_len(ch)
            offset += len(ch.encode("utf-8"))
        return offset


def _utf16_len(text: str) -> int:
    return sum(2 if ord(ch) > 0xFFFF else 1 for ch in text)
