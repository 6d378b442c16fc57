"""Content-Length framed JSON-RPC 2.0 over byte streams (the LSP wire format)."""

from __future__ import annotations

import json
import threading
from typing import BinaryIO, Optional


class FramingError(Exception):
    """The byte stream does not obey Content-Length framing."""


def read_message(stream: BinaryIO) -> Optional[dict]:
    """Reads one framed message; returns None on clean EOF at a message
    boundary, raises :class:`FramingError` on malformed framing."""
    headers: dict[str, str] = {}
    line = stream.readline()
    if not line:
        return None
    while line not in (b"\r\n", b"\n"):
        if b":" not in line:
            raise FramingError(f"malformed header line: {line!r}")
        name, _, value = line.partition(b":")
        headers[name.strip().lower().decode("ascii", "replace")] = value.strip().decode(
            "ascii", "replace"
        )
        line = stream.readline()
        if not line:
            raise FramingError("unexpected EOF inside headers")
    raw_length = headers.get("content-length")
    if raw_length is None:
        raise FramingError("missing Content-Length header")
    try:
        length = int(raw_length)
    except ValueError as exc:
        raise FramingError(f"bad Content-Length: {raw_length!r}") from exc
    body = stream.read(length)
    if body is None or len(body) != length:
        raise FramingError("unexpected EOF inside message body")
    try:
        message = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FramingError(f"message body is not JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise FramingError("message body is not a JSON object")
    return message


class MessageWriter:
    """Thread-safe framed message writer."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        self._lock = threading.Lock()

    def write(self, message: dict) -> None:
        body = json.dumps(message, separators=(",", ":")).encode("utf-8")
        frame = b"Content-Length: %d\r\n\r\n" % len(body) + body
        with self._lock:
            self._stream.write(frame)
            self._stream.flush()
