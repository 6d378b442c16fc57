"""Lexer for MiniMove source files.

Tokenization is total: unknown characters become error tokens with a
diagnostic instead of aborting, and concatenating the skipped trivia with the
token texts reproduces the input byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .source import Diagnostic, SourceLocation, error

KEYWORDS = frozenset(
    [
        "module",
        "record",
        "fun",
        "public",
        "inline",
        "use",
        "as",
        "let",
        "if",
        "else",
        "true",
        "false",
    ]
)

ITEM_START_KEYWORDS = frozenset(["use", "record", "fun", "public", "inline"])

# Token kinds: keyword, ident, int, addr, punct, error.
KIND_KEYWORD = "keyword"
KIND_IDENT = "ident"
KIND_INT = "int"
KIND_ADDR = "addr"
KIND_PUNCT = "punct"
KIND_ERROR = "error"


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    loc: SourceLocation


# Longest alternatives first so multi-byte punctuation wins over its prefixes.
_TOKEN_RE = re.compile(
    rb"(?P<trivia>(?:[ \t\r\n]+|//[^\n]*)+)"
    rb"|(?P<addr>0[xX][0-9a-fA-F]+)"
    rb"|(?P<int>[0-9]+)"
    rb"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    rb"|(?P<punct>::|==|&&|\|\||[{}(),;:.=+\-*<])"
    rb"|(?P<bad>[\x00-\x7f]|[\xc2-\xdf][\x80-\xbf]"
    rb"|[\xe0-\xef][\x80-\xbf]{2}|[\xf0-\xf4][\x80-\xbf]{3}|.)",
    re.DOTALL,
)


def tokenize(text: str, file_id: str) -> tuple[list[Token], list[Diagnostic]]:
    """Splits ``text`` into tokens; never raises on bad input."""
    data = text.encode("utf-8")
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    pos = 0
    for match in _TOKEN_RE.finditer(data):
        kind = match.lastgroup
        pos = match.end()
        if kind == "trivia":
            continue
        loc = SourceLocation(file_id, match.start(), match.end())
        piece = match.group().decode("utf-8", errors="replace")
        if kind == "ident":
            tok_kind = KIND_KEYWORD if piece in KEYWORDS else KIND_IDENT
        elif kind == "addr":
            tok_kind = KIND_ADDR
        elif kind == "int":
            tok_kind = KIND_INT
        elif kind == "punct":
            tok_kind = KIND_PUNCT
        else:
            tok_kind = KIND_ERROR
            diagnostics.append(
                error("lex-unexpected", f"unexpected character {piece!r}", loc)
            )
        tokens.append(Token(tok_kind, piece, loc))
    return tokens, diagnostics


def reconstruct(text: str, tokens: list[Token]) -> str:
    """Rebuilds the source from token texts plus the trivia between them."""
    data = text.encode("utf-8")
    out: list[bytes] = []
    cursor = 0
    for tok in tokens:
        out.append(data[cursor : tok.loc.start])
        out.append(tok.text.encode("utf-8"))
        cursor = tok.loc.end
    out.append(data[cursor:])
    return b"".join(out).decode("utf-8", errors="replace")
