"""Parse-level AST for MiniMove.

The tree is lossless enough for IDE work: every node carries the byte range
it came from, incomplete constructs (``expr.`` with no field name, ``mod::``
with no member) are represented explicitly, and regions the parser had to
skip become :class:`ErrorRegion` items instead of disappearing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .source import Diagnostic, SourceLocation


@dataclass(frozen=True, slots=True)
class TypeName:
    """Type reference as written: 1 part (builtin or local record), 2 parts
    (``alias::Name``) or 3 parts (``0x1::mod::Name``)."""

    parts: tuple[tuple[str, SourceLocation], ...]
    loc: SourceLocation

    @property
    def text(self) -> str:
        return "::".join(p[0] for p in self.parts)


# --- expressions -----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Literal:
    kind: str  # "int" | "bool" | "addr"
    text: str
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class Name:
    name: str
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class FieldAccess:
    receiver: "Expr"
    field: str
    field_loc: SourceLocation
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class IncompleteFieldAccess:
    """``expr.`` at end of a statement or input: receiver but no field."""

    receiver: "Expr"
    dot_loc: SourceLocation
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    name_loc: SourceLocation
    args: tuple["Expr", ...]
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class PathCall:
    """``alias::fun(args)`` or ``0x1::mod::fun(args)``.

    ``args is None`` means the call never reached its argument list; together
    with ``trailing_sep`` that models partially typed paths like ``std::``.
    """

    parts: tuple[tuple[str, SourceLocation], ...]
    args: Optional[tuple["Expr", ...]]
    trailing_sep: bool
    loc: SourceLocation

    @property
    def complete(self) -> bool:
        return self.args is not None and not self.trailing_sep


@dataclass(frozen=True, slots=True)
class Let:
    name: str
    name_loc: SourceLocation
    annotation: Optional[TypeName]
    value: "Expr"
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class If:
    cond: "Expr"
    then_branch: "Block"
    else_branch: Union["Block", "If", None]
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class Block:
    stmts: tuple["Expr", ...]
    tail: Optional["Expr"]
    recovered: bool
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    op_loc: SourceLocation
    left: "Expr"
    right: "Expr"
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class ErrorExpr:
    loc: SourceLocation


Expr = Union[
    Literal,
    Name,
    FieldAccess,
    IncompleteFieldAccess,
    Call,
    PathCall,
    Let,
    If,
    Block,
    Binary,
    ErrorExpr,
]


# --- items -----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class UseDecl:
    address_text: str
    address_loc: SourceLocation
    module_name: str
    module_loc: SourceLocation
    alias: Optional[str]
    alias_loc: Optional[SourceLocation]
    loc: SourceLocation

    @property
    def bound_name(self) -> str:
        return self.alias if self.alias is not None else self.module_name


@dataclass(frozen=True, slots=True)
class RecordField:
    name: str
    name_loc: SourceLocation
    type: TypeName


@dataclass(frozen=True, slots=True)
class RecordDecl:
    name: str
    name_loc: SourceLocation
    fields: tuple[RecordField, ...]
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class Param:
    name: str
    name_loc: SourceLocation
    type: TypeName


@dataclass(frozen=True, slots=True)
class FunDecl:
    name: str
    name_loc: SourceLocation
    is_public: bool
    is_inline: bool
    params: tuple[Param, ...]
    return_type: TypeName
    body: Block
    loc: SourceLocation


@dataclass(frozen=True, slots=True)
class ErrorRegion:
    loc: SourceLocation
    diagnostics: tuple[Diagnostic, ...]


ParsedItem = Union[UseDecl, RecordDecl, FunDecl, ErrorRegion]


@dataclass(frozen=True, slots=True)
class ParsedModule:
    address_text: str
    address_loc: SourceLocation
    name: str
    name_loc: SourceLocation
    items: tuple[ParsedItem, ...]
    loc: SourceLocation


# --- completion contexts ---------------------------------------------------


@dataclass(frozen=True, slots=True)
class DotAccess:
    receiver_loc: SourceLocation


@dataclass(frozen=True, slots=True)
class PathAccess:
    parts: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class IdentifierPrefix:
    text: str


AccessContext = Union[DotAccess, PathAccess, IdentifierPrefix, None]
