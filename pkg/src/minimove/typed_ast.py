"""Typing-level AST: resolved types, signatures, typed expressions, and the
exported-interface projection that dependents compile against.

Every typed node keeps the byte range of the parse node it came from, so
later passes (symbolication, diagnostics) can always point back into source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .source import SourceLocation


@dataclass(frozen=True, slots=True)
class ModuleId:
    address: int
    name: str

    def render(self) -> str:
        return f"0x{self.address:x}::{self.name}"


@dataclass(frozen=True, slots=True)
class TypeRepr:
    kind: str  # "u64" | "bool" | "address" | "record" | "error"
    module: Optional[ModuleId] = None
    name: Optional[str] = None

    def render(self) -> str:
        if self.kind == "record":
            assert self.module is not None and self.name is not None
            return f"{self.module.render()}::{self.name}"
        if self.kind == "error":
            return "<error>"
        return self.kind


U64 = TypeRepr("u64")
BOOL = TypeRepr("bool")
ADDRESS = TypeRepr("address")
ERROR_TYPE = TypeRepr("error")
BUILTIN_TYPES = {"u64": U64, "bool": BOOL, "address": ADDRESS}


def record_type(module: ModuleId, name: str) -> TypeRepr:
    return TypeRepr("record", module, name)


@dataclass(frozen=True, slots=True)
class FunctionSignature:
    name: str
    visibility: str  # "public" | "private"
    is_inline: bool
    params: tuple[tuple[str, TypeRepr], ...]
    ret: TypeRepr
    decl_loc: SourceLocation

    def render(self) -> str:
        prefix = ""
        if self.visibility == "public":
            prefix += "public "
        if self.is_inline:
            prefix += "inline "
        params = ", ".join(f"{n}: {t.render()}" for n, t in self.params)
        return f"{prefix}fun {self.name}({params}): {self.ret.render()}"


@dataclass(frozen=True, slots=True)
class FieldInfo:
    name: str
    ty: TypeRepr
    decl_loc: SourceLocation


@dataclass(frozen=True, slots=True)
class RecordInfo:
    name: str
    decl_loc: SourceLocation
    fields: tuple[FieldInfo, ...]

    def field(self, name: str) -> Optional[FieldInfo]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True, slots=True)
class UseInfo:
    alias: str
    target: Optional[ModuleId]
    alias_loc: SourceLocation
    module_loc: SourceLocation


# --- typed expressions -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TLiteral:
    ty: TypeRepr
    loc: SourceLocation
    value: Union[int, bool]


@dataclass(frozen=True, slots=True)
class TName:
    ty: TypeRepr
    loc: SourceLocation
    name: str
    kind: str  # "parameter" | "variable"
    decl_loc: SourceLocation


@dataclass(frozen=True, slots=True)
class TCall:
    ty: TypeRepr
    loc: SourceLocation
    module: Optional[ModuleId]  # None when the callee never resolved
    name: str
    name_loc: SourceLocation
    args: tuple["TypedExpr", ...]
    is_inline: bool


@dataclass(frozen=True, slots=True)
class TFieldAccess:
    ty: TypeRepr
    loc: SourceLocation
    receiver: "TypedExpr"
    field: str
    field_loc: SourceLocation


@dataclass(frozen=True, slots=True)
class TIncompleteField:
    ty: TypeRepr
    loc: SourceLocation
    receiver: "TypedExpr"


@dataclass(frozen=True, slots=True)
class TLet:
    ty: TypeRepr
    loc: SourceLocation
    name: str
    name_loc: SourceLocation
    value: "TypedExpr"


@dataclass(frozen=True, slots=True)
class TIf:
    ty: TypeRepr
    loc: SourceLocation
    cond: "TypedExpr"
    then_branch: "TypedExpr"
    else_branch: Optional["TypedExpr"]


@dataclass(frozen=True, slots=True)
class TBlock:
    ty: TypeRepr
    loc: SourceLocation
    stmts: tuple["TypedExpr", ...]
    tail: Optional["TypedExpr"]


@dataclass(frozen=True, slots=True)
class TBinary:
    ty: TypeRepr
    loc: SourceLocation
    op: str
    left: "TypedExpr"
    right: "TypedExpr"


@dataclass(frozen=True, slots=True)
class TError:
    ty: TypeRepr
    loc: SourceLocation


TypedExpr = Union[
    TLiteral,
    TName,
    TCall,
    TFieldAccess,
    TIncompleteField,
    TLet,
    TIf,
    TBlock,
    TBinary,
    TError,
]


def walk(expr: TypedExpr):
    """Yields every node of a typed expression tree, preorder."""
    yield expr
    if isinstance(expr, TCall):
        for arg in expr.args:
            yield from walk(arg)
    elif isinstance(expr, (TFieldAccess, TIncompleteField)):
        yield from walk(expr.receiver)
    elif isinstance(expr, TLet):
        yield from walk(expr.value)
    elif isinstance(expr, TIf):
        yield from walk(expr.cond)
        yield from walk(expr.then_branch)
        if expr.else_branch is not None:
            yield from walk(expr.else_branch)
    elif isinstance(expr, TBlock):
        for stmt in expr.stmts:
            yield from walk(stmt)
        if expr.tail is not None:
            yield from walk(expr.tail)
    elif isinstance(expr, TBinary):
        yield from walk(expr.left)
        yield from walk(expr.right)


# --- resolution records used by symbolication --------------------------------


@dataclass(frozen=True, slots=True)
class DefRef:
    """Where a name use resolved to."""

    kind: str  # variable | parameter | function | record | field | module
    container: ModuleId
    name: str
    decl_loc: SourceLocation
    ty: Optional[TypeRepr]


@dataclass(frozen=True, slots=True)
class Binding:
    name: str
    kind: str  # "parameter" | "variable"
    decl_loc: SourceLocation
    ty: TypeRepr


@dataclass(frozen=True, slots=True)
class ScopeInfo:
    start: int
    end: int
    bindings: tuple[Binding, ...]


# --- modules, packages, interfaces -------------------------------------------


@dataclass(frozen=True, slots=True)
class TypedFunction:
    sig: FunctionSignature
    param_locs: tuple[SourceLocation, ...]
    body: Optional[TypedExpr]


@dataclass(frozen=True, slots=True)
class TypedModule:
    id: ModuleId
    decl_loc: SourceLocation
    file_id: str
    records: dict[str, RecordInfo]
    functions: dict[str, TypedFunction]
    use_table: dict[str, UseInfo]
    uses: tuple[tuple[SourceLocation, DefRef], ...]
    scopes: tuple[ScopeInfo, ...]


@dataclass(frozen=True, slots=True)
class PackageOrigin:
    root: str
    fingerprint: str


@dataclass(frozen=True)
class TypedPackage:
    modules: dict[ModuleId, TypedModule]
    file_to_module: dict[str, ModuleId]
    origin: Optional[PackageOrigin] = None


@dataclass(frozen=True, slots=True)
class ModuleInterface:
    """The slice of a module that dependents need: record types, signatures,
    inline bodies, and import declaration locations. Nothing else."""

    id: ModuleId
    decl_loc: SourceLocation
    file_id: str
    records: dict[str, RecordInfo]
    functions: dict[str, FunctionSignature]
    inline_bodies: dict[str, TypedExpr]
    use_table: dict[str, UseInfo]
