"""Name resolution and type checking.

The checker is total: unresolved names and type mismatches become
diagnostics plus error types, never exceptions, and an error type absorbs
downstream checks so one root cause produces one diagnostic.

Signatures and record types are checked for *every* file on every run. Body
checking can be skipped per file (:class:`TypingMode`), with one exception:
bodies of ``inline`` functions are always checked and retained because
dependents need them for call expansion.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from . import ast
from .source import Diagnostic, SourceLocation, error
from .typed_ast import (
    BOOL,
    BUILTIN_TYPES,
    ERROR_TYPE,
    U64,
    Binding,
    DefRef,
    FieldInfo,
    FunctionSignature,
    ModuleId,
    ModuleInterface,
    PackageOrigin,
    RecordInfo,
    ScopeInfo,
    TBinary,
    TBlock,
    TCall,
    TError,
    TFieldAccess,
    TIf,
    TIncompleteField,
    TLet,
    TLiteral,
    TName,
    TypedExpr,
    TypedFunction,
    TypedModule,
    TypedPackage,
    TypeRepr,
    UseInfo,
    record_type,
)

INLINE_EXPANSION_LIMIT = 32

DepModule = Union[ModuleInterface, TypedModule]


@dataclass(frozen=True)
class TypingMode:
    """Which files get their (non-inline) function bodies skipped."""

    skip_bodies_for: frozenset[str] = frozenset()

    @staticmethod
    def full() -> "TypingMode":
        return TypingMode(frozenset())


class MissingInlineBodyError(Exception):
    """An inline call could not be expanded because the definition's body is
    missing; this indicates a broken dependency cache entry, not bad user
    code."""


class DepView:
    """Uniform read access over dependency modules, whether they arrive as
    lean interfaces or as fully typed modules."""

    def __init__(self, deps: Optional[Mapping[ModuleId, DepModule]]):
        self._deps: dict[ModuleId, DepModule] = dict(deps or {})

    def __contains__(self, mid: ModuleId) -> bool:
        return mid in self._deps

    def module_ids(self):
        return self._deps.keys()

    def decl_loc(self, mid: ModuleId) -> Optional[SourceLocation]:
        m = self._deps.get(mid)
        return m.decl_loc if m is not None else None

    def record(self, mid: ModuleId, name: str) -> Optional[RecordInfo]:
        m = self._deps.get(mid)
        return m.records.get(name) if m is not None else None

    def signature(self, mid: ModuleId, name: str) -> Optional[FunctionSignature]:
        m = self._deps.get(mid)
        if m is None:
            return None
        if isinstance(m, ModuleInterface):
            return m.functions.get(name)
        fn = m.functions.get(name)
        return fn.sig if fn is not None else None

    def inline_definitions(self):
        for mid, m in self._deps.items():
            if isinstance(m, ModuleInterface):
                for name, body in m.inline_bodies.items():
                    sig = m.functions[name]
                    yield (mid, name), (tuple(p for p, _ in sig.params), body)
            else:
                for name, fn in m.functions.items():
                    if fn.sig.is_inline and fn.body is not None:
                        yield (mid, name), (
                            tuple(p for p, _ in fn.sig.params),
                            fn.body,
                        )


class _ModCtx:
    def __init__(self, fid: str, pm: ast.ParsedModule, mid: ModuleId):
        self.fid = fid
        self.pm = pm
        self.mid = mid
        self.records: dict[str, RecordInfo] = {}
        self.functions: dict[str, FunctionSignature] = {}
        self.param_locs: dict[str, tuple[SourceLocation, ...]] = {}
        self.fun_decls: dict[str, ast.FunDecl] = {}
        self.use_table: dict[str, UseInfo] = {}
        self.uses: list[tuple[SourceLocation, DefRef]] = []
        self.scopes: list[ScopeInfo] = []
        self.bodies: dict[str, Optional[TypedExpr]] = {}


def check_package(
    parsed: Mapping[str, Optional[ast.ParsedModule]],
    deps: Optional[Mapping[ModuleId, DepModule]] = None,
    mode: TypingMode = TypingMode(),
    origin: Optional[PackageOrigin] = None,
) -> tuple[TypedPackage, list[Diagnostic]]:
    """Checks one package given already-compiled dependency modules.

    Files are processed in sorted order; a duplicate module id is reported on
    the later file and that file's module is excluded from the result.
    """
    checker = _PackageChecker(parsed, DepView(deps), mode)
    return checker.run(origin)


class _PackageChecker:
    def __init__(self, parsed, dep_view: DepView, mode: TypingMode):
        self.parsed = parsed
        self.deps = dep_view
        self.mode = mode
        self.diags: list[Diagnostic] = []
        self.by_mid: dict[ModuleId, _ModCtx] = {}
        self.ctxs: list[_ModCtx] = []

    def run(self, origin: Optional[PackageOrigin]) -> tuple[TypedPackage, list[Diagnostic]]:
        self._collect_headers()
        for ctx in self.ctxs:
            self._resolve_uses(ctx)
        for ctx in self.ctxs:
            self._collect_record_names(ctx)
        for ctx in self.ctxs:
            self._resolve_record_fields(ctx)
        for ctx in self.ctxs:
            self._collect_signatures(ctx)
        for ctx in self.ctxs:
            self._check_bodies(ctx)

        modules: dict[ModuleId, TypedModule] = {}
        file_to_module: dict[str, ModuleId] = {}
        for ctx in self.ctxs:
            functions = {
                name: TypedFunction(
                    sig=sig,
                    param_locs=ctx.param_locs[name],
                    body=ctx.bodies.get(name),
                )
                for name, sig in ctx.functions.items()
            }
            modules[ctx.mid] = TypedModule(
                id=ctx.mid,
                decl_loc=ctx.pm.name_loc,
                file_id=ctx.fid,
                records=ctx.records,
                functions=functions,
                use_table=ctx.use_table,
                uses=tuple(ctx.uses),
                scopes=tuple(ctx.scopes),
            )
            file_to_module[ctx.fid] = ctx.mid
        package = TypedPackage(
            modules=modules, file_to_module=file_to_module, origin=origin
        )
        self._validate_inline_expansion(package)
        return package, self.diags

    # --- phases ------------------------------------------------------------

    def _collect_headers(self) -> None:
        for fid in sorted(self.parsed):
            pm = self.parsed[fid]
            if pm is None:
                continue
            mid = ModuleId(int(pm.address_text, 16), pm.name)
            if mid in self.by_mid:
                self.diags.append(
                    error(
                        "dup-module",
                        f"duplicate module {mid.render()}",
                        pm.name_loc,
                    )
                )
                continue
            ctx = _ModCtx(fid, pm, mid)
            self.by_mid[mid] = ctx
            self.ctxs.append(ctx)

    def _resolve_uses(self, ctx: _ModCtx) -> None:
        for item in ctx.pm.items:
            if not isinstance(item, ast.UseDecl):
                continue
            target = ModuleId(int(item.address_text, 16), item.module_name)
            if target not in self.by_mid and target not in self.deps:
                self.diags.append(
                    error(
                        "unresolved-module",
                        f"unresolved module {target.render()}",
                        item.module_loc,
                    )
                )
                resolved = None
            else:
                resolved = target
            bound = item.bound_name
            if bound in ctx.use_table:
                self.diags.append(
                    error(
                        "dup-use",
                        f"'{bound}' is already bound by an earlier use declaration",
                        item.alias_loc or item.module_loc,
                    )
                )
                continue
            ctx.use_table[bound] = UseInfo(
                alias=bound,
                target=resolved,
                alias_loc=item.alias_loc or item.module_loc,
                module_loc=item.module_loc,
            )

    def _collect_record_names(self, ctx: _ModCtx) -> None:
        for item in ctx.pm.items:
            if not isinstance(item, ast.RecordDecl):
                continue
            if item.name in ctx.records:
                self.diags.append(
                    error(
                        "dup-record",
                        f"duplicate record '{item.name}'",
                        item.name_loc,
                    )
                )
                continue
            ctx.records[item.name] = RecordInfo(
                name=item.name, decl_loc=item.name_loc, fields=()
            )

    def _resolve_record_fields(self, ctx: _ModCtx) -> None:
        for item in ctx.pm.items:
            if not isinstance(item, ast.RecordDecl):
                continue
            existing = ctx.records.get(item.name)
            if existing is None or existing.decl_loc != item.name_loc:
                continue  # duplicate decl, first one wins
            fields: list[FieldInfo] = []
            seen: set[str] = set()
            for f in item.fields:
                if f.name in seen:
                    self.diags.append(
                        error("dup-field", f"duplicate field '{f.name}'", f.name_loc)
                    )
                    continue
                seen.add(f.name)
                fields.append(
                    FieldInfo(
                        name=f.name,
                        ty=self._resolve_type(ctx, f.type),
                        decl_loc=f.name_loc,
                    )
                )
            ctx.records[item.name] = RecordInfo(
                name=item.name, decl_loc=item.name_loc, fields=tuple(fields)
            )

    def _collect_signatures(self, ctx: _ModCtx) -> None:
        for item in ctx.pm.items:
            if not isinstance(item, ast.FunDecl):
                continue
            if item.name in ctx.functions:
                self.diags.append(
                    error(
                        "dup-fun",
                        f"duplicate function '{item.name}'",
                        item.name_loc,
                    )
                )
                continue
            params: list[tuple[str, TypeRepr]] = []
            locs: list[SourceLocation] = []
            seen: set[str] = set()
            for p in item.params:
                if p.name in seen:
                    self.diags.append(
                        error(
                            "dup-param",
                            f"duplicate parameter '{p.name}'",
                            p.name_loc,
                        )
                    )
                    continue
                seen.add(p.name)
                params.append((p.name, self._resolve_type(ctx, p.type)))
                locs.append(p.name_loc)
            ctx.functions[item.name] = FunctionSignature(
                name=item.name,
                visibility="public" if item.is_public else "private",
                is_inline=item.is_inline,
                params=tuple(params),
                ret=self._resolve_type(ctx, item.return_type),
                decl_loc=item.name_loc,
            )
            ctx.param_locs[item.name] = tuple(locs)
            ctx.fun_decls[item.name] = item

    def _check_bodies(self, ctx: _ModCtx) -> None:
        skip = ctx.fid in self.mode.skip_bodies_for
        for name, sig in ctx.functions.items():
            decl = ctx.fun_decls[name]
            if skip and not sig.is_inline:
                ctx.bodies[name] = None
                continue
            body_checker = _BodyChecker(self, ctx, sig, ctx.param_locs[name])
            ctx.bodies[name] = body_checker.check(decl.body)

    def _validate_inline_expansion(self, package: TypedPackage) -> None:
        defs = collect_inline_definitions(package, self.deps)
        for module in package.modules.values():
            for fn in module.functions.values():
                if fn.body is not None:
                    expand_inline_calls(fn.body, defs, self.diags)

    # --- shared resolution helpers ------------------------------------------

    def _module_decl_ref(self, mid: ModuleId) -> Optional[DefRef]:
        ctx = self.by_mid.get(mid)
        if ctx is not None:
            return DefRef("module", mid, mid.name, ctx.pm.name_loc, None)
        loc = self.deps.decl_loc(mid)
        if loc is not None:
            return DefRef("module", mid, mid.name, loc, None)
        return None

    def _lookup_record(self, mid: ModuleId, name: str) -> Optional[RecordInfo]:
        ctx = self.by_mid.get(mid)
        if ctx is not None:
            return ctx.records.get(name)
        return self.deps.record(mid, name)

    def _lookup_signature(self, mid: ModuleId, name: str) -> Optional[FunctionSignature]:
        ctx = self.by_mid.get(mid)
        if ctx is not None:
            return ctx.functions.get(name)
        return self.deps.signature(mid, name)

    def _module_exists(self, mid: ModuleId) -> bool:
        return mid in self.by_mid or mid in self.deps

    def _resolve_type(self, ctx: _ModCtx, tn: ast.TypeName) -> TypeRepr:
        parts = tn.parts
        if len(parts) == 1:
            text, loc = parts[0]
            builtin = BUILTIN_TYPES.get(text)
            if builtin is not None:
                return builtin
            rec = ctx.records.get(text)
            if rec is not None:
                ctx.uses.append(
                    (loc, DefRef("record", ctx.mid, text, rec.decl_loc, None))
                )
                return record_type(ctx.mid, text)
            self.diags.append(error("unknown-type", f"unknown type '{text}'", loc))
            return ERROR_TYPE
        if len(parts) == 2:
            (alias, alias_loc), (name, name_loc) = parts
            info = ctx.use_table.get(alias)
            if info is None or info.target is None:
                self.diags.append(
                    error(
                        "unknown-type",
                        f"'{alias}' does not name an imported module",
                        alias_loc,
                    )
                )
                return ERROR_TYPE
            mid = info.target
        else:
            (addr_text, _), (mod_name, mod_loc), (name, name_loc) = parts
            mid = ModuleId(int(addr_text, 16), mod_name)
            if not self._module_exists(mid):
                self.diags.append(
                    error(
                        "unresolved-module",
                        f"unresolved module {mid.render()}",
                        mod_loc,
                    )
                )
                return ERROR_TYPE
            alias_loc = mod_loc
        mod_ref = self._module_decl_ref(mid)
        if mod_ref is not None:
            ctx.uses.append((alias_loc, mod_ref))
        rec = self._lookup_record(mid, name)
        if rec is None:
            self.diags.append(
                error(
                    "unknown-type",
                    f"no record '{name}' in {mid.render()}",
                    name_loc,
                )
            )
            return ERROR_TYPE
        ctx.uses.append((name_loc, DefRef("record", mid, name, rec.decl_loc, None)))
        return record_type(mid, name)


class _BodyChecker:
    def __init__(
        self,
        pkg: _PackageChecker,
        ctx: _ModCtx,
        sig: FunctionSignature,
        param_locs: tuple[SourceLocation, ...],
    ):
        self.pkg = pkg
        self.ctx = ctx
        self.sig = sig
        self.param_locs = param_locs
        self.env: list[dict[str, Binding]] = []

    def check(self, body: ast.Block) -> TypedExpr:
        params = {
            name: Binding(name, "parameter", loc, ty)
            for (name, ty), loc in zip(self.sig.params, self.param_locs)
        }
        self.env.append(params)
        typed = self.expr(body)
        self.ctx.scopes.append(
            ScopeInfo(body.loc.start, body.loc.end, tuple(params.values()))
        )
        self.env.pop()
        if (
            typed.ty != self.sig.ret
            and typed.ty.kind != "error"
            and self.sig.ret.kind != "error"
        ):
            at = body.tail.loc if isinstance(body, ast.Block) and body.tail else body.loc
            self.pkg.diags.append(
                error(
                    "return-mismatch",
                    f"function returns {self.sig.ret.render()}, "
                    f"body has type {typed.ty.render()}",
                    at,
                )
            )
        return typed

    # --- scope helpers -------------------------------------------------------

    def _lookup(self, name: str) -> Optional[Binding]:
        for scope in reversed(self.env):
            binding = scope.get(name)
            if binding is not None:
                return binding
        return None

    def _use(self, loc: SourceLocation, ref: DefRef) -> None:
        self.ctx.uses.append((loc, ref))

    def _diag(self, code: str, message: str, loc: SourceLocation) -> None:
        self.pkg.diags.append(error(code, message, loc))

    # --- expressions ----------------------------------------------------------

    def expr(self, node: ast.Expr) -> TypedExpr:
        if isinstance(node, ast.Literal):
            if node.kind == "int":
                return TLiteral(U64, node.loc, int(node.text))
            if node.kind == "bool":
                return TLiteral(BOOL, node.loc, node.text == "true")
            return TLiteral(TypeRepr("address"), node.loc, int(node.text, 16))
        if isinstance(node, ast.Name):
            binding = self._lookup(node.name)
            if binding is None:
                self._diag("unresolved-name", f"unresolved name '{node.name}'", node.loc)
                return TError(ERROR_TYPE, node.loc)
            self._use(
                node.loc,
                DefRef(binding.kind, self.ctx.mid, node.name, binding.decl_loc, binding.ty),
            )
            return TName(binding.ty, node.loc, node.name, binding.kind, binding.decl_loc)
        if isinstance(node, ast.FieldAccess):
            return self._field_access(node)
        if isinstance(node, ast.IncompleteFieldAccess):
            receiver = self.expr(node.receiver)
            return TIncompleteField(ERROR_TYPE, node.loc, receiver)
        if isinstance(node, ast.Call):
            return self._local_call(node)
        if isinstance(node, ast.PathCall):
            return self._path_call(node)
        if isinstance(node, ast.Let):
            return self._let(node)
        if isinstance(node, ast.If):
            return self._if(node)
        if isinstance(node, ast.Block):
            return self._block(node)
        if isinstance(node, ast.Binary):
            return self._binary(node)
        return TError(ERROR_TYPE, node.loc)

    def _field_access(self, node: ast.FieldAccess) -> TypedExpr:
        receiver = self.expr(node.receiver)
        rty = receiver.ty
        if rty.kind == "error":
            return TFieldAccess(ERROR_TYPE, node.loc, receiver, node.field, node.field_loc)
        if rty.kind != "record":
            self._diag(
                "not-a-record",
                f"type {rty.render()} has no fields",
                node.field_loc,
            )
            return TFieldAccess(ERROR_TYPE, node.loc, receiver, node.field, node.field_loc)
        assert rty.module is not None and rty.name is not None
        rec = self.pkg._lookup_record(rty.module, rty.name)
        if rec is None:
            return TFieldAccess(ERROR_TYPE, node.loc, receiver, node.field, node.field_loc)
        field = rec.field(node.field)
        if field is None:
            self._diag(
                "unknown-field",
                f"no field '{node.field}' on {rty.render()}",
                node.field_loc,
            )
            return TFieldAccess(ERROR_TYPE, node.loc, receiver, node.field, node.field_loc)
        if rty.module != self.ctx.mid:
            self._diag(
                "foreign-field",
                f"field '{node.field}' of {rty.render()} is only accessible "
                "inside its defining module",
                node.field_loc,
            )
        self._use(
            node.field_loc,
            DefRef("field", rty.module, node.field, field.decl_loc, field.ty),
        )
        return TFieldAccess(field.ty, node.loc, receiver, node.field, node.field_loc)

    def _check_args(
        self,
        sig: FunctionSignature,
        args: tuple[TypedExpr, ...],
        call_loc: SourceLocation,
    ) -> None:
        if len(args) != len(sig.params):
            self._diag(
                "arity",
                f"'{sig.name}' expects {len(sig.params)} argument(s), "
                f"got {len(args)}",
                call_loc,
            )
            return
        for arg, (pname, pty) in zip(args, sig.params):
            if arg.ty != pty and arg.ty.kind != "error" and pty.kind != "error":
                self._diag(
                    "arg-mismatch",
                    f"argument '{pname}' expects {pty.render()}, "
                    f"found {arg.ty.render()}",
                    arg.loc,
                )

    def _local_call(self, node: ast.Call) -> TypedExpr:
        args = tuple(self.expr(a) for a in node.args)
        sig = self.ctx.functions.get(node.name)
        if sig is None:
            self._diag(
                "unresolved-fun",
                f"unresolved function '{node.name}'",
                node.name_loc,
            )
            return TCall(ERROR_TYPE, node.loc, None, node.name, node.name_loc, args, False)
        self._use(
            node.name_loc,
            DefRef("function", self.ctx.mid, node.name, sig.decl_loc, None),
        )
        self._check_args(sig, args, node.loc)
        return TCall(
            sig.ret, node.loc, self.ctx.mid, node.name, node.name_loc, args, sig.is_inline
        )

    def _resolve_path_module(
        self, node: ast.PathCall
    ) -> tuple[Optional[ModuleId], int]:
        """Returns (module id, index of the member part) or (None, -1)."""
        parts = node.parts
        first_text, first_loc = parts[0]
        if first_text.lower().startswith("0x"):
            if len(parts) < 2:
                return None, -1
            mid = ModuleId(int(first_text, 16), parts[1][0])
            if not self.pkg._module_exists(mid):
                self._diag(
                    "unresolved-module",
                    f"unresolved module {mid.render()}",
                    parts[1][1],
                )
                return None, -1
            ref = self.pkg._module_decl_ref(mid)
            if ref is not None:
                self._use(parts[1][1], ref)
            return mid, 2
        info = self.ctx.use_table.get(first_text)
        if info is None or info.target is None:
            self._diag(
                "unresolved-module",
                f"'{first_text}' does not name an imported module",
                first_loc,
            )
            return None, -1
        ref = self.pkg._module_decl_ref(info.target)
        if ref is not None:
            self._use(first_loc, ref)
        return info.target, 1

    def _path_call(self, node: ast.PathCall) -> TypedExpr:
        args = tuple(self.expr(a) for a in (node.args or ()))
        if not node.complete:
            # Partially typed path (``std::`` / ``std::mi``): resolve the
            # module part so navigation works, but the expression has no type.
            if len(node.parts) >= 1:
                self._resolve_path_module(node)
            return TError(ERROR_TYPE, node.loc)
        mid, member_idx = self._resolve_path_module(node)
        if mid is None:
            return TError(ERROR_TYPE, node.loc)
        if member_idx >= len(node.parts):
            self._diag("path-arity", "module path is missing a member name", node.loc)
            return TError(ERROR_TYPE, node.loc)
        if member_idx != len(node.parts) - 1:
            self._diag(
                "path-arity",
                "too many segments in module path",
                node.parts[-1][1],
            )
            return TError(ERROR_TYPE, node.loc)
        member, member_loc = node.parts[member_idx]
        sig = self.pkg._lookup_signature(mid, member)
        if sig is None:
            self._diag(
                "unresolved-fun",
                f"no function '{member}' in {mid.render()}",
                member_loc,
            )
            return TCall(ERROR_TYPE, node.loc, mid, member, member_loc, args, False)
        if mid != self.ctx.mid and sig.visibility != "public":
            self._diag(
                "private-fun",
                f"function '{member}' is private to {mid.render()}",
                member_loc,
            )
        self._use(member_loc, DefRef("function", mid, member, sig.decl_loc, None))
        self._check_args(sig, args, node.loc)
        return TCall(sig.ret, node.loc, mid, member, member_loc, args, sig.is_inline)

    def _let(self, node: ast.Let) -> TypedExpr:
        value = self.expr(node.value)
        ty = value.ty
        if node.annotation is not None:
            declared = self.pkg._resolve_type(self.ctx, node.annotation)
            if (
                declared != value.ty
                and declared.kind != "error"
                and value.ty.kind != "error"
            ):
                self._diag(
                    "let-mismatch",
                    f"expected {declared.render()}, found {value.ty.render()}",
                    node.value.loc,
                )
            ty = declared
        self.env[-1][node.name] = Binding(node.name, "variable", node.name_loc, ty)
        return TLet(ty, node.loc, node.name, node.name_loc, value)

    def _if(self, node: ast.If) -> TypedExpr:
        cond = self.expr(node.cond)
        if cond.ty != BOOL and cond.ty.kind != "error":
            self._diag(
                "cond-mismatch",
                f"condition must be bool, found {cond.ty.render()}",
                node.cond.loc,
            )
        then_branch = self.expr(node.then_branch)
        if node.else_branch is None:
            return TIf(ERROR_TYPE, node.loc, cond, then_branch, None)
        else_branch = self.expr(node.else_branch)
        if then_branch.ty.kind == "error" or else_branch.ty.kind == "error":
            ty = ERROR_TYPE
        elif then_branch.ty == else_branch.ty:
            ty = then_branch.ty
        else:
            self._diag(
                "if-mismatch",
                f"if branches have mismatched types: "
                f"{then_branch.ty.render()} vs {else_branch.ty.render()}",
                node.else_branch.loc,
            )
            ty = ERROR_TYPE
        return TIf(ty, node.loc, cond, then_branch, else_branch)

    def _block(self, node: ast.Block) -> TypedExpr:
        self.env.append({})
        stmts = tuple(self.expr(s) for s in node.stmts)
        tail = self.expr(node.tail) if node.tail is not None else None
        bindings = tuple(self.env[-1].values())
        self.ctx.scopes.append(ScopeInfo(node.loc.start, node.loc.end, bindings))
        self.env.pop()
        if tail is not None:
            ty = tail.ty
        else:
            ty = ERROR_TYPE
            if not node.recovered:
                self._diag(
                    "block-no-value",
                    "block must end with an expression",
                    node.loc,
                )
        return TBlock(ty, node.loc, stmts, tail)

    def _binary(self, node: ast.Binary) -> TypedExpr:
        left = self.expr(node.left)
        right = self.expr(node.right)
        lty, rty = left.ty, right.ty
        if lty.kind == "error" or rty.kind == "error":
            return TBinary(ERROR_TYPE, node.loc, node.op, left, right)
        op = node.op
        if op in ("+", "-", "*", "<"):
            if lty == U64 and rty == U64:
                ty = U64 if op != "<" else BOOL
            else:
                self._diag(
                    "op-mismatch",
                    f"operator '{op}' expects u64 operands, "
                    f"found {lty.render()} and {rty.render()}",
                    node.op_loc,
                )
                ty = ERROR_TYPE
        elif op == "==":
            if lty == rty and lty.kind in ("u64", "bool", "address"):
                ty = BOOL
            else:
                self._diag(
                    "op-mismatch",
                    f"cannot compare {lty.render()} with {rty.render()}",
                    node.op_loc,
                )
                ty = ERROR_TYPE
        else:  # && ||
            if lty == BOOL and rty == BOOL:
                ty = BOOL
            else:
                self._diag(
                    "op-mismatch",
                    f"operator '{op}' expects bool operands, "
                    f"found {lty.render()} and {rty.render()}",
                    node.op_loc,
                )
                ty = ERROR_TYPE
        return TBinary(ty, node.loc, node.op, left, right)


# --- interfaces --------------------------------------------------------------


def interface_of(module: TypedModule) -> ModuleInterface:
    """Projects a typed module down to what dependents compile against."""
    return ModuleInterface(
        id=module.id,
        decl_loc=module.decl_loc,
        file_id=module.file_id,
        records=dict(module.records),
        functions={name: fn.sig for name, fn in module.functions.items()},
        inline_bodies={
            name: fn.body
            for name, fn in module.functions.items()
            if fn.sig.is_inline and fn.body is not None
        },
        use_table=dict(module.use_table),
    )


def collect_inline_definitions(
    package: TypedPackage, deps: Optional[Union[DepView, Mapping[ModuleId, DepModule]]] = None
) -> dict[tuple[ModuleId, str], tuple[tuple[str, ...], TypedExpr]]:
    view = deps if isinstance(deps, DepView) else DepView(deps)
    defs: dict[tuple[ModuleId, str], tuple[tuple[str, ...], TypedExpr]] = {}
    for key, value in view.inline_definitions():
        defs[key] = value
    for mid, module in package.modules.items():
        for name, fn in module.functions.items():
            if fn.sig.is_inline and fn.body is not None:
                defs[(mid, name)] = (tuple(p for p, _ in fn.sig.params), fn.body)
    return defs


# --- inline expansion ----------------------------------------------------------


def expand_inline_calls(
    body: TypedExpr,
    inline_defs: Mapping[tuple[ModuleId, str], tuple[tuple[str, ...], TypedExpr]],
    diagnostics: Optional[list[Diagnostic]] = None,
    limit: int = INLINE_EXPANSION_LIMIT,
) -> TypedExpr:
    """Replaces calls to inline functions by their bodies with parameters
    substituted by the argument expressions. Nodes coming from the inline
    body keep the *call site* location. Expansion deeper than ``limit``
    produces a diagnostic and leaves the offending call in place."""
    sink = diagnostics if diagnostics is not None else []
    return _expand(body, inline_defs, sink, 0, limit)


def _expand(expr, defs, sink, depth, limit) -> TypedExpr:
    expr = _rebuild(expr, lambda child: _expand(child, defs, sink, depth, limit))
    if not (isinstance(expr, TCall) and expr.is_inline and expr.module is not None):
        return expr
    if depth >= limit:
        sink.append(
            error(
                "inline-depth",
                f"inline call to '{expr.name}' exceeds expansion depth {limit}",
                expr.loc,
            )
        )
        return expr
    key = (expr.module, expr.name)
    if key not in defs:
        raise MissingInlineBodyError(
            f"missing inline body for {expr.module.render()}::{expr.name}"
        )
    param_names, body = defs[key]
    # A body that is a bare `{ expr }` inlines as the expression itself.
    if isinstance(body, TBlock) and not body.stmts and body.tail is not None:
        body = body.tail
    substitution = dict(zip(param_names, expr.args))
    inlined = _substitute(body, substitution, expr.loc)
    return _expand(inlined, defs, sink, depth + 1, limit)


def _rebuild(expr: TypedExpr, f) -> TypedExpr:
    if isinstance(expr, TCall):
        return dataclasses.replace(expr, args=tuple(f(a) for a in expr.args))
    if isinstance(expr, (TFieldAccess, TIncompleteField)):
        return dataclasses.replace(expr, receiver=f(expr.receiver))
    if isinstance(expr, TLet):
        return dataclasses.replace(expr, value=f(expr.value))
    if isinstance(expr, TIf):
        return dataclasses.replace(
            expr,
            cond=f(expr.cond),
            then_branch=f(expr.then_branch),
            else_branch=f(expr.else_branch) if expr.else_branch is not None else None,
        )
    if isinstance(expr, TBlock):
        return dataclasses.replace(
            expr,
            stmts=tuple(f(s) for s in expr.stmts),
            tail=f(expr.tail) if expr.tail is not None else None,
        )
    if isinstance(expr, TBinary):
        return dataclasses.replace(expr, left=f(expr.left), right=f(expr.right))
    return expr


def _substitute(
    expr: TypedExpr, substitution: dict[str, TypedExpr], loc: SourceLocation
) -> TypedExpr:
    if isinstance(expr, TName) and expr.kind == "parameter" and expr.name in substitution:
        return substitution[expr.name]
    changes: dict = {"loc": loc}
    if isinstance(expr, (TCall, TLet)):
        changes["name_loc"] = loc
    elif isinstance(expr, TFieldAccess):
        changes["field_loc"] = loc
    moved = dataclasses.replace(expr, **changes)
    return _rebuild(moved, lambda child: _substitute(child, substitution, loc))
