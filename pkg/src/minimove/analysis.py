"""Symbolication: per-file use→definition maps, hover payloads, and
completion sets, built from the typed package plus parse trees.

Parse trees matter for exactly one thing here: import declarations, which
the typing-level AST no longer contains as syntax, still need to resolve to
module definitions for navigation and completion.

Snapshots are self-contained per file and keyed by content hash, which makes
them the unit of incremental reuse: :func:`merge_index` combines cached
snapshots for untouched files with fresh ones and must produce exactly what
a full :func:`symbolicate` over the same contents would.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from . import ast
from .parser import ParseOutcome, locate_access_context
from .source import Diagnostic, SourceLocation
from .typed_ast import (
    DefRef,
    FieldInfo,
    FunctionSignature,
    ModuleId,
    ModuleInterface,
    TypedPackage,
    TypeRepr,
    walk,
)


@dataclass(frozen=True)
class DefInfo:
    kind: str  # variable | parameter | function | record | field | module
    name: str
    decl_loc: SourceLocation
    type_text: str
    container: str  # rendered module id


@dataclass(frozen=True)
class MemberInfo:
    info: DefInfo
    public: bool


@dataclass(frozen=True)
class ScopedName:
    name: str
    kind: str
    decl_start: int
    detail: str


@dataclass(frozen=True)
class ScopeEntry:
    start: int
    end: int
    names: tuple[ScopedName, ...]


@dataclass(frozen=True)
class AnalysisSnapshot:
    file_id: str
    content_hash: str
    module_id: Optional[ModuleId]
    use_defs: tuple[tuple[SourceLocation, DefInfo], ...]  # sorted by start
    completion_scopes: tuple[ScopeEntry, ...]
    expr_types: dict[tuple[int, int], TypeRepr]
    aliases: dict[str, ModuleId]
    member_defs: tuple[MemberInfo, ...]
    records: dict[str, tuple[FieldInfo, ...]]
    diagnostics: tuple[Diagnostic, ...]


@dataclass(frozen=True)
class SymbolIndex:
    files: dict[str, AnalysisSnapshot]
    module_members: dict[ModuleId, tuple[MemberInfo, ...]]
    record_table: dict[tuple[ModuleId, str], tuple[FieldInfo, ...]]


@dataclass(frozen=True)
class HoverContent:
    type_text: str
    kind: str
    container: str
    name: str

    def render(self) -> str:
        if self.kind in ("function", "record", "module"):
            return self.type_text
        return f"{self.name}: {self.type_text}"


@dataclass(frozen=True)
class CompletionItemSet:
    items: tuple[tuple[str, str, str], ...]  # (label, kind, detail), label-sorted
    source_context: str  # dot-access | path-access | identifier-prefix | none

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _, _ in self.items)


EMPTY_COMPLETIONS = CompletionItemSet(items=(), source_context="none")


class MergeError(ValueError):
    """Snapshot sets passed to merge_index do not partition the package."""


# --- construction -------------------------------------------------------------


def symbolicate(
    typed: TypedPackage,
    parsed: Mapping[str, ParseOutcome],
    deps: Optional[Mapping[ModuleId, ModuleInterface]] = None,
    diagnostics: Optional[Mapping[str, Sequence[Diagnostic]]] = None,
) -> SymbolIndex:
    """Builds snapshots for every file in ``parsed`` (which must be fully
    compiled in ``typed``) and assembles the package-wide index."""
    deps = dict(deps or {})
    snapshots: dict[str, AnalysisSnapshot] = {}
    for fid in sorted(parsed):
        outcome = parsed[fid]
        file_diags = tuple(diagnostics.get(fid, ())) if diagnostics else ()
        snapshots[fid] = _build_snapshot(typed, outcome, deps, file_diags)
    return _assemble(snapshots, deps)


def merge_index(
    cached: Mapping[str, AnalysisSnapshot],
    fresh: Mapping[str, AnalysisSnapshot],
    package_files: Sequence[str],
    deps: Optional[Mapping[ModuleId, ModuleInterface]] = None,
) -> SymbolIndex:
    """Combines cached snapshots (unmodified files) with fresh ones
    (recompiled files); fresh wins, coverage must be exact."""
    overlap = set(cached) & set(fresh)
    if overlap:
        raise MergeError(f"files appear in both cached and fresh: {sorted(overlap)}")
    expected = set(package_files)
    combined: dict[str, AnalysisSnapshot] = dict(cached)
    combined.update(fresh)
    if set(combined) != expected:
        missing = sorted(expected - set(combined))
        extra = sorted(set(combined) - expected)
        raise MergeError(f"snapshot coverage mismatch: missing={missing} extra={extra}")
    ordered = {fid: combined[fid] for fid in sorted(combined)}
    return _assemble(ordered, dict(deps or {}))


def _assemble(
    snapshots: dict[str, AnalysisSnapshot],
    deps: dict[ModuleId, ModuleInterface],
) -> SymbolIndex:
    module_members: dict[ModuleId, tuple[MemberInfo, ...]] = {}
    record_table: dict[tuple[ModuleId, str], tuple[FieldInfo, ...]] = {}
    for mid in sorted(deps, key=lambda m: (m.address, m.name)):
        iface = deps[mid]
        module_members[mid] = _interface_members(iface)
        for name, rec in iface.records.items():
            record_table[(mid, name)] = rec.fields
    for fid, snap in snapshots.items():
        if snap.module_id is None:
            continue
        module_members[snap.module_id] = snap.member_defs
        for name, fields in snap.records.items():
            record_table[(snap.module_id, name)] = fields
    return SymbolIndex(
        files=dict(snapshots),
        module_members=module_members,
        record_table=record_table,
    )


def _interface_members(iface: ModuleInterface) -> tuple[MemberInfo, ...]:
    members: list[MemberInfo] = []
    container = iface.id.render()
    for name in sorted(iface.functions):
        sig = iface.functions[name]
        members.append(
            MemberInfo(
                DefInfo("function", name, sig.decl_loc, sig.render(), container),
                public=sig.visibility == "public",
            )
        )
    for name in sorted(iface.records):
        rec = iface.records[name]
        members.append(
            MemberInfo(
                DefInfo("record", name, rec.decl_loc, f"record {name}", container),
                public=True,
            )
        )
    return tuple(members)


def _build_snapshot(
    typed: TypedPackage,
    outcome: ParseOutcome,
    deps: dict[ModuleId, ModuleInterface],
    file_diags: tuple[Diagnostic, ...],
) -> AnalysisSnapshot:
    fid = outcome.file_id
    mid = typed.file_to_module.get(fid)
    module = typed.modules.get(mid) if mid is not None else None
    if module is None:
        return AnalysisSnapshot(
            file_id=fid,
            content_hash=outcome.content_hash,
            module_id=None,
            use_defs=(),
            completion_scopes=(),
            expr_types={},
            aliases={},
            member_defs=(),
            records={},
            diagnostics=file_diags,
        )

    def signature_of(container: ModuleId, name: str) -> Optional[FunctionSignature]:
        m = typed.modules.get(container)
        if m is not None:
            fn = m.functions.get(name)
            return fn.sig if fn is not None else None
        iface = deps.get(container)
        return iface.functions.get(name) if iface is not None else None

    def render_def(ref: DefRef) -> DefInfo:
        container = ref.container.render()
        if ref.kind == "function":
            sig = signature_of(ref.container, ref.name)
            text = sig.render() if sig is not None else f"fun {ref.name}"
        elif ref.kind == "record":
            text = f"record {ref.name}"
        elif ref.kind == "module":
            text = f"module {container}"
        else:
            text = ref.ty.render() if ref.ty is not None else "<error>"
        return DefInfo(ref.kind, ref.name, ref.decl_loc, text, container)

    use_defs: list[tuple[SourceLocation, DefInfo]] = [
        (loc, render_def(ref)) for loc, ref in module.uses
    ]

    # Import declarations exist only at parse level; map their module path
    # (and alias, if any) to the target module's definition.
    if outcome.module is not None:
        for item in outcome.module.items:
            if not isinstance(item, ast.UseDecl):
                continue
            info = module.use_table.get(item.bound_name)
            if info is None or info.target is None:
                continue
            target = info.target
            target_mod = typed.modules.get(target)
            if target_mod is not None:
                decl_loc = target_mod.decl_loc
            elif target in deps:
                decl_loc = deps[target].decl_loc
            else:
                continue
            def_info = DefInfo(
                "module", target.name, decl_loc, f"module {target.render()}", target.render()
            )
            use_defs.append((item.module_loc, def_info))
            if item.alias_loc is not None:
                use_defs.append((item.alias_loc, def_info))

    use_defs.sort(key=lambda pair: (pair[0].start, pair[0].end))

    # Completion scopes: one file-wide scope with module members and import
    # aliases, plus the block scopes recorded during body checking.
    file_scope: list[ScopedName] = []
    members: list[MemberInfo] = []
    container = module.id.render()
    for name in sorted(module.functions):
        sig = module.functions[name].sig
        file_scope.append(ScopedName(name, "function", sig.decl_loc.start, sig.render()))
        members.append(
            MemberInfo(
                DefInfo("function", name, sig.decl_loc, sig.render(), container),
                public=sig.visibility == "public",
            )
        )
    for name in sorted(module.records):
        rec = module.records[name]
        file_scope.append(
            ScopedName(name, "record", rec.decl_loc.start, f"record {name}")
        )
        members.append(
            MemberInfo(
                DefInfo("record", name, rec.decl_loc, f"record {name}", container),
                public=True,
            )
        )
    aliases: dict[str, ModuleId] = {}
    for alias in sorted(module.use_table):
        info = module.use_table[alias]
        if info.target is None:
            continue
        aliases[alias] = info.target
        file_scope.append(
            ScopedName(alias, "module", info.alias_loc.start, f"module {info.target.render()}")
        )
    scopes = [ScopeEntry(0, outcome.byte_len, tuple(file_scope))]
    for scope in module.scopes:
        names = tuple(
            ScopedName(b.name, b.kind, b.decl_loc.start, b.ty.render())
            for b in scope.bindings
        )
        scopes.append(ScopeEntry(scope.start, scope.end, names))

    expr_types: dict[tuple[int, int], TypeRepr] = {}
    for fn in module.functions.values():
        if fn.body is None:
            continue
        for node in walk(fn.body):
            expr_types[(node.loc.start, node.loc.end)] = node.ty

    return AnalysisSnapshot(
        file_id=fid,
        content_hash=outcome.content_hash,
        module_id=module.id,
        use_defs=tuple(use_defs),
        completion_scopes=tuple(scopes),
        expr_types=expr_types,
        aliases=aliases,
        member_defs=tuple(members),
        records={name: rec.fields for name, rec in module.records.items()},
        diagnostics=file_diags,
    )


# --- queries -------------------------------------------------------------------


def _use_at(snap: AnalysisSnapshot, pos: int) -> Optional[tuple[SourceLocation, DefInfo]]:
    starts = [loc.start for loc, _ in snap.use_defs]
    i = bisect.bisect_right(starts, pos) - 1
    if i < 0:
        return None
    loc, info = snap.use_defs[i]
    if loc.start <= pos < loc.end:
        return loc, info
    return None


def query_definition(index: SymbolIndex, file_id: str, pos: int) -> Optional[SourceLocation]:
    snap = index.files.get(file_id)
    if snap is None:
        return None
    hit = _use_at(snap, pos)
    return hit[1].decl_loc if hit is not None else None


def query_hover(index: SymbolIndex, file_id: str, pos: int) -> Optional[HoverContent]:
    snap = index.files.get(file_id)
    if snap is None:
        return None
    hit = _use_at(snap, pos)
    if hit is None:
        return None
    info = hit[1]
    return HoverContent(
        type_text=info.type_text, kind=info.kind, container=info.container, name=info.name
    )


def hover_range(index: SymbolIndex, file_id: str, pos: int) -> Optional[SourceLocation]:
    snap = index.files.get(file_id)
    if snap is None:
        return None
    hit = _use_at(snap, pos)
    return hit[0] if hit is not None else None


def query_completion(
    index: SymbolIndex,
    parsed: Mapping[str, Union[ParseOutcome, ast.ParsedModule, None]],
    file_id: str,
    pos: int,
) -> CompletionItemSet:
    snap = index.files.get(file_id)
    source = parsed.get(file_id)
    module = source.module if isinstance(source, ParseOutcome) else source
    if snap is None or module is None:
        return EMPTY_COMPLETIONS
    context = locate_access_context(module, pos)
    if context is None:
        return EMPTY_COMPLETIONS
    if isinstance(context, ast.DotAccess):
        return _complete_dot(index, snap, context)
    if isinstance(context, ast.PathAccess):
        return _complete_path(index, snap, context)
    return _complete_prefix(snap, context, pos)


def _complete_dot(
    index: SymbolIndex, snap: AnalysisSnapshot, context: ast.DotAccess
) -> CompletionItemSet:
    ty = snap.expr_types.get(context.receiver_loc.span())
    if ty is None or ty.kind != "record" or ty.module is None or ty.name is None:
        return CompletionItemSet(items=(), source_context="dot-access")
    fields = index.record_table.get((ty.module, ty.name), ())
    items = tuple(
        sorted((f.name, "field", f.ty.render()) for f in fields)
    )
    return CompletionItemSet(items=items, source_context="dot-access")


def _resolve_path_parts(
    index: SymbolIndex, snap: AnalysisSnapshot, parts: tuple[str, ...]
) -> Optional[ModuleId]:
    if len(parts) == 1:
        text = parts[0]
        if text in snap.aliases:
            return snap.aliases[text]
        return None
    if len(parts) == 2 and parts[0].lower().startswith("0x"):
        try:
            address = int(parts[0], 16)
        except ValueError:
            return None
        mid = ModuleId(address, parts[1])
        return mid if mid in index.module_members else None
    return None


def _complete_path(
    index: SymbolIndex, snap: AnalysisSnapshot, context: ast.PathAccess
) -> CompletionItemSet:
    parts = context.parts
    if len(parts) == 1 and parts[0].lower().startswith("0x"):
        # ``0x1::`` — offer the modules declared under that address.
        try:
            address = int(parts[0], 16)
        except ValueError:
            return CompletionItemSet(items=(), source_context="path-access")
        items = sorted(
            (mid.name, "module", f"module {mid.render()}")
            for mid in index.module_members
            if mid.address == address
        )
        return CompletionItemSet(items=tuple(items), source_context="path-access")
    mid = _resolve_path_parts(index, snap, parts)
    if mid is None:
        return CompletionItemSet(items=(), source_context="path-access")
    foreign = mid != snap.module_id
    seen: dict[str, tuple[str, str, str]] = {}
    for member in index.module_members.get(mid, ()):
        if foreign and not member.public:
            continue
        info = member.info
        seen.setdefault(info.name, (info.name, info.kind, info.type_text))
    items = tuple(sorted(seen.values()))
    return CompletionItemSet(items=items, source_context="path-access")


def _complete_prefix(
    snap: AnalysisSnapshot, context: ast.IdentifierPrefix, pos: int
) -> CompletionItemSet:
    prefix = context.text
    chosen: dict[str, tuple[str, str, str]] = {}
    # Innermost scopes first so shadowing picks the nearest binding.
    containing = [s for s in snap.completion_scopes if s.start <= pos <= s.end]
    containing.sort(key=lambda s: s.start, reverse=True)
    for scope in containing:
        for name in scope.names:
            if name.kind in ("variable", "parameter") and name.decl_start >= pos:
                continue
            if not name.name.startswith(prefix):
                continue
            if name.name not in chosen:
                chosen[name.name] = (name.name, name.kind, name.detail)
    items = tuple(sorted(chosen.values()))
    return CompletionItemSet(items=items, source_context="identifier-prefix")
