"""The compile→analyze pipeline behind the language server.

One :class:`Workspace` owns document overlays, one shared dependency cache,
and one :class:`PackageSession` per open package. A session's
:meth:`PackageSession.run_pipeline` performs the steps the server runs after
every document change:

1. resolve the dependency graph;
2. obtain every dependency's interfaces — from the workspace cache keyed by
   (canonical root, transitive fingerprint) when pre-compiled dependencies
   are enabled, otherwise by recompiling them from source;
3. detect which user files changed since the last compile;
4. re-parse the changed files only (parse outcomes are content-addressed);
5. type-check the package, skipping non-inline bodies of unchanged files
   when incremental mode is on;
6. symbolicate the changed files and merge with cached snapshots;
7. hand back per-file diagnostics and pipeline metrics for publishing.

Every optimization can be switched off independently (:class:`Toggles`);
with all four off the pipeline recompiles the world on every change, which
serves as the ground-truth oracle for correctness tests.
"""

from __future__ import annotations

import gc
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .analysis import (
    CompletionItemSet,
    EMPTY_COMPLETIONS,
    HoverContent,
    SymbolIndex,
    merge_index,
    query_completion,
    query_definition,
    query_hover,
    hover_range,
    symbolicate,
)
from .checker import TypingMode, check_package, interface_of
from .depcache import (
    CacheIdentity,
    WorkspaceCache,
    build_full_entry,
    build_lean_entry,
)
from .encode import digest
from .packages import (
    MANIFEST_NAME,
    GraphError,
    ManifestError,
    Package,
    PackageGraph,
    canonical_root,
    discover_package,
    fingerprint,
    resolve_graph,
)
from .parser import ParseOutcome, parse_source
from .source import Diagnostic, LineIndex, SourceLocation, content_hash, error
from .typed_ast import ModuleId, ModuleInterface, PackageOrigin


@dataclass(frozen=True)
class Toggles:
    """The four independently switchable optimizations."""

    pre_compiled_deps: bool = True
    incremental: bool = True
    lean_deps: bool = True
    cross_package_cache: bool = True

    @staticmethod
    def all_off() -> "Toggles":
        return Toggles(False, False, False, False)

    @staticmethod
    def from_dict(options: Optional[dict]) -> "Toggles":
        options = options or {}
        base = Toggles()
        return Toggles(
            pre_compiled_deps=bool(
                options.get("preCompiledDeps", base.pre_compiled_deps)
            ),
            incremental=bool(options.get("incremental", base.incremental)),
            lean_deps=bool(options.get("leanDeps", base.lean_deps)),
            cross_package_cache=bool(
                options.get("crossPackageCache", base.cross_package_cache)
            ),
        )

    def to_dict(self) -> dict:
        return {
            "preCompiledDeps": self.pre_compiled_deps,
            "incremental": self.incremental,
            "leanDeps": self.lean_deps,
            "crossPackageCache": self.cross_package_cache,
        }


@dataclass
class PipelineMetrics:
    compile_ms: float = 0.0
    analysis_ms: float = 0.0
    files_full: int = 0
    files_partial: int = 0
    cache_hits: int = 0
    cache_misses: int = 0

    def to_dict(self) -> dict:
        return {
            "compile_ms": self.compile_ms,
            "analysis_ms": self.analysis_ms,
            "files_full": self.files_full,
            "files_partial": self.files_partial,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
        }


@dataclass
class PipelineResult:
    package_root: str
    ok: bool
    metrics: PipelineMetrics
    diagnostics: dict[str, tuple[Diagnostic, ...]]
    error: Optional[str] = None


class PublishedState:
    """Immutable query surface swapped in atomically after each pipeline."""

    def __init__(
        self,
        index: SymbolIndex,
        parse_outcomes: dict[str, ParseOutcome],
        contents: dict[str, str],
        diagnostics: dict[str, tuple[Diagnostic, ...]],
    ):
        self.index = index
        self.parse_outcomes = parse_outcomes
        self.contents = contents
        self.diagnostics = diagnostics
        self._line_indexes: dict[str, LineIndex] = {}

    def line_index(self, file_id: str) -> Optional[LineIndex]:
        cached = self._line_indexes.get(file_id)
        if cached is not None:
            return cached
        text = self.contents.get(file_id)
        if text is None:
            return None
        index = LineIndex(text)
        self._line_indexes[file_id] = index
        return index


class Workspace:
    def __init__(self, toggles: Toggles = Toggles()):
        self.toggles = toggles
        self.shared_cache = WorkspaceCache()
        self._overlay_lock = threading.Lock()
        self._overlays: dict[str, str] = {}
        self.sessions: dict[str, PackageSession] = {}
        self._foreign_line_indexes: dict[str, LineIndex] = {}

    # --- document overlays -------------------------------------------------

    def open_document(self, path: str, text: str) -> None:
        with self._overlay_lock:
            self._overlays[canonical_root(path)] = text

    def change_document(self, path: str, text: str) -> None:
        self.open_document(path, text)

    def close_document(self, path: str) -> None:
        with self._overlay_lock:
            self._overlays.pop(canonical_root(path), None)

    def overlays(self) -> dict[str, str]:
        with self._overlay_lock:
            return dict(self._overlays)

    def notify_file_event(self, path: str) -> None:
        """Disk-level change (didSave / watched file): dependency
        fingerprints must be re-checked on the next pipeline run."""
        for session in self.sessions.values():
            session.mark_deps_dirty()
        self._foreign_line_indexes.clear()

    # --- sessions ------------------------------------------------------------

    def package_root_for(self, path: str) -> str:
        path = canonical_root(path)
        current = path if os.path.isdir(path) else os.path.dirname(path)
        while True:
            if os.path.exists(os.path.join(current, MANIFEST_NAME)):
                return current
            parent = os.path.dirname(current)
            if parent == current:
                return os.path.dirname(path) if not os.path.isdir(path) else path
            current = parent

    def session(self, package_root: str) -> "PackageSession":
        root = canonical_root(package_root)
        existing = self.sessions.get(root)
        if existing is None:
            existing = PackageSession(self, root)
            self.sessions[root] = existing
        return existing

    def session_for_file(self, path: str) -> "PackageSession":
        return self.session(self.package_root_for(path))

    def find_session_for_file(self, path: str) -> Optional["PackageSession"]:
        root = self.package_root_for(canonical_root(path))
        return self.sessions.get(root)

    def line_index_for(self, file_id: str) -> Optional[LineIndex]:
        """Line index for any file the index may point into, including
        dependency sources that are not open in the editor."""
        for session in self.sessions.values():
            published = session.published
            if published is not None:
                index = published.line_index(file_id)
                if index is not None:
                    return index
        cached = self._foreign_line_indexes.get(file_id)
        if cached is not None:
            return cached
        try:
            with open(file_id, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError:
            return None
        index = LineIndex(text)
        self._foreign_line_indexes[file_id] = index
        return index


class PackageSession:
    def __init__(self, workspace: Workspace, root: str):
        self.workspace = workspace
        self.root = root
        self.private_cache = WorkspaceCache()
        self.published: Optional[PublishedState] = None
        self._parse_cache: dict[str, tuple[str, ParseOutcome]] = {}
        self._last_compiled: dict[str, str] = {}
        self._snapshots: dict = {}
        # The package's exported surface from the previous run (signatures,
        # record types, inline bodies); compared each run to decide whether
        # cached snapshots are still coherent.
        self._last_interfaces: dict[ModuleId, ModuleInterface] = {}
        self._dep_identities: Optional[dict[str, CacheIdentity]] = None
        self._deps_dirty = True
        self._last_dep_surface: Optional[tuple[CacheIdentity, ...]] = None

    def mark_deps_dirty(self) -> None:
        self._deps_dirty = True

    # --- pipeline -------------------------------------------------------------

    def run_pipeline(self) -> PipelineResult:
        toggles = self.workspace.toggles
        cache = (
            self.workspace.shared_cache
            if toggles.cross_package_cache
            else self.private_cache
        )
        hits_before = cache.stats.hits
        misses_before = cache.stats.misses
        started = time.perf_counter()
        manifest_path = os.path.join(self.root, MANIFEST_NAME)

        try:
            graph, dep_roots, manifest_diags = self._resolve(manifest_path)
        except (ManifestError, GraphError) as exc:
            return self._abort(manifest_path, str(exc))

        try:
            interfaces = self._dependency_interfaces(graph, dep_roots, cache, toggles)
        except (ManifestError, GraphError, OSError) as exc:
            return self._abort(manifest_path, f"dependency build failed: {exc}")

        package = graph.nodes[self.root]
        files = self._package_files(package)
        overlays = self.workspace.overlays()
        contents: dict[str, str] = {}
        for path in files:
            if path in overlays:
                contents[path] = overlays[path]
            else:
                try:
                    with open(path, "r", encoding="utf-8") as fh:
                        contents[path] = fh.read()
                except OSError:
                    contents[path] = ""
        hashes = {path: content_hash(text) for path, text in contents.items()}

        outcomes: dict[str, ParseOutcome] = {}
        for path in files:
            cached_parse = self._parse_cache.get(path)
            if cached_parse is not None and cached_parse[0] == hashes[path]:
                outcomes[path] = cached_parse[1]
            else:
                outcome = parse_source(path, contents[path])
                self._parse_cache[path] = (hashes[path], outcome)
                outcomes[path] = outcome

        modified = {p for p in files if hashes[p] != self._last_compiled.get(p)}
        dep_surface = tuple(sorted((self._dep_identities or {}).values()))
        reusable = all(
            p in self._snapshots and self._snapshots[p].content_hash == hashes[p]
            for p in files
            if p not in modified
        )
        force_full = (
            not toggles.incremental
            or dep_surface != self._last_dep_surface
            or set(files) != set(self._last_compiled)
            or not reusable
        )
        skip = set() if force_full else set(files) - modified

        parsed_map = {p: outcomes[p].module for p in files}
        typed, check_diags = check_package(
            parsed_map, interfaces, TypingMode(frozenset(skip))
        )
        new_digests = {
            mid: digest(interface_of(m)) for mid, m in typed.modules.items()
        }
        if skip and new_digests != self._surface_digests:
            # The package's exported surface moved: cached snapshots of the
            # untouched files may reference stale declarations, so re-check
            # everything this round.
            skip = set()
            typed, check_diags = check_package(
                parsed_map, interfaces, TypingMode(frozenset())
            )
            new_digests = {
                mid: digest(interface_of(m)) for mid, m in typed.modules.items()
            }
        compile_ms = (time.perf_counter() - started) * 1000.0

        analysis_started = time.perf_counter()
        fresh_files = [p for p in files if p not in skip]
        per_file_diags: dict[str, list[Diagnostic]] = {p: [] for p in files}
        for p in fresh_files:
            per_file_diags[p].extend(outcomes[p].diagnostics)
        for diag in check_diags:
            bucket = per_file_diags.get(diag.loc.file_id)
            if bucket is not None and diag.loc.file_id not in skip:
                bucket.append(diag)
        fresh_index = symbolicate(
            typed,
            {p: outcomes[p] for p in fresh_files},
            interfaces,
            diagnostics={p: tuple(per_file_diags[p]) for p in fresh_files},
        )
        cached_snaps = {p: self._snapshots[p] for p in skip}
        index = merge_index(cached_snaps, fresh_index.files, files, interfaces)
        analysis_ms = (time.perf_counter() - analysis_started) * 1000.0

        self._last_compiled = hashes
        self._snapshots = dict(index.files)
        self._surface_digests = new_digests
        self._last_dep_surface = dep_surface

        diagnostics = {p: index.files[p].diagnostics for p in files}
        diagnostics[manifest_path] = tuple(manifest_diags)
        self.published = PublishedState(index, outcomes, contents, diagnostics)
        metrics = PipelineMetrics(
            compile_ms=compile_ms,
            analysis_ms=analysis_ms,
            files_full=len(fresh_files),
            files_partial=len(skip),
            cache_hits=cache.stats.hits - hits_before,
            cache_misses=cache.stats.misses - misses_before,
        )
        return PipelineResult(
            package_root=self.root, ok=True, metrics=metrics, diagnostics=diagnostics
        )

    def _abort(self, manifest_path: str, message: str) -> PipelineResult:
        diag = error(
            "package-error", message, SourceLocation(manifest_path, 0, 0)
        )
        return PipelineResult(
            package_root=self.root,
            ok=False,
            metrics=PipelineMetrics(),
            diagnostics={manifest_path: (diag,)},
            error=message,
        )

    def _resolve(self, manifest_path: str):
        manifest_diags: list[Diagnostic] = []
        if os.path.exists(manifest_path):
            graph = resolve_graph(manifest_path)
            manifest = graph.nodes[self.root].manifest
            if manifest is not None:
                manifest_diags.extend(manifest.warnings)
            dep_roots = [r for r in graph.topo_order if r != self.root]
        else:
            package = discover_package(self.root)
            graph = PackageGraph(
                nodes={self.root: package}, edges={self.root: ()}, topo_order=(self.root,)
            )
            dep_roots = []
        return graph, dep_roots, manifest_diags

    def _package_files(self, package: Package) -> list[str]:
        files = package.source_files()
        if package.manifest is None:
            opened = [
                p
                for p in self.workspace.overlays()
                if os.path.dirname(p) == self.root and p.endswith(".mini")
            ]
            files = sorted(set(files) | set(opened))
        return files

    def _dependency_interfaces(
        self,
        graph: PackageGraph,
        dep_roots: list[str],
        cache: WorkspaceCache,
        toggles: Toggles,
    ) -> dict[ModuleId, ModuleInterface]:
        if self._deps_dirty or self._dep_identities is None:
            self._refresh_identities(graph, dep_roots, cache)
            self._deps_dirty = False
        interfaces: dict[ModuleId, ModuleInterface] = {}
        built_any = False
        for root in dep_roots:
            identity = self._dep_identities[root]
            package = graph.nodes[root]
            builder = self._make_builder(package, identity, dict(interfaces), toggles)
            if toggles.pre_compiled_deps:
                entry, outcome = cache.get_or_build(identity, builder)
                built_any = built_any or outcome == "miss"
            else:
                entry = builder()
                built_any = True
            interfaces.update(entry.interfaces)
        if built_any:
            gc.collect()  # drop transient full-compile structures promptly
        return interfaces

    def _refresh_identities(
        self, graph: PackageGraph, dep_roots: list[str], cache: WorkspaceCache
    ) -> None:
        old = dict(self._dep_identities or {})
        # Identity covers the package's own bytes plus its dependencies'
        # identities, so a change deep in the graph re-keys every dependent.
        digests: dict[str, str] = {}
        for root in graph.topo_order:
            own = fingerprint(graph.nodes[root]).digest
            parts = [own] + sorted(digests[d] for d in graph.edges.get(root, ()))
            digests[root] = digest(parts)
        fresh = {root: (root, digests[root]) for root in dep_roots}
        for root, old_identity in old.items():
            if fresh.get(root) != old_identity:
                cache.invalidate(old_identity)
                self.workspace.shared_cache.invalidate(old_identity)
                self.private_cache.invalidate(old_identity)
        self._dep_identities = fresh

    def _make_builder(
        self,
        package: Package,
        identity: CacheIdentity,
        dep_interfaces: dict[ModuleId, ModuleInterface],
        toggles: Toggles,
    ):
        def build():
            outcomes: dict[str, ParseOutcome] = {}
            for path in package.source_files():
                with open(path, "r", encoding="utf-8") as fh:
                    outcomes[path] = parse_source(path, fh.read())
            typed, _ = check_package(
                {p: o.module for p, o in outcomes.items()},
                dep_interfaces,
                TypingMode.full(),
                origin=PackageOrigin(root=identity[0], fingerprint=identity[1]),
            )
            if toggles.lean_deps:
                return build_lean_entry(typed, identity)
            return build_full_entry(typed, outcomes, identity)

        return build

    # --- queries ---------------------------------------------------------------

    def definition_at(self, file_id: str, pos: int) -> Optional[SourceLocation]:
        if self.published is None:
            return None
        return query_definition(self.published.index, file_id, pos)

    def hover_at(self, file_id: str, pos: int) -> Optional[HoverContent]:
        if self.published is None:
            return None
        return query_hover(self.published.index, file_id, pos)

    def hover_range_at(self, file_id: str, pos: int) -> Optional[SourceLocation]:
        if self.published is None:
            return None
        return hover_range(self.published.index, file_id, pos)

    def completion_at(self, file_id: str, pos: int) -> CompletionItemSet:
        if self.published is None:
            return EMPTY_COMPLETIONS
        return query_completion(
            self.published.index, self.published.parse_outcomes, file_id, pos
        )
