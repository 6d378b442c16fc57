"""Pre-compiled dependency artifacts and the workspace-level cache.

Two entry shapes exist on purpose. :class:`LeanPackageEntry` keeps only what
dependents need to compile and navigate (record types, signatures, inline
bodies, declaration locations). :class:`FullPackageEntry` additionally pins
the parse trees and fully typed modules in memory; it exists so the memory
cost of *not* trimming cached dependencies is measurable.

The cache is shared across packages in a workspace: one identity (canonical
root path + content fingerprint) maps to at most one immutable entry, and
concurrent builders for the same identity are collapsed to a single flight.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .checker import interface_of
from .encode import canonical_bytes
from .parser import ParseOutcome
from .source import SourceLocation
from .typed_ast import ModuleId, ModuleInterface, TypedPackage

CacheIdentity = tuple[str, str]  # (canonical root path, fingerprint digest)


@dataclass(frozen=True)
class DeclLocation:
    kind: str  # "module" | "function" | "record" | "field"
    module: ModuleId
    name: str
    loc: SourceLocation


@dataclass(frozen=True)
class LeanPackageEntry:
    identity: CacheIdentity
    interfaces: dict[ModuleId, ModuleInterface]
    decl_index: dict[str, tuple[DeclLocation, ...]]  # file id -> declarations


@dataclass(frozen=True)
class FullPackageEntry:
    """Untrimmed cache entry: everything the compiler produced."""

    identity: CacheIdentity
    typed: TypedPackage
    parse_outcomes: dict[str, ParseOutcome]
    interfaces: dict[ModuleId, ModuleInterface]
    decl_index: dict[str, tuple[DeclLocation, ...]]


CacheEntry = Union[LeanPackageEntry, FullPackageEntry]


def _decl_index(interfaces: dict[ModuleId, ModuleInterface]) -> dict[str, tuple[DeclLocation, ...]]:
    by_file: dict[str, list[DeclLocation]] = {}
    for mid in sorted(interfaces, key=lambda m: (m.address, m.name)):
        iface = interfaces[mid]
        decls = by_file.setdefault(iface.file_id, [])
        decls.append(DeclLocation("module", mid, mid.name, iface.decl_loc))
        for name in sorted(iface.records):
            rec = iface.records[name]
            decls.append(DeclLocation("record", mid, name, rec.decl_loc))
            for f in rec.fields:
                decls.append(DeclLocation("field", mid, f"{name}.{f.name}", f.decl_loc))
        for name in sorted(iface.functions):
            decls.append(
                DeclLocation("function", mid, name, iface.functions[name].decl_loc)
            )
    return {fid: tuple(decls) for fid, decls in by_file.items()}


def build_lean_entry(
    typed: TypedPackage, identity: Optional[CacheIdentity] = None
) -> LeanPackageEntry:
    """Reduces a fully compiled package to its lean cached form.

    The result structurally cannot hold parse trees or non-inline bodies:
    interfaces are projections and the declaration index stores locations
    only.
    """
    if identity is None:
        origin = typed.origin
        identity = (origin.root, origin.fingerprint) if origin else ("<memory>", "")
    interfaces = {mid: interface_of(m) for mid, m in typed.modules.items()}
    return LeanPackageEntry(
        identity=identity,
        interfaces=interfaces,
        decl_index=_decl_index(interfaces),
    )


def build_full_entry(
    typed: TypedPackage,
    parse_outcomes: dict[str, ParseOutcome],
    identity: Optional[CacheIdentity] = None,
) -> FullPackageEntry:
    if identity is None:
        origin = typed.origin
        identity = (origin.root, origin.fingerprint) if origin else ("<memory>", "")
    interfaces = {mid: interface_of(m) for mid, m in typed.modules.items()}
    return FullPackageEntry(
        identity=identity,
        typed=typed,
        parse_outcomes=dict(parse_outcomes),
        interfaces=interfaces,
        decl_index=_decl_index(interfaces),
    )


def estimate_size(value) -> int:
    """Deterministic deep-size estimate: the length of the value's canonical
    serialized encoding. Portable across machines and allocator-independent."""
    return len(canonical_bytes(value))


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    invalidations: int = 0
    estimated_bytes: int = 0

    def snapshot(self) -> "CacheStats":
        return CacheStats(self.hits, self.misses, self.invalidations, self.estimated_bytes)


class WorkspaceCache:
    """Identity-keyed registry of immutable dependency entries.

    ``get_or_build`` never runs the builder while holding the registry lock;
    concurrent requests for the same identity wait for the first builder
    (single flight). A builder failure leaves the cache unchanged.
    """

    def __init__(self, measure_sizes: bool = True):
        self._lock = threading.Lock()
        self._entries: dict[CacheIdentity, CacheEntry] = {}
        self._inflight: dict[CacheIdentity, threading.Event] = {}
        self._measure_sizes = measure_sizes
        self.stats = CacheStats()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def identities(self) -> list[CacheIdentity]:
        with self._lock:
            return list(self._entries)

    def get_or_build(
        self, identity: CacheIdentity, builder: Callable[[], CacheEntry]
    ) -> tuple[CacheEntry, str]:
        while True:
            with self._lock:
                entry = self._entries.get(identity)
                if entry is not None:
                    self.stats.hits += 1
                    return entry, "hit"
                waiter = self._inflight.get(identity)
                if waiter is None:
                    event = threading.Event()
                    self._inflight[identity] = event
                    break
            waiter.wait()
        try:
            entry = builder()
        except BaseException:
            with self._lock:
                del self._inflight[identity]
            event.set()
            raise
        size = estimate_size(entry) if self._measure_sizes else 0
        with self._lock:
            self._entries[identity] = entry
            self.stats.misses += 1
            self.stats.estimated_bytes += size
            del self._inflight[identity]
        event.set()
        return entry, "miss"

    def get(self, identity: CacheIdentity) -> Optional[CacheEntry]:
        with self._lock:
            return self._entries.get(identity)

    def invalidate(self, identity: CacheIdentity) -> bool:
        with self._lock:
            entry = self._entries.pop(identity, None)
            if entry is None:
                return False
            self.stats.invalidations += 1
            if self._measure_sizes:
                self.stats.estimated_bytes = max(
                    0, self.stats.estimated_bytes - estimate_size(entry)
                )
            return True

    def invalidate_root(self, root: str) -> int:
        """Drops every entry whose identity points at ``root``."""
        removed = 0
        for identity in self.identities():
            if identity[0] == root and self.invalidate(identity):
                removed += 1
        return removed
