"""Package manifests, dependency graphs, and content fingerprints.

A package is a directory with a ``minipkg.toml`` manifest and sources under
``sources/*.mini``. The manifest format is deliberately tiny::

    name = "token"

    [dependencies]
    std = "../std"

Dependencies are path-only; there is no registry, version solving, or
lockfile. Fingerprints cover the manifest bytes plus every source file's
path and content, so any single-byte change anywhere produces a new digest.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .source import Diagnostic, SourceLocation, warning

MANIFEST_NAME = "minipkg.toml"
SOURCE_DIR = "sources"
SOURCE_SUFFIX = ".mini"


class ManifestError(Exception):
    """Malformed or unloadable manifest."""


class GraphError(Exception):
    """Unresolvable dependency graph (missing package or cycle)."""

    def __init__(self, message: str, cycle: Optional[list[str]] = None):
        super().__init__(message)
        self.cycle = cycle or []


@dataclass(frozen=True)
class PackageManifest:
    name: str
    dependencies: dict[str, str]  # dep name -> relative path
    path: str
    warnings: tuple[Diagnostic, ...] = ()


_KEY_VALUE_RE = re.compile(r'^([A-Za-z_][A-Za-z0-9_-]*)\s*=\s*"([^"]*)"\s*$')
_SECTION_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_-]*)\]\s*$")


def load_manifest(path: str) -> PackageManifest:
    """Parses a ``minipkg.toml``. Unknown keys warn; duplicate dependency
    names and syntax errors raise :class:`ManifestError`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    name: Optional[str] = None
    deps: dict[str, str] = {}
    warnings_list: list[Diagnostic] = []
    section = ""
    offset = 0
    for lineno, raw in enumerate(lines, start=1):
        line_start = offset
        offset += len(raw.encode("utf-8")) + 1
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            if section != "dependencies":
                warnings_list.append(
                    warning(
                        "manifest-unknown",
                        f"ignoring unknown section [{section}]",
                        SourceLocation(path, line_start, offset - 1),
                    )
                )
            continue
        m = _KEY_VALUE_RE.match(line)
        if m is None:
            raise ManifestError(f"{path}:{lineno}: malformed line: {raw!r}")
        key, value = m.group(1), m.group(2)
        if section == "":
            if key == "name":
                name = value
            else:
                warnings_list.append(
                    warning(
                        "manifest-unknown",
                        f"ignoring unknown key '{key}'",
                        SourceLocation(path, line_start, offset - 1),
                    )
                )
        elif section == "dependencies":
            if key in deps:
                raise ManifestError(
                    f"{path}:{lineno}: duplicate dependency '{key}'"
                )
            deps[key] = value
    if name is None:
        raise ManifestError(f"{path}: manifest is missing 'name'")
    return PackageManifest(
        name=name, dependencies=deps, path=path, warnings=tuple(warnings_list)
    )


@dataclass(frozen=True)
class Package:
    root: str  # canonical absolute path
    manifest: Optional[PackageManifest]

    @property
    def name(self) -> str:
        if self.manifest is not None:
            return self.manifest.name
        return os.path.basename(self.root)

    def source_files(self) -> list[str]:
        src = os.path.join(self.root, SOURCE_DIR)
        if not os.path.isdir(src):
            return []
        return sorted(
            os.path.join(src, f)
            for f in os.listdir(src)
            if f.endswith(SOURCE_SUFFIX)
        )


def canonical_root(path: str) -> str:
    return os.path.realpath(os.path.abspath(path))


def discover_package(root: str) -> Package:
    root = canonical_root(root)
    manifest_path = os.path.join(root, MANIFEST_NAME)
    manifest = load_manifest(manifest_path) if os.path.exists(manifest_path) else None
    return Package(root=root, manifest=manifest)


@dataclass(frozen=True)
class PackageGraph:
    nodes: dict[str, Package]  # root -> package
    edges: dict[str, tuple[str, ...]]  # root -> dependency roots
    topo_order: tuple[str, ...]

    def dependencies_of(self, root: str) -> tuple[str, ...]:
        return self.edges.get(canonical_root(root), ())


def resolve_graph(root_manifest_path: str) -> PackageGraph:
    """Loads the full transitive dependency graph below one manifest.

    The topological order is deterministic: among ready nodes the package
    with the lexicographically smallest name (then root path) goes first.
    Cycles raise :class:`GraphError` carrying the offending path.
    """
    root_dir = canonical_root(os.path.dirname(root_manifest_path))
    nodes: dict[str, Package] = {}
    edges: dict[str, tuple[str, ...]] = {}

    def load(root: str, stack: list[str]) -> None:
        if root in nodes:
            return
        if root in stack:
            names = [os.path.basename(r) for r in stack[stack.index(root) :]] + [
                os.path.basename(root)
            ]
            raise GraphError(
                "dependency cycle: " + " -> ".join(names), cycle=names
            )
        pkg = discover_package(root)
        if pkg.manifest is None:
            raise GraphError(f"no {MANIFEST_NAME} in {root}")
        stack.append(root)
        dep_roots = []
        for dep_name, rel in pkg.manifest.dependencies.items():
            dep_root = canonical_root(os.path.join(root, rel))
            if not os.path.isdir(dep_root):
                raise GraphError(
                    f"dependency '{dep_name}' of {pkg.name} not found at {dep_root}"
                )
            dep_roots.append(dep_root)
            load(dep_root, stack)
        stack.pop()
        nodes[root] = pkg
        edges[root] = tuple(dep_roots)

    load(root_dir, [])
    return PackageGraph(nodes=nodes, edges=edges, topo_order=_topo(nodes, edges))


def _topo(nodes: dict[str, Package], edges: dict[str, tuple[str, ...]]) -> tuple[str, ...]:
    indegree = {root: 0 for root in nodes}
    dependents: dict[str, list[str]] = {root: [] for root in nodes}
    for root, deps in edges.items():
        for dep in deps:
            indegree[root] += 1
            dependents[dep].append(root)
    ready = sorted(
        (r for r, d in indegree.items() if d == 0),
        key=lambda r: (nodes[r].name, r),
    )
    order: list[str] = []
    while ready:
        current = ready.pop(0)
        order.append(current)
        changed = False
        for dependent in dependents[current]:
            indegree[dependent] -= 1
            if indegree[dependent] == 0:
                ready.append(dependent)
                changed = True
        if changed:
            ready.sort(key=lambda r: (nodes[r].name, r))
    return tuple(order)


@dataclass(frozen=True)
class PackageFingerprint:
    digest: str  # sha256 hex over manifest bytes + sorted (path, content hash)

    def short(self) -> str:
        return self.digest[:12]


def fingerprint(package: Package) -> PackageFingerprint:
    h = hashlib.sha256()
    manifest_path = os.path.join(package.root, MANIFEST_NAME)
    if os.path.exists(manifest_path):
        with open(manifest_path, "rb") as fh:
            h.update(hashlib.sha256(fh.read()).digest())
    for path in package.source_files():
        rel = os.path.relpath(path, package.root)
        with open(path, "rb") as fh:
            content_digest = hashlib.sha256(fh.read()).hexdigest()
        h.update(rel.encode("utf-8"))
        h.update(b"\0")
        h.update(content_digest.encode("ascii"))
        h.update(b"\0")
    return PackageFingerprint(digest=h.hexdigest())


def detect_modified(
    open_docs: Mapping[str, str],
    package: Package,
    last_compiled: Mapping[str, str],
) -> set[str]:
    """File ids of this package whose in-editor overlay hash differs from the
    content hash recorded at the last compile."""
    files = set(package.source_files())
    modified: set[str] = set()
    for path, text in open_docs.items():
        if path not in files:
            continue
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if digest != last_compiled.get(path):
            modified.add(path)
    return modified
