"""Manifest parsing, dependency graph resolution, fingerprints, and modified
file detection."""

import os

import pytest

from conftest import write_package
from minimove.packages import (
    GraphError,
    ManifestError,
    detect_modified,
    discover_package,
    fingerprint,
    load_manifest,
    resolve_graph,
)

MOD = "module 0x1::m { fun f(): u64 { 1 } }"


def manifest_file(tmp_path, text):
    path = tmp_path / "minipkg.toml"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_manifest_zero_deps(tmp_path):
    m = load_manifest(manifest_file(tmp_path, 'name = "solo"\n'))
    assert m.name == "solo"
    assert m.dependencies == {}
    assert m.warnings == ()


def test_manifest_two_deps(tmp_path):
    text = 'name = "app"\n\n[dependencies]\nstd = "../std"\ntoken = "../token"\n'
    m = load_manifest(manifest_file(tmp_path, text))
    assert m.dependencies == {"std": "../std", "token": "../token"}


def test_manifest_duplicate_dependency_names_key(tmp_path):
    text = 'name = "app"\n[dependencies]\nstd = "../std"\nstd = "../other"\n'
    with pytest.raises(ManifestError, match="duplicate dependency 'std'"):
        load_manifest(manifest_file(tmp_path, text))


def test_manifest_unknown_key_warns(tmp_path):
    m = load_manifest(manifest_file(tmp_path, 'name = "app"\nedition = "2024"\n'))
    assert len(m.warnings) == 1
    assert m.warnings[0].severity == "warning"
    assert "edition" in m.warnings[0].message


def test_manifest_missing_file_and_name(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(str(tmp_path / "absent.toml"))
    with pytest.raises(ManifestError, match="missing 'name'"):
        load_manifest(manifest_file(tmp_path, '[dependencies]\nstd = "../std"\n'))


def test_manifest_malformed_line(tmp_path):
    with pytest.raises(ManifestError, match="malformed"):
        load_manifest(manifest_file(tmp_path, "name =\n"))


# --- graph -------------------------------------------------------------------


def test_graph_single_node(tmp_path):
    root = write_package(tmp_path, "solo", {"m": MOD})
    graph = resolve_graph(os.path.join(root, "minipkg.toml"))
    assert graph.topo_order == (root,)
    assert graph.edges[root] == ()


def test_graph_topo_order_deterministic_diamond(tmp_path):
    std = write_package(tmp_path, "std", {"m": MOD})
    token = write_package(
        tmp_path, "token", {"m": "module 0x2::t { fun f(): u64 { 1 } }"},
        deps={"std": "../std"},
    )
    root = write_package(
        tmp_path, "root", {"m": "module 0x3::r { fun f(): u64 { 1 } }"},
        deps={"std": "../std", "token": "../token"},
    )
    graph = resolve_graph(os.path.join(root, "minipkg.toml"))
    names = [graph.nodes[r].name for r in graph.topo_order]
    assert names == ["std", "token", "root"]
    for _ in range(5):
        again = resolve_graph(os.path.join(root, "minipkg.toml"))
        assert again.topo_order == graph.topo_order


def test_graph_cycle_reports_path(tmp_path):
    a = write_package(tmp_path, "a", {"m": MOD}, deps={"b": "../b"})
    write_package(tmp_path, "b", {"m": MOD}, deps={"a": "../a"})
    with pytest.raises(GraphError) as exc:
        resolve_graph(os.path.join(a, "minipkg.toml"))
    assert exc.value.cycle[0] == exc.value.cycle[-1]
    assert set(exc.value.cycle) == {"a", "b"}


def test_graph_missing_dependency(tmp_path):
    a = write_package(tmp_path, "a", {"m": MOD}, deps={"ghost": "../ghost"})
    with pytest.raises(GraphError, match="ghost"):
        resolve_graph(os.path.join(a, "minipkg.toml"))


# --- fingerprints ----------------------------------------------------------------


def test_fingerprint_stable_and_sensitive(tmp_path):
    root = write_package(tmp_path, "pkg", {"m": MOD})
    package = discover_package(root)
    fp1 = fingerprint(package)
    fp2 = fingerprint(package)
    assert fp1 == fp2

    source = os.path.join(root, "sources", "m.mini")
    original = open(source).read()
    with open(source, "w") as fh:
        fh.write(original.replace("0x1", "0x2"))
    assert fingerprint(package) != fp1

    with open(source, "w") as fh:
        fh.write(original)
    assert fingerprint(package) == fp1


def test_fingerprint_rename_changes_digest(tmp_path):
    root = write_package(tmp_path, "pkg", {"m": MOD})
    package = discover_package(root)
    fp1 = fingerprint(package)
    os.rename(
        os.path.join(root, "sources", "m.mini"),
        os.path.join(root, "sources", "renamed.mini"),
    )
    assert fingerprint(discover_package(root)) != fp1


# --- modified detection --------------------------------------------------------------


def test_detect_modified(tmp_path):
    import hashlib

    root = write_package(
        tmp_path,
        "pkg",
        {f"m{i}": f"module 0x1::m{i} {{ fun f(): u64 {{ {i} }} }}" for i in range(5)},
    )
    package = discover_package(root)
    files = package.source_files()
    last = {
        p: hashlib.sha256(open(p, "rb").read()).hexdigest() for p in files
    }

    assert detect_modified({}, package, last) == set()

    edited = files[2]
    original = open(edited).read()
    assert detect_modified({edited: original + "// x\n"}, package, last) == {edited}
    # revert to original bytes: no longer modified
    assert detect_modified({edited: original}, package, last) == set()
    # overlays outside the package are ignored
    assert detect_modified({"/elsewhere/x.mini": "zzz"}, package, last) == set()
