"""Lean dependency entries, size estimation, and the shared workspace cache
(hit/miss accounting, invalidation, single-flight builds)."""

import threading
import time

import pytest

from conftest import check_sources
from minimove.depcache import (
    FullPackageEntry,
    LeanPackageEntry,
    WorkspaceCache,
    build_full_entry,
    build_lean_entry,
    estimate_size,
)
from minimove.encode import canonical_bytes

RECORDS_ONLY = """
    module 0x1::shapes {
        record Point { x: u64, y: u64 }
        record Line { a: u64, b: u64 }
    }
"""

MIXED = """
    module 0x1::mixed {{
        record Data {{ v: u64 }}
        public inline fun only_inline(x: u64): u64 {{ x + 1 }}
    {funs}
    }}
"""


def _typed(sources):
    typed, diags, outcomes = check_sources(sources)
    assert diags == []
    return typed, outcomes


def test_records_only_entry_has_zero_bodies():
    typed, _ = _typed({"shapes.mini": RECORDS_ONLY})
    entry = build_lean_entry(typed, ("root", "fp"))
    iface = next(iter(entry.interfaces.values()))
    assert set(iface.records) == {"Point", "Line"}
    assert iface.inline_bodies == {}
    assert iface.functions == {}


def test_one_inline_of_ten_retained():
    funs = "\n".join(
        f"    public fun plain{i}(x: u64): u64 {{ x + {i} }}" for i in range(9)
    )
    typed, _ = _typed({"mixed.mini": MIXED.format(funs=funs)})
    entry = build_lean_entry(typed, ("root", "fp"))
    iface = next(iter(entry.interfaces.values()))
    assert len(iface.functions) == 10
    assert set(iface.inline_bodies) == {"only_inline"}


def test_lean_entry_structurally_lean():
    typed, outcomes = _typed({"shapes.mini": RECORDS_ONLY})
    lean = build_lean_entry(typed, ("root", "fp"))
    full = build_full_entry(typed, outcomes, ("root", "fp"))
    assert not hasattr(lean, "typed") and not hasattr(lean, "parse_outcomes")
    assert isinstance(full, FullPackageEntry) and isinstance(lean, LeanPackageEntry)
    assert estimate_size(lean) < estimate_size(full)


def test_decl_index_covers_declarations():
    typed, _ = _typed({"shapes.mini": RECORDS_ONLY})
    entry = build_lean_entry(typed, ("root", "fp"))
    decls = entry.decl_index["shapes.mini"]
    kinds = sorted(d.kind for d in decls)
    assert kinds == ["field", "field", "field", "field", "module", "record", "record"]


def test_estimate_size_deterministic_and_monotone():
    typed0, _ = _typed({"shapes.mini": RECORDS_ONLY})
    e1 = build_lean_entry(typed0, ("root", "fp"))
    e2 = build_lean_entry(typed0, ("root", "fp"))
    assert estimate_size(e1) == estimate_size(e2)

    one_more = RECORDS_ONLY.replace(
        "record Line", "public fun extra(x: u64): u64 { x }\n        record Line"
    )
    typed1, _ = _typed({"shapes.mini": one_more})
    bigger = build_lean_entry(typed1, ("root", "fp"))
    assert estimate_size(bigger) > estimate_size(e1)


# --- cache behavior ----------------------------------------------------------------


def _entry(tag="a"):
    typed, _ = _typed(
        {f"{tag}.mini": f"module 0x9::{tag} {{ fun f(): u64 {{ 1 }} }}"}
    )
    return build_lean_entry(typed, ("root-" + tag, "fp-" + tag))


def test_get_or_build_miss_then_hit_same_object():
    cache = WorkspaceCache()
    calls = []

    def builder():
        calls.append(1)
        return _entry()

    identity = ("root-a", "fp-a")
    first, outcome1 = cache.get_or_build(identity, builder)
    second, outcome2 = cache.get_or_build(identity, builder)
    assert (outcome1, outcome2) == ("miss", "hit")
    assert first is second
    assert len(calls) == 1
    assert (cache.stats.hits, cache.stats.misses) == (1, 1)


def test_changed_fingerprint_is_new_identity_old_retained():
    cache = WorkspaceCache()
    cache.get_or_build(("root", "fp1"), lambda: _entry("a"))
    entry2, outcome = cache.get_or_build(("root", "fp2"), lambda: _entry("b"))
    assert outcome == "miss"
    assert len(cache) == 2  # old entry retained until invalidated
    assert cache.get(("root", "fp1")) is not None


def test_invalidate():
    cache = WorkspaceCache()
    identity = ("root", "fp")
    cache.get_or_build(identity, _entry)
    assert cache.invalidate(identity) is True
    assert cache.invalidate(identity) is False
    _, outcome = cache.get_or_build(identity, _entry)
    assert outcome == "miss"
    assert cache.stats.invalidations == 1


def test_builder_failure_leaves_cache_unchanged():
    cache = WorkspaceCache()

    def failing():
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        cache.get_or_build(("root", "fp"), failing)
    assert len(cache) == 0
    _, outcome = cache.get_or_build(("root", "fp"), _entry)
    assert outcome == "miss"


def test_single_flight_under_concurrency():
    cache = WorkspaceCache()
    calls = []
    results = []

    def slow_builder():
        calls.append(1)
        time.sleep(0.1)
        return _entry()

    def worker():
        entry, _ = cache.get_or_build(("root", "fp"), slow_builder)
        results.append(entry)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(calls) == 1
    assert all(r is results[0] for r in results)
    assert cache.stats.misses == 1
    assert cache.stats.hits == 7


def test_sharing_k_packages_d_identities():
    cache = WorkspaceCache()
    built = []

    def builder_for(tag):
        def build():
            built.append(tag)
            return _entry(tag)

        return build

    # 4 dependents whose dependency sets jointly contain 2 distinct identities
    for dependent in range(4):
        for tag in ("a", "b"):
            cache.get_or_build(("root-" + tag, "fp"), builder_for(tag))
    assert sorted(built) == ["a", "b"]
    assert len(cache) == 2
    assert cache.stats.misses == 2
    assert cache.stats.hits == 6


def test_entry_bytes_immutable_while_cached():
    cache = WorkspaceCache()
    identity = ("root", "fp")
    entry, _ = cache.get_or_build(identity, _entry)
    before = canonical_bytes(entry)
    cache.get_or_build(identity, _entry)
    cache.get_or_build(("other", "fp"), lambda: _entry("b"))
    cache.invalidate(("other", "fp"))
    assert canonical_bytes(cache.get(identity)) == before


def test_estimated_bytes_tracks_entries():
    cache = WorkspaceCache()
    assert cache.stats.estimated_bytes == 0
    entry, _ = cache.get_or_build(("root", "fp"), _entry)
    assert cache.stats.estimated_bytes == estimate_size(entry)
    cache.invalidate(("root", "fp"))
    assert cache.stats.estimated_bytes == 0
