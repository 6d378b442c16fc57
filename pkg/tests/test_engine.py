"""Pipeline tests: modified-file detection, skip-bodies accounting, cache
sharing across sessions, dependency invalidation, and on/off equivalence."""

import os

import pytest

from conftest import STD_SRC, write_package
from minimove.encode import canonical_bytes
from minimove.engine import Toggles, Workspace

USER_MODULES = {
    f"m{i}": f"""
        module 0x2::m{i} {{
            use 0x1::std;
            public fun f{i}(a: u64, b: u64): u64 {{
                let low = std::min(a, b);
                let d = std::double(low);
                low + d + {i}
            }}
        }}
    """
    for i in range(4)
}


@pytest.fixture
def workspace_dirs(tmp_path):
    std_root = write_package(tmp_path, "std", {"std": STD_SRC})
    user_root = write_package(tmp_path, "user", USER_MODULES, deps={"std": "../std"})
    return std_root, user_root


def test_first_run_full_then_comment_edit_is_partial(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    first = session.run_pipeline()
    assert first.ok
    assert (first.metrics.files_full, first.metrics.files_partial) == (4, 0)
    assert first.metrics.cache_misses == 1  # std built once

    edit = os.path.join(user_root, "sources", "m1.mini")
    base = open(edit).read()
    ws.open_document(edit, base + "// trailing comment\n")
    second = session.run_pipeline()
    assert (second.metrics.files_full, second.metrics.files_partial) == (1, 3)
    assert second.metrics.cache_misses == 0
    assert canonical_bytes(first.diagnostics) == canonical_bytes(second.diagnostics)


def test_metrics_invariant_full_plus_partial_is_file_count(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    for _ in range(3):
        result = session.run_pipeline()
        assert result.metrics.files_full + result.metrics.files_partial == 4


def test_type_error_edit_adds_one_diagnostic_to_that_file(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    before = session.run_pipeline()
    edit = os.path.join(user_root, "sources", "m2.mini")
    base = open(edit).read()
    ws.open_document(edit, base.replace("low + d + 2", "low + d + true"))
    after = session.run_pipeline()
    for fid in after.diagnostics:
        if fid == edit:
            assert len(after.diagnostics[fid]) == len(before.diagnostics[fid]) + 1
        else:
            assert after.diagnostics[fid] == before.diagnostics[fid]


def test_incremental_off_checks_everything(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles(incremental=False))
    session = ws.session(user_root)
    session.run_pipeline()
    edit = os.path.join(user_root, "sources", "m1.mini")
    ws.open_document(edit, open(edit).read() + "// x\n")
    result = session.run_pipeline()
    assert (result.metrics.files_full, result.metrics.files_partial) == (4, 0)


def test_pre_compiled_off_rebuilds_deps_every_run(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles(pre_compiled_deps=False))
    session = ws.session(user_root)
    first = session.run_pipeline()
    second = session.run_pipeline()
    # cache untouched in this mode
    assert first.metrics.cache_misses == 0 and second.metrics.cache_misses == 0
    assert len(ws.shared_cache) == 0


def test_signature_change_forces_full_recheck(workspace_dirs):
    _, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    session.run_pipeline()
    edit = os.path.join(user_root, "sources", "m0.mini")
    base = open(edit).read()
    # new public function changes the module's exported surface
    ws.open_document(
        edit, base.replace("public fun f0", "public fun extra(): u64 { 1 }\n    public fun f0")
    )
    result = session.run_pipeline()
    assert (result.metrics.files_full, result.metrics.files_partial) == (4, 0)

    # a later body-only edit goes back to the fast path
    current = base.replace(
        "public fun f0", "public fun extra(): u64 { 1 }\n    public fun f0"
    )
    ws.open_document(edit, current + "// tick\n")
    again = session.run_pipeline()
    assert (again.metrics.files_full, again.metrics.files_partial) == (1, 3)


def test_cross_package_sharing_one_builder_run(workspace_dirs, tmp_path):
    std_root, user_root = workspace_dirs
    other_root = write_package(
        tmp_path, "other", {"o": """
            module 0x3::o {
                public fun g(a: u64): u64 { 0x1::std::double(a) }
            }
        """}, deps={"std": "../std"},
    )
    ws = Workspace(Toggles())
    r1 = ws.session(user_root).run_pipeline()
    r2 = ws.session(other_root).run_pipeline()
    assert r1.metrics.cache_misses == 1
    assert r2.metrics.cache_misses == 0 and r2.metrics.cache_hits == 1
    assert len(ws.shared_cache) == 1


def test_cross_package_off_builds_per_session(workspace_dirs, tmp_path):
    std_root, user_root = workspace_dirs
    other_root = write_package(
        tmp_path, "other", {"o": """
            module 0x3::o {
                public fun g(a: u64): u64 { 0x1::std::double(a) }
            }
        """}, deps={"std": "../std"},
    )
    ws = Workspace(Toggles(cross_package_cache=False))
    ws.session(user_root).run_pipeline()
    ws.session(other_root).run_pipeline()
    assert len(ws.shared_cache) == 0
    assert len(ws.session(user_root).private_cache) == 1
    assert len(ws.session(other_root).private_cache) == 1


def test_dep_disk_edit_rebuilds_dependency_once(workspace_dirs):
    std_root, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    session.run_pipeline()
    assert ws.shared_cache.stats.misses == 1

    std_file = os.path.join(std_root, "sources", "std.mini")
    text = open(std_file).read()
    with open(std_file, "w") as fh:
        fh.write(text + "// dep changed\n")
    ws.notify_file_event(std_file)

    result = session.run_pipeline()
    assert result.metrics.cache_misses == 1  # rebuilt exactly once
    assert ws.shared_cache.stats.invalidations == 1
    again = session.run_pipeline()
    assert again.metrics.cache_misses == 0


def test_dep_signature_change_updates_dependent_diagnostics(workspace_dirs):
    std_root, user_root = workspace_dirs
    ws_on = Workspace(Toggles())
    ws_off = Workspace(Toggles.all_off())
    on = ws_on.session(user_root)
    off = ws_off.session(user_root)
    on.run_pipeline()
    off.run_pipeline()

    std_file = os.path.join(std_root, "sources", "std.mini")
    text = open(std_file).read()
    with open(std_file, "w") as fh:
        fh.write(text.replace("public fun min", "fun min"))
    ws_on.notify_file_event(std_file)
    ws_off.notify_file_event(std_file)

    r_on = on.run_pipeline()
    r_off = off.run_pipeline()
    assert canonical_bytes(r_on.diagnostics) == canonical_bytes(r_off.diagnostics)
    total = sum(len(v) for v in r_on.diagnostics.values())
    assert total == 4  # every module calls the now-private min


def test_manifest_error_aborts_with_manifest_diagnostic(tmp_path):
    root = write_package(tmp_path, "broken", {"m": "module 0x1::m { fun f(): u64 { 1 } }"},
                         deps={"ghost": "../ghost"})
    ws = Workspace(Toggles())
    result = ws.session(root).run_pipeline()
    assert not result.ok
    manifest = os.path.join(root, "minipkg.toml")
    assert manifest in result.diagnostics
    assert result.diagnostics[manifest][0].severity == "error"


def test_queries_through_session(workspace_dirs):
    std_root, user_root = workspace_dirs
    ws = Workspace(Toggles())
    session = ws.session(user_root)
    session.run_pipeline()
    fid = os.path.join(user_root, "sources", "m1.mini")
    text = open(fid).read()
    pos = text.index("min(a, b)")
    loc = session.definition_at(fid, pos)
    assert loc is not None and loc.file_id.endswith("std.mini")
    hover = session.hover_at(fid, pos)
    assert hover.type_text == "public fun min(a: u64, b: u64): u64"
    completion = session.completion_at(fid, text.index("std::") + len("std::"))
    assert "min" in completion.labels()


def test_on_off_equivalence_over_edit_script(workspace_dirs):
    _, user_root = workspace_dirs
    ws_on, ws_off = Workspace(Toggles()), Workspace(Toggles.all_off())
    on, off = ws_on.session(user_root), ws_off.session(user_root)
    edit = os.path.join(user_root, "sources", "m3.mini")
    base = open(edit).read()
    script = [
        base + "// tick\n",
        base.replace("low + d + 3", "low + d + true"),
        base.replace("public fun f3", "fun f3"),
        base,
    ]
    on.run_pipeline()
    off.run_pipeline()
    for text in script:
        ws_on.open_document(edit, text)
        ws_off.open_document(edit, text)
        r_on, r_off = on.run_pipeline(), off.run_pipeline()
        assert canonical_bytes(r_on.diagnostics) == canonical_bytes(r_off.diagnostics)
        assert canonical_bytes(on.published.index) == canonical_bytes(off.published.index)
