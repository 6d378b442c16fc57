"""Symbolication and query tests: use→definition maps, snapshot merging
(the central incremental-correctness oracle), hover goldens, completions."""

import textwrap

import pytest

from conftest import check_sources, parse_modules
from minimove.analysis import (
    MergeError,
    merge_index,
    query_completion,
    query_definition,
    query_hover,
    symbolicate,
)
from minimove.checker import check_package, interface_of
from minimove.depcache import build_lean_entry
from minimove.encode import canonical_bytes
from minimove.typed_ast import ModuleId

STD = """
    module 0x1::std {
        record Balance { amount: u64, frozen: bool }
        public fun min(a: u64, b: u64): u64 { if a < b { a } else { b } }
        public inline fun double(x: u64): u64 { x + x }
        fun hidden(x: u64): u64 { x }
    }
"""

USER = """
    module 0x2::user {
        use 0x1::std;
        record Point { x: u64, y: u64 }
        public fun get_x(p: Point): u64 { p.x }
        fun go(a: u64, b: u64): u64 {
            let low = std::min(a, b);
            low + 1
        }
    }
"""


def build_world(extra_user=None):
    """Compiles std as a dependency and the user package against it; returns
    (index, outcomes, dep interfaces, texts)."""
    typed_std, diags, std_outcomes = check_sources({"std.mini": STD})
    assert diags == []
    deps = {m: interface_of(mod) for m, mod in typed_std.modules.items()}

    sources = {"user.mini": USER}
    if extra_user:
        sources.update(extra_user)
    outcomes = parse_modules(sources)
    typed, check_diags = check_package(
        {f: o.module for f, o in outcomes.items()}, deps
    )
    per_file = {
        f: tuple(
            list(outcomes[f].diagnostics)
            + [d for d in check_diags if d.loc.file_id == f]
        )
        for f in outcomes
    }
    index = symbolicate(typed, outcomes, deps, per_file)
    texts = {f: textwrap.dedent(s) for f, s in sources.items()}
    return index, outcomes, deps, texts, typed


def test_local_variable_use_maps_to_decl():
    index, _, _, texts, _ = build_world()
    text = texts["user.mini"]
    use_pos = text.index("low + 1")
    decl_pos = text.index("let low") + len("let ")
    loc = query_definition(index, "user.mini", use_pos)
    assert loc is not None
    assert (loc.start, loc.end) == (decl_pos, decl_pos + 3)
    hover = query_hover(index, "user.mini", use_pos)
    assert hover.type_text == "u64"
    assert hover.kind == "variable"


def test_dependency_function_use_maps_into_dep_source():
    index, _, deps, texts, _ = build_world()
    text = texts["user.mini"]
    std_text = textwrap.dedent(STD)
    pos = text.index("min(a, b)")
    loc = query_definition(index, "user.mini", pos)
    assert loc.file_id == "std.mini"
    # equals the location captured when std was compiled
    std_mid = ModuleId(1, "std")
    assert loc == deps[std_mid].functions["min"].decl_loc
    assert std_text[loc.start : loc.end] == "min"


def test_use_decl_maps_to_module_definition():
    index, _, _, texts, _ = build_world()
    text = texts["user.mini"]
    pos = text.index("use 0x1::std;") + len("use 0x1::")
    loc = query_definition(index, "user.mini", pos)
    assert loc.file_id == "std.mini"
    hover = query_hover(index, "user.mini", pos)
    assert hover.kind == "module"
    assert hover.type_text == "module 0x1::std"


def test_hover_function_golden_rendering():
    index, _, _, texts, _ = build_world()
    pos = texts["user.mini"].index("min(a, b)")
    hover = query_hover(index, "user.mini", pos)
    assert hover.type_text == "public fun min(a: u64, b: u64): u64"
    assert hover.render() == "public fun min(a: u64, b: u64): u64"


def test_hover_variable_field_record_renderings():
    index, _, _, texts, _ = build_world()
    text = texts["user.mini"]
    field_pos = text.index("p.x") + 2
    hover = query_hover(index, "user.mini", field_pos)
    assert (hover.kind, hover.type_text) == ("field", "u64")
    assert hover.render() == "x: u64"

    record_pos = text.index("p: Point") + 3
    hover = query_hover(index, "user.mini", record_pos)
    assert (hover.kind, hover.type_text) == ("record", "record Point")


def test_hover_on_whitespace_and_unresolved_is_none():
    broken = {
        "broken.mini": """
            module 0x3::broken {
                fun f(): u64 { mystery }
            }
        """
    }
    index, _, _, texts, _ = build_world(broken)
    text = texts["broken.mini"]
    assert query_hover(index, "broken.mini", text.index("mystery")) is None
    assert query_definition(index, "user.mini", 0) is None


def test_use_defs_sorted_and_non_overlapping():
    index, _, _, _, _ = build_world()
    for snap in index.files.values():
        previous_end = -1
        for loc, _ in snap.use_defs:
            assert loc.start >= previous_end
            previous_end = loc.end


def test_positional_totality():
    index, outcomes, _, texts, _ = build_world()
    length = outcomes["user.mini"].byte_len
    for pos in range(0, length + 1):
        query_definition(index, "user.mini", pos)
        query_hover(index, "user.mini", pos)
        query_completion(index, outcomes, "user.mini", pos)


# --- merge ---------------------------------------------------------------------


def test_merge_all_fresh_equals_symbolicate():
    index, outcomes, deps, _, typed = build_world()
    merged = merge_index({}, index.files, list(index.files), deps)
    assert canonical_bytes(merged) == canonical_bytes(index)


def test_merge_cached_plus_fresh_equals_full_symbolicate():
    """The central incremental-correctness check: recompiling only one file
    and reusing cached snapshots must equal full symbolication."""
    extra = {
        f"extra{i}.mini": f"""
            module 0x2::extra{i} {{
                public fun e{i}(x: u64): u64 {{ x + {i} }}
            }}
        """
        for i in range(6)
    }
    full_index, outcomes, deps, _, typed = build_world(extra)
    target = "extra3.mini"
    fresh_only = symbolicate(
        typed,
        {target: outcomes[target]},
        deps,
        {target: full_index.files[target].diagnostics},
    )
    cached = {f: s for f, s in full_index.files.items() if f != target}
    merged = merge_index(cached, fresh_only.files, list(full_index.files), deps)
    assert canonical_bytes(merged) == canonical_bytes(full_index)


def test_merge_rejects_overlap_and_gap():
    index, outcomes, deps, _, _ = build_world()
    files = list(index.files)
    with pytest.raises(MergeError, match="both"):
        merge_index(index.files, index.files, files, deps)
    with pytest.raises(MergeError, match="coverage"):
        merge_index({}, {}, files, deps)


# --- completion -------------------------------------------------------------------


def completion_world(body_line):
    src = {
        "comp.mini": f"""
            module 0x2::comp {{
                use 0x1::std;
                record Point {{ x: u64, y: u64 }}
                public fun get_x(p: Point): u64 {{ p.x }}
                fun probe(p: Point, left: u64, len: u64, max: u64): u64 {{
                    {body_line}
                }}
            }}
        """
    }
    index, outcomes, deps, texts, _ = build_world(src)
    return index, outcomes, texts["comp.mini"]


def test_completion_after_dot_lists_record_fields():
    index, outcomes, text = completion_world("let q = p.")
    pos = text.index("= p.") + len("= p.")
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert items.source_context == "dot-access"
    assert items.items == (("x", "field", "u64"), ("y", "field", "u64"))


def test_completion_path_access_public_members_of_dep():
    index, outcomes, text = completion_world("let q = std::")
    pos = text.index("std::") + len("std::")
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert items.source_context == "path-access"
    labels = items.labels()
    # all public members of std, enumerated independently from its lean entry
    typed_std, _, _ = check_sources({"std.mini": STD})
    entry = build_lean_entry(typed_std, ("std", "fp"))
    iface = entry.interfaces[ModuleId(1, "std")]
    expected = sorted(
        [n for n, s in iface.functions.items() if s.visibility == "public"]
        + list(iface.records)
    )
    assert list(labels) == expected
    assert "hidden" not in labels


def test_completion_full_path_access():
    index, outcomes, text = completion_world("let q = 0x1::std::")
    pos = text.index("std::", text.index("0x1::")) + len("std::")
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert "min" in items.labels()


def test_completion_identifier_prefix_filters_scope():
    index, outcomes, text = completion_world("let q = le")
    pos = text.index("= le") + len("= le")
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert items.source_context == "identifier-prefix"
    assert items.labels() == ("left", "len")


def test_completion_unknown_receiver_empty():
    index, outcomes, text = completion_world("let q = zz.")
    pos = text.index("zz.") + 3
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert items.items == ()


def test_completion_in_unterminated_statement_sees_receiver_type():
    # ``let q = p.`` is incomplete *and* the block has errors, yet the
    # receiver's type must still come through the snapshot.
    index, outcomes, text = completion_world("let q = p.")
    pos = text.index("= p.") + len("= p.")
    items = query_completion(index, outcomes, "comp.mini", pos)
    assert items.labels() == ("x", "y")
