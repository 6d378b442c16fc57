"""Parser tests: clean parses, panic-mode recovery with error locality,
incomplete constructs, completion contexts, and totality under fuzzing."""

import dataclasses
import textwrap

from hypothesis import given, settings
from hypothesis import strategies as st

from minimove import ast
from minimove.encode import canonical_bytes
from minimove.lexer import KIND_PUNCT
from minimove.parser import locate_access_context, parse_source

THREE_FUNS = textwrap.dedent(
    """\
    module 0x1::demo {
        fun first(a: u64): u64 { a + 1 }
        fun second(a: u64, b: u64): u64 { a * b }
        fun third(a: u64): u64 { second(a, 2) }
    }
    """
)


def parse(text, fid="t.mini"):
    return parse_source(fid, textwrap.dedent(text))


def test_clean_module_three_functions():
    out = parse(THREE_FUNS)
    assert out.diagnostics == ()
    assert out.module is not None
    assert [type(i).__name__ for i in out.module.items] == ["FunDecl"] * 3
    assert [i.name for i in out.module.items] == ["first", "second", "third"]


def test_module_header_fields():
    out = parse("module 0xAb::pkg { }")
    assert out.module.address_text == "0xAb"
    assert out.module.name == "pkg"
    assert out.module.items == ()


def test_malformed_parameter_list_isolates_one_item():
    # Same-length corruption (':' -> '~') keeps byte offsets identical, so
    # the surrounding items must parse byte-identically to the clean file.
    corrupted = THREE_FUNS.replace("second(a: u64, b: u64)", "second(a~ u64, b: u64)")
    clean = parse(THREE_FUNS)
    bad = parse(corrupted)
    assert [type(i).__name__ for i in bad.module.items] == [
        "FunDecl",
        "ErrorRegion",
        "FunDecl",
    ]
    assert len(bad.diagnostics) >= 1
    region = bad.module.items[1]
    assert len(region.diagnostics) >= 1
    # fun1 and fun3 parse identically to the error-free file
    assert canonical_bytes(bad.module.items[0]) == canonical_bytes(clean.module.items[0])
    assert canonical_bytes(bad.module.items[2]) == canonical_bytes(clean.module.items[2])


def test_error_region_covers_whole_item():
    corrupted = THREE_FUNS.replace("second(a: u64, b: u64)", "second(a~ u64, b: u64)")
    out = parse(corrupted)
    region = out.module.items[1]
    start = corrupted.index("fun second")
    end = corrupted.index("fun third")
    assert region.loc.start == start
    assert region.loc.end <= end
    assert corrupted[region.loc.end : end].strip() == ""


def test_incomplete_field_access_in_let():
    out = parse(
        """\
        module 0x1::demo {
            fun f(p: u64): u64 {
                let x = p.
            }
        }
        """
    )
    fun = out.module.items[0]
    let = fun.body.stmts[0]
    assert isinstance(let, ast.Let)
    assert isinstance(let.value, ast.IncompleteFieldAccess)
    assert isinstance(let.value.receiver, ast.Name)
    assert let.value.receiver.name == "p"


def test_statement_recovery_inside_body():
    out = parse(
        """\
        module 0x1::demo {
            fun f(a: u64): u64 {
                let x = + 1;
                a
            }
            fun g(a: u64): u64 { a }
        }
        """
    )
    assert [type(i).__name__ for i in out.module.items] == ["FunDecl", "FunDecl"]
    body = out.module.items[0].body
    assert body.recovered
    assert any(isinstance(s, ast.ErrorExpr) for s in body.stmts)
    assert isinstance(body.tail, ast.Name)


def test_if_without_else_recovers():
    out = parse(
        """\
        module 0x1::demo {
            fun f(a: u64): u64 { if a < 1 { a } }
        }
        """
    )
    assert any(d.code == "parse-expected" for d in out.diagnostics)
    fun = out.module.items[0]
    assert isinstance(fun.body.tail, ast.If)
    assert fun.body.tail.else_branch is None


def test_use_and_record_items():
    out = parse(
        """\
        module 0x1::demo {
            use 0x2::token as t;
            use 0x3::lib;
            record Pair { a: u64, b: bool }
            fun f(): u64 { 1 }
        }
        """
    )
    assert out.diagnostics == ()
    use1, use2, rec, _ = out.module.items
    assert (use1.module_name, use1.alias, use1.bound_name) == ("token", "t", "t")
    assert (use2.module_name, use2.alias, use2.bound_name) == ("lib", None, "lib")
    assert rec.name == "Pair"
    assert [f.name for f in rec.fields] == ["a", "b"]


def test_unclosed_module_and_block():
    out = parse("module 0x1::demo { fun f(): u64 { 1 ")
    assert out.module is not None
    assert any(d.code == "parse-unclosed" for d in out.diagnostics)
    assert [type(i).__name__ for i in out.module.items] == ["FunDecl"]


def test_empty_input_has_no_module():
    out = parse("")
    assert out.module is None
    assert len(out.diagnostics) == 1


def test_body_coverage_of_items_and_error_regions():
    corrupted = THREE_FUNS.replace("second(a: u64, b: u64)", "second(a~ u64, b: u64)")
    for text in (THREE_FUNS, corrupted):
        out = parse_source("t.mini", text)
        module = out.module
        spans = sorted(i.loc.span() for i in module.items)
        body_start = text.index("{") + 1
        body_end = text.rindex("}")
        for tok in out.tokens:
            if tok.loc.start < body_start or tok.loc.end > body_end:
                continue
            assert any(s <= tok.loc.start and tok.loc.end <= e for s, e in spans), (
                f"token {tok.text!r} at {tok.loc.start} not covered"
            )


# --- completion contexts ---------------------------------------------------------


COMPLETION_SRC = textwrap.dedent(
    """\
    module 0x1::demo {
        use 0x1::std;
        record Point { x: u64, y: u64 }
        fun f(p: Point, left: u64, len: u64, max: u64): u64 {
            let a = p.
        }
    }
    """
)


def test_context_after_dot():
    pos = COMPLETION_SRC.index("p.\n") + 2
    ctx = locate_access_context(parse(COMPLETION_SRC).module, pos)
    assert isinstance(ctx, ast.DotAccess)
    src = COMPLETION_SRC
    assert src[ctx.receiver_loc.start : ctx.receiver_loc.end] == "p"


def test_context_after_path_separator():
    src = COMPLETION_SRC.replace("let a = p.", "let a = 0x1::coin::")
    pos = src.index("coin::") + len("coin::")
    ctx = locate_access_context(parse(src).module, pos)
    assert ctx == ast.PathAccess(("0x1", "coin"))


def test_context_alias_path():
    src = COMPLETION_SRC.replace("let a = p.", "let a = std::")
    pos = src.index("std::") + len("std::")
    ctx = locate_access_context(parse(src).module, pos)
    assert ctx == ast.PathAccess(("std",))


def test_context_alias_path_with_member_prefix():
    src = COMPLETION_SRC.replace("let a = p.", "let a = std::mi")
    pos = src.index("std::mi") + len("std::mi")
    ctx = locate_access_context(parse(src).module, pos)
    assert ctx == ast.PathAccess(("std",))


def test_context_identifier_prefix():
    src = COMPLETION_SRC.replace("let a = p.", "let a = le")
    pos = src.index("= le") + len("= le")
    ctx = locate_access_context(parse(src).module, pos)
    assert ctx == ast.IdentifierPrefix("le")


def test_context_whitespace_between_items_is_none():
    src = COMPLETION_SRC
    pos = src.index("record")  # start of an item, between items
    assert locate_access_context(parse(src).module, pos - 1) is None


def test_context_field_access_midword():
    src = COMPLETION_SRC.replace("let a = p.", "let a = p.xy")
    pos = src.index("p.xy") + 4
    ctx = locate_access_context(parse(src).module, pos)
    assert isinstance(ctx, ast.DotAccess)


# --- properties -------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=300))
def test_parse_is_total(text):
    out = parse_source("fuzz.mini", text)
    assert isinstance(out.diagnostics, tuple)


@settings(max_examples=100, deadline=None)
@given(
    st.text(
        alphabet=st.sampled_from(
            list("modulefunrecalinpbst{}();:=.,+-*<&|xy0123 \n")
        ),
        max_size=300,
    )
)
def test_parse_is_total_sourcelike(text):
    out = parse_source("fuzz.mini", text)
    for region in out.module.items if out.module else ():
        if isinstance(region, ast.ErrorRegion):
            assert len(region.diagnostics) >= 1
