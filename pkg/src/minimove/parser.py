"""Error-resilient recursive-descent parser for MiniMove.

Recovery happens at two levels:

* item level: if a ``use``/``record``/``fun`` header or signature is
  malformed, the parser skips (brace-aware) to the next item start or the
  module's closing brace and records a single :class:`ErrorRegion` covering
  the skipped bytes, so the surrounding items parse exactly as they would in
  an error-free file;
* statement level: inside a function body a broken statement becomes an
  :class:`ErrorExpr` and parsing resumes at the next ``;`` or ``}``.

Partially typed constructs that matter for completion (``recv.``,
``mod::``) are kept as explicit incomplete nodes rather than being skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast
from .lexer import (
    ITEM_START_KEYWORDS,
    KIND_ADDR,
    KIND_IDENT,
    KIND_INT,
    KIND_KEYWORD,
    KIND_PUNCT,
    Token,
    tokenize,
)
from .source import Diagnostic, SourceLocation, content_hash, error


@dataclass(frozen=True)
class ParseOutcome:
    """Result of parsing one file: best-effort module plus diagnostics."""

    file_id: str
    module: Optional[ast.ParsedModule]
    diagnostics: tuple[Diagnostic, ...]
    tokens: tuple[Token, ...]
    content_hash: str
    byte_len: int


class _ParseErr(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


def parse_source(file_id: str, text: str) -> ParseOutcome:
    """Parses ``text``; never raises, all problems become diagnostics."""
    tokens, diags = tokenize(text, file_id)
    parser = _Parser(file_id, tokens, len(text.encode("utf-8")))
    module = parser.parse_module()
    return ParseOutcome(
        file_id=file_id,
        module=module,
        diagnostics=tuple(diags + parser.diags),
        tokens=tuple(tokens),
        content_hash=content_hash(text),
        byte_len=len(text.encode("utf-8")),
    )


class _Parser:
    def __init__(self, file_id: str, tokens: list[Token], byte_len: int):
        self.file_id = file_id
        self.toks = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self._eof = SourceLocation(file_id, byte_len, byte_len)

    # --- token helpers ---------------------------------------------------

    def cur(self) -> Optional[Token]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def peek(self, ahead: int = 1) -> Optional[Token]:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def cur_loc(self) -> SourceLocation:
        tok = self.cur()
        return tok.loc if tok is not None else self._eof

    def at_punct(self, text: str) -> bool:
        tok = self.cur()
        return tok is not None and tok.kind == KIND_PUNCT and tok.text == text

    def at_kw(self, text: str) -> bool:
        tok = self.cur()
        return tok is not None and tok.kind == KIND_KEYWORD and tok.text == text

    def at_kind(self, kind: str) -> bool:
        tok = self.cur()
        return tok is not None and tok.kind == kind

    def at_item_start(self) -> bool:
        tok = self.cur()
        return (
            tok is not None
            and tok.kind == KIND_KEYWORD
            and tok.text in ITEM_START_KEYWORDS
        )

    def take(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def _fail(self, code: str, message: str) -> _ParseErr:
        return _ParseErr(error(code, message, self.cur_loc()))

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            raise self._fail("parse-expected", f"expected '{text}'")
        return self.take()

    def expect_kw(self, text: str) -> Token:
        if not self.at_kw(text):
            raise self._fail("parse-expected", f"expected '{text}'")
        return self.take()

    def expect_ident(self, what: str) -> Token:
        if not self.at_kind(KIND_IDENT):
            raise self._fail("parse-expected", f"expected {what}")
        return self.take()

    def span(self, start: int, end: int) -> SourceLocation:
        return SourceLocation(self.file_id, start, end)

    # --- module / items ---------------------------------------------------

    def parse_module(self) -> Optional[ast.ParsedModule]:
        if not self.toks:
            self.diags.append(error("parse-empty", "expected 'module'", self._eof))
            return None
        if not self.at_kw("module"):
            self.diags.append(
                error("parse-expected", "expected 'module'", self.cur_loc())
            )
            while self.cur() is not None and not self.at_kw("module"):
                self.take()
            if self.cur() is None:
                return None
        try:
            kw = self.expect_kw("module")
            if not self.at_kind(KIND_ADDR):
                raise self._fail("parse-expected", "expected module address")
            addr = self.take()
            self.expect_punct("::")
            name = self.expect_ident("module name")
            self.expect_punct("{")
        except _ParseErr as err:
            self.diags.append(err.diag)
            return None

        items: list[ast.ParsedItem] = []
        end = name.loc.end
        while True:
            tok = self.cur()
            if tok is None:
                self.diags.append(
                    error("parse-unclosed", "expected '}' to close module", self._eof)
                )
                end = self.toks[-1].loc.end
                break
            if tok.kind == KIND_PUNCT and tok.text == "}":
                end = self.take().loc.end
                break
            items.append(self._parse_item())
        if self.cur() is not None:
            self.diags.append(
                error(
                    "parse-trailing",
                    "unexpected content after module",
                    self.span(self.cur_loc().start, self.toks[-1].loc.end),
                )
            )
        return ast.ParsedModule(
            address_text=addr.text,
            address_loc=addr.loc,
            name=name.text,
            name_loc=name.loc,
            items=tuple(items),
            loc=self.span(kw.loc.start, end),
        )

    def _parse_item(self) -> ast.ParsedItem:
        start = self.pos
        try:
            if self.at_kw("use"):
                return self._use_decl()
            if self.at_kw("record"):
                return self._record_decl()
            if self.at_kw("fun") or self.at_kw("public") or self.at_kw("inline"):
                return self._fun_decl()
            raise self._fail(
                "parse-item", "expected 'use', 'record', or 'fun' declaration"
            )
        except _ParseErr as err:
            self.diags.append(err.diag)
            self._sync_item(start)
            last = self.pos - 1 if self.pos > start else start
            loc = self.span(self.toks[start].loc.start, self.toks[last].loc.end)
            return ast.ErrorRegion(loc=loc, diagnostics=(err.diag,))

    def _sync_item(self, start: int) -> None:
        # Account for braces already consumed by the failed item parse.
        depth = 0
        for tok in self.toks[start : self.pos]:
            if tok.kind == KIND_PUNCT:
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}" and depth > 0:
                    depth -= 1
        if self.pos == start:
            self.pos += 1  # always make progress
        while True:
            tok = self.cur()
            if tok is None:
                return
            if depth == 0 and tok.kind == KIND_KEYWORD and tok.text in ITEM_START_KEYWORDS:
                return
            if tok.kind == KIND_PUNCT:
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        return
                    depth -= 1
                elif tok.text == ";" and depth == 0:
                    self.take()
                    return
            self.take()

    def _use_decl(self) -> ast.UseDecl:
        kw = self.expect_kw("use")
        if not self.at_kind(KIND_ADDR):
            raise self._fail("parse-expected", "expected module address after 'use'")
        addr = self.take()
        self.expect_punct("::")
        mod = self.expect_ident("module name")
        alias = None
        alias_loc = None
        if self.at_kw("as"):
            self.take()
            alias_tok = self.expect_ident("alias name")
            alias, alias_loc = alias_tok.text, alias_tok.loc
        semi = self.expect_punct(";")
        return ast.UseDecl(
            address_text=addr.text,
            address_loc=addr.loc,
            module_name=mod.text,
            module_loc=mod.loc,
            alias=alias,
            alias_loc=alias_loc,
            loc=self.span(kw.loc.start, semi.loc.end),
        )

    def _record_decl(self) -> ast.RecordDecl:
        kw = self.expect_kw("record")
        name = self.expect_ident("record name")
        self.expect_punct("{")
        fields: list[ast.RecordField] = []
        while not self.at_punct("}"):
            fname = self.expect_ident("field name")
            self.expect_punct(":")
            ftype = self._type_name()
            fields.append(ast.RecordField(fname.text, fname.loc, ftype))
            if self.at_punct(","):
                self.take()
            elif not self.at_punct("}"):
                raise self._fail("parse-expected", "expected ',' or '}'")
        close = self.take()
        return ast.RecordDecl(
            name=name.text,
            name_loc=name.loc,
            fields=tuple(fields),
            loc=self.span(kw.loc.start, close.loc.end),
        )

    def _fun_decl(self) -> ast.FunDecl:
        first = self.cur()
        assert first is not None
        is_public = False
        is_inline = False
        if self.at_kw("public"):
            self.take()
            is_public = True
        if self.at_kw("inline"):
            self.take()
            is_inline = True
        self.expect_kw("fun")
        name = self.expect_ident("function name")
        self.expect_punct("(")
        params: list[ast.Param] = []
        while not self.at_punct(")"):
            pname = self.expect_ident("parameter name")
            self.expect_punct(":")
            ptype = self._type_name()
            params.append(ast.Param(pname.text, pname.loc, ptype))
            if self.at_punct(","):
                self.take()
            elif not self.at_punct(")"):
                raise self._fail("parse-expected", "expected ',' or ')'")
        self.take()
        self.expect_punct(":")
        ret = self._type_name()
        body = self._block()
        return ast.FunDecl(
            name=name.text,
            name_loc=name.loc,
            is_public=is_public,
            is_inline=is_inline,
            params=tuple(params),
            return_type=ret,
            body=body,
            loc=self.span(first.loc.start, body.loc.end),
        )

    def _type_name(self) -> ast.TypeName:
        tok = self.cur()
        if tok is None or tok.kind not in (KIND_IDENT, KIND_ADDR):
            raise self._fail("parse-expected", "expected type")
        first = self.take()
        parts = [(first.text, first.loc)]
        while self.at_punct("::"):
            self.take()
            part = self.expect_ident("name after '::'")
            parts.append((part.text, part.loc))
        if first.kind == KIND_ADDR and len(parts) != 3:
            raise _ParseErr(
                error(
                    "parse-type-path",
                    "expected address::module::Name type path",
                    self.span(first.loc.start, parts[-1][1].end),
                )
            )
        if first.kind == KIND_IDENT and len(parts) > 2:
            raise _ParseErr(
                error(
                    "parse-type-path",
                    "type paths have at most two named parts",
                    self.span(first.loc.start, parts[-1][1].end),
                )
            )
        return ast.TypeName(
            parts=tuple(parts), loc=self.span(first.loc.start, parts[-1][1].end)
        )

    # --- statements / expressions -----------------------------------------

    def _block(self) -> ast.Block:
        open_tok = self.expect_punct("{")
        stmts: list[ast.Expr] = []
        tail: Optional[ast.Expr] = None
        recovered = False
        end = open_tok.loc.end
        while True:
            tok = self.cur()
            if tok is None:
                self.diags.append(
                    error("parse-unclosed", "expected '}' to close block", self._eof)
                )
                recovered = True
                end = self.toks[-1].loc.end
                break
            if tok.kind == KIND_PUNCT and tok.text == "}":
                end = self.take().loc.end
                break
            if self.at_item_start():
                self.diags.append(
                    error(
                        "parse-unclosed",
                        "expected '}' before next declaration",
                        tok.loc,
                    )
                )
                recovered = True
                end = tok.loc.start
                break
            before = len(self.diags)
            start = self.pos
            try:
                if self.at_kw("let"):
                    stmts.append(self._let_stmt())
                else:
                    expr = self._expr()
                    if self.at_punct(";"):
                        self.take()
                        stmts.append(expr)
                    elif self.at_punct("}"):
                        tail = expr
                    else:
                        if not _is_incomplete(expr):
                            self.diags.append(
                                error(
                                    "parse-expected",
                                    "expected ';' after expression",
                                    self.cur_loc(),
                                )
                            )
                        stmts.append(expr)
                        self._sync_stmt()
            except _ParseErr as err:
                self.diags.append(err.diag)
                self._sync_stmt()
                last = self.pos - 1 if self.pos > start else start
                last = min(last, len(self.toks) - 1)
                stmts.append(
                    ast.ErrorExpr(
                        self.span(self.toks[start].loc.start, self.toks[last].loc.end)
                    )
                )
            if len(self.diags) > before:
                recovered = True
        return ast.Block(
            stmts=tuple(stmts),
            tail=tail,
            recovered=recovered,
            loc=self.span(open_tok.loc.start, end),
        )

    def _sync_stmt(self) -> None:
        depth = 0
        while True:
            tok = self.cur()
            if tok is None:
                return
            if depth == 0:
                if tok.kind == KIND_KEYWORD and (
                    tok.text == "let" or tok.text in ITEM_START_KEYWORDS
                ):
                    return
                if tok.kind == KIND_PUNCT and tok.text == ";":
                    self.take()
                    return
            if tok.kind == KIND_PUNCT:
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        return
                    depth -= 1
            self.take()

    def _let_stmt(self) -> ast.Let:
        kw = self.expect_kw("let")
        name = self.expect_ident("variable name")
        annotation = None
        if self.at_punct(":"):
            self.take()
            annotation = self._type_name()
        self.expect_punct("=")
        value = self._expr()
        end = value.loc.end
        if self.at_punct(";"):
            end = self.take().loc.end
        elif not _is_incomplete(value):
            self.diags.append(
                error("parse-expected", "expected ';' after let", self.cur_loc())
            )
        return ast.Let(
            name=name.text,
            name_loc=name.loc,
            annotation=annotation,
            value=value,
            loc=self.span(kw.loc.start, end),
        )

    def _expr(self) -> ast.Expr:
        return self._binary(0)

    _BINARY_LEVELS: tuple[tuple[str, ...], ...] = (
        ("||",),
        ("&&",),
        ("==", "<"),
        ("+", "-"),
        ("*",),
    )

    def _binary(self, level: int) -> ast.Expr:
        if level >= len(self._BINARY_LEVELS):
            return self._postfix()
        ops = self._BINARY_LEVELS[level]
        left = self._binary(level + 1)
        while True:
            tok = self.cur()
            if tok is None or tok.kind != KIND_PUNCT or tok.text not in ops:
                return left
            op = self.take()
            right = self._binary(level + 1)
            left = ast.Binary(
                op=op.text,
                op_loc=op.loc,
                left=left,
                right=right,
                loc=self.span(left.loc.start, right.loc.end),
            )

    def _postfix(self) -> ast.Expr:
        expr = self._primary()
        while self.at_punct("."):
            dot = self.take()
            if self.at_kind(KIND_IDENT):
                field = self.take()
                expr = ast.FieldAccess(
                    receiver=expr,
                    field=field.text,
                    field_loc=field.loc,
                    loc=self.span(expr.loc.start, field.loc.end),
                )
            else:
                self.diags.append(
                    error(
                        "parse-incomplete-field",
                        "expected field name after '.'",
                        dot.loc,
                    )
                )
                return ast.IncompleteFieldAccess(
                    receiver=expr,
                    dot_loc=dot.loc,
                    loc=self.span(expr.loc.start, dot.loc.end),
                )
        return expr

    def _primary(self) -> ast.Expr:
        tok = self.cur()
        if tok is None:
            raise self._fail("parse-expected", "expected expression")
        if tok.kind == KIND_PUNCT and tok.text == "(":
            self.take()
            inner = self._expr()
            self.expect_punct(")")
            return inner
        if tok.kind == KIND_PUNCT and tok.text == "{":
            return self._block()
        if tok.kind == KIND_KEYWORD and tok.text == "if":
            return self._if_expr()
        if tok.kind == KIND_KEYWORD and tok.text in ("true", "false"):
            self.take()
            return ast.Literal("bool", tok.text, tok.loc)
        if tok.kind == KIND_INT:
            self.take()
            return ast.Literal("int", tok.text, tok.loc)
        if tok.kind == KIND_ADDR:
            nxt = self.peek()
            if nxt is not None and nxt.kind == KIND_PUNCT and nxt.text == "::":
                return self._path_call(self.take())
            self.take()
            return ast.Literal("addr", tok.text, tok.loc)
        if tok.kind == KIND_IDENT:
            nxt = self.peek()
            if nxt is not None and nxt.kind == KIND_PUNCT and nxt.text == "::":
                return self._path_call(self.take())
            if nxt is not None and nxt.kind == KIND_PUNCT and nxt.text == "(":
                name = self.take()
                args = self._call_args()
                return ast.Call(
                    name=name.text,
                    name_loc=name.loc,
                    args=args[0],
                    loc=self.span(name.loc.start, args[1]),
                )
            self.take()
            return ast.Name(tok.text, tok.loc)
        raise self._fail("parse-expected", "expected expression")

    def _if_expr(self) -> ast.If:
        kw = self.expect_kw("if")
        cond = self._expr()
        then_branch = self._block()
        else_branch: ast.Block | ast.If | None = None
        if self.at_kw("else"):
            self.take()
            if self.at_kw("if"):
                else_branch = self._if_expr()
            else:
                else_branch = self._block()
            end = else_branch.loc.end
        else:
            self.diags.append(
                error("parse-expected", "expected 'else' branch", self.cur_loc())
            )
            end = then_branch.loc.end
        return ast.If(
            cond=cond,
            then_branch=then_branch,
            else_branch=else_branch,
            loc=self.span(kw.loc.start, end),
        )

    def _call_args(self) -> tuple[tuple[ast.Expr, ...], int]:
        self.expect_punct("(")
        args: list[ast.Expr] = []
        while not self.at_punct(")"):
            args.append(self._expr())
            if self.at_punct(","):
                self.take()
            elif not self.at_punct(")"):
                raise self._fail("parse-expected", "expected ',' or ')'")
        close = self.take()
        return tuple(args), close.loc.end

    def _path_call(self, first: Token) -> ast.PathCall:
        parts = [(first.text, first.loc)]
        last_end = first.loc.end
        while self.at_punct("::"):
            sep = self.take()
            last_end = sep.loc.end
            if not self.at_kind(KIND_IDENT):
                self.diags.append(
                    error(
                        "parse-incomplete-path",
                        "expected name after '::'",
                        sep.loc,
                    )
                )
                return ast.PathCall(
                    parts=tuple(parts),
                    args=None,
                    trailing_sep=True,
                    loc=self.span(first.loc.start, last_end),
                )
            part = self.take()
            parts.append((part.text, part.loc))
            last_end = part.loc.end
        if self.at_punct("("):
            args, end = self._call_args()
            return ast.PathCall(
                parts=tuple(parts),
                args=args,
                trailing_sep=False,
                loc=self.span(first.loc.start, end),
            )
        self.diags.append(
            error(
                "parse-incomplete-path",
                "expected '(' to call a module member",
                self.span(first.loc.start, last_end),
            )
        )
        return ast.PathCall(
            parts=tuple(parts),
            args=None,
            trailing_sep=False,
            loc=self.span(first.loc.start, last_end),
        )


def _is_incomplete(expr: ast.Expr) -> bool:
    return isinstance(expr, ast.IncompleteFieldAccess) or (
        isinstance(expr, ast.PathCall) and not expr.complete
    )


# --- completion context lookup ----------------------------------------------


def locate_access_context(
    module: Optional[ast.ParsedModule], pos: int
) -> ast.AccessContext:
    """Finds the innermost completion-relevant context at or just left of
    ``pos``: a dot access, a module path, or a partially typed identifier."""
    if module is None:
        return None
    best: list[tuple[int, ast.AccessContext]] = []

    def consider(anchor: int, ctx: ast.AccessContext) -> None:
        if not best or anchor >= best[0][0]:
            best[:] = [(anchor, ctx)]

    def visit(expr: ast.Expr) -> None:
        if isinstance(expr, ast.FieldAccess):
            visit(expr.receiver)
            if expr.field_loc.start <= pos <= expr.field_loc.end:
                consider(expr.field_loc.start, ast.DotAccess(expr.receiver.loc))
        elif isinstance(expr, ast.IncompleteFieldAccess):
            visit(expr.receiver)
            if expr.dot_loc.end <= pos <= expr.loc.end:
                consider(expr.dot_loc.start, ast.DotAccess(expr.receiver.loc))
        elif isinstance(expr, ast.Name):
            if expr.loc.start < pos <= expr.loc.end:
                consider(
                    expr.loc.start,
                    ast.IdentifierPrefix(expr.name[: pos - expr.loc.start]),
                )
        elif isinstance(expr, ast.Call):
            if expr.name_loc.start < pos <= expr.name_loc.end:
                consider(
                    expr.name_loc.start,
                    ast.IdentifierPrefix(expr.name[: pos - expr.name_loc.start]),
                )
            for arg in expr.args:
                visit(arg)
        elif isinstance(expr, ast.PathCall):
            texts = tuple(p[0] for p in expr.parts)
            if expr.trailing_sep and pos == expr.loc.end:
                consider(expr.loc.end, ast.PathAccess(texts))
            for i, (text, ploc) in enumerate(expr.parts):
                if i == 0:
                    if ploc.start < pos <= ploc.end:
                        consider(
                            ploc.start, ast.IdentifierPrefix(text[: pos - ploc.start])
                        )
                elif ploc.start <= pos <= ploc.end:
                    consider(ploc.start, ast.PathAccess(texts[:i]))
            if expr.args is not None:
                for arg in expr.args:
                    visit(arg)
        elif isinstance(expr, ast.Let):
            visit(expr.value)
        elif isinstance(expr, ast.If):
            visit(expr.cond)
            visit(expr.then_branch)
            if expr.else_branch is not None:
                visit(expr.else_branch)
        elif isinstance(expr, ast.Block):
            for stmt in expr.stmts:
                visit(stmt)
            if expr.tail is not None:
                visit(expr.tail)
        elif isinstance(expr, ast.Binary):
            visit(expr.left)
            visit(expr.right)

    for item in module.items:
        if isinstance(item, ast.FunDecl):
            visit(item.body)
        elif isinstance(item, ast.UseDecl):
            if item.module_loc.start <= pos <= item.module_loc.end:
                consider(item.module_loc.start, ast.PathAccess((item.address_text,)))
    return best[0][1] if best else None
