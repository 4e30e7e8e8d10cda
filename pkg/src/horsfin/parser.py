"""Surface syntax for recursion schemes.

::

    program   := (decl | def)* "start" term
    decl      := "symbol" NAME ":" NAT            # rank; br is builtin, rank 2
    def       := NAME ":" sort "=" term           # nonterminals may be mutually recursive
    sort      := "o" | sort "->" sort | "(" sort ")"   # -> is right-associative
    term      := "\\" NAME ":" sort "." term      # abstraction, lowest precedence
               | term atom                        # application, left-associative
               | atom
    atom      := NAME | "(" term ")"

Line comments start with ``#``.  A NAME resolves to the innermost binder,
else a nonterminal, else a symbol; a symbol of rank r must be applied to
exactly r arguments syntactically (a symbol of positive rank is not a term
by itself).  Binders get canonical level-based names before interning, so
alpha-equivalent definitions share nodes.  A definition whose body is a
bare nonterminal name is an alias and is resolved transitively; alias
cycles (``N = N``) are rejected as unproductive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .terms import (
    BR, GROUND, Interner, Program, RankMismatch, Sort, Symbol, TermError,
    TermNode, UnknownName, arrow, DEFAULT_INTERNER, elaborate,
)


class ProgramSyntaxError(TermError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str  # name | nat | punct | eof
    text: str
    line: int
    col: int


_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_']*|\d+|->|[\\().:=]|#[^\n]*|\s+|.")
_KEYWORDS = {"symbol", "start"}


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col = 1, 1
    for m in _TOKEN.finditer(text):
        s = m.group(0)
        if not s.isspace() and not s.startswith("#"):
            if s[0].isalpha() or s[0] == "_":
                kind = "name"
            elif s[0].isdigit():
                kind = "nat"
            elif s in ("(", ")", ":", ".", "=", "\\", "->"):
                kind = "punct"
            else:
                raise ProgramSyntaxError(f"unexpected character {s!r}", line, col)
            toks.append(_Tok(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
    toks.append(_Tok("eof", "", line, col))
    return toks


# AST: ("var", name, tok) | ("app", f, a, tok) | ("abs", name, sort, body, tok)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise ProgramSyntaxError(
                f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def fail(self, message: str) -> ProgramSyntaxError:
        tok = self.peek()
        return ProgramSyntaxError(message, tok.line, tok.col)

    # sorts ------------------------------------------------------------
    def parse_sort(self) -> Sort:
        left = self.parse_sort_atom()
        if self.peek().text == "->":
            self.next()
            return arrow(left, self.parse_sort())
        return left

    def parse_sort_atom(self) -> Sort:
        tok = self.peek()
        if tok.text == "o":
            self.next()
            return GROUND
        if tok.text == "(":
            self.next()
            sort = self.parse_sort()
            self.expect(")")
            return sort
        raise self.fail(f"expected a sort, found {tok.text!r}")

    # terms ------------------------------------------------------------
    def parse_term(self):
        tok = self.peek()
        if tok.text == "\\":
            self.next()
            name = self.next()
            if name.kind != "name":
                raise ProgramSyntaxError("expected a binder name", name.line, name.col)
            self.expect(":")
            sort = self.parse_sort()
            self.expect(".")
            body = self.parse_term()
            return ("abs", name.text, sort, body, tok)
        term = self.parse_atom()
        while self.peek().text == "(" or self.peek().kind == "name":
            if self.peek().text in _KEYWORDS:
                break
            # a NAME followed by ':' opens the next nonterminal definition
            if self.peek().kind == "name" and self.toks[self.pos + 1].text == ":":
                break
            arg = self.parse_atom()
            term = ("app", term, arg, tok)
        return term

    def parse_atom(self):
        tok = self.peek()
        if tok.text == "(":
            self.next()
            term = self.parse_term()
            self.expect(")")
            return term
        if tok.kind == "name" and tok.text not in _KEYWORDS:
            self.next()
            return ("var", tok.text, tok)
        raise self.fail(f"expected a term, found {tok.text!r}")


def _render_ast(ast, scope: dict[str, str], depth: int) -> str:
    """Canonical rendering with level-named binders, for shell keys."""
    kind = ast[0]
    if kind == "var":
        return scope.get(ast[1], ast[1])
    if kind == "app":
        return f"({_render_ast(ast[1], scope, depth)} {_render_ast(ast[2], scope, depth)})"
    _, name, sort, body, _ = ast
    inner = dict(scope)
    inner[name] = f"x{depth}"
    return f"(\\x{depth}:{sort}.{_render_ast(body, inner, depth + 1)})"


def _ast_refs(ast, bound: frozenset[str], names: set[str]) -> set[str]:
    kind = ast[0]
    if kind == "var":
        return {ast[1]} if ast[1] in names and ast[1] not in bound else set()
    if kind == "app":
        return _ast_refs(ast[1], bound, names) | _ast_refs(ast[2], bound, names)
    return _ast_refs(ast[3], bound | {ast[1]}, names)


class _Builder:
    def __init__(self, interner: Interner, symbols: dict[str, Symbol],
                 shells: dict[str, TermNode]):
        self.interner = interner
        self.symbols = symbols
        self.shells = shells

    def build(self, ast, scope: dict[str, tuple[str, Sort]], depth: int) -> TermNode:
        kind = ast[0]
        if kind == "abs":
            _, name, sort, body, _ = ast
            canonical = f"x{depth}"
            inner = dict(scope)
            inner[name] = (canonical, sort)
            return self.interner.abs_(canonical, sort, self.build(body, inner, depth + 1))
        # flatten the application spine so symbol arities can be checked
        args = []
        while ast[0] == "app":
            args.append(ast[2])
            ast = ast[1]
        args.reverse()
        head = ast
        if head[0] == "abs":
            node = self.build(head, scope, depth)
        else:
            _, name, tok = head
            if name in scope:
                canonical, sort = scope[name]
                node = self.interner.var(canonical, sort)
            elif name in self.shells:
                node = self.shells[name]
            elif name in self.symbols:
                symbol = self.symbols[name]
                if len(args) != symbol.rank:
                    raise RankMismatch(
                        f"{tok.line}:{tok.col}: symbol {name} has rank "
                        f"{symbol.rank} but is applied to {len(args)} arguments")
                built = [self.build(a, scope, depth) for a in args]
                return self.interner.symbol_app(symbol, built)
            else:
                raise UnknownName(f"{tok.line}:{tok.col}: unknown name {name!r}")
        for arg in args:
            node = self.interner.app(node, self.build(arg, scope, depth))
        return node


def parse_program(text: str, interner: Interner | None = None) -> Program:
    """Parse, sort-check and elaborate a scheme into its interned term graph."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    parser = _Parser(text)

    symbols: dict[str, Symbol] = {"br": BR}
    defs: list[tuple[str, Sort, object, _Tok]] = []
    start_ast = None
    while True:
        tok = parser.peek()
        if tok.kind == "eof":
            raise ProgramSyntaxError("missing start term", tok.line, tok.col)
        if tok.text == "symbol":
            parser.next()
            name = parser.next()
            if name.kind != "name":
                raise ProgramSyntaxError("expected a symbol name", name.line, name.col)
            parser.expect(":")
            rank = parser.next()
            if rank.kind != "nat":
                raise ProgramSyntaxError("expected a rank", rank.line, rank.col)
            symbol = Symbol(name.text, int(rank.text))
            if name.text == "br":
                if symbol.rank != 2:
                    raise RankMismatch("br is builtin with rank 2")
                continue
            if name.text in symbols:
                raise ProgramSyntaxError(
                    f"duplicate symbol {name.text}", name.line, name.col)
            symbols[name.text] = symbol
            continue
        if tok.text == "start":
            parser.next()
            start_ast = parser.parse_term()
            end = parser.peek()
            if end.kind != "eof":
                raise ProgramSyntaxError(
                    f"unexpected {end.text!r} after the start term", end.line, end.col)
            break
        # nonterminal definition
        name = parser.next()
        if name.kind != "name":
            raise ProgramSyntaxError(f"expected a definition, found {name.text!r}",
                                     name.line, name.col)
        parser.expect(":")
        sort = parser.parse_sort()
        parser.expect("=")
        body = parser.parse_term()
        defs.append((name.text, sort, body, name))

    names = {d[0] for d in defs}
    if len(names) != len(defs):
        raise ProgramSyntaxError("duplicate nonterminal name", 1, 1)
    for name, _, _, tok in defs:
        if name in symbols:
            raise ProgramSyntaxError(
                f"{name} is declared both as symbol and nonterminal", tok.line, tok.col)

    by_name = {d[0]: d for d in defs}

    # aliases: a body that is a bare reference to another nonterminal
    def alias_target(name: str, trail: tuple[str, ...] = ()) -> str:
        body = by_name[name][2]
        if body[0] == "var" and body[1] in names:
            if body[1] in trail + (name,):
                raise ProgramSyntaxError(
                    f"unproductive definition cycle through {name}",
                    by_name[name][3].line, by_name[name][3].col)
            return alias_target(body[1], trail + (name,))
        return name

    proper = [d for d in defs if alias_target(d[0]) == d[0]]

    # shell keys cover the whole mutually recursive closure of a definition
    refs = {d[0]: _ast_refs(d[2], frozenset(), names) for d in defs}

    def closure(name: str) -> list[str]:
        seen: list[str] = []
        stack = [name]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.append(n)
            stack.extend(sorted(refs[n]))
        return sorted(seen)

    def shell_key(name: str) -> str:
        parts = []
        for n in closure(name):
            _, sort, body, _ = by_name[n]
            parts.append(f"{n}:{sort}={_render_ast(body, {}, 0)}")
        return f"{name}|" + ";".join(parts)

    shells: dict[str, TermNode] = {}
    to_fill: list[tuple[str, TermNode]] = []
    for name, sort, _, _ in proper:
        shell, new = interner.shell(shell_key(name), sort, name)
        shells[name] = shell
        if new:
            to_fill.append((name, shell))
    for name, _, _, _ in defs:
        if name not in shells:
            shells[name] = shells[alias_target(name)]

    builder = _Builder(interner, symbols, shells)
    for name, shell in to_fill:
        template = builder.build(by_name[name][2], {}, 0)
        interner.fill_shell(shell, template)

    start = builder.build(start_ast, {}, 0)
    program = Program(
        symbols=symbols,
        nonterminals=[(name, sort, shells[name]) for name, sort, _, _ in defs],
        start=start,
        interner=interner,
    )
    elaborate(program)  # sort-check everything reachable
    return program
