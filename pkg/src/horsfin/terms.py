"""Interned term graphs for nondeterministic higher-order recursion schemes.

A scheme is a family of mutually recursive nonterminal definitions over a
ranked alphabet, plus a closed ground start term.  We interpret the
definitions directly as regular (cyclic) infinitary lambda terms: an
occurrence of a nonterminal *is* the root node of its definition body, so
the graph of reachable nodes is finite and cycles pass only through those
knots.  This is an equivalent presentation of the usual fixed-point
(lambda-Y) reading of a scheme; it keeps the subterm universe finite and
it makes the complexity of the scheme literally the maximal order of a
reachable node, which is what the rest of the library needs.

Node equality is interning identity.  Binders are renamed to canonical
level-based names before interning, so alpha-equivalent finite fragments
share nodes; two different cyclic presentations of the same infinite tree
may still get distinct nodes, which only refines the equivalence and is
sound for everything built on top.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional


class TermError(Exception):
    """Base class for errors while building or checking a scheme."""


class SortMismatch(TermError):
    pass


class RankMismatch(TermError):
    pass


class UnknownName(TermError):
    pass


# ---------------------------------------------------------------------------
# Sorts


@dataclass(frozen=True)
class Sort:
    """Simple type over the ground sort ``o``.

    ``Sort()`` is ground; ``Sort(a, b)`` is the arrow sort a -> b.
    """

    argument: Optional["Sort"] = None
    result: Optional["Sort"] = None

    def __post_init__(self) -> None:
        if (self.argument is None) != (self.result is None):
            raise ValueError("arrow sort needs both argument and result")

    @property
    def is_ground(self) -> bool:
        return self.argument is None

    def __str__(self) -> str:
        if self.is_ground:
            return "o"
        left = str(self.argument)
        if not self.argument.is_ground:
            left = f"({left})"
        return f"{left}->{self.result}"


GROUND = Sort()


def arrow(argument: Sort, result: Sort) -> Sort:
    return Sort(argument, result)


@lru_cache(maxsize=None)
def ord_sort(sort: Sort) -> int:
    """Order of a sort: ground is 0, an arrow is max(1 + ord(arg), ord(res))."""
    if sort.is_ground:
        return 0
    return max(1 + ord_sort(sort.argument), ord_sort(sort.result))


def argument_sorts(sort: Sort) -> tuple[Sort, ...]:
    """The argument sorts of an arrow chain, outermost first."""
    out = []
    while not sort.is_ground:
        out.append(sort.argument)
        sort = sort.result
    return tuple(out)


# ---------------------------------------------------------------------------
# Symbols


@dataclass(frozen=True)
class Symbol:
    name: str
    rank: int


BR = Symbol("br", 2)


# ---------------------------------------------------------------------------
# Term nodes

SYM = "sym"
VAR = "var"
APP = "app"
ABS = "abs"


class TermNode:
    """One interned node of a regular (possibly cyclic) lambda term.

    Nodes are allocated and filled by an :class:`Interner` and must be
    treated as immutable afterwards.  Equality and hashing are object
    identity; ``nid`` is the stable interning id.
    """

    __slots__ = (
        "nid", "kind", "sort", "free", "label",
        "symbol", "args", "name", "operator", "operand",
        "param", "param_sort", "body",
    )

    def __init__(self, nid: int, sort: Sort):
        self.nid = nid
        self.kind = None  # filled by the interner
        self.sort = sort
        self.free: frozenset[str] = frozenset()
        self.label: Optional[str] = None  # nonterminal name, for printing
        self.symbol = None
        self.args: tuple[TermNode, ...] = ()
        self.name = None
        self.operator = None
        self.operand = None
        self.param = None
        self.param_sort = None
        self.body = None

    # kind tests ------------------------------------------------------
    @property
    def is_symbol(self) -> bool:
        return self.kind == SYM

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    @property
    def is_app(self) -> bool:
        return self.kind == APP

    @property
    def is_abs(self) -> bool:
        return self.kind == ABS

    def children(self) -> tuple["TermNode", ...]:
        if self.kind == SYM:
            return self.args
        if self.kind == APP:
            return (self.operator, self.operand)
        if self.kind == ABS:
            return (self.body,)
        return ()

    def __repr__(self) -> str:
        return f"<node {self.nid}: {render_term(self)}>"


def render_term(node: TermNode, top: bool = True, parens: bool = False) -> str:
    """Human-readable rendering; nonterminal knots print as their name."""
    if node.label is not None and not top:
        return node.label
    if node.kind == SYM:
        if not node.args:
            return node.symbol.name
        inner = node.symbol.name + " " + " ".join(
            render_term(a, False, True) for a in node.args)
        return f"({inner})" if parens else inner
    if node.kind == VAR:
        return node.name
    if node.kind == APP:
        inner = (render_term(node.operator, False, False) + " "
                 + render_term(node.operand, False, True))
        return f"({inner})" if parens else inner
    if node.kind == ABS:
        inner = f"\\{node.param}:{node.param_sort}. {render_term(node.body, False)}"
        return f"({inner})" if parens else inner
    return f"<unfilled {node.nid}>"


class Interner:
    """Hash-consing table for term nodes.

    Nonterminal bodies are allocated as *shells* first (so mutual recursion
    can reference them) and filled in afterwards; the shell object is the
    knot through which cycles pass.  Shells are keyed by a canonical
    rendering of the definition, so elaborating the same definition twice
    (even from different programs) yields the same node.
    """

    def __init__(self) -> None:
        self._nodes: list[TermNode] = []
        self._table: dict[tuple, TermNode] = {}
        self._shells: dict[str, TermNode] = {}
        self._fresh = 0

    def _alloc(self, sort: Sort) -> TermNode:
        node = TermNode(len(self._nodes), sort)
        self._nodes.append(node)
        return node

    def _intern(self, key: tuple, sort: Sort) -> tuple[TermNode, bool]:
        hit = self._table.get(key)
        if hit is not None:
            return hit, False
        node = self._alloc(sort)
        self._table[key] = node
        return node, True

    def symbol_app(self, symbol: Symbol, args: Iterable[TermNode]) -> TermNode:
        args = tuple(args)
        if len(args) != symbol.rank:
            raise RankMismatch(
                f"symbol {symbol.name} has rank {symbol.rank}, got {len(args)} arguments")
        for a in args:
            if not a.sort.is_ground:
                raise SortMismatch(f"argument of {symbol.name} is not ground")
        key = (SYM, symbol.name, tuple(a.nid for a in args))
        node, new = self._intern(key, GROUND)
        if new:
            node.kind = SYM
            node.symbol = symbol
            node.args = args
            node.free = frozenset().union(*(a.free for a in args)) if args else frozenset()
        return node

    def var(self, name: str, sort: Sort) -> TermNode:
        key = (VAR, name, sort)
        node, new = self._intern(key, sort)
        if new:
            node.kind = VAR
            node.name = name
            node.free = frozenset([name])
        return node

    def app(self, operator: TermNode, operand: TermNode) -> TermNode:
        if operator.sort.is_ground:
            raise SortMismatch(f"cannot apply ground term {render_term(operator)}")
        if operator.sort.argument != operand.sort:
            raise SortMismatch(
                f"operator expects {operator.sort.argument}, operand has sort {operand.sort}")
        key = (APP, operator.nid, operand.nid)
        node, new = self._intern(key, operator.sort.result)
        if new:
            node.kind = APP
            node.operator = operator
            node.operand = operand
            node.free = operator.free | operand.free
        return node

    def abs_(self, param: str, param_sort: Sort, body: TermNode) -> TermNode:
        key = (ABS, param, param_sort, body.nid)
        node, new = self._intern(key, arrow(param_sort, body.sort))
        if new:
            node.kind = ABS
            node.param = param
            node.param_sort = param_sort
            node.body = body
            node.free = body.free - {param}
        return node

    # shells for nonterminal knots -------------------------------------
    def shell(self, key: str, sort: Sort, label: str) -> tuple[TermNode, bool]:
        hit = self._shells.get(key)
        if hit is not None:
            return hit, False
        node = self._alloc(sort)
        node.label = label
        node.free = frozenset()  # nonterminal bodies are closed
        self._shells[key] = node
        return node, True

    def fill_shell(self, shell: TermNode, template: TermNode) -> None:
        """Give an allocated shell the structure of ``template``'s root.

        When the template was built freshly for this fill, the structural
        key is remapped to the shell so that reconstructing the same node
        (e.g. a rule constructor re-deriving a conclusion subject) yields
        the knot itself rather than a structural twin.
        """
        if shell.kind is not None:
            raise TermError("shell already filled")
        if template.sort != shell.sort:
            raise SortMismatch(
                f"nonterminal {shell.label} declared {shell.sort} "
                f"but its body has sort {template.sort}")
        shell.kind = template.kind
        shell.symbol = template.symbol
        shell.args = template.args
        shell.name = template.name
        shell.operator = template.operator
        shell.operand = template.operand
        shell.param = template.param
        shell.param_sort = template.param_sort
        shell.body = template.body
        if template.free:
            raise TermError(f"nonterminal {shell.label} has free variables")
        key = _structural_key(template)
        if key is not None and self._table.get(key) is template and template is not shell:
            self._table[key] = shell

    def fresh_name(self) -> str:
        self._fresh += 1
        return f"w{self._fresh}"


def _structural_key(node: TermNode):
    if node.kind == SYM:
        return (SYM, node.symbol.name, tuple(a.nid for a in node.args))
    if node.kind == VAR:
        return (VAR, node.name, node.sort)
    if node.kind == APP:
        return (APP, node.operator.nid, node.operand.nid)
    if node.kind == ABS:
        return (ABS, node.param, node.param_sort, node.body.nid)
    return None


DEFAULT_INTERNER = Interner()


# ---------------------------------------------------------------------------
# Programs


@dataclass
class Program:
    symbols: dict[str, Symbol]
    nonterminals: list[tuple[str, Sort, TermNode]]
    start: TermNode
    interner: Interner


def subterm_universe(root: TermNode) -> frozenset[TermNode]:
    """The finite set of nodes reachable from ``root`` (knots included)."""
    seen: dict[int, TermNode] = {}
    stack = [root]
    while stack:
        node = stack.pop()
        if node.nid in seen:
            continue
        seen[node.nid] = node
        stack.extend(node.children())
    return frozenset(seen.values())


def universe_sorted(root: TermNode) -> list[TermNode]:
    return sorted(subterm_universe(root), key=lambda n: n.nid)


def complexity(root: TermNode) -> int:
    """Maximal order of a sort among reachable nodes."""
    return max(ord_sort(node.sort) for node in subterm_universe(root))


def _check_node(node: TermNode) -> None:
    if node.kind == SYM:
        if len(node.args) != node.symbol.rank:
            raise RankMismatch(f"{node.symbol.name} applied to {len(node.args)} arguments")
        if not node.sort.is_ground or any(not a.sort.is_ground for a in node.args):
            raise SortMismatch(f"ill-sorted symbol node {render_term(node)}")
    elif node.kind == APP:
        op = node.operator
        if op.sort.is_ground or op.sort.argument != node.operand.sort \
                or op.sort.result != node.sort:
            raise SortMismatch(f"ill-sorted application {render_term(node)}")
    elif node.kind == ABS:
        if node.sort != arrow(node.param_sort, node.body.sort):
            raise SortMismatch(f"ill-sorted abstraction {render_term(node)}")
    elif node.kind == VAR:
        pass
    else:
        raise TermError(f"unfilled node {node.nid}")


def elaborate(program: Program) -> TermNode:
    """Return the interned root of the program and re-check every invariant.

    Parsing already produces the knotted representation, so this validates:
    the start term is closed and ground, every reachable node is well
    sorted, and the subterm universe is closed under children.
    """
    root = program.start
    if root.free:
        raise SortMismatch("start term is not closed")
    if not root.sort.is_ground:
        raise SortMismatch(f"start term has sort {root.sort}, expected o")
    universe = subterm_universe(root)
    for node in universe:
        _check_node(node)
        for child in node.children():
            assert child in universe
    return root
