"""Brute-force ground truth: bounded Böhm-tree enumeration.

``enumerate_language`` head-reduces a closed ground term with
leftmost-outermost reduction, resolves every ``br`` choice both ways, and
collects the finite choice-free trees it can complete within a step budget
and a tree-size bound.  Expansion and choice resolution are interleaved:
for every finite result tree this is equivalent to first unfolding the full
(possibly infinite) Böhm tree and then resolving choices, because a finite
tree only inspects a finite prefix of the unfolding, and within that prefix
the two phase orders commute node by node.

Budget exhaustion is reported through ``complete=False`` and is never taken
as a proof of divergence.  A head reduction that revisits the same interned
node, however, is a genuine loop (head steps are deterministic); such a
branch is certainly divergent, generates no trees, and does not spoil
completeness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .terms import (
    DEFAULT_INTERNER, Interner, SortMismatch, Symbol, TermNode, render_term,
)


@dataclass(frozen=True)
class RankedTree:
    label: Symbol
    children: tuple["RankedTree", ...] = ()

    def __post_init__(self) -> None:
        if len(self.children) != self.label.rank:
            raise ValueError(
                f"{self.label.name} has rank {self.label.rank}, "
                f"got {len(self.children)} children")

    def __str__(self) -> str:
        if not self.children:
            return self.label.name
        return f"{self.label.name}({','.join(str(c) for c in self.children)})"


def tree_size(tree: RankedTree) -> int:
    return 1 + sum(tree_size(c) for c in tree.children)


@dataclass(frozen=True)
class Budget:
    max_beta_steps: int
    max_tree_size: int

    def __post_init__(self) -> None:
        if self.max_beta_steps <= 0 or self.max_tree_size <= 0:
            raise ValueError("budgets must be positive")


@dataclass(frozen=True)
class LanguageSample:
    trees: frozenset[RankedTree]
    complete: bool
    diverged_branches: int

    @property
    def sizes(self) -> list[int]:
        return sorted(tree_size(t) for t in self.trees)


# ---------------------------------------------------------------------------
# Substitution


def substitute(body: TermNode, var: str, value: TermNode,
               interner: Interner | None = None) -> TermNode:
    """Capture-avoiding substitution of ``value`` for ``var`` in ``body``.

    Nodes without a free occurrence of ``var`` are returned unchanged, so
    the recursion never enters recursion knots (they are closed).
    """
    interner = interner if interner is not None else DEFAULT_INTERNER
    if var not in body.free:
        return body
    if body.is_var:
        if value.sort != body.sort:
            raise SortMismatch(
                f"substituting sort {value.sort} for {var}:{body.sort}")
        return value
    if body.is_symbol:
        return interner.symbol_app(
            body.symbol, [substitute(a, var, value, interner) for a in body.args])
    if body.is_app:
        return interner.app(substitute(body.operator, var, value, interner),
                            substitute(body.operand, var, value, interner))
    # abstraction; body.param != var since var is free in body
    if body.param in value.free:
        fresh = interner.fresh_name()
        renamed = substitute(body.body, body.param,
                             interner.var(fresh, body.param_sort), interner)
        return interner.abs_(fresh, body.param_sort,
                             substitute(renamed, var, value, interner))
    return interner.abs_(body.param, body.param_sort,
                         substitute(body.body, var, value, interner))


# ---------------------------------------------------------------------------
# Head reduction


@dataclass(frozen=True)
class Constructor:
    symbol: Symbol
    args: tuple[TermNode, ...]


@dataclass(frozen=True)
class Diverged:
    certain: bool


HeadForm = Constructor | Diverged


class _Steps:
    """A mutable beta-step allowance shared across one enumeration."""

    def __init__(self, limit: int):
        self.left = limit

    def take(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        return True


def _spine(t: TermNode) -> tuple[TermNode, list[TermNode]]:
    args: list[TermNode] = []
    while t.is_app:
        args.append(t.operand)
        t = t.operator
    args.reverse()
    return t, args


def head_reduce(t: TermNode, budget: "Budget | int | _Steps",
                interner: Interner | None = None,
                memo: Optional[dict[int, HeadForm]] = None) -> HeadForm:
    """Leftmost-outermost reduction of a closed ground term to head form.

    Returns ``Constructor`` when a symbol-headed form is reached within the
    step allowance, ``Diverged(certain=True)`` when the reduction provably
    loops (the same interned node recurs), and ``Diverged(certain=False)``
    when the allowance runs out first.
    """
    interner = interner if interner is not None else DEFAULT_INTERNER
    if isinstance(budget, Budget):
        steps = _Steps(budget.max_beta_steps)
    elif isinstance(budget, int):
        steps = _Steps(budget)
    else:
        steps = budget
    if t.free or not t.sort.is_ground:
        raise SortMismatch("head reduction needs a closed ground term")
    seen = {t.nid}
    trail = [t]
    while True:
        if memo is not None and t.nid in memo:
            form = memo[t.nid]
            if not (isinstance(form, Diverged) and not form.certain):
                break
        if t.is_symbol:
            form = Constructor(t.symbol, t.args)
            break
        head, args = _spine(t)
        # the head of a closed ground spine is an abstraction
        if not head.is_abs or not args:
            raise SortMismatch(f"stuck term {render_term(t)}")
        if not steps.take():
            form = Diverged(certain=False)
            break
        reduced = substitute(head.body, head.param, args[0], interner)
        for arg in args[1:]:
            reduced = interner.app(reduced, arg)
        t = reduced
        if t.nid in seen:
            form = Diverged(certain=True)
            break
        seen.add(t.nid)
        trail.append(t)
    if memo is not None:
        for node in trail:
            memo[node.nid] = form
    return form


# ---------------------------------------------------------------------------
# Language enumeration


def enumerate_language(t: TermNode, budget: Budget,
                       interner: Interner | None = None) -> LanguageSample:
    """All choice-free finite trees of size <= max_tree_size reachable from
    ``t``, as far as the step budget allows."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    steps = _Steps(budget.max_beta_steps)
    head_memo: dict[int, HeadForm] = {}
    expand_memo: dict[tuple[int, int], tuple[frozenset[RankedTree], bool]] = {}
    diverged = 0

    def expand(node: TermNode, size_cap: int) -> tuple[frozenset[RankedTree], bool]:
        nonlocal diverged
        key = (node.nid, size_cap)
        if key in expand_memo:
            return expand_memo[key]
        # resolve the choice closure iteratively (br spines can be very deep),
        # expanding each constructor head as soon as it appears so shallow
        # trees are completed before a deep spine exhausts the step budget
        clipped = False
        visited: set[int] = set()
        frontier = [node]
        trees: set[RankedTree] = set()
        while frontier:
            t = frontier.pop()
            if t.nid in visited:
                diverged += 1  # a pure-choice loop generates nothing
                continue
            visited.add(t.nid)
            form = head_reduce(t, steps, interner, head_memo)
            if isinstance(form, Diverged):
                if form.certain:
                    diverged += 1
                else:
                    clipped = True
                continue
            if form.symbol.name == "br":
                frontier.append(form.args[1])
                frontier.append(form.args[0])
                continue
            rank = form.symbol.rank
            if size_cap < 1:
                clipped = True
                continue
            if rank == 0:
                trees.add(RankedTree(form.symbol))
                continue
            # each sibling needs at least one node below the new root
            child_sets = []
            for arg in form.args:
                sub, cut = expand(arg, size_cap - rank)
                child_sets.append(sub)
                clipped = clipped or cut
            combos: list[tuple[RankedTree, ...]] = [()]
            for sub in child_sets:
                combos = [c + (t2,) for c in combos for t2 in sorted(sub, key=str)]
            trees.update(
                RankedTree(form.symbol, combo) for combo in combos
                if 1 + sum(tree_size(x) for x in combo) <= size_cap)
        result = (frozenset(trees), clipped)
        expand_memo[key] = result
        return result

    trees, clipped = expand(t, budget.max_tree_size)
    return LanguageSample(trees=trees, complete=not clipped,
                          diverged_branches=diverged)
