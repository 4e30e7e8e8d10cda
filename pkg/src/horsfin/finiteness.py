"""Decision procedure: bounded derivation search and pump detection.

The language of a scheme is infinite exactly when the root judgment (empty
environment, start term, the full type of its complexity with all marker
orders) is derivable with arbitrarily large flag counters, and that in turn
shows up as a *pump pair* inside a bounded derivation space: two judgments
on one branch that agree up to the flag counter.  The searcher below
enumerates that space demand-driven:

* environments are *relevant* - an entry records exactly the full types
  consumed at variable leaves underneath, so environments are outputs of
  the search, never guessed;
* the argument set of an abstraction is discovered from the demands its
  body makes, optionally widened by marker-free argument sets this binder
  was given elsewhere (a per-binder pool, iterated to a fixpoint), which
  is what lets a recursive unfolding close up on a repeated judgment;
* at an application whose operator spine ends in a variable, the operand
  side is enumerated first and the variable's demanded type is assembled
  from it, so argument sets are never drawn blindly from the full type
  universe unless a variable-headed operand of higher sort forces it.

Per branch, at most ``branch_occurrence_cap`` queries of the same
(subterm, marker set, type pattern) may be open at once; since equivalent
judgments share a query this never exceeds the cap on equivalent judgments
per branch, and it makes the recursion through recursion knots terminate.
Every yielded derivation replays exactly through the rule constructors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .bohm import RankedTree
from .terms import (
    DEFAULT_INTERNER, GROUND, Interner, Program, Symbol, TermNode,
    complexity, elaborate, ord_sort,
)
from .typesystem import (
    ArrowType, EMPTY_ENV, FullType, GroundType, GROUND_TYPE, IType, Judgment,
    JudgmentClass, PreconditionViolation, ResourceLimit, RuleInapplicable,
    TypeEnv, class_of, comp_masks, enumerate_itypes, has_hole, itype_fits_sort,
    itype_key, mask_below, mask_to_set, markers_mask, rule_app, rule_br,
    rule_con, rule_lambda, rule_var, type_key, union_envs,
)

RULE_BR = "BR"
RULE_VAR = "VAR"
RULE_LAMBDA = "LAMBDA"
RULE_CON = "CON"
RULE_APP = "APP"


@dataclass(frozen=True)
class Derivation:
    """A finite tree of rule instances; replaying the rule constructor on
    the premisses reproduces each conclusion, counter included."""

    conclusion: Judgment
    rule: str
    premisses: tuple["Derivation", ...]
    data: tuple = ()

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premisses)

    def judgments(self) -> Iterator[Judgment]:
        yield self.conclusion
        for p in self.premisses:
            yield from p.judgments()


@dataclass(frozen=True)
class SearchConfig:
    branch_occurrence_cap: int = 3
    max_operand_premisses: int = 4
    fulltype_enumeration_limit: int = 2048
    max_derivation_nodes: int = 500_000
    exhaustive: bool = True

    def __post_init__(self) -> None:
        if self.branch_occurrence_cap < 2:
            raise ValueError("a pump pair needs at least two occurrences per branch")


@dataclass(frozen=True)
class Finite:
    root_derivable: bool
    max_counter_seen: int


@dataclass(frozen=True)
class Infinite:
    pump: tuple[Judgment, Judgment, Derivation]  # ancestor, descendant, witness


@dataclass(frozen=True)
class Inconclusive:
    reason: str


Decision = Finite | Infinite | Inconclusive


# ---------------------------------------------------------------------------
# Query patterns


@dataclass(frozen=True)
class Pattern:
    """Expected type shape: one spec per pending argument position
    (``None`` = to be discovered), then a concrete tail type."""

    specs: tuple[Optional[frozenset[FullType]], ...]
    tail: IType

    @staticmethod
    def concrete(itype: IType) -> "Pattern":
        return Pattern((), itype)

    def prepend_hole(self) -> "Pattern":
        return Pattern((None,) + self.specs, self.tail)

    def prepend_fixed(self, argset: frozenset[FullType]) -> "Pattern":
        return Pattern((argset,) + self.specs, self.tail)

    def rest(self) -> "Pattern":
        if self.specs:
            return Pattern(self.specs[1:], self.tail)
        assert isinstance(self.tail, ArrowType)
        return Pattern((), self.tail.result)

    def first(self) -> Optional[frozenset[FullType]]:
        """The argument set expected at the next position, None for a hole.

        Only valid when the subject has arrow sort; ground tails have no
        first position.
        """
        if self.specs:
            return self.specs[0]
        assert isinstance(self.tail, ArrowType)
        return self.tail.arguments

    def is_ground(self) -> bool:
        return not self.specs and isinstance(self.tail, GroundType)

    def to_itype(self) -> IType:
        itype = self.tail
        for spec in reversed(self.specs):
            itype = ArrowType(spec, itype)
        return itype

    def key(self) -> tuple:
        return (tuple(
            None if s is None else tuple(sorted(type_key(ft) for ft in s))
            for s in self.specs), itype_key(self.tail))

    def matches(self, itype: IType) -> bool:
        """Does a concrete type agree with this pattern (holes match any set)?"""
        for spec in self.specs:
            if not isinstance(itype, ArrowType) or itype.arguments is None:
                return False
            if spec is not None and spec != itype.arguments:
                return False
            itype = itype.result
        return itype == self.tail


def _fill_itype(itype: IType, argset: frozenset[FullType]) -> IType:
    """Fill the leftmost unresolved argument position."""
    assert isinstance(itype, ArrowType)
    if itype.arguments is None:
        return ArrowType(argset, itype.result)
    return ArrowType(itype.arguments, _fill_itype(itype.result, argset))


def _fill_fulltype(ft: FullType, argset: frozenset[FullType]) -> FullType:
    return FullType(ft.order, ft.flags, ft.markers, _fill_itype(ft.itype, argset))


def _fill_env(env: TypeEnv, argset: frozenset[FullType]) -> TypeEnv:
    pending = [(name, ft) for name, fts in env.entries for ft in fts
               if has_hole(ft.itype)]
    assert len(pending) == 1, "exactly one pending demand expected on a spine"
    name, ft = pending[0]
    fts = set(env.get(name))
    fts.discard(ft)
    fts.add(_fill_fulltype(ft, argset))
    return env.bind(name, fts)


def _fill_deriv(d: Derivation, argset: frozenset[FullType]) -> Derivation:
    """Resolve the pending argument set along an operator spine."""
    j = d.conclusion
    new_j = Judgment(_fill_env(j.env, argset), j.subject,
                     _fill_fulltype(j.fulltype, argset), j.counter)
    if d.rule == RULE_VAR:
        stored = d.data[0]
        return Derivation(new_j, RULE_VAR, (), (_fill_fulltype(stored, argset),))
    assert d.rule == RULE_APP, "holes live only on operator spines"
    op = _fill_deriv(d.premisses[0], argset)
    return Derivation(new_j, RULE_APP, (op,) + d.premisses[1:], d.data)


def _widen_deriv(d: Derivation, var: str, extras: frozenset[FullType]) -> Optional[Derivation]:
    """Add marker-free full types to every environment entry for ``var``
    along judgments where it is free; None when the variable is not free."""
    if not extras:
        return d
    if var not in d.conclusion.subject.free:
        return None
    premisses = tuple(
        p if var not in p.conclusion.subject.free else _widen_deriv(p, var, extras)
        for p in d.premisses)
    j = d.conclusion
    new_env = j.env.bind(var, j.env.get(var) | extras)
    return Derivation(Judgment(new_env, j.subject, j.fulltype, j.counter),
                      d.rule, premisses, d.data)


def _subsets(mask: int) -> list[int]:
    """All submasks of ``mask``, ascending."""
    bits = [1 << i for i in mask_to_set(mask)]
    out = [0]
    for b in sorted(bits):
        out += [s | b for s in out]
    return sorted(out)


def _deriv_key(d: Derivation) -> tuple:
    j = d.conclusion
    env_key = tuple((n, tuple(type_key(ft) for ft in fts)) for n, fts in j.env.entries)
    return (j.counter, d.size(), j.subject.nid, type_key(j.fulltype), env_key,
            d.rule, tuple(_deriv_key(p) for p in d.premisses))


def _class_key(j: Judgment) -> tuple:
    env_key = tuple((n, tuple(type_key(ft) for ft in fts)) for n, fts in j.env.entries)
    return (j.subject.nid, type_key(j.fulltype), env_key)


# ---------------------------------------------------------------------------
# The searcher


class _Searcher:
    def __init__(self, order: int, config: SearchConfig, interner: Interner):
        self.m = order
        self.config = config
        self.interner = interner
        self.pools: dict[str, set[frozenset[FullType]]] = {}
        self.pool_grew = False
        self.truncated = False
        self.steps = 0

    # pool bookkeeping --------------------------------------------------
    def _pool_add(self, name: str, argset: frozenset[FullType]) -> None:
        pool = self.pools.setdefault(name, set())
        if argset not in pool:
            pool.add(argset)
            self.pool_grew = True

    def _budget_ok(self) -> bool:
        self.steps += 1
        if self.steps > self.config.max_derivation_nodes and not self.config.exhaustive:
            self.truncated = True
            return False
        return True

    # entry points -------------------------------------------------------
    def run(self, subject: TermNode, markers: int, pattern: Pattern) -> list[Derivation]:
        results: list[Derivation] = []
        for _ in range(12):  # widening pools grow monotonically; fixpoint is small
            self.pool_grew = False
            self.steps = 0
            results = self.query(subject, markers, pattern, {}, {})
            if not self.pool_grew:
                break
        return sorted(results, key=_deriv_key)

    def query(self, subject: TermNode, markers: int, pattern: Pattern,
              branch: dict, restrict: dict) -> list[Derivation]:
        if not self._budget_ok():
            return []
        key = (subject.nid, markers, pattern.key())
        if branch.get(key, 0) >= self.config.branch_occurrence_cap:
            return []
        branch[key] = branch.get(key, 0) + 1
        try:
            if subject.is_symbol:
                if subject.symbol.name == "br":
                    out = self._query_br(subject, markers, pattern, branch, restrict)
                else:
                    out = self._query_con(subject, markers, pattern, branch, restrict)
            elif subject.is_var:
                out = self._query_var(subject, markers, pattern, restrict)
            elif subject.is_abs:
                out = self._query_abs(subject, markers, pattern, branch, restrict)
            else:
                out = self._query_app(subject, markers, pattern, branch, restrict)
        finally:
            branch[key] -= 1
        return out

    # rule handlers -------------------------------------------------------
    def _query_br(self, subject, markers, pattern, branch, restrict):
        if not pattern.is_ground():
            return []
        out = []
        for which in (1, 2):
            chosen = subject.args[which - 1]
            other = subject.args[2 - which]
            for d in self.query(chosen, markers, pattern, branch, restrict):
                j = rule_br(d.conclusion, which, other, self.interner)
                out.append(Derivation(j, RULE_BR, (d,), (which,)))
        return out

    def _query_con(self, subject, markers, pattern, branch, restrict):
        if not pattern.is_ground():
            return []
        symbol = subject.symbol
        rank = symbol.rank
        if rank == 0:
            j = rule_con(symbol, [], markers, EMPTY_ENV, order=self.m,
                         interner=self.interner)
            return [Derivation(j, RULE_CON, (), (symbol, markers, self.m))]
        out = []
        bits = sorted(mask_to_set(markers))
        for assignment in itertools.product(range(rank), repeat=len(bits)):
            child_masks = [0] * rank
            for bit, child in zip(bits, assignment):
                child_masks[child] |= 1 << bit
            per_child = [
                self.query(arg, child_masks[i], pattern, branch, restrict)
                for i, arg in enumerate(subject.args)
            ]
            for combo in itertools.product(*per_child):
                env = union_envs(d.conclusion.env for d in combo)
                try:
                    j = rule_con(symbol, [d.conclusion for d in combo], 0, env,
                                 order=self.m, interner=self.interner)
                except RuleInapplicable:
                    continue
                out.append(Derivation(j, RULE_CON, tuple(combo),
                                      (symbol, 0, self.m)))
        return out

    def _query_var(self, subject, markers, pattern, restrict):
        out = []
        allowed = restrict.get(subject.name)
        if allowed is not None:
            for stored in sorted(allowed, key=type_key):
                if not pattern.matches(stored.itype):
                    continue
                if markers & mask_below(stored.order) != stored.markers:
                    continue
                env = EMPTY_ENV.bind(subject.name, [stored])
                try:
                    j = rule_var(env, subject, stored, self.m, markers)
                except RuleInapplicable:
                    continue
                out.append(Derivation(j, RULE_VAR, (), (stored,)))
            return out
        itype = pattern.to_itype()
        for k in range(ord_sort(subject.sort) + 1, self.m + 1):
            stored_markers = markers & mask_below(k)
            for flags in _subsets(mask_below(k) & ~markers):
                try:
                    stored = FullType(k, flags, stored_markers, itype)
                    concl = FullType(self.m, flags, markers, itype)
                except ValueError:
                    continue
                env = EMPTY_ENV.bind(subject.name, [stored])
                j = Judgment(env, subject, concl, 0)
                out.append(Derivation(j, RULE_VAR, (), (stored,)))
        return out

    def _argset_usable(self, argset, lam_order: int, param_sort) -> bool:
        seen = 0
        for ft in argset:
            if ft.order != lam_order or has_hole(ft.itype):
                return False
            if not itype_fits_sort(ft.itype, param_sort):
                return False
            if seen & ft.markers:
                return False
            seen |= ft.markers
        return True

    def _close_lambda(self, subject, env_outer_markers, body_deriv, argset):
        """Build the abstraction judgment over a body derivation whose
        environment entry for the binder is exactly ``argset``."""
        used = body_deriv.conclusion.env.get(subject.param)
        extras = frozenset(argset) - used
        if any(ft.markers for ft in extras):
            return None
        body = _widen_deriv(body_deriv, subject.param, extras)
        if body is None:
            return None
        env = body.conclusion.env.without(subject.param)
        try:
            j = rule_lambda(body.conclusion, env, subject, self.interner)
        except RuleInapplicable:
            return None
        if j.fulltype.markers != env_outer_markers:
            return None
        return Derivation(j, RULE_LAMBDA, (body,), ())

    def _query_abs(self, subject, markers, pattern, branch, restrict):
        if not pattern.specs and not isinstance(pattern.tail, ArrowType):
            return []
        first = pattern.first()
        rest = pattern.rest()
        lam_order = ord_sort(subject.sort)
        param = subject.param
        out = []
        if first is not None:
            # checking mode: the argument set is prescribed
            argset = first
            if not self._argset_usable(argset, lam_order, subject.param_sort):
                return []
            if markers & markers_mask(argset):
                return []
            self._pool_add(param, argset)
            body_markers = markers | markers_mask(argset)
            inner_restrict = dict(restrict)
            inner_restrict[param] = argset
            for body in self.query(subject.body, body_markers, rest, branch,
                                   inner_restrict):
                d = self._close_lambda(subject, markers, body, argset)
                if d is not None:
                    out.append(d)
            return out
        # inference mode: discover the argument set from the body's demands
        inner_restrict = dict(restrict)
        inner_restrict.pop(param, None)
        pool = sorted(self.pools.get(param, ()),
                      key=lambda s: tuple(sorted(type_key(ft) for ft in s)))
        for added in _subsets(mask_below(self.m) & ~markers):
            body_markers = markers | added
            for body in self.query(subject.body, body_markers, rest, branch,
                                   inner_restrict):
                used = body.conclusion.env.get(param)
                if markers_mask(used) != added:
                    continue
                if not self._argset_usable(used, lam_order, subject.param_sort):
                    continue
                variants = [used]
                for extra_set in pool:
                    widened = used | extra_set
                    if widened == used:
                        continue
                    if any(ft.markers for ft in extra_set - used):
                        continue
                    if not self._argset_usable(widened, lam_order, subject.param_sort):
                        continue
                    variants.append(widened)
                for argset in variants:
                    self._pool_add(param, frozenset(argset))
                    d = self._close_lambda(subject, markers, body, frozenset(argset))
                    if d is not None:
                        out.append(d)
        return out

    # application ---------------------------------------------------------
    def _assemble(self, candidates, need_mask, cover, max_count):
        """Choose premiss families: distinct classes, marker masks disjoint
        and summing to ``need_mask``, covering every element of ``cover``."""
        results = []
        n_elems = len(cover)

        def rec(idx, used_mask, covered, chosen, classes):
            if used_mask == need_mask and len(covered) == n_elems:
                results.append(list(chosen))
            if idx == len(candidates) or len(chosen) >= max_count:
                return
            # skip candidate idx
            rec(idx + 1, used_mask, covered, chosen, classes)
            elem, extra_mask, deriv = candidates[idx]
            ckey = _class_key(deriv.conclusion)
            if used_mask & extra_mask or ckey in classes:
                return
            chosen.append(candidates[idx])
            classes.add(ckey)
            new_covered = covered | ({elem} if elem is not None else set())
            rec(idx + 1, used_mask | extra_mask, new_covered, chosen, classes)
            chosen.pop()
            classes.discard(ckey)

        rec(0, 0, frozenset(), [], set())
        return results

    def _finish_app(self, subject, markers, op_deriv, premisses):
        envs = [op_deriv.conclusion.env] + [d.conclusion.env for d in premisses]
        env = union_envs(envs)
        try:
            j = rule_app(op_deriv.conclusion,
                         [d.conclusion for d in premisses], env,
                         operand_node=subject.operand, interner=self.interner)
        except RuleInapplicable:
            return None
        if j.fulltype.markers != markers:
            return None
        return Derivation(j, RULE_APP, (op_deriv,) + tuple(premisses),
                          (subject.operand,))

    def _query_app(self, subject, markers, pattern, branch, restrict):
        operator = subject.operator
        operand = subject.operand
        n = ord_sort(operator.sort)
        if n > self.m:
            return []
        low = mask_below(n)
        out = []
        op_pattern = pattern.prepend_hole()
        for op_markers in _subsets(markers):
            residue = markers & ~op_markers
            for op_res in self.query(operator, op_markers, op_pattern, branch,
                                     restrict):
                it = op_res.conclusion.fulltype.itype
                assert isinstance(it, ArrowType)
                if it.arguments is not None:
                    out.extend(self._app_cover(subject, markers, residue, n,
                                               op_res, it.arguments, branch,
                                               restrict))
                else:
                    out.extend(self._app_discover(subject, markers, residue, n,
                                                  op_res, branch, restrict))
        return out

    def _app_cover(self, subject, markers, residue, n, op_res, argset,
                   branch, restrict):
        """Operator expects a known argument set: derive a premiss family
        covering it, distributing leftover high markers."""
        low = mask_below(n)
        if markers_mask(argset) != residue & low:
            return []
        high = residue & ~low
        elements = sorted(argset, key=type_key)
        candidates = []
        for elem in elements:
            for extra in _subsets(high):
                m_i = elem.markers | extra
                for d in self.query(subject.operand, m_i,
                                    Pattern.concrete(elem.itype), branch,
                                    restrict):
                    if d.conclusion.fulltype.flags & low != elem.flags:
                        continue
                    candidates.append((elem, extra, d))
        out = []
        for family in self._assemble(candidates, high, elements,
                                     self.config.max_operand_premisses):
            premisses = [d for _, _, d in family]
            done = self._finish_app(subject, markers, op_res, premisses)
            if done is not None:
                out.append(done)
        return out

    def _app_discover(self, subject, markers, residue, n, op_res, branch,
                      restrict):
        """Variable-headed operator: enumerate operand judgments first and
        assemble the demanded argument set from them."""
        low = mask_below(n)
        operand = subject.operand
        limit = None if self.config.exhaustive else self.config.fulltype_enumeration_limit
        itypes, trunc = enumerate_itypes(operand.sort, limit)
        if trunc:
            self.truncated = True
        candidates = []
        for m_i in _subsets(residue):
            for itype in itypes:
                for d in self.query(operand, m_i, Pattern.concrete(itype),
                                    branch, restrict):
                    candidates.append((None, m_i, d))
        out = []
        families = self._assemble(candidates, residue, frozenset(),
                                  self.config.max_operand_premisses)
        for family in families:
            premisses = [d for _, _, d in family]
            argset = frozenset(
                FullType(n, d.conclusion.fulltype.flags & low,
                         d.conclusion.fulltype.markers & low,
                         d.conclusion.fulltype.itype)
                for d in premisses)
            try:
                filled = _fill_deriv(op_res, argset)
            except AssertionError:
                continue
            done = self._finish_app(subject, markers, filled, premisses)
            if done is not None:
                out.append(done)
        return out


# ---------------------------------------------------------------------------
# Public operations


def root_goal(root: TermNode) -> JudgmentClass:
    """The class whose unbounded derivability characterises infiniteness."""
    m = complexity(root)
    return JudgmentClass(EMPTY_ENV, root,
                         FullType(m, 0, mask_below(m), GROUND_TYPE))


@dataclass
class SearchOutcome:
    truncated: bool = False


def search_derivations(goal: JudgmentClass, config: SearchConfig | None = None,
                       interner: Interner | None = None,
                       outcome: SearchOutcome | None = None) -> Iterator[Derivation]:
    """All derivations of the goal class (any counter) within the bounded
    derivation space, deterministically ordered."""
    config = config or SearchConfig()
    interner = interner if interner is not None else DEFAULT_INTERNER
    searcher = _Searcher(goal.fulltype.order, config, interner)
    results = searcher.run(goal.subject, goal.fulltype.markers,
                           Pattern.concrete(goal.fulltype.itype))
    if outcome is not None:
        outcome.truncated = searcher.truncated
    for d in results:
        j = d.conclusion
        if j.env == goal.env and j.fulltype == goal.fulltype:
            yield d


def detect_pump(d: Derivation) -> Optional[tuple[Judgment, Judgment]]:
    paths = _detect_pump_paths(d)
    if paths is None:
        return None
    anc_path, desc_path = paths
    return _at_path(d, anc_path).conclusion, _at_path(d, desc_path).conclusion


def _at_path(d: Derivation, path: tuple[int, ...]) -> Derivation:
    for i in path:
        d = d.premisses[i]
    return d


def _detect_pump_paths(d: Derivation) -> Optional[tuple[tuple, tuple]]:
    """First (root-to-leaf, leftmost) branch pair of equivalent judgments
    with different counters."""
    stack: list[tuple[tuple, Judgment]] = []

    def walk(node: Derivation, path: tuple) -> Optional[tuple[tuple, tuple]]:
        j = node.conclusion
        key = _class_key(j)
        for anc_path, anc in stack:
            if _class_key(anc) == key and anc.counter != j.counter:
                return anc_path, path
        stack.append((path, j))
        for i, p in enumerate(node.premisses):
            hit = walk(p, path + (i,))
            if hit is not None:
                return hit
        stack.pop()
        return None

    return walk(d, ())


def replay(d: Derivation, interner: Interner | None = None) -> Derivation:
    """Re-run every rule constructor bottom-up; counters are recomputed."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    premisses = tuple(replay(p, interner) for p in d.premisses)
    j = d.conclusion
    if d.rule == RULE_VAR:
        new_j = rule_var(j.env, j.subject, d.data[0], j.fulltype.order,
                         j.fulltype.markers)
    elif d.rule == RULE_BR:
        which = d.data[0]
        other = j.subject.args[2 - which]
        new_j = rule_br(premisses[0].conclusion, which, other, interner)
    elif d.rule == RULE_LAMBDA:
        new_j = rule_lambda(premisses[0].conclusion, j.env, j.subject, interner)
    elif d.rule == RULE_CON:
        symbol, leaf_markers, order = d.data
        new_j = rule_con(symbol, [p.conclusion for p in premisses],
                         leaf_markers, j.env, order=order, interner=interner)
    elif d.rule == RULE_APP:
        new_j = rule_app(premisses[0].conclusion,
                         [p.conclusion for p in premisses[1:]], j.env,
                         operand_node=d.data[0], interner=interner)
    else:
        raise ValueError(f"unknown rule {d.rule}")
    return Derivation(new_j, d.rule, premisses, d.data)


def validate_derivation(d: Derivation, interner: Interner | None = None) -> None:
    """Assert that the derivation replays to itself, counters included."""
    replayed = replay(d, interner)
    if replayed != d:
        raise AssertionError("derivation does not replay to itself")


def splice_pump(d: Derivation, interner: Interner | None = None) -> Derivation:
    """Repeat the fragment between the detected pump pair once and replay.

    The result is a valid derivation whose root counter grows by exactly
    the pump pair's counter difference.
    """
    paths = _detect_pump_paths(d)
    if paths is None:
        raise PreconditionViolation("no pump pair in this derivation")
    anc_path, desc_path = paths
    pumped_subtree = _at_path(d, anc_path)

    def graft(node: Derivation, path: tuple) -> Derivation:
        if not path:
            return pumped_subtree
        i = path[0]
        premisses = list(node.premisses)
        premisses[i] = graft(premisses[i], path[1:])
        return Derivation(node.conclusion, node.rule, tuple(premisses), node.data)

    return replay(graft(d, desc_path), interner)


def decide_finiteness(program: Program, config: SearchConfig | None = None) -> Decision:
    """Is the language of the program finite?"""
    config = config or SearchConfig()
    root = elaborate(program)
    goal = root_goal(root)
    outcome = SearchOutcome()
    max_counter = 0
    derivable = False
    for d in search_derivations(goal, config, program.interner, outcome):
        derivable = True
        max_counter = max(max_counter, d.conclusion.counter)
        pump = _detect_pump_paths(d)
        if pump is not None:
            anc = _at_path(d, pump[0]).conclusion
            desc = _at_path(d, pump[1]).conclusion
            spliced = splice_pump(d, program.interner)
            expected = d.conclusion.counter + anc.counter - desc.counter
            assert spliced.conclusion.counter == expected
            return Infinite(pump=(anc, desc, d))
    if outcome.truncated and not config.exhaustive:
        return Inconclusive("search truncated by a resource limit")
    return Finite(root_derivable=derivable, max_counter_seen=max_counter)


def extract_tree_order0(d: Derivation) -> RankedTree:
    """Read a witness tree off an order-0 derivation; its size equals the
    derivation's flag counter."""
    j = d.conclusion
    if j.fulltype.order != 0 or j.fulltype.markers or j.fulltype.flags:
        raise PreconditionViolation("witness extraction needs the order-0 root type")
    if not j.env.is_empty():
        raise PreconditionViolation("witness extraction needs a closed judgment")

    def build(node: Derivation) -> RankedTree:
        if node.rule == RULE_BR:
            return build(node.premisses[0])
        if node.rule == RULE_CON:
            return RankedTree(node.data[0], tuple(build(p) for p in node.premisses))
        raise PreconditionViolation(f"unexpected {node.rule} rule at order 0")

    return build(d)


def min_counter_table(root: TermNode, config: SearchConfig | None = None,
                      interner: Interner | None = None) -> dict[JudgmentClass, int]:
    """Minimum flag counter per judgment class discovered while deriving
    the root goal."""
    config = config or SearchConfig()
    interner = interner if interner is not None else DEFAULT_INTERNER
    table: dict[JudgmentClass, int] = {}
    for d in search_derivations(root_goal(root), config, interner):
        for j in d.judgments():
            cls = class_of(j)
            if cls not in table or j.counter < table[cls]:
                table[cls] = j.counter
    return table
