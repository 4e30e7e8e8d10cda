"""Flag-and-marker intersection types and their derivation rules.

A full type is a simple intersection type decorated with a derivation
order ``k``, a set ``F`` of flag orders and a set ``M`` of marker orders
(disjoint subsets of ``{0..k-1}``).  Judgments additionally carry a flag
counter that counts flags of the maximal order; the finiteness decision
rests on whether that counter is bounded over all derivations of the root
goal.  This module provides the value types, the ``comp`` recurrence that
combines premiss flags and counters, the environment ``split`` relation,
and validating constructors for the five derivation rules (br, var,
lambda, constant, application).

Flag and marker sets are represented as little-endian bitmasks over orders;
helpers accept either masks or iterables of orders and results are exposed
as frozensets where tests want readable values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

from .terms import (
    DEFAULT_INTERNER, GROUND, Interner, Sort, Symbol, TermNode, ord_sort,
)


class RuleInapplicable(Exception):
    """A rule constructor was offered inputs it cannot accept."""


class PreconditionViolation(RuleInapplicable):
    pass


class ShapeMismatch(RuleInapplicable):
    pass


class DisjointnessViolation(RuleInapplicable):
    pass


class ArgumentTypeMismatch(RuleInapplicable):
    pass


class ResourceLimit(Exception):
    """An enumeration was truncated although exhaustiveness was demanded."""


# ---------------------------------------------------------------------------
# Order-set helpers (bitmask representation)


def mask_below(n: int) -> int:
    return (1 << n) - 1


def to_mask(orders: Union[int, Iterable[int]]) -> int:
    if isinstance(orders, int):
        return orders
    mask = 0
    for n in orders:
        mask |= 1 << n
    return mask


def mask_to_set(mask: int) -> frozenset[int]:
    out = []
    n = 0
    while mask:
        if mask & 1:
            out.append(n)
        mask >>= 1
        n += 1
    return frozenset(out)


# ---------------------------------------------------------------------------
# Types and full types


@dataclass(frozen=True)
class GroundType:
    def __str__(self) -> str:
        return "o"


GROUND_TYPE = GroundType()


@dataclass(frozen=True)
class ArrowType:
    """An intersection arrow: a finite set of full types to a result type.

    ``arguments is None`` marks an argument set that is not resolved yet;
    the search uses such holes while walking an application spine and they
    never appear in finished judgments.
    """

    arguments: Optional[frozenset["FullType"]]
    result: "IType"

    def __post_init__(self) -> None:
        if self.arguments is not None:
            orders = {ft.order for ft in self.arguments}
            if len(orders) > 1:
                raise ValueError("argument full types must share one order")

    def __str__(self) -> str:
        if self.arguments is None:
            args = "?"
        else:
            args = "{" + ",".join(str(ft) for ft in sorted(self.arguments, key=type_key)) + "}"
        return f"{args}->{self.result}"


IType = Union[GroundType, ArrowType]


@dataclass(frozen=True)
class FullType:
    order: int
    flags: int       # bitmask of flag orders
    markers: int     # bitmask of marker orders
    itype: IType

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ValueError("negative order")
        if self.flags & self.markers:
            raise ValueError("flag and marker sets must be disjoint")
        if (self.flags | self.markers) & ~mask_below(self.order):
            raise ValueError("flag/marker orders must lie below the order")

    @property
    def flag_set(self) -> frozenset[int]:
        return mask_to_set(self.flags)

    @property
    def marker_set(self) -> frozenset[int]:
        return mask_to_set(self.markers)

    def __str__(self) -> str:
        fl = "{" + ",".join(map(str, sorted(self.flag_set))) + "}"
        mk = "{" + ",".join(map(str, sorted(self.marker_set))) + "}"
        return f"({self.order},{fl},{mk},{self.itype})"


def full_type(order: int, flags, markers, itype: IType) -> FullType:
    """Convenience constructor taking iterables of orders."""
    return FullType(order, to_mask(flags), to_mask(markers), itype)


def itype_key(itype: IType) -> tuple:
    if isinstance(itype, GroundType):
        return (0, (0,), ())
    if itype.arguments is None:
        members = (1,)
    else:
        members = (0,) + tuple(sorted(type_key(ft) for ft in itype.arguments))
    return (1, members, itype_key(itype.result))


def type_key(ft: FullType) -> tuple:
    return (ft.order, ft.flags, ft.markers, itype_key(ft.itype))


def has_hole(itype: IType) -> bool:
    if isinstance(itype, GroundType):
        return False
    return itype.arguments is None or has_hole(itype.result)


def itype_fits_sort(itype: IType, sort: Sort) -> bool:
    """Does the type have the shape required by a sort (holes not allowed)?"""
    if isinstance(itype, GroundType):
        return sort.is_ground
    if sort.is_ground or itype.arguments is None:
        return False
    k = ord_sort(sort)
    for ft in itype.arguments:
        if ft.order != k or not itype_fits_sort(ft.itype, sort.argument):
            return False
    return itype_fits_sort(itype.result, sort.result)


# ---------------------------------------------------------------------------
# Type environments


@dataclass(frozen=True)
class TypeEnv:
    """Finite map from variable names to sets of full types, canonically
    ordered so that structural equality is semantic equality."""

    entries: tuple[tuple[str, tuple[FullType, ...]], ...] = ()

    @staticmethod
    def make(mapping: dict[str, Iterable[FullType]]) -> "TypeEnv":
        entries = []
        for name in sorted(mapping):
            fts = tuple(sorted(set(mapping[name]), key=type_key))
            if fts:
                entries.append((name, fts))
        return TypeEnv(tuple(entries))

    def get(self, name: str) -> frozenset[FullType]:
        for n, fts in self.entries:
            if n == name:
                return frozenset(fts)
        return frozenset()

    def variables(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    def bind(self, name: str, fts: Iterable[FullType]) -> "TypeEnv":
        mapping = {n: set(v) for n, v in self.entries}
        mapping[name] = set(fts)
        return TypeEnv.make(mapping)

    def without(self, name: str) -> "TypeEnv":
        return TypeEnv(tuple((n, v) for n, v in self.entries if n != name))

    def is_empty(self) -> bool:
        return not self.entries

    def __str__(self) -> str:
        if not self.entries:
            return "{}"
        parts = []
        for name, fts in self.entries:
            parts.append(name + ":{" + ",".join(str(ft) for ft in fts) + "}")
        return "{" + "; ".join(parts) + "}"


EMPTY_ENV = TypeEnv()


def union_envs(envs: Iterable[TypeEnv]) -> TypeEnv:
    mapping: dict[str, set[FullType]] = {}
    for env in envs:
        for name, fts in env.entries:
            mapping.setdefault(name, set()).update(fts)
    return TypeEnv.make(mapping)


def markers_of(value) -> frozenset[int]:
    """Marker orders of a full type, a set of full types, or an environment."""
    return mask_to_set(markers_mask(value))


def markers_mask(value) -> int:
    if isinstance(value, FullType):
        return value.markers
    if isinstance(value, TypeEnv):
        mask = 0
        for _, fts in value.entries:
            for ft in fts:
                mask |= ft.markers
        return mask
    mask = 0
    for ft in value:
        mask |= ft.markers
    return mask


def split(env: TypeEnv, parts: Sequence[TypeEnv]) -> bool:
    """May ``env`` distribute to the given premiss environments?

    Every part must be contained in ``env``, and every full type of ``env``
    that provides markers must reach some part (marker-free types may be
    duplicated or dropped freely).
    """
    for part in parts:
        for name, fts in part.entries:
            if not set(fts) <= env.get(name):
                return False
    for name, fts in env.entries:
        for ft in fts:
            if ft.markers and not any(ft in part.get(name) for part in parts):
                return False
    return True


# ---------------------------------------------------------------------------
# Judgments


@dataclass(frozen=True)
class Judgment:
    env: TypeEnv
    subject: TermNode
    fulltype: FullType
    counter: int

    def __str__(self) -> str:
        from .terms import render_term
        return (f"{self.env} |- {render_term(self.subject, top=False)} : "
                f"{self.fulltype} |> {self.counter}")


@dataclass(frozen=True)
class JudgmentClass:
    env: TypeEnv
    subject: TermNode
    fulltype: FullType

    def __str__(self) -> str:
        from .terms import render_term
        return f"{self.env} |- {render_term(self.subject, top=False)} : {self.fulltype}"


def class_of(judgment: Judgment) -> JudgmentClass:
    return JudgmentClass(judgment.env, judgment.subject, judgment.fulltype)


# ---------------------------------------------------------------------------
# The Comp_m recurrence


def comp(m: int, markers, inputs: Sequence[tuple]) -> tuple[frozenset[int], int]:
    flags_mask, counter = comp_masks(
        m, to_mask(markers), [(to_mask(f), c) for f, c in inputs])
    return mask_to_set(flags_mask), counter


def comp_masks(m: int, markers: int, inputs: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Combine premiss flag sets and counters at derivation order ``m``.

    Walking orders upward, a flag of order n is placed once per piece of
    order-(n-1) flag information whenever the order-(n-1) marker is visible;
    placed order-m flags feed the counter, placed lower flags feed the flag
    set unless their order already carries a marker.
    """
    if markers & ~mask_below(m):
        raise PreconditionViolation("markers beyond the derivation order")
    total = 0
    for f, c in inputs:
        if f & ~mask_below(m + 1):
            raise PreconditionViolation("premiss flags beyond the derivation order")
        if c < 0:
            raise PreconditionViolation("negative counter")
        total += c
    f_here = 0          # f'_n: flags placed on this judgment at order n
    flags_out = 0
    count_prev = 0      # f_{n-1}
    for n in range(m + 1):
        f_here = count_prev if (n > 0 and (markers >> (n - 1)) & 1) else 0
        count_n = f_here + sum(1 for f, _ in inputs if (f >> n) & 1)
        if n < m and count_n > 0 and not (markers >> n) & 1:
            flags_out |= 1 << n
        count_prev = count_n
    return flags_out, f_here + total


# ---------------------------------------------------------------------------
# Rule constructors


def _common_order(premisses: Sequence[Judgment]) -> int:
    orders = {p.fulltype.order for p in premisses}
    if len(orders) != 1:
        raise PreconditionViolation("premisses must share one derivation order")
    return orders.pop()


def rule_br(premiss: Judgment, which: int, other_child: TermNode,
            interner: Interner | None = None) -> Judgment:
    """Nondeterministic choice: the conclusion copies the chosen premiss."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    if which not in (1, 2):
        raise ShapeMismatch("choice must be 1 or 2")
    if not premiss.subject.sort.is_ground or not other_child.sort.is_ground:
        raise ShapeMismatch("br applies to ground terms")
    from .terms import BR
    if which == 1:
        subject = interner.symbol_app(BR, [premiss.subject, other_child])
    else:
        subject = interner.symbol_app(BR, [other_child, premiss.subject])
    return Judgment(premiss.env, subject, premiss.fulltype, premiss.counter)


def rule_var(env: TypeEnv, var_node: TermNode, stored: FullType,
             order: int, markers) -> Judgment:
    """Axiom: use a full type the environment provides for a variable.

    Marker orders >= the stored type's order may be placed here, at the
    leaf; below that threshold the markers must be exactly the stored ones.
    """
    if not var_node.is_var:
        raise ShapeMismatch("subject is not a variable")
    markers = to_mask(markers)
    k = stored.order
    if markers & mask_below(k) != stored.markers:
        raise PreconditionViolation(
            "markers below the stored order must match the stored markers")
    if not split(env, [EMPTY_ENV.bind(var_node.name, [stored])]):
        raise PreconditionViolation("environment does not split to the variable axiom")
    if not itype_fits_sort(stored.itype, var_node.sort):
        raise ShapeMismatch("stored type does not fit the variable's sort")
    try:
        ft = FullType(order, stored.flags, markers, stored.itype)
    except ValueError as exc:
        raise PreconditionViolation(str(exc)) from None
    return Judgment(env, var_node, ft, 0)


def rule_lambda(premiss: Judgment, env: TypeEnv,
                subject: TermNode | None = None,
                interner: Interner | None = None) -> Judgment:
    """Abstraction: bind the variable and drop the markers it provides."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    if subject is None:
        raise ShapeMismatch("the abstraction node must be supplied")
    if not subject.is_abs or subject.body is not premiss.subject:
        raise ShapeMismatch("premiss subject is not the body of the abstraction")
    argset = premiss.env.get(subject.param)
    lam_order = ord_sort(subject.sort)
    for ft in argset:
        if ft.order != lam_order:
            raise PreconditionViolation(
                f"argument type order {ft.order} differs from binder order {lam_order}")
        if not itype_fits_sort(ft.itype, subject.param_sort):
            raise PreconditionViolation("argument type does not fit the binder sort")
    inner = premiss.env.without(subject.param)
    if not split(env, [inner]):
        raise PreconditionViolation("environment does not split to the premiss")
    body_ft = premiss.fulltype
    concl = FullType(body_ft.order, body_ft.flags,
                     body_ft.markers & ~markers_mask(argset),
                     ArrowType(frozenset(argset), body_ft.itype))
    return Judgment(env, subject, concl, premiss.counter)


def constant_pair(m: int) -> tuple[int, int]:
    """The built-in (flags, counter) contribution of a constant node."""
    return (0, 1) if m == 0 else (1, 0)  # mask {0} == 1


def rule_con(symbol: Symbol, premisses: Sequence[Judgment], leaf_markers,
             env: TypeEnv, order: int | None = None,
             interner: Interner | None = None) -> Judgment:
    """Constant: place an order-0 flag and combine the argument premisses."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    if symbol.name == "br":
        raise ShapeMismatch("br has its own rule")
    if len(premisses) != symbol.rank:
        raise ShapeMismatch(
            f"{symbol.name} has rank {symbol.rank}, got {len(premisses)} premisses")
    leaf_markers = to_mask(leaf_markers)
    if premisses:
        m = _common_order(premisses)
        if order is not None and order != m:
            raise PreconditionViolation("explicit order contradicts the premisses")
        if leaf_markers:
            raise PreconditionViolation("markers may be placed only at leaves")
    else:
        if order is None:
            raise PreconditionViolation("a leaf needs an explicit derivation order")
        m = order
    for p in premisses:
        if not isinstance(p.fulltype.itype, GroundType):
            raise ShapeMismatch("constant arguments must have ground type")
    masks = [leaf_markers] + [p.fulltype.markers for p in premisses]
    markers = 0
    for piece in masks:
        if markers & piece:
            raise DisjointnessViolation("marker sets must be disjoint")
        markers |= piece
    if not split(env, [p.env for p in premisses]):
        raise PreconditionViolation("environment does not split to the premisses")
    inputs = [constant_pair(m)] + [(p.fulltype.flags, p.counter) for p in premisses]
    flags, counter = comp_masks(m, markers, inputs)
    subject = interner.symbol_app(symbol, [p.subject for p in premisses])
    return Judgment(env, subject, FullType(m, flags, markers, GROUND_TYPE), counter)


def rule_app(operator: Judgment, operands: Sequence[Judgment], env: TypeEnv,
             operand_node: TermNode | None = None,
             interner: Interner | None = None) -> Judgment:
    """Application: check the operand premisses against the operator's
    argument set; only their flag/marker information at or above the
    operator's order flows into the conclusion directly."""
    interner = interner if interner is not None else DEFAULT_INTERNER
    op_sort = operator.subject.sort
    if op_sort.is_ground:
        raise ShapeMismatch("operator has ground sort")
    n = ord_sort(op_sort)
    m = operator.fulltype.order
    if n > m:
        raise PreconditionViolation("operator order exceeds the derivation order")
    itype = operator.fulltype.itype
    if not isinstance(itype, ArrowType) or itype.arguments is None:
        raise ShapeMismatch("operator type is not a resolved arrow")
    if operands:
        if operand_node is None:
            operand_node = operands[0].subject
        for p in operands:
            if p.subject is not operand_node:
                raise ShapeMismatch("operand premisses talk about different terms")
            if p.fulltype.order != m:
                raise PreconditionViolation("premisses must share one derivation order")
    elif operand_node is None:
        raise ShapeMismatch("an empty premiss family needs the operand term")
    if operand_node.sort != op_sort.argument:
        raise ShapeMismatch("operand sort does not match the operator")
    low = mask_below(n)
    built = frozenset(
        FullType(n, p.fulltype.flags & low, p.fulltype.markers & low, p.fulltype.itype)
        for p in operands)
    if built != itype.arguments:
        raise ArgumentTypeMismatch(
            "operand premisses do not assemble the operator's argument set")
    seen_classes = set()
    for p in operands:
        key = (p.env, type_key(p.fulltype))
        if key in seen_classes:
            raise PreconditionViolation("duplicate premiss class at an application")
        seen_classes.add(key)
    markers = operator.fulltype.markers
    for p in operands:
        if markers & p.fulltype.markers:
            raise DisjointnessViolation("marker sets must be disjoint")
        markers |= p.fulltype.markers
    if not split(env, [operator.env] + [p.env for p in operands]):
        raise PreconditionViolation("environment does not split to the premisses")
    inputs = [(operator.fulltype.flags, operator.counter)]
    inputs += [(p.fulltype.flags & ~low, p.counter) for p in operands]
    flags, counter = comp_masks(m, markers, inputs)
    subject = interner.app(operator.subject, operand_node)
    return Judgment(env, subject, FullType(m, flags, markers, itype.result), counter)


# ---------------------------------------------------------------------------
# Finite type universes


class _Count:
    def __init__(self, limit: Optional[int], strict: bool):
        self.limit = limit
        self.strict = strict
        self.used = 0
        self.truncated = False

    def tick(self) -> bool:
        if self.limit is not None and self.used >= self.limit:
            self.truncated = True
            if self.strict:
                raise ResourceLimit("type enumeration limit reached")
            return False
        self.used += 1
        return True


def _iter_itypes(sort: Sort, count: _Count) -> Iterator[IType]:
    if sort.is_ground:
        if count.tick():
            yield GROUND_TYPE
        return
    k = ord_sort(sort)
    members = list(_iter_full_types(sort.argument, k, count))
    members.sort(key=type_key)
    results = list(_iter_itypes(sort.result, count))
    for size in range(len(members) + 1):
        for combo in itertools.combinations(members, size):
            for res in results:
                if not count.tick():
                    return
                yield ArrowType(frozenset(combo), res)


def _iter_full_types(sort: Sort, order: int, count: _Count) -> Iterator[FullType]:
    itypes = list(_iter_itypes(sort, count))
    pairs = []
    for flags in range(1 << order):
        for markers in range(1 << order):
            if flags & markers == 0:
                pairs.append((flags, markers))
    pairs.sort()
    for flags, markers in pairs:
        for itype in itypes:
            if not count.tick():
                return
            yield FullType(order, flags, markers, itype)


def enumerate_full_types(sort: Sort, order: int, limit: Optional[int] = None,
                         strict: bool = True) -> Iterator[FullType]:
    """All members of the finite full-type universe for a sort at an order.

    Deterministic order; raises :class:`ResourceLimit` when ``limit`` is
    exceeded and ``strict`` is set, otherwise stops quietly.
    """
    if order < ord_sort(sort):
        raise PreconditionViolation("order below the sort's own order")
    yield from _iter_full_types(sort, order, _Count(limit, strict))


def enumerate_itypes(sort: Sort, limit: Optional[int] = None,
                     strict: bool = False) -> tuple[list[IType], bool]:
    """The type universe of a sort, with a truncation flag."""
    count = _Count(limit, strict)
    out = list(_iter_itypes(sort, count))
    return out, count.truncated
