"""Finiteness analysis for nondeterministic higher-order recursion schemes.

The package decides whether the set of finite, choice-free trees generated
by a scheme (a closed ground term of a simply typed lambda calculus with
recursion) is finite.  The decision procedure derives annotated
intersection types whose flag counters measure producible tree sizes and
looks for a pumpable repetition in a bounded derivation space; an
independent bounded Böhm-tree enumeration serves as a cross-checking
oracle.
"""

from .terms import (
    GROUND, Sort, Symbol, TermNode, Program, Interner,
    arrow, ord_sort, complexity, subterm_universe, elaborate,
    SortMismatch, RankMismatch, UnknownName, TermError,
)
from .parser import parse_program, ProgramSyntaxError
from .bohm import (
    Budget, LanguageSample, RankedTree, enumerate_language, head_reduce,
    substitute, tree_size,
)
from .typesystem import (
    FullType, IType, Judgment, JudgmentClass, TypeEnv, GROUND_TYPE,
    comp, split, markers_of, class_of, enumerate_full_types,
)
from .finiteness import (
    Decision, Derivation, Finite, Inconclusive, Infinite, SearchConfig,
    decide_finiteness, detect_pump, extract_tree_order0, min_counter_table,
    root_goal, search_derivations,
)

__all__ = [name for name in dir() if not name.startswith("_")]
