"""Bounded temporal logic with explicit time windows.

Parsing and direct semantics, compilation to strict finite automata
(deadline-bounded or annotated deadline-free), trace monitoring with
tightest-relaxation inference, and product-automaton synthesis,
verification, and deadline learning over finite transition systems.
"""

__version__ = "0.1.0"

from .automaton import (
    Alphabet,
    Dfa,
    TreeNode,
    check_unambiguous,
    dumps,
    is_finite_language,
    loads,
    prefix_overlap,
    relabel,
    relabel_tree,
    strictify,
    to_dot,
    truncate,
)
from .errors import (
    AmbiguityError,
    BlockedRunError,
    InfeasibleFormulaError,
    NoPolicyError,
    NormalizationError,
    ParseError,
    TwtlError,
    UnknownPropositionError,
)
from .formula import (
    And,
    Concat,
    Formula,
    Hold,
    Not,
    Or,
    Within,
    deadlines,
    format_formula,
    is_feasible,
    is_primitive,
    normalize,
    parse,
    propositions,
    push_negation,
    relax,
    time_bound,
    to_dfw,
    within_count,
    within_operators,
)
from .relaxation import Monitor, MonitorStatus, RelaxationResult, temporal_relaxation
from .semantics import accepts_exactly, evaluate, first_completion, satisfies
from .solve import (
    SynthesisResult,
    heuristic_cost,
    learn_deadlines,
    misclassification,
    objective,
    synthesize,
    tight_deadline_table,
    verify,
)
from .system import (
    ProductAutomaton,
    TransitionSystem,
    WeightedGraph,
    exists_relaxed_policy,
    expand_graph,
    parse_graph,
    product,
)
from .translate import (
    build_and,
    build_concat,
    build_hold,
    build_or,
    build_within,
    build_within_inf,
    translate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
