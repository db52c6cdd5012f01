"""Built-in scenarios exercising every solver end to end.

Four scenarios: monitoring a service tour with relaxation inference,
policy synthesis in a five-region environment, verification of a ring
system, and deadline learning from labeled traces.  Each ``run_*``
function returns a plain dict of results so the command line and the
acceptance tests share one implementation.
"""

from __future__ import annotations

from typing import Dict

from .automaton import Alphabet
from .formula import normalize, parse
from .relaxation import Monitor
from .solve import (
    heuristic_cost,
    learn_deadlines,
    misclassification,
    synthesize,
    tight_deadline_table,
    verify,
)
from .system import ProductAutomaton, TransitionSystem, WeightedGraph, expand_graph
from .translate import translate

TOUR_PROPS = ("A", "B", "C", "D")
TOUR_FORMULA = "[H^2 A]^[0,6] . ([H^1 B]^[0,3] | [H^1 C]^[1,4]) . [H^1 D]^[0,6]"

# Symbols of the reference tour word: service A, then B and C together,
# then D, with idle gaps.
TOUR_WORD = (
    (),
    ("A",),
    ("A",),
    ("A",),
    (),
    ("B", "C"),
    ("B", "C"),
    (),
    ("D",),
    ("D",),
)


def tour_formula():
    return parse(TOUR_FORMULA, TOUR_PROPS)


def tour_alphabet() -> Alphabet:
    return Alphabet(TOUR_PROPS)


def five_region_graph() -> WeightedGraph:
    """Five points of interest with integer travel times."""
    graph = WeightedGraph()
    for name, props in [
        ("Base", ()),
        ("A", ("A",)),
        ("B", ("B",)),
        ("C", ("C",)),
        ("D", ("D",)),
    ]:
        graph.add_node(name, props)
    graph.initial = "Base"
    for u, v, w in [
        ("Base", "A", 2),
        ("Base", "B", 1),
        ("Base", "C", 1),
        ("Base", "D", 2),
        ("A", "B", 3),
        ("A", "C", 2),
        ("A", "D", 3),
        ("B", "C", 3),
        ("C", "D", 3),
    ]:
        graph.add_edge(u, v, w)
    return graph


def five_region_system() -> TransitionSystem:
    return expand_graph(five_region_graph(), tour_alphabet(), stay="all")


def ring_system() -> TransitionSystem:
    """Five-state ring whose initial state may also wait in place."""
    alphabet = Alphabet(("A", "B"))
    ts = TransitionSystem(alphabet)
    for name, props in [
        ("s0", ("A",)),
        ("s1", ("B",)),
        ("s2", ("B",)),
        ("s3", ()),
        ("s4", ("A",)),
    ]:
        ts.add_state(name, props)
    ts.set_initial("s0")
    for u, v in [("s0", "s1"), ("s1", "s2"), ("s2", "s3"), ("s3", "s4"), ("s4", "s0"), ("s0", "s0")]:
        ts.add_transition(u, v)
    return ts


LEARNING_TEMPLATE = "[H^1 A]^[0,1] . [H^2 B]^[0,2]"  # deadline values are placeholders

LEARNING_POSITIVE = (
    (("A",), ("A",), ("A",), ("B",), ("B",), ("B",), ("B",), ()),
    ((), ("A",), ("A",), (), ("B",), ("B",), ("B",), ()),
)
LEARNING_NEGATIVE = (
    (("B",), (), ("A",), ("A",), ("B",), ("B",), ("B",), ("B",)),
    ((), ("A",), ("A",), (), (), ("B",), ("B",), ("B",)),
)


# ---------------------------------------------------------------------------
# Runners

def run_relaxation() -> Dict:
    monitor = Monitor(tour_formula(), tour_alphabet())
    monitor.feed(TOUR_WORD)
    result = monitor.result()
    return {
        "formula": TOUR_FORMULA,
        "word": [",".join(sorted(s)) if s else "-" for s in TOUR_WORD],
        "automaton_states": monitor.dfa.num_states(),
        "trace": [
            {"state": state, "windows": rows} for state, rows in monitor.trace
        ],
        "satisfied": result.satisfied,
        "tight": list(result.tight),
        "tau": list(result.tau),
        "tau_star": result.tau_star,
    }


def run_synthesis() -> Dict:
    ts = five_region_system()
    formula = tour_formula()
    result = synthesize(ts, formula)
    bounded = translate(normalize(formula), ts.alphabet, inf=False)
    bounded_product = ProductAutomaton(ts, bounded)
    return {
        "formula": TOUR_FORMULA,
        "system_states": ts.num_states(),
        "system_transitions": ts.num_transitions(),
        "annotated_product_states": result.product_states,
        "annotated_product_transitions": result.product_transitions,
        "bounded_product_states": bounded_product.num_states(),
        "bounded_product_transitions": bounded_product.num_transitions(),
        "trajectory": list(result.names),
        "waypoints": [n for n in result.names if "~" not in n],
        "word": [",".join(sorted(s)) if s else "-" for s in result.word],
        "tau_star": result.tau_star,
        "tau": list(result.relaxation.tau),
    }


def run_verification() -> Dict:
    ts = ring_system()
    first = verify(ts, parse("[H^1 A]^[1,2]"))
    second = verify(ts, parse("[H^1 !B]^[1,2]"))
    return {
        "system_states": ts.num_states(),
        "results": {"[H^1 A]^[1,2]": first, "[H^1 !B]^[1,2]": second},
    }


def run_learning() -> Dict:
    template = parse(LEARNING_TEMPLATE)
    alphabet = Alphabet(("A", "B"))
    pos, neg = list(LEARNING_POSITIVE), list(LEARNING_NEGATIVE)
    pos_tights = tight_deadline_table(pos, template, alphabet)
    neg_tights = tight_deadline_table(neg, template, alphabet)
    learned = learn_deadlines(pos, neg, template, alphabet)
    costs = {
        f"d{k + 1}={d}": heuristic_cost(k, d, pos_tights, neg_tights)
        for k, d in [(0, 2), (0, 3), (1, 2), (1, 3), (1, 4)]
    }
    learned_formula = parse(
        f"[H^1 A]^[0,{learned[0]}] . [H^2 B]^[0,{learned[1]}]"
    )
    return {
        "template": LEARNING_TEMPLATE,
        "positive_tight": [list(r) if r else None for r in pos_tights],
        "negative_tight": [list(r) if r else None for r in neg_tights],
        "learned": list(learned),
        "heuristic_costs": costs,
        "misclassification": misclassification(pos, neg, learned_formula),
    }


RUNNERS = {
    "relaxation": run_relaxation,
    "synthesis": run_synthesis,
    "verification": run_verification,
    "learning": run_learning,
}
