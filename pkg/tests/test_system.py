"""Transition systems, graph expansion, and the product automaton."""

import pytest

from conftest import random_system
from twtl.automaton import Alphabet
from twtl.casestudies import five_region_graph, five_region_system, ring_system
from twtl.errors import TwtlError
from twtl.formula import normalize, parse
from twtl.semantics import accepts_exactly
from twtl.system import (
    ProductAutomaton,
    TransitionSystem,
    WeightedGraph,
    exists_relaxed_policy,
    expand_graph,
    parse_graph,
    product,
)
from twtl.translate import translate


class TestExpansion:
    def test_five_region_counts(self):
        ts = five_region_system()
        assert ts.num_states() == 27
        assert ts.num_transitions() == 67

    def test_unit_edge_adds_no_intermediates(self):
        g = WeightedGraph()
        g.add_node("u")
        g.add_node("v")
        g.initial = "u"
        g.add_edge("u", "v", 1)
        ts = expand_graph(g, Alphabet([]), stay="none")
        assert ts.num_states() == 2
        assert ts.num_transitions() == 2  # both directions

    def test_weight_three_undirected(self):
        g = WeightedGraph()
        g.add_node("u")
        g.add_node("v")
        g.initial = "u"
        g.add_edge("u", "v", 3)
        ts = expand_graph(g, Alphabet([]), stay="none")
        assert ts.num_states() == 2 + 2 * 2  # two intermediates per direction
        assert ts.num_transitions() == 6

    def test_directed_edge_single_chain(self):
        g = WeightedGraph()
        g.add_node("u")
        g.add_node("v")
        g.initial = "u"
        g.add_edge("u", "v", 2, directed=True)
        ts = expand_graph(g, Alphabet([]), stay="none")
        assert ts.num_states() == 3
        assert ts.num_transitions() == 2

    def test_non_positive_weight_rejected(self):
        g = WeightedGraph()
        g.add_node("u")
        g.add_node("v")
        g.add_edge("u", "v", 0)
        with pytest.raises(TwtlError):
            expand_graph(g, Alphabet([]))

    def test_expansion_round_trip(self):
        """Contracting the unlabeled chains recovers the weighted edges."""
        graph = five_region_graph()
        ts = expand_graph(graph, Alphabet(["A", "B", "C", "D"]), stay="none")
        waypoints = {ts.ids[name] for name, _ in graph.nodes}

        def contract(start):
            found = {}
            for nxt in ts.succ[start]:
                cur, dist = nxt, 1
                while cur not in waypoints:
                    (cur,) = [c for c in ts.succ[cur] if c != cur]
                    dist += 1
                found.setdefault(ts.names[cur], dist)
            return found

        expected = {}
        for u, v, w, _ in graph.edges:
            expected.setdefault(u, {})[v] = w
            expected.setdefault(v, {})[u] = w
        for name, _ in graph.nodes:
            assert contract(ts.ids[name]) == expected.get(name, {})


class TestGraphFormat:
    TEXT = """
    # small environment
    state u A
    state v B C
    initial u
    edge u v 2
    edge v v 1 directed
    """

    def test_parse_and_expand(self):
        graph = parse_graph(self.TEXT)
        assert graph.initial == "u"
        ts = expand_graph(graph, stay="none")
        assert set(ts.alphabet.props) == {"A", "B", "C"}
        assert ts.num_states() == 4
        # u->i, i->v, v->i', i'->u, v->v
        assert ts.num_transitions() == 5

    def test_malformed_line(self):
        with pytest.raises(TwtlError):
            parse_graph("edge u v\n")
        with pytest.raises(TwtlError):
            parse_graph("frobnicate u\n")


class TestProduct:
    def test_alphabet_mismatch(self):
        ts = ring_system()
        dfa = translate(parse("H^1 A", ["A"]), Alphabet(["A"]))
        with pytest.raises(TwtlError):
            product(ts, dfa)

    def test_all_states_reachable(self):
        ts = ring_system()
        dfa = translate(normalize(parse("[H^1 A]^[1,2]", ["A", "B"])), ts.alphabet, inf=True)
        prod = product(ts, dfa)
        seen = {prod.initial}
        stack = [prod.initial]
        while stack:
            for nxt in prod.succ[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        assert seen == set(prod.states)

    def test_acceptance_matches_word_acceptance(self, rng):
        """A run's successor-label word is accepted by the automaton iff the
        lifted product path ends in an accepting product state."""
        alpha = Alphabet(["A", "B"])
        f = normalize(parse("[H^1 A]^[0,3] . [H^0 B]^[0,2]", alpha.props))
        dfa = translate(f, alpha, inf=True)
        for _ in range(30):
            ts = random_system(rng, alpha, max_states=6)
            prod = product(ts, dfa)
            index = {p: i for i, p in enumerate(prod.states)}
            for run in ts.runs(7):
                word = ts.output_word(run, include_initial=False)
                state = (ts.initial, dfa.initial)
                alive = state in index
                for x, mask in zip(run[1:], word):
                    nxt = dfa.step(state[1], mask)
                    if nxt is None:
                        alive = False
                        break
                    state = (x, nxt)
                assert dfa.accepts(word) == (alive and state in prod.finals)

    def test_no_satisfying_run_means_no_finals(self):
        alpha = Alphabet(["A", "D"])
        ts = TransitionSystem(alpha)
        ts.add_state("u", ["A"])
        ts.set_initial("u")
        ts.add_transition("u", "u")
        f = normalize(parse("[H^1 D]^[0,3]", alpha.props))
        prod = product(ts, translate(f, alpha, inf=True))
        assert not prod.finals


class TestExistsRelaxedPolicy:
    def test_tour_environment(self):
        ts = five_region_system()
        f = parse("[H^2 A]^[0,6] . ([H^1 B]^[0,3] | [H^1 C]^[1,4]) . [H^1 D]^[0,6]")
        assert exists_relaxed_policy(ts, f)

    def test_missing_region_unreachable_goal(self):
        alpha = Alphabet(["A", "B", "C", "D"])
        ts = TransitionSystem(alpha)
        ts.add_state("a", ["A"])
        ts.set_initial("a")
        ts.add_transition("a", "a")
        f = parse("[H^2 A]^[0,6] . ([H^1 B]^[0,3] | [H^1 C]^[1,4]) . [H^1 D]^[0,6]")
        assert not exists_relaxed_policy(ts, f)

    def test_ring_window_formula(self):
        assert exists_relaxed_policy(ring_system(), parse("[H^1 A]^[1,2]", ["A", "B"]))


class TestOutputWords:
    def test_initial_label_included_by_default(self):
        ts = ring_system()
        run = [ts.ids["s0"], ts.ids["s1"]]
        assert ts.output_symbols(run) == (frozenset("A"), frozenset("B"))
        assert ts.output_symbols(run, include_initial=False) == (frozenset("B"),)
