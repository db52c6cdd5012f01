"""Transition systems, weighted-graph expansion, and the product automaton.

A transition system moves in unit time steps.  Weighted environment graphs
(edges annotated with integer travel times) are expanded by splitting each
edge into a chain of unlabeled intermediate states, one per direction.

Conventions: a run is a state sequence x0 x1 ...; its output word is
h(x0) h(x1) ... (the initial label included).  The product automaton follows
the synchronous definition in which the DFA consumes the label of the
successor state, so h(x0) is not read by the product; solvers that optimize
monitor costs account for the initial label separately.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .automaton import Alphabet, Dfa
from .errors import TwtlError
from .formula import Formula, normalize, propositions
from .translate import translate


class TransitionSystem:
    """Finite transition system with propositional state labels."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.names: List[str] = []
        self.ids: Dict[str, int] = {}
        self.labels: List[int] = []  # mask per state
        self.succ: List[Set[int]] = []
        self.initial: Optional[int] = None

    def add_state(self, name: str, props: Iterable[str] = ()) -> int:
        if name in self.ids:
            raise TwtlError(f"duplicate state {name!r}")
        state = len(self.names)
        self.names.append(name)
        self.ids[name] = state
        self.labels.append(self.alphabet.mask(props))
        self.succ.append(set())
        return state

    def set_initial(self, name: str):
        self.initial = self._resolve(name)

    def add_transition(self, src, dst):
        self.succ[self._resolve(src)].add(self._resolve(dst))

    def _resolve(self, state) -> int:
        if isinstance(state, int):
            return state
        try:
            return self.ids[state]
        except KeyError:
            raise TwtlError(f"unknown state {state!r}") from None

    def num_states(self) -> int:
        return len(self.names)

    def num_transitions(self) -> int:
        return sum(len(s) for s in self.succ)

    def label(self, state: int) -> int:
        return self.labels[state]

    def output_word(self, run: Sequence, include_initial: bool = True):
        """Label masks along a run (state ids or names)."""
        states = [self._resolve(x) for x in run]
        if not include_initial:
            states = states[1:]
        return tuple(self.labels[x] for x in states)

    def output_symbols(self, run: Sequence, include_initial: bool = True):
        """Same as :meth:`output_word` but as proposition-name sets."""
        return tuple(
            self.alphabet.names(m) for m in self.output_word(run, include_initial)
        )

    def runs(self, length: int):
        """All runs with ``length`` transitions, from the initial state."""
        if self.initial is None:
            return
        stack = [(self.initial,)]
        for _ in range(length):
            stack = [run + (nxt,) for run in stack for nxt in sorted(self.succ[run[-1]])]
        yield from stack


# ---------------------------------------------------------------------------
# Weighted environment graphs

@dataclass
class WeightedGraph:
    """Environment description: nodes with labels, integer-time edges."""

    nodes: List[Tuple[str, Tuple[str, ...]]] = field(default_factory=list)
    initial: Optional[str] = None
    edges: List[Tuple[str, str, int, bool]] = field(default_factory=list)

    def add_node(self, name: str, props: Iterable[str] = ()):
        self.nodes.append((name, tuple(props)))

    def add_edge(self, u: str, v: str, weight: int, directed: bool = False):
        self.edges.append((u, v, weight, directed))


def parse_graph(text: str) -> WeightedGraph:
    """Parse the line-based environment format.

    Lines: ``state <name> [prop...]``, ``initial <name>``,
    ``edge <u> <v> <weight> [directed]``; ``#`` starts a comment.
    """
    graph = WeightedGraph()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "state":
                graph.add_node(parts[1], parts[2:])
            elif kind == "initial":
                graph.initial = parts[1]
            elif kind == "edge":
                directed = len(parts) > 4 and parts[4] == "directed"
                graph.add_edge(parts[1], parts[2], int(parts[3]), directed)
            else:
                raise TwtlError(f"unknown directive {kind!r} on line {lineno}")
        except (IndexError, ValueError) as exc:
            raise TwtlError(f"malformed line {lineno}: {raw!r}") from exc
    return graph


def expand_graph(
    graph: WeightedGraph,
    alphabet: Optional[Alphabet] = None,
    stay: object = "all",
) -> TransitionSystem:
    """Split each weighted edge into unit-time transitions.

    An edge of travel time w gains w-1 unlabeled intermediate states per
    direction.  ``stay`` controls self-loops: "all" (every expanded state
    may wait in place), "none", or an iterable of node names.
    """
    if alphabet is None:
        alphabet = Alphabet(sorted({p for _, props in graph.nodes for p in props}))
    ts = TransitionSystem(alphabet)
    for name, props in graph.nodes:
        ts.add_state(name, props)
    if graph.initial is not None:
        ts.set_initial(graph.initial)

    def chain(u, v, weight, tag):
        if weight < 1:
            raise TwtlError(f"edge {u}->{v} has non-positive travel time {weight}")
        prev = u
        for i in range(weight - 1):
            prev = ts.names[ts.add_state(f"{u}~{v}~{tag}{i}")]
        ts.add_transition(prev, v)
        cur = u
        for i in range(weight - 1):
            ts.add_transition(cur, f"{u}~{v}~{tag}{i}")
            cur = f"{u}~{v}~{tag}{i}"

    for idx, (u, v, weight, directed) in enumerate(graph.edges):
        chain(u, v, weight, f"f{idx}.")
        if not directed and u != v:
            chain(v, u, weight, f"b{idx}.")
    if stay == "all":
        for state in range(ts.num_states()):
            ts.succ[state].add(state)
    elif stay != "none" and stay is not None:
        for name in stay:
            ts.add_transition(name, name)
    return ts


# ---------------------------------------------------------------------------
# Product automaton

class ProductAutomaton:
    """Reachable synchronous product of a transition system and a DFA."""

    def __init__(self, ts: TransitionSystem, dfa: Dfa):
        if ts.alphabet != dfa.alphabet:
            raise TwtlError("transition system and automaton alphabets differ")
        self.ts = ts
        self.dfa = dfa
        if ts.initial is None:
            raise TwtlError("transition system has no initial state")
        self.initial = (ts.initial, dfa.initial)
        self.succ: Dict[Tuple[int, object], List[Tuple[int, object]]] = {}
        queue = deque([self.initial])
        self.succ[self.initial] = []
        while queue:
            state = queue.popleft()
            x, s = state
            out = []
            for x2 in sorted(ts.succ[x]):
                s2 = dfa.step(s, ts.labels[x2])
                if s2 is None:
                    continue
                nxt = (x2, s2)
                out.append(nxt)
                if nxt not in self.succ:
                    self.succ[nxt] = []
                    queue.append(nxt)
            self.succ[state] = out
        self.states = list(self.succ)
        self.finals = {p for p in self.states if p[1] in dfa.finals}

    def num_states(self) -> int:
        return len(self.states)

    def num_transitions(self) -> int:
        return sum(len(v) for v in self.succ.values())

    def project(self, path: Sequence[Tuple[int, object]]):
        """Transition-system state sequence of a product path."""
        return tuple(x for x, _ in path)


def product(ts: TransitionSystem, dfa: Dfa) -> ProductAutomaton:
    return ProductAutomaton(ts, dfa)


def exists_relaxed_policy(ts: TransitionSystem, f: Formula) -> bool:
    """True iff some finite relaxation of ``f`` is satisfiable on ``ts``."""
    phi = normalize(f)
    dfa = translate(phi, ts.alphabet, inf=True)
    return bool(ProductAutomaton(ts, dfa).finals)
