"""Synthesis, verification, and deadline learning on product automata.

Synthesis searches the product of the transition system and the annotated
automaton for an accepting path whose maximal deadline offset is minimal.
The recursion follows the annotation tree: window nodes score paths by
(#edges - 1) - deadline, concatenations glue paths at their shared state,
disjunctions keep the branch certified by the closing transition's choice
set, conjunctions intersect literal path sets and re-score by replaying
the window counters along the path.

Costs are measured against the full output word (initial label included),
so the search runs on the product extended with a virtual pre-initial edge
that consumes the initial state's label; every window's step count is then
uniformly #edges - 1 along its path segment.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .automaton import Alphabet, TreeNode
from .errors import NoPolicyError, TwtlError
from .formula import Formula, normalize, propositions
from .relaxation import Monitor, MonitorStatus, RelaxationResult
from .semantics import satisfies
from .system import ProductAutomaton, TransitionSystem, product
from .translate import translate

NEG_INF = float("-inf")
_PRE = ("pre",)
_MAX_ENUMERATED_PATHS = 500_000


@dataclass
class SynthesisResult:
    trajectory: Tuple[int, ...]  # transition-system state ids
    names: Tuple[str, ...]
    word: Tuple[frozenset, ...]  # full output word, h(x0) first
    tau_star: float
    relaxation: RelaxationResult
    product_states: int
    product_transitions: int


class _Search:
    """Path-set recursion over the annotation tree.

    Path sets map (begin, end) nodes of the search graph to frontiers of
    (length, tau, path) entries, Pareto-pruned on (length, tau) unless the
    exact flag keeps every entry.  Conjunction nodes run a breadth-first
    search that carries the window counters along, since their product
    structure already encodes simultaneous completion of both operands.
    """

    def __init__(self, ts, dfa, exact, cap):
        self.ts = ts
        self.dfa = dfa
        self.exact = exact
        self.cap = cap
        first = dfa.step(dfa.initial, ts.labels[ts.initial])
        if first is None:
            raise NoPolicyError(
                "the initial state's label blocks the automaton; no run "
                "satisfies any relaxation"
            )
        self.succ: Dict[object, List[object]] = {}
        start = (ts.initial, first)
        queue = deque([start])
        self.succ[start] = []
        while queue:
            x, s = queue.popleft()
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
            self.succ[(x, s)] = out
        self.succ[_PRE] = [start]
        self.preds: Dict[object, List[object]] = {s: [] for s in self.succ}
        for src, outs in self.succ.items():
            for dst in outs:
                self.preds[dst].append(src)
        self.finals = {p for p in self.succ if p != _PRE and p[1] in dfa.finals}

    # -- path primitives ----------------------------------------------------

    def _dfa_of(self, state):
        return self.dfa.initial if state == _PRE else state[1]

    def states_with(self, dfa_states):
        out = [p for p in self.succ if p != _PRE and p[1] in dfa_states]
        if self.dfa.initial in dfa_states:
            out.append(_PRE)
        return out

    def shortest_paths(self, begins, ends):
        """Lexicographically smallest shortest path per (begin, end)."""
        entries = {}
        for end in set(ends):
            dist = {end: 0}
            queue = deque([end])
            while queue:
                state = queue.popleft()
                for prev in self.preds.get(state, ()):
                    if prev not in dist:
                        dist[prev] = dist[state] + 1
                        queue.append(prev)
            for begin in begins:
                if begin not in dist:
                    continue
                path = [begin]
                cur = begin
                while cur != end:
                    cur = min(
                        (n for n in self.succ[cur] if dist.get(n) == dist[cur] - 1),
                        key=repr,
                    )
                    path.append(cur)
                entries[(begin, end)] = [(len(path) - 1, NEG_INF, tuple(path))]
        return entries

    def walks_from(self, begin, length):
        """Lexicographically smallest fixed-length walk per endpoint."""
        frontier = {begin: (begin,)}
        for _ in range(length):
            nxt_frontier = {}
            for state, walk in frontier.items():
                for nxt in self.succ[state]:
                    cand = walk + (nxt,)
                    if nxt not in nxt_frontier or cand < nxt_frontier[nxt]:
                        nxt_frontier[nxt] = cand
            frontier = nxt_frontier
        return list(frontier.values())

    # -- window-counter replay ------------------------------------------------

    def _fresh_counters(self, node: TreeNode):
        return {id(n): (False, False, -1) for n in node.within_nodes()}

    def _advance(self, node, counters, cur, prev, mask):
        """Counters after one monitor row; returns a new dict."""
        out = dict(counters)

        def update(n, constraints):
            if n is None or n.op == "hold":
                return
            if n.op == "within":
                ongoing, done, steps = out[id(n)]
                if cur in n.initials:
                    ongoing = True
                if cur in n.finals and (
                    constraints is None or (prev, mask) in constraints
                ):
                    ongoing, done = False, True
                if ongoing:
                    steps += 1
                out[id(n)] = (ongoing, done, steps)
                update(n.left, constraints)
                return
            if n.op == "cat":
                lc, rc = None, constraints
            elif n.op == "and":
                lc, rc = constraints, constraints
            else:
                both, left, right = n.choices
                lc, rc = left | both, right | both
                if constraints is not None:
                    lc, rc = lc & constraints, rc & constraints
            update(n.left, lc)
            update(n.right, rc)

        update(node, None)
        return out

    def _eval_counters(self, node, counters):
        """(tau, done) of a subtree from its window counters."""

        def evaluate(n):
            if n is None or n.is_primitive():
                return NEG_INF, True
            if n.op == "within":
                ch_star, ch_done = evaluate(n.left)
                ongoing, done, steps = counters[id(n)]
                if done:
                    return max(ch_star, steps - n.hi), ch_done
                return NEG_INF, False
            l_star, l_done = evaluate(n.left)
            r_star, r_done = evaluate(n.right)
            if n.op in ("and", "cat"):
                done = l_done and r_done
                return (max(l_star, r_star) if done else NEG_INF), done
            if l_done and r_done:
                return min(l_star, r_star), True
            if l_done:
                return l_star, True
            if r_done:
                return r_star, True
            return NEG_INF, False

        return evaluate(node)

    def replay(self, node: TreeNode, path):
        """(tau, done) of a subtree over a path segment; the first path
        state is the window-opening row."""
        counters = self._fresh_counters(node)
        counters = self._advance(node, counters, self._dfa_of(path[0]), None, None)
        for prev_state, cur_state in zip(path, path[1:]):
            mask = self.ts.labels[cur_state[0]]
            counters = self._advance(
                node, counters, cur_state[1], self._dfa_of(prev_state), mask
            )
        return self._eval_counters(node, counters)

    # -- recursion -----------------------------------------------------------

    def paths(self, node: TreeNode):
        if node.is_primitive():
            return self.primitive(node)
        if node.op == "within":
            return self.within(node)
        if node.op == "cat":
            return self.concatenate(node)
        if node.op == "or":
            return self.disjoin(node)
        if node.op == "and":
            return self.conjoin(node)
        raise TwtlError(f"unexpected tree node {node.op!r}")

    def primitive(self, node):
        return self.shortest_paths(
            self.states_with(node.initials), self.states_with(node.finals)
        )

    def within(self, node):
        if node.left.is_primitive():
            raw = self.shortest_paths(
                self.states_with(node.initials), self.states_with(node.finals)
            )
            return {
                key: [(ln, ln - 1 - node.hi, path) for ln, _, path in frontier]
                for key, frontier in raw.items()
            }
        child_paths = self.paths(node.left)
        by_begin: Dict[object, list] = {}
        for (cb, ce), frontier in child_paths.items():
            by_begin.setdefault(cb, []).append((ce, frontier))
        out: Dict[Tuple[object, object], list] = {}
        for begin in self.states_with(node.initials):
            for walk in self.walks_from(begin, node.lo):
                for ce, frontier in by_begin.get(walk[-1], ()):
                    for ln, tau, path in frontier:
                        total = node.lo + ln
                        out.setdefault((begin, ce), []).append(
                            (total, max(total - 1 - node.hi, tau), walk[:-1] + path)
                        )
        return self.pareto(out)

    def concatenate(self, node):
        left = self.paths(node.left)
        right = self.paths(node.right)
        by_begin: Dict[object, list] = {}
        for (rb, re), frontier in right.items():
            by_begin.setdefault(rb, []).append((re, frontier))
        out: Dict[Tuple[object, object], list] = {}
        for (lb, le), lfrontier in left.items():
            for re, rfrontier in by_begin.get(le, ()):
                for l_len, l_tau, l_path in lfrontier:
                    for r_len, r_tau, r_path in rfrontier:
                        out.setdefault((lb, re), []).append(
                            (l_len + r_len, max(l_tau, r_tau), l_path + r_path[1:])
                        )
        return self.pareto(out)

    def disjoin(self, node):
        both, left_pairs, right_pairs = node.choices
        left = self._filter_choice(self.paths(node.left), left_pairs | both)
        right = self._filter_choice(self.paths(node.right), right_pairs | both)
        merged: Dict[Tuple[object, object], Dict[tuple, tuple]] = {}
        for source in (left, right):
            for key, frontier in source.items():
                bucket = merged.setdefault(key, {})
                for ln, tau, path in frontier:
                    prev = bucket.get(path)
                    if prev is None or tau < prev[1]:
                        bucket[path] = (ln, tau, path)
        out = {key: list(bucket.values()) for key, bucket in merged.items()}
        return self.pareto(out)

    def _filter_choice(self, path_sets, pairs):
        """Keep paths whose closing transition certifies this operand."""
        out = {}
        for key, frontier in path_sets.items():
            kept = []
            for ln, tau, path in frontier:
                if ln == 0:
                    continue
                prev_dfa = self._dfa_of(path[-2])
                mask = self.ts.labels[path[-1][0]]
                if (prev_dfa, mask) in pairs:
                    kept.append((ln, tau, path))
            if kept:
                out[key] = kept
        return out

    def conjoin(self, node):
        """Breadth-first search carrying window counters: the conjunction's
        product states already synchronize both operands, so a path from the
        node's initial to its final states completes both; the counters
        recover the inner deadline offsets exactly as the monitor would."""
        ends = set(self.states_with(node.finals))
        out: Dict[Tuple[object, object], list] = {}
        for begin in self.states_with(node.initials):
            counters = self._advance(
                node, self._fresh_counters(node), self._dfa_of(begin), None, None
            )
            frontier = {(begin, self._freeze(counters)): (begin,)}
            for _ in range(self.cap + 1):
                nxt_frontier = {}
                for (state, frozen), path in frontier.items():
                    if state in ends:
                        tau, done = self._eval_counters(node, dict(frozen))
                        if done:
                            out.setdefault((begin, state), []).append(
                                (len(path) - 1, tau, path)
                            )
                        continue
                    for nxt in self.succ[state]:
                        mask = self.ts.labels[nxt[0]]
                        advanced = self._advance(
                            node, dict(frozen), nxt[1], self._dfa_of(state), mask
                        )
                        key = (nxt, self._freeze(advanced))
                        cand = path + (nxt,)
                        if key not in nxt_frontier or cand < nxt_frontier[key]:
                            nxt_frontier[key] = cand
                frontier = nxt_frontier
                if not frontier:
                    break
        return self.pareto(out)

    @staticmethod
    def _freeze(counters):
        return tuple(sorted(counters.items()))

    def pareto(self, path_sets):
        """Drop (length, tau)-dominated entries unless in exact mode."""
        out = {}
        for key, entries in path_sets.items():
            entries = sorted(set(entries), key=lambda e: (e[0], e[1], e[2]))
            if self.exact:
                out[key] = entries
                continue
            kept = []
            best_tau = math.inf
            for ln, tau, path in entries:
                if tau < best_tau:
                    kept.append((ln, tau, path))
                    best_tau = tau
            out[key] = kept
        return out


def synthesize(
    ts: TransitionSystem,
    f: Formula,
    exact: bool = False,
    path_cap: Optional[int] = None,
) -> SynthesisResult:
    """Trajectory whose output word minimizes the maximal deadline offset.

    The reported offset vector is recovered by monitoring the produced
    output word (initial label included).  Raises :class:`NoPolicyError`
    when no finite relaxation is achievable from the initial state.
    """
    phi = normalize(f)
    dfa = translate(phi, ts.alphabet, inf=True)
    prod = product(ts, dfa)
    if ts.initial is None:
        raise TwtlError("transition system has no initial state")
    cap = path_cap if path_cap is not None else len(prod.states) + 8
    search = _Search(ts, dfa, exact, cap)
    if not search.finals:
        raise NoPolicyError("no accepting product state is reachable")
    path_sets = search.paths(dfa.tree)
    candidates = []
    for (begin, end), frontier in path_sets.items():
        if begin != _PRE or end not in search.finals:
            continue
        candidates.extend(frontier)
    if not candidates:
        raise NoPolicyError("no accepting path from the initial state")
    candidates.sort(key=lambda e: (e[1], e[0], e[2]))
    length, tau, path = candidates[0]
    states = [x for x, _ in path[1:]]
    word = ts.output_symbols(states, include_initial=True)
    monitor = Monitor(phi, ts.alphabet)
    if monitor.feed(word) is not MonitorStatus.SATISFIED:
        raise TwtlError("internal error: synthesized word not accepted")
    result = monitor.result()
    return SynthesisResult(
        trajectory=tuple(states),
        names=tuple(ts.names[x] for x in states),
        word=word,
        tau_star=result.tau_star,
        relaxation=result,
        product_states=prod.num_states(),
        product_transitions=prod.num_transitions(),
    )


# ---------------------------------------------------------------------------
# Verification

def verify(ts: TransitionSystem, f: Formula) -> bool:
    """True iff every run satisfies some finite relaxation of ``f``.

    Completes the annotated automaton with a trap state on all blocking
    symbols of non-accepting states, builds the product, and reports false
    iff a product state with the trap component is reachable.
    """
    phi = normalize(f)
    dfa = translate(phi, ts.alphabet, inf=True)
    trapped = dfa.copy()
    trap = "trap"
    trapped.add_state(trap)
    for mask in trapped.alphabet.symbols():
        trapped.add_edge(trap, mask, trap)
    for state in sorted(dfa.states, key=repr):
        if state in dfa.finals:
            continue
        for mask in trapped.alphabet.symbols():
            if trapped.step(state, mask) is None:
                trapped.add_edge(state, mask, trap)
    prod = ProductAutomaton(ts, trapped)
    return not any(s == trap for _, s in prod.states)


# ---------------------------------------------------------------------------
# Deadline learning

def tight_deadline_table(
    traces: Iterable, template: Formula, alphabet: Optional[Alphabet] = None
):
    """Per-trace masked tight deadlines; None when no relaxation accepts."""
    phi = normalize(template)
    if alphabet is None:
        alphabet = Alphabet(propositions(phi))
    shared = translate(phi, alphabet, inf=True)
    rows = []
    for trace in traces:
        monitor = Monitor(phi, alphabet, dfa=shared)
        if monitor.feed(trace) is MonitorStatus.SATISFIED:
            rows.append(monitor.result().tight_deadlines)
        else:
            rows.append(None)
    return rows


def heuristic_cost(index: int, deadline: int, pos_tights, neg_tights) -> int:
    """False positives plus false negatives when window ``index`` gets this
    deadline: negatives whose tight value fits it, positives whose does not.

    A -inf tight value fits every deadline (the branch was skipped); a None
    row fits none (the trace never reached acceptance).
    """
    fp = sum(1 for row in neg_tights if row is not None and row[index] <= deadline)
    fn = sum(1 for row in pos_tights if row is None or row[index] > deadline)
    return fp + fn


def learn_deadlines(
    pos: Sequence,
    neg: Sequence,
    template: Formula,
    alphabet: Optional[Alphabet] = None,
) -> Tuple[int, ...]:
    """Greedy per-window deadline choice minimizing the heuristic count.

    Candidates come from positive traces' tight deadlines; ties resolve to
    the largest (most permissive) candidate.  The template's deadline values
    are placeholders; the annotated automaton does not depend on them.
    """
    phi = normalize(template)
    if alphabet is None:
        alphabet = Alphabet(propositions(phi))
    pos_tights = tight_deadline_table(pos, phi, alphabet)
    neg_tights = tight_deadline_table(neg, phi, alphabet)
    width = len(translate(phi, alphabet, inf=True).tree.within_nodes())
    learned = []
    for index in range(width):
        candidates = sorted(
            {
                int(row[index])
                for row in pos_tights
                if row is not None and row[index] != NEG_INF
            }
        )
        if not candidates:
            raise TwtlError(
                f"no positive trace exercises window {index}; nothing to learn"
            )
        best, best_cost = None, None
        for cand in candidates:
            cost = heuristic_cost(index, cand, pos_tights, neg_tights)
            if best_cost is None or cost <= best_cost:
                best, best_cost = cand, cost
        learned.append(best)
    return tuple(learned)


def misclassification(pos: Sequence, neg: Sequence, f: Formula) -> int:
    """Positives not satisfying plus negatives satisfying the formula."""
    return sum(1 for w in pos if not satisfies(w, f)) + sum(
        1 for w in neg if satisfies(w, f)
    )


# ---------------------------------------------------------------------------
# Problem-level cost functions

def objective(kind: str, x: int = 0, y: int = 0, tau: Sequence[float] = ()) -> float:
    """Cost functions of the three specializations of the search problem.

    verification: 1 - delta(y), minimized (0) iff no word violates;
    synthesis: max(tau) when a satisfying word exists (x > 0), else +inf;
    learning: x + y, the misclassification count.
    """
    if kind == "verification":
        return 0.0 if y == 0 else 1.0
    if kind == "synthesis":
        return float(max(tau)) if x > 0 else math.inf
    if kind == "learning":
        return float(x + y)
    raise ValueError(f"unknown objective {kind!r}")
