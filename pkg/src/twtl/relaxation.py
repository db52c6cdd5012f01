"""Infer the tightest deadline offsets of a word by simulating the annotated
automaton while updating per-window progress counters.

Each window node tracks (ongoing, done, steps): the window opens when the
run enters one of the node's initial states, every symbol consumed while
open increments the counter, and the window closes at the node's final
states.  Closing a window that sits under a disjunction additionally
requires the closing transition to belong to the branch's choice set, so
that completing one operand does not credit the other.  ``steps - hi`` is
then the tightest admissible offset of that window's deadline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

from .automaton import Alphabet, Dfa
from .errors import BlockedRunError
from .formula import Formula, normalize, propositions
from .translate import translate

NEG_INF = float("-inf")


class MonitorStatus(enum.Enum):
    ONGOING = "ongoing"
    SATISFIED = "satisfied"
    VIOLATED = "violated"


@dataclass(frozen=True)
class RelaxationResult:
    """Outcome of monitoring a word.

    ``tau`` is the reported offset vector (post-order over window
    operators); entries of branches not needed for satisfaction are -inf.
    ``tight`` is the raw per-window value without disjunction masking.
    ``tau_star`` is the minimum maximal offset certified by the run.
    """

    tau_star: float
    tau: Tuple[float, ...]
    tight: Tuple[float, ...]
    satisfied: bool
    deadlines: Tuple[int, ...]

    @property
    def tight_deadlines(self) -> Tuple[float, ...]:
        """Masked completion positions (tau + deadline); -inf where unused."""
        return tuple(
            t + b if t != NEG_INF else NEG_INF for t, b in zip(self.tau, self.deadlines)
        )


class Monitor:
    """Incremental runner over the annotated automaton.

    ``step`` consumes one symbol and reports the status.  Once satisfied,
    further symbols are ignored; once violated (the run left the automaton,
    so no finite relaxation accepts any extension), the monitor stays
    violated.
    """

    def __init__(
        self,
        f: Formula,
        alphabet: Optional[Alphabet] = None,
        dfa: Optional[Dfa] = None,
    ):
        self.formula = normalize(f)
        if alphabet is None:
            alphabet = Alphabet(propositions(self.formula))
        self.alphabet = alphabet
        # an annotated automaton translated from the same formula may be
        # shared across monitors; each monitor keeps only its own counters
        self.dfa: Dfa = dfa if dfa is not None else translate(
            self.formula, alphabet, inf=True
        )
        self.windows = self.dfa.tree.within_nodes()
        self._state = {id(n): [False, False, -1] for n in self.windows}
        self.current = self.dfa.initial
        self.status = MonitorStatus.ONGOING
        self.trace = []
        self._update(self.dfa.tree, self.current, None, None, None)
        self._record()
        if self.current in self.dfa.finals:
            self.status = MonitorStatus.SATISFIED

    # -- run ------------------------------------------------------------

    def step(self, symbol) -> MonitorStatus:
        """Consume one symbol (iterable of proposition names, or a mask)."""
        if self.status is not MonitorStatus.ONGOING:
            return self.status
        mask = symbol if isinstance(symbol, int) else self.alphabet.mask(symbol)
        nxt = self.dfa.step(self.current, mask)
        if nxt is None:
            self.status = MonitorStatus.VIOLATED
            return self.status
        prev, self.current = self.current, nxt
        self._update(self.dfa.tree, self.current, prev, mask, None)
        self._record()
        if self.current in self.dfa.finals:
            self.status = MonitorStatus.SATISFIED
        return self.status

    def feed(self, word) -> MonitorStatus:
        for symbol in word:
            if self.step(symbol) is not MonitorStatus.ONGOING:
                break
        return self.status

    def _update(self, node, current, prev, mask, constraints):
        """``constraints`` is None when unconstrained; a (possibly empty)
        set restricts which transitions may close a window."""
        if node is None or node.op == "hold":
            return
        if node.op == "within":
            state = self._state[id(node)]
            if current in node.initials:
                state[0] = True
            if current in node.finals and (
                constraints is None or (prev, mask) in constraints
            ):
                state[0] = False
                state[1] = True
            if state[0]:
                state[2] += 1
            self._update(node.left, current, prev, mask, constraints)
            return
        if node.op == "cat":
            left_c, right_c = None, constraints
        elif node.op == "and":
            left_c, right_c = constraints, constraints
        else:  # or
            both, left, right = node.choices
            left_c = left | both
            right_c = right | both
            if constraints is not None:
                left_c &= constraints
                right_c &= constraints
        self._update(node.left, current, prev, mask, left_c)
        self._update(node.right, current, prev, mask, right_c)

    def _record(self):
        self.trace.append(
            (
                self.current,
                tuple(tuple(self._state[id(n)]) for n in self.windows),
            )
        )

    # -- evaluation -------------------------------------------------------

    def result(self) -> RelaxationResult:
        star, vector, _ = self._eval(self.dfa.tree)
        tight = tuple(
            self._state[id(n)][2] - n.hi if self._state[id(n)][1] else NEG_INF
            for n in self.windows
        )
        return RelaxationResult(
            tau_star=star,
            tau=tuple(vector),
            tight=tight,
            satisfied=self.status is MonitorStatus.SATISFIED,
            deadlines=tuple(n.hi for n in self.windows),
        )

    def _eval(self, node):
        """(tau_star, vector, done). Primitive subtrees are vacuously done
        and contribute -inf, which max() absorbs."""
        if node is None or node.is_primitive():
            return NEG_INF, [], True
        if node.op == "within":
            ch_star, ch_vec, ch_done = self._eval(node.left)
            ongoing, done, steps = self._state[id(node)]
            if done:
                value = steps - node.hi
                return max(ch_star, value), ch_vec + [value], ch_done
            return NEG_INF, ch_vec + [NEG_INF], False
        l_star, l_vec, l_done = self._eval(node.left)
        r_star, r_vec, r_done = self._eval(node.right)
        if node.op in ("and", "cat"):
            done = l_done and r_done
            star = max(l_star, r_star) if done else NEG_INF
            return star, l_vec + r_vec, done
        # disjunction: the branch with the smaller offset wins; the other
        # branch is reported as not exercised.
        if l_done and r_done:
            if l_star <= r_star:
                return l_star, l_vec + [NEG_INF] * len(r_vec), True
            return r_star, [NEG_INF] * len(l_vec) + r_vec, True
        if l_done:
            return l_star, l_vec + [NEG_INF] * len(r_vec), True
        if r_done:
            return r_star, [NEG_INF] * len(l_vec) + r_vec, True
        return NEG_INF, l_vec + r_vec, False


def temporal_relaxation(
    word: Iterable, f: Formula, alphabet: Optional[Alphabet] = None
) -> RelaxationResult:
    """Tightest deadline offsets with which the word satisfies the formula.

    The word may use proposition-name sets or alphabet masks.  Simulation
    stops at the first accepting visit; trailing symbols are ignored.
    Raises :class:`BlockedRunError` when the run leaves the automaton, i.e.
    the word is rejected under every finite relaxation.
    """
    monitor = Monitor(f, alphabet)
    if monitor.feed(word) is MonitorStatus.VIOLATED:
        raise BlockedRunError(
            "word left the annotated automaton; no relaxation accepts it"
        )
    return monitor.result()
