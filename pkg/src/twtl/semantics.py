"""Direct semantic evaluation of formulas on finite words.

This is the reference oracle the automata constructions are tested against.
A word is a sequence of symbols, each symbol a set of proposition names.
``first_completion`` returns the index of the last symbol of the shortest
prefix that completes the formula, threading window deadlines down the tree:

* a hold completes ``duration`` steps after it starts, provided every symbol
  it reads matches and the completion beats the active deadline;
* a concatenation splits at its left operand's earliest completion;
* a conjunction completes when the later operand completes;
* a disjunction completes with whichever operand completes first;
* a window tries every permitted start time and caps the deadline of its
  body at window start + upper bound.

``unbounded_windows=True`` evaluates the arbitrarily-relaxed formula (every
window upper bound lifted to infinity, lower bounds kept), which is the
language the annotated automaton accepts.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .errors import NormalizationError
from .formula import And, Concat, Formula, Hold, Not, Or, Within, push_negation

_INF = float("inf")


def _as_word(word):
    return tuple(frozenset(symbol) for symbol in word)


def _contains_not(f):
    if isinstance(f, Not):
        return True
    if isinstance(f, (And, Or, Concat)):
        return _contains_not(f.left) or _contains_not(f.right)
    if isinstance(f, Within):
        return _contains_not(f.child)
    return False


class _Evaluator:
    def __init__(self, word, unbounded):
        self.word = word
        self.unbounded = unbounded
        self.memo = {}

    def first(self, node, t, deadline):
        key = (id(node), t, deadline)
        if key in self.memo:
            return self.memo[key]
        result = self._first(node, t, deadline)
        self.memo[key] = result
        return result

    def _first(self, node, t, deadline):
        word = self.word
        if isinstance(node, Hold):
            end = t + node.duration
            if end > deadline or end >= len(word):
                return None
            for i in range(t, end + 1):
                symbol = word[i]
                if node.prop is None:
                    continue
                if (node.prop in symbol) == node.negated:
                    return None
            return end
        if isinstance(node, And):
            left = self.first(node.left, t, deadline)
            if left is None:
                return None
            right = self.first(node.right, t, deadline)
            if right is None:
                return None
            return max(left, right)
        if isinstance(node, Or):
            left = self.first(node.left, t, deadline)
            right = self.first(node.right, t, deadline)
            if left is None:
                return right
            if right is None:
                return left
            return min(left, right)
        if isinstance(node, Concat):
            split = self.first(node.left, t, deadline)
            if split is None:
                return None
            return self.first(node.right, split + 1, deadline)
        if isinstance(node, Within):
            if self.unbounded:
                last_start = len(word) - 1
                inner_deadline = deadline
            else:
                last_start = min(t + node.hi, len(word) - 1)
                inner_deadline = min(deadline, t + node.hi)
            best = None
            for start in range(t + node.lo, last_start + 1):
                end = self.first(node.child, start, inner_deadline)
                if end is not None and (best is None or end < best):
                    best = end
            return best
        raise NormalizationError("negation must be pushed before evaluation")


def first_completion(
    word: Iterable[Iterable[str]],
    f: Formula,
    start: int = 0,
    unbounded_windows: bool = False,
) -> Optional[int]:
    """Index of the last symbol of the earliest prefix completing ``f``.

    Returns ``None`` when no prefix of the word completes the formula.
    Formulas containing general negation are rewritten through
    :func:`push_negation` first.
    """
    if _contains_not(f):
        f = push_negation(f)
    return _Evaluator(_as_word(word), unbounded_windows).first(f, start, _INF)


def satisfies(word: Iterable[Iterable[str]], f: Formula) -> bool:
    """True iff some prefix of the word satisfies the formula."""
    return first_completion(word, f) is not None


def accepts_exactly(
    word: Iterable[Iterable[str]], f: Formula, unbounded_windows: bool = False
) -> bool:
    """True iff the word's earliest completion consumes the whole word.

    This is the language of the strict single-final automaton built by
    :func:`twtl.translate.translate`: the run stops at the first accepting
    visit, so a word with a shorter completing prefix is rejected.
    """
    symbols = _as_word(word)
    if not symbols:
        return False
    end = first_completion(symbols, f, unbounded_windows=unbounded_windows)
    return end == len(symbols) - 1


def evaluate(word: Iterable[Iterable[str]], f: Formula) -> bool:
    """Alias of :func:`satisfies`; the word-level satisfaction relation."""
    return satisfies(word, f)


def enumerate_words(props: Sequence[str], length: int):
    """All words of exactly ``length`` symbols over the given propositions."""
    symbols = []
    names = tuple(props)
    for mask in range(1 << len(names)):
        symbols.append(frozenset(n for i, n in enumerate(names) if mask >> i & 1))
    if length == 0:
        yield ()
        return
    stack = [()]
    for _ in range(length):
        stack = [prefix + (s,) for prefix in stack for s in symbols]
    yield from stack
