"""Shared test helpers: formula generators, language checks, isomorphism."""

import random

import pytest

from twtl.automaton import Alphabet
from twtl.formula import (
    And,
    Concat,
    Hold,
    Or,
    Within,
    is_feasible,
    min_duration,
    normalize,
    propositions,
    time_bound,
)
from twtl.semantics import accepts_exactly, enumerate_words
from twtl.translate import translate


def language_mismatches(f, alphabet, max_len, inf=False):
    """Words up to max_len where automaton acceptance and the direct
    semantics disagree."""
    dfa = translate(f, alphabet, inf=inf)
    props = alphabet.props
    bad = []
    for n in range(max_len + 1):
        for word in enumerate_words(props, n):
            got = dfa.accepts(alphabet.word_to_masks(word))
            want = accepts_exactly(word, f, unbounded_windows=inf)
            if got != want:
                bad.append((word, got, want))
    return bad


def accepted_words(dfa, max_len):
    """All accepted words (as mask tuples) up to the length bound."""
    out = []
    stack = [(dfa.initial, ())]
    if dfa.initial is None or dfa.initial not in dfa.states:
        return out
    while stack:
        state, word = stack.pop()
        if state in dfa.finals:
            out.append(word)
        if len(word) >= max_len:
            continue
        for mask, dst in dfa.trans[state].items():
            stack.append((dst, word + (mask,)))
    return sorted(out)


def iso_against(dfa, expected_edges, expected_initial, expected_finals, alphabet):
    """Unique isomorphism of a reachable deterministic automaton onto an
    expected structure, or None.

    ``expected_edges``: dict state -> list of (predicate(symbol set), state).
    Returns the mapping dfa-state -> expected-state when the transition
    structures agree exactly on every symbol.
    """
    symbol_sets = [alphabet.names(m) for m in alphabet.symbols()]

    def expected_step(state, names):
        hits = [dst for pred, dst in expected_edges.get(state, ()) if pred(names)]
        if len(hits) > 1:
            raise AssertionError(f"expected structure ambiguous at {state}")
        return hits[0] if hits else None

    mapping = {dfa.initial: expected_initial}
    queue = [dfa.initial]
    while queue:
        state = queue.pop()
        image = mapping[state]
        for mask in alphabet.symbols():
            mine = dfa.step(state, mask)
            theirs = expected_step(image, symbol_sets[mask])
            if (mine is None) != (theirs is None):
                return None
            if mine is None:
                continue
            if mine in mapping:
                if mapping[mine] != theirs:
                    return None
            else:
                mapping[mine] = theirs
                queue.append(mine)
    if len(mapping) != dfa.num_states():
        return None
    if {mapping[s] for s in dfa.finals} != set(expected_finals):
        return None
    return mapping


class FormulaGenerator:
    """Random feasible disjunction-free-window formulas.

    Window bodies stay in the class the retry construction translates
    exactly: proposition literals and true-holds, conjunctions of literals,
    and zero-delay nested windows.  With ``annotated_only=True`` bodies may
    also conjoin windows with holds and use positive nested delays, which
    only the deadline-free construction handles exactly.
    """

    def __init__(self, rng: random.Random, props, max_bound=8, annotated_only=False):
        self.rng = rng
        self.props = list(props)
        self.max_bound = max_bound
        self.annotated_only = annotated_only

    def literal(self, max_d=2):
        r = self.rng
        d = r.randint(0, max_d)
        if r.random() < 0.15:
            return Hold(d, None)
        return Hold(d, r.choice(self.props), r.random() < 0.3)

    def body(self, depth):
        r = self.rng
        roll = r.random()
        if depth <= 0 or roll < 0.55:
            return self.literal()
        if roll < 0.8:
            return And(self.literal(max_d=1), self.literal(max_d=2))
        if self.annotated_only and roll < 0.9:
            return And(self.literal(max_d=1), self.window(depth - 1, any_lo=True))
        return self.window(depth - 1, any_lo=self.annotated_only)

    def window(self, depth, any_lo=False):
        child = self.body(depth)
        lo = self.rng.randint(0, 2) if any_lo else 0
        need = min_duration(child)
        hi = lo + need + self.rng.randint(0, 3)
        return Within(child, lo, hi)

    def formula(self, depth=2):
        r = self.rng
        roll = r.random()
        if depth <= 0 or roll < 0.3:
            return self.window(1, any_lo=True)
        if roll < 0.45:
            return self.literal()
        op = r.choice((And, Or, Concat))
        return op(self.formula(depth - 1), self.formula(depth - 1))

    def feasible_formula(self, depth=2, max_tb=None):
        bound = max_tb if max_tb is not None else self.max_bound
        for _ in range(200):
            f = normalize(self.formula(depth))
            if not is_feasible(f):
                continue
            if time_bound(f) > bound:
                continue
            if not propositions(f):
                continue
            return f
        raise AssertionError("generator failed to produce a formula")


def random_system(rng: random.Random, alphabet: Alphabet, max_states=8):
    """Random connected transition system with self-loops everywhere."""
    from twtl.system import TransitionSystem

    n = rng.randint(2, max_states)
    ts = TransitionSystem(alphabet)
    for i in range(n):
        labels = [p for p in alphabet.props if rng.random() < 0.4]
        ts.add_state(f"q{i}", labels)
    ts.set_initial("q0")
    for i in range(n):
        ts.add_transition(i, (i + 1) % n)
        ts.add_transition(i, i)
        if rng.random() < 0.5:
            ts.add_transition(i, rng.randrange(n))
    return ts


@pytest.fixture
def rng():
    return random.Random(20240811)
