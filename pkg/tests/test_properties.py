"""Randomized cross-checks between the automata and the direct semantics.

The generators stay inside the class the retry-based window construction
translates exactly (see conftest.FormulaGenerator); formulas range over one
or two propositions, exhaustive word enumeration is capped so a single
formula costs milliseconds.
"""

import random

import pytest

from conftest import FormulaGenerator, accepted_words, language_mismatches
from twtl.automaton import Alphabet
from twtl.errors import InfeasibleFormulaError
from twtl.formula import (
    is_feasible,
    normalize,
    parse,
    relax,
    time_bound,
    to_dfw,
    within_count,
)
from twtl.semantics import accepts_exactly, enumerate_words
from twtl.translate import translate


def word_cap(props, bound):
    return min(bound, 9 if len(props) == 1 else 6)


class TestOracleEquivalenceFuzz:
    """Automaton acceptance coincides with the direct semantics, in both
    the deadline-bounded and the deadline-free annotated form."""

    def run_batch(self, seed, props, count, depth):
        rng = random.Random(seed)
        gen = FormulaGenerator(rng, props, max_bound=8)
        alpha = Alphabet(props)
        for _ in range(count):
            f = gen.feasible_formula(depth=depth)
            cap = word_cap(props, time_bound(f) + 2)
            assert language_mismatches(f, alpha, cap) == [], f
            assert language_mismatches(f, alpha, cap, inf=True) == [], f

    def test_single_proposition(self):
        self.run_batch(101, ["A"], 60, depth=2)

    def test_two_propositions(self):
        self.run_batch(202, ["A", "B"], 40, depth=2)

    def test_deeper_nesting(self):
        self.run_batch(303, ["A"], 25, depth=3)


class TestAnnotatedIsRelaxationClosure:
    """The annotated automaton accepts a word iff some finite, feasible
    deadline relaxation accepts it exactly; offsets up to the word length
    suffice as the search bound."""

    def test_bounded_offset_search(self, rng):
        gen = FormulaGenerator(rng, ["A"], max_bound=6)
        alpha = Alphabet(["A"])
        checked = 0
        while checked < 12:
            f = gen.feasible_formula(depth=1, max_tb=6)
            m = within_count(f)
            if not 1 <= m <= 2:
                continue
            checked += 1
            dfa = translate(f, alpha, inf=True)
            for word in enumerate_words(["A"], 5):
                offsets = range(-len(word) - 1, len(word) + 1)
                found = False
                if m == 1:
                    grid = [(t,) for t in offsets]
                else:
                    grid = [(t1, t2) for t1 in offsets for t2 in offsets]
                for tau in grid:
                    try:
                        relaxed = relax(f, tau)
                    except InfeasibleFormulaError:
                        continue
                    if accepts_exactly(word, relaxed):
                        found = True
                        break
                assert dfa.accepts(alpha.word_to_masks(word)) == found, (f, word)


class TestRelaxationMonotonicity:
    """Componentwise-larger offsets only enlarge the accepted language."""

    def test_language_inclusion_sampled(self, rng):
        gen = FormulaGenerator(rng, ["A", "B"], max_bound=6)
        alpha = Alphabet(["A", "B"])
        checked = 0
        while checked < 30:
            f = gen.feasible_formula(depth=2, max_tb=6)
            m = within_count(f)
            if m == 0:
                continue
            lower = tuple(rng.randint(-2, 1) for _ in range(m))
            upper = tuple(t + rng.randint(0, 2) for t in lower)
            try:
                small = relax(f, lower)
                large = relax(f, upper)
            except InfeasibleFormulaError:
                continue
            checked += 1
            small_dfa = translate(small, alpha)
            large_dfa = translate(large, alpha)
            for word in accepted_words(small_dfa, time_bound(small) + 1):
                assert large_dfa.accepts(word), (f, lower, upper, word)

    def test_unrelaxed_included_in_relaxed(self, rng):
        gen = FormulaGenerator(rng, ["A"], max_bound=6)
        alpha = Alphabet(["A"])
        for _ in range(20):
            f = gen.feasible_formula(depth=1, max_tb=6)
            m = within_count(f)
            if m == 0:
                continue
            bounded = translate(f, alpha)
            annotated = translate(f, alpha, inf=True)
            for word in accepted_words(bounded, time_bound(f) + 1):
                assert annotated.accepts(word)


class TestNormalizationPreservesLanguage:
    def test_dfw_rewrite_language_equal(self, rng):
        """Pulling disjunctions out of window bodies preserves acceptance."""
        rng = random.Random(404)
        alpha = Alphabet(["A", "B"])
        shapes = [
            "[H^1 A | H^1 B]^[0,4]",
            "[H^0 A . (H^0 B | H^0 A)]^[0,4]",
            "[(H^0 A | H^0 B) & H^1 A]^[0,5]",
            "[H^1 A | H^1 B]^[1,4] . H^0 A",
        ]
        for text in shapes:
            f = parse(text, alpha.props)
            g = to_dfw(f)
            cap = word_cap(alpha.props, time_bound(f) + 2)
            for n in range(cap + 1):
                for word in enumerate_words(alpha.props, n):
                    assert accepts_exactly(word, f) == accepts_exactly(word, g), (
                        text,
                        word,
                    )

    def test_normalized_translation_matches_sugar_semantics(self):
        """The implication form translates through normalization to an
        automaton matching the desugared semantics."""
        alpha = Alphabet(["A", "B"])
        f = parse("[H^0 A => H^0 B]^[0,2]", alpha.props)
        g = normalize(f)
        assert is_feasible(g)
        dfa = translate(g, alpha)
        cap = word_cap(alpha.props, time_bound(g) + 2)
        for n in range(cap + 1):
            for word in enumerate_words(alpha.props, n):
                assert dfa.accepts(alpha.word_to_masks(word)) == accepts_exactly(
                    word, g
                )
