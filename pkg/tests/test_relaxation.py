"""Monitoring and tightest-relaxation inference."""

import random

import pytest

from conftest import FormulaGenerator
from twtl.automaton import Alphabet
from twtl.errors import BlockedRunError, InfeasibleFormulaError
from twtl.formula import deadlines, normalize, parse, relax, within_count
from twtl.relaxation import Monitor, MonitorStatus, temporal_relaxation
from twtl.semantics import enumerate_words, satisfies

NEG_INF = float("-inf")

TOUR = "[H^2 A]^[0,6] . ([H^1 B]^[0,3] | [H^1 C]^[1,4]) . [H^1 D]^[0,6]"
TOUR_WORD = [(), ("A",), ("A",), ("A",), (), ("B", "C"), ("B", "C"), (), ("D",), ("D",)]


class TestTourWord:
    def test_reported_values(self):
        result = temporal_relaxation(TOUR_WORD, parse(TOUR))
        assert result.satisfied
        assert result.tight == (-3, -1, -2, -4)
        assert result.tau == (-3, NEG_INF, -2, -4)
        assert result.tau_star == -2

    def test_stepwise_equals_batch(self):
        monitor = Monitor(parse(TOUR))
        statuses = [monitor.step(s) for s in TOUR_WORD]
        assert statuses[-1] is MonitorStatus.SATISFIED
        assert statuses[8] is MonitorStatus.ONGOING
        assert monitor.result() == temporal_relaxation(TOUR_WORD, parse(TOUR))

    def test_satisfied_at_step_nine(self):
        monitor = Monitor(parse(TOUR))
        for i, symbol in enumerate(TOUR_WORD):
            if monitor.step(symbol) is MonitorStatus.SATISFIED:
                assert i == 9
                break
        else:
            pytest.fail("never satisfied")

    def test_suffix_ignored_after_acceptance(self):
        monitor = Monitor(parse(TOUR))
        monitor.feed(TOUR_WORD)
        result = monitor.result()
        assert monitor.step(("A",)) is MonitorStatus.SATISFIED
        assert monitor.result() == result


class TestEdgeCases:
    def test_primitive_formula(self):
        result = temporal_relaxation([("A",), ("A",), ("A",)], parse("H^2 A"))
        assert result.tau == ()
        assert result.tau_star == NEG_INF
        assert result.satisfied

    def test_empty_feed_is_ongoing(self):
        monitor = Monitor(parse("[H^1 A]^[0,5]"))
        assert monitor.status is MonitorStatus.ONGOING

    def test_restarts_keep_monitor_alive_indefinitely(self):
        monitor = Monitor(parse("[H^1 A]^[0,5]"))
        for _ in range(40):
            assert monitor.step(()) is MonitorStatus.ONGOING

    def test_blocked_run_raises(self):
        # after the window part, the bare hold blocks on a non-A symbol
        f = parse("[H^0 A]^[0,1] . H^1 A")
        with pytest.raises(BlockedRunError):
            temporal_relaxation([("A",), ("A",), ()], f)

    def test_unsatisfied_word_reports_partial(self):
        result = temporal_relaxation([("A",)], parse("[H^2 A]^[0,4]"))
        assert not result.satisfied
        assert result.tau == (NEG_INF,)

    def test_positive_offsets_for_late_completion(self):
        result = temporal_relaxation([(), (), (), ("A",), ("A",)], parse("[H^1 A]^[0,2]"))
        assert result.satisfied
        assert result.tau == (2,)
        assert result.tau_star == 2


class TestAgainstOracle:
    def test_reported_relaxation_accepts_word(self, rng):
        """Substituting the inferred offsets yields a formula the word
        satisfies (skipped branches pruned by masking)."""
        gen = FormulaGenerator(rng, ["A", "B"], max_bound=6)
        checked = 0
        while checked < 60:
            f = gen.feasible_formula(depth=2, max_tb=6)
            m = within_count(f)
            if m == 0:
                continue
            word = [
                frozenset(p for p in ("A", "B") if rng.random() < 0.5)
                for _ in range(rng.randint(1, 8))
            ]
            try:
                result = temporal_relaxation(word, f, Alphabet(["A", "B"]))
            except BlockedRunError:
                continue
            if not result.satisfied:
                continue
            checked += 1
            # replace skipped entries by a slack no tighter than the word
            subst = [
                int(t) if t != NEG_INF else len(word) + 10 for t in result.tau
            ]
            assert satisfies(word, relax(f, subst)), (f, word, result.tau)

    def test_tightness_single_window(self):
        """Decreasing the single reported offset by one makes the word fail."""
        f = parse("[H^1 A]^[0,4]")
        for word in enumerate_words(["A"], 5):
            try:
                result = temporal_relaxation(word, f)
            except BlockedRunError:
                continue
            if not result.satisfied:
                continue
            (tau,) = result.tau
            assert satisfies(word, relax(f, (int(tau),)))
            try:
                tighter = relax(f, (int(tau) - 1,))
            except InfeasibleFormulaError:
                continue
            assert not satisfies(word, tighter)

    def test_nonpositive_offsets_imply_satisfaction(self, rng):
        """A certified run with all offsets <= 0 satisfies the original."""
        gen = FormulaGenerator(rng, ["A"], max_bound=6)
        hits = 0
        while hits < 40:
            f = gen.feasible_formula(depth=1, max_tb=6)
            if within_count(f) == 0:
                continue
            for word in enumerate_words(["A"], 5):
                try:
                    result = temporal_relaxation(word, f)
                except BlockedRunError:
                    continue
                if result.satisfied and result.tau_star <= 0:
                    hits += 1
                    assert satisfies(word, f), (f, word)
                    break


class TestTightDeadlines:
    def test_masked_completion_positions(self):
        result = temporal_relaxation(TOUR_WORD, parse(TOUR))
        assert result.tight_deadlines == (3, NEG_INF, 2, 2)
        assert deadlines(normalize(parse(TOUR))) == result.deadlines
