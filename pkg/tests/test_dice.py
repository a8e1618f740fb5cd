"""Dice-test mechanics against a brute-force enumeration oracle."""

import itertools
from fractions import Fraction
from random import Random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mazegm.dice import DiceError, Modifier, roll_test
from mazegm.dice import test_success_probability as success_probability

ALL_PAIRS = [(d, m) for d in range(1, 7) for m in Modifier]


def oracle_probability(difficulty: int, modifier: Modifier) -> Fraction:
    """Success odds by enumerating every equally likely roll outcome."""
    if modifier is Modifier.NONE:
        wins = sum(1 for face in range(1, 7) if face >= difficulty)
        return Fraction(wins, 6)
    keep = max if modifier is Modifier.ADVANTAGE else min
    wins = sum(
        1
        for pair in itertools.product(range(1, 7), repeat=2)
        if keep(pair) >= difficulty
    )
    return Fraction(wins, 36)


class SequencedRandom:
    """Feeds a fixed sequence of faces to roll_test."""

    def __init__(self, faces):
        self.faces = list(faces)
        self.draws = 0

    def randint(self, low, high):
        assert (low, high) == (1, 6)
        self.draws += 1
        return self.faces.pop(0)


class TestOracleAnchors:
    """Pin the enumeration oracle to hand-checkable values before trusting it."""

    def test_difficulty_one_always_succeeds(self):
        assert oracle_probability(1, Modifier.NONE) == 1

    def test_plain_coin_flip_at_four(self):
        assert oracle_probability(4, Modifier.NONE) == Fraction(1, 2)

    def test_advantage_at_four(self):
        assert oracle_probability(4, Modifier.ADVANTAGE) == Fraction(27, 36)

    def test_disadvantage_at_four(self):
        assert oracle_probability(4, Modifier.DISADVANTAGE) == Fraction(9, 36)


class TestSuccessProbability:
    def test_matches_oracle_for_all_eighteen_pairs(self):
        for difficulty, modifier in ALL_PAIRS:
            assert success_probability(difficulty, modifier) == oracle_probability(
                difficulty, modifier
            ), (difficulty, modifier)

    def test_monotone_dominance(self):
        for d in range(1, 7):
            adv = success_probability(d, Modifier.ADVANTAGE)
            none = success_probability(d, Modifier.NONE)
            dis = success_probability(d, Modifier.DISADVANTAGE)
            assert adv >= none >= dis
            if d == 1:
                assert adv == none == dis == 1
            else:
                assert adv > none > dis

    @pytest.mark.parametrize("bad", [0, 7, -1, "4", 3.5, True])
    def test_out_of_range_difficulty_rejected(self, bad):
        with pytest.raises(DiceError):
            success_probability(bad, Modifier.NONE)


class TestRollTest:
    def test_plain_roll_of_five_beats_four(self):
        result = roll_test(4, Modifier.NONE, SequencedRandom([5]))
        assert result.success and result.kept == 5
        assert result.rolls == (5,)

    def test_advantage_keeps_the_highest(self):
        result = roll_test(4, Modifier.ADVANTAGE, SequencedRandom([2, 6]))
        assert result.kept == 6 and result.success

    def test_disadvantage_keeps_the_lowest(self):
        result = roll_test(4, Modifier.DISADVANTAGE, SequencedRandom([2, 6]))
        assert result.kept == 2 and not result.success

    def test_draw_counts(self):
        rng = SequencedRandom([3, 3, 3])
        roll_test(4, Modifier.NONE, rng)
        assert rng.draws == 1
        rng = SequencedRandom([3, 3, 3])
        roll_test(4, Modifier.ADVANTAGE, rng)
        assert rng.draws == 2

    @pytest.mark.parametrize("bad", [0, 7, "4", True])
    def test_out_of_range_difficulty_rejected(self, bad):
        with pytest.raises(DiceError):
            roll_test(bad, Modifier.NONE, Random(0))


@given(
    st.integers(min_value=1, max_value=6),
    st.sampled_from(list(Modifier)),
    st.integers(min_value=0, max_value=2**32),
)
def test_roll_invariants_hold_for_any_seed(difficulty, modifier, seed):
    result = roll_test(difficulty, modifier, Random(seed))
    assert all(1 <= r <= 6 for r in result.rolls)
    if modifier is Modifier.NONE:
        assert result.rolls == (result.kept,)
    elif modifier is Modifier.ADVANTAGE:
        assert len(result.rolls) == 2 and result.kept == max(result.rolls)
    else:
        assert len(result.rolls) == 2 and result.kept == min(result.rolls)
    assert result.success == (result.kept >= difficulty)
