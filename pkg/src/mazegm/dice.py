"""Dice-test mechanics: d6 rolls with advantage/disadvantage and exact odds."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from random import Random


class Modifier(str, Enum):
    NONE = "none"
    ADVANTAGE = "advantage"
    DISADVANTAGE = "disadvantage"


class DiceError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class TestResult:
    """Outcome of one dice test."""

    rolls: tuple[int, ...]
    kept: int
    difficulty: int
    modifier: Modifier
    success: bool

    def to_document(self) -> dict:
        return {
            "rolls": list(self.rolls),
            "kept": self.kept,
            "difficulty": self.difficulty,
            "modifier": self.modifier.value,
            "success": self.success,
        }


def roll_test(difficulty: int, modifier: Modifier, rng: Random) -> TestResult:
    """Roll a d6 test against ``difficulty``.

    Advantage rolls two dice and keeps the highest; disadvantage keeps the
    lowest. The test succeeds when the kept face is greater than or equal to
    the difficulty. Consumes exactly one draw from ``rng`` without a modifier
    and exactly two with one.
    """
    if not isinstance(difficulty, int) or isinstance(difficulty, bool) or not 1 <= difficulty <= 6:
        raise DiceError(f"difficulty must be an integer in 1..6, got {difficulty!r}")
    if modifier is Modifier.NONE:
        kept = rng.randint(1, 6)
        rolls = (kept,)
    else:
        first = rng.randint(1, 6)
        second = rng.randint(1, 6)
        rolls = (first, second)
        kept = max(rolls) if modifier is Modifier.ADVANTAGE else min(rolls)
    return TestResult(rolls, kept, difficulty, modifier, kept >= difficulty)


def test_success_probability(difficulty: int, modifier: Modifier) -> Fraction:
    """Exact probability that :func:`roll_test` succeeds."""
    if not isinstance(difficulty, int) or isinstance(difficulty, bool) or not 1 <= difficulty <= 6:
        raise DiceError(f"difficulty must be an integer in 1..6, got {difficulty!r}")
    single = Fraction(7 - difficulty, 6)
    if modifier is Modifier.NONE:
        return single
    if modifier is Modifier.ADVANTAGE:
        # fails only when both dice fail
        return 1 - (1 - single) ** 2
    return single**2
