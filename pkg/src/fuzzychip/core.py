"""Golden model for discretized min-max approximate reasoning.

Membership grades are 4-bit integer codes: 0 is no membership, 15 is full
membership. A fuzzy subset over a finite universe of ``E`` elements is a
:class:`FuzzyVector` of grades. Inference follows the compositional rule:

    alpha_i,m = max_j min(obs_m[j], A_i,m[j])      (match degree)
    w_i       = min_m alpha_i,m                    (rule weight)
    C'[j]     = max_i min(w_i, C_i[j])             (clip, then union)

Everything here is immutable and pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

MAX_GRADE = 15
LEVELS = 16
MIN_ELEMENTS = 2
MAX_ELEMENTS = 64
DEFAULT_ELEMENTS = 31


class GradeError(ValueError):
    """A membership grade outside 0..15."""


class DimensionError(ValueError):
    """Vectors or rule shapes that do not line up."""


def check_grade(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise GradeError(f"grade must be an integer, got {value!r}")
    if not 0 <= value <= MAX_GRADE:
        raise GradeError(f"grade {value} outside 0..{MAX_GRADE}")
    return value


@dataclass(frozen=True)
class FuzzyVector:
    """Fixed-length sequence of grades indexed by universe element."""

    grades: tuple

    def __init__(self, grades: Iterable[int]):
        grades = tuple(check_grade(g) for g in grades)
        if not MIN_ELEMENTS <= len(grades) <= MAX_ELEMENTS:
            raise DimensionError(
                f"universe size {len(grades)} outside {MIN_ELEMENTS}..{MAX_ELEMENTS}"
            )
        object.__setattr__(self, "grades", grades)

    @classmethod
    def zeros(cls, size: int = DEFAULT_ELEMENTS) -> "FuzzyVector":
        return cls([0] * size)

    def __len__(self) -> int:
        return len(self.grades)

    def __iter__(self) -> Iterator[int]:
        return iter(self.grades)

    def __getitem__(self, index: int) -> int:
        return self.grades[index]

    def __repr__(self) -> str:
        return f"FuzzyVector({list(self.grades)})"


def _same_length(a: FuzzyVector, b: FuzzyVector) -> None:
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")


def intersect(a: FuzzyVector, b: FuzzyVector) -> FuzzyVector:
    """Pointwise minimum."""
    _same_length(a, b)
    return FuzzyVector(map(min, a.grades, b.grades))


def union(a: FuzzyVector, b: FuzzyVector) -> FuzzyVector:
    """Pointwise maximum."""
    _same_length(a, b)
    return FuzzyVector(map(max, a.grades, b.grades))


def height(a: FuzzyVector) -> int:
    return max(a.grades)


def match_degree(observation: FuzzyVector, antecedent: FuzzyVector) -> int:
    """Height of the intersection of an observation with an antecedent."""
    _same_length(observation, antecedent)
    return max(map(min, observation.grades, antecedent.grades))


def rule_weight(alphas: Sequence[int]) -> int:
    alphas = [check_grade(a) for a in alphas]
    if not alphas:
        raise ValueError("rule weight needs at least one match degree")
    return min(alphas)


def clip(consequent: FuzzyVector, w: int) -> FuzzyVector:
    """Limit a consequent pointwise by the rule weight ``w``."""
    w = check_grade(w)
    return FuzzyVector(min(w, g) for g in consequent.grades)


@dataclass(frozen=True)
class Rule:
    antecedents: tuple
    consequent: FuzzyVector

    def __init__(self, antecedents, consequent):
        if isinstance(antecedents, FuzzyVector):
            antecedents = (antecedents,)
        antecedents = tuple(
            a if isinstance(a, FuzzyVector) else FuzzyVector(a) for a in antecedents
        )
        if not isinstance(consequent, FuzzyVector):
            consequent = FuzzyVector(consequent)
        if not antecedents:
            raise DimensionError("a rule needs at least one antecedent")
        size = len(consequent)
        if any(len(a) != size for a in antecedents):
            raise DimensionError("antecedents and consequent differ in universe size")
        object.__setattr__(self, "antecedents", antecedents)
        object.__setattr__(self, "consequent", consequent)

    @property
    def universe_size(self) -> int:
        return len(self.consequent)


@dataclass(frozen=True)
class RuleSet:
    """Non-empty ordered rules sharing one universe size and arity."""

    rules: tuple

    def __init__(self, rules: Iterable[Rule]):
        rules = tuple(rules)
        if not rules:
            raise ValueError("rule set must contain at least one rule")
        first = rules[0]
        for i, rule in enumerate(rules):
            if rule.universe_size != first.universe_size:
                raise DimensionError(f"rule {i} has universe size {rule.universe_size}, "
                                     f"expected {first.universe_size}")
            if len(rule.antecedents) != len(first.antecedents):
                raise DimensionError(f"rule {i} has {len(rule.antecedents)} antecedents, "
                                     f"expected {len(first.antecedents)}")
        object.__setattr__(self, "rules", rules)

    @property
    def universe_size(self) -> int:
        return self.rules[0].universe_size

    @property
    def antecedent_count(self) -> int:
        return len(self.rules[0].antecedents)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __getitem__(self, index: int) -> Rule:
        return self.rules[index]


Observations = Union[FuzzyVector, Sequence[FuzzyVector]]


def _as_observations(rules: RuleSet, observations: Observations) -> tuple:
    if isinstance(observations, FuzzyVector):
        observations = (observations,)
    observations = tuple(observations)
    if len(observations) != rules.antecedent_count:
        raise DimensionError(f"expected {rules.antecedent_count} observations, "
                             f"got {len(observations)}")
    for obs in observations:
        if len(obs) != rules.universe_size:
            raise DimensionError(f"observation has {len(obs)} elements, "
                                 f"rule set uses {rules.universe_size}")
    return observations


def rule_weights(rules: RuleSet, observations: Observations) -> list:
    observations = _as_observations(rules, observations)
    return [
        rule_weight([match_degree(obs, a) for obs, a in zip(observations, rule.antecedents)])
        for rule in rules
    ]


def infer(rules: RuleSet, observations: Observations) -> FuzzyVector:
    """Overall conclusion: union over rules of each clipped consequent."""
    weights = rule_weights(rules, observations)
    result = [0] * rules.universe_size
    for w, rule in zip(weights, rules):
        for j, g in enumerate(rule.consequent.grades):
            v = g if g < w else w
            if v > result[j]:
                result[j] = v
    return FuzzyVector(result)
