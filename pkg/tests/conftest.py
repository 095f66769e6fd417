import pytest
from hypothesis import strategies as st

from fuzzychip.core import FuzzyVector, Rule, RuleSet

from acceptance_log import LINES as ACCEPTANCE_LINES


grades = st.integers(min_value=0, max_value=15)


def vectors(size):
    return st.lists(grades, min_size=size, max_size=size).map(FuzzyVector)


@st.composite
def rulesets(draw, size=None, max_rules=6, antecedents=1):
    if size is None:
        size = draw(st.integers(min_value=2, max_value=8))
    n = draw(st.integers(min_value=1, max_value=max_rules))
    rules = [Rule([draw(vectors(size)) for _ in range(antecedents)], draw(vectors(size)))
             for _ in range(n)]
    return RuleSet(rules)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
