"""Discretized min-max fuzzy inference and a bit-serial chip simulator."""

from .core import (
    DimensionError,
    FuzzyVector,
    GradeError,
    Rule,
    RuleSet,
    clip,
    height,
    infer,
    intersect,
    match_degree,
    rule_weight,
    union,
)
from .chipsim import (
    FuzzyChip,
    RomImage,
    ScalarChip,
    build_rom,
    run_inference,
    run_traced,
)
from .rulesetio import parse_ruleset, rom_dump, rom_load, serialize_ruleset

__version__ = "0.1.0"
