"""Rule-set text format (``.frs``) and the ``FROM`` binary ROM container.

Text format, one directive per line, ``#`` starts a comment::

    elements 4
    levels 16
    antecedents 1
    rule
    A1 15 8 0 0
    C 0 5 10 15

``elements`` must come first; ``levels`` (always 16) and ``antecedents``
(default 1) are optional but must precede the first ``rule``. Each ``rule``
block lists ``A1`` .. ``Ak`` in order, then ``C``.

Binary container, all integers big-endian::

    offset 0  4 bytes  magic b"FROM"
    offset 4  1 byte   version (1)
    offset 5  2 bytes  rule count R
    offset 7  2 bytes  element count E
    offset 9           antecedent module, ceil(R*E*4 / 8) bytes
                       conclusion module, same length

Module bits are packed into bytes MSB first; each module is zero-padded to
a byte boundary on its own.
"""

from __future__ import annotations

import struct
from typing import List, Optional, Sequence

from .core import (
    LEVELS,
    MAX_ELEMENTS,
    MAX_GRADE,
    MIN_ELEMENTS,
    FuzzyVector,
    Rule,
    RuleSet,
)
from .chipsim import RomImage

MAGIC = b"FROM"
VERSION = 1
_HEADER = struct.Struct(">4sBHH")


class RuleSetParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RomFormatError(ValueError):
    pass


def _grade_row(tokens: Sequence[str], size: int, lineno: int) -> List[int]:
    if len(tokens) != size:
        raise RuleSetParseError(lineno, f"expected {size} grades, got {len(tokens)}")
    row = []
    for tok in tokens:
        try:
            g = int(tok, 10)
        except ValueError:
            raise RuleSetParseError(lineno, f"grade {tok!r} is not an integer") from None
        if not 0 <= g <= MAX_GRADE:
            raise RuleSetParseError(lineno, f"grade {g} outside 0..{MAX_GRADE}")
        row.append(g)
    return row


def _int_arg(tokens: Sequence[str], lineno: int, directive: str) -> int:
    if len(tokens) != 1:
        raise RuleSetParseError(lineno, f"'{directive}' takes one integer")
    try:
        return int(tokens[0], 10)
    except ValueError:
        raise RuleSetParseError(lineno, f"'{directive}' needs an integer, "
                                        f"got {tokens[0]!r}") from None


def parse_ruleset(text: str) -> RuleSet:
    elements: Optional[int] = None
    antecedents = 1
    seen = set()
    rules: List[Rule] = []
    block: Optional[dict] = None
    block_line = 0

    def close_block() -> None:
        if block is None:
            return
        if len(block["A"]) != antecedents:
            raise RuleSetParseError(block_line, f"rule has {len(block['A'])} antecedent "
                                                f"rows, expected {antecedents}")
        if block["C"] is None:
            raise RuleSetParseError(block_line, "rule is missing its C row")
        rules.append(Rule([FuzzyVector(a) for a in block["A"]], FuzzyVector(block["C"])))

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        if head in ("elements", "levels", "antecedents"):
            if head in seen:
                raise RuleSetParseError(lineno, f"duplicate '{head}' directive")
            if rules or block is not None:
                raise RuleSetParseError(lineno, f"'{head}' must precede the first rule")
            if head != "elements" and elements is None:
                raise RuleSetParseError(lineno, "'elements' must come first")
            seen.add(head)
            value = _int_arg(args, lineno, head)
            if head == "elements":
                if not MIN_ELEMENTS <= value <= MAX_ELEMENTS:
                    raise RuleSetParseError(lineno, f"elements {value} outside "
                                                    f"{MIN_ELEMENTS}..{MAX_ELEMENTS}")
                elements = value
            elif head == "levels":
                if value != LEVELS:
                    raise RuleSetParseError(lineno, f"levels must be {LEVELS}, got {value}")
            else:
                if value < 1:
                    raise RuleSetParseError(lineno, "antecedents must be at least 1")
                antecedents = value
        elif head == "rule":
            if elements is None:
                raise RuleSetParseError(lineno, "'elements' must come first")
            if args:
                raise RuleSetParseError(lineno, "'rule' takes no arguments")
            close_block()
            block = {"A": [], "C": None}
            block_line = lineno
        elif head == "C" or (head.startswith("A") and head[1:].isdigit()):
            if block is None:
                raise RuleSetParseError(lineno, f"'{head}' row outside a rule block")
            if block["C"] is not None:
                raise RuleSetParseError(lineno, f"'{head}' row after the C row")
            if head == "C":
                if len(block["A"]) != antecedents:
                    raise RuleSetParseError(lineno, f"C row after {len(block['A'])} "
                                                    f"antecedent rows, expected {antecedents}")
                block["C"] = _grade_row(args, elements, lineno)
            else:
                expected = len(block["A"]) + 1
                if int(head[1:]) != expected or expected > antecedents:
                    raise RuleSetParseError(lineno, f"unexpected row '{head}'; "
                                                    f"expected A{expected}")
                block["A"].append(_grade_row(args, elements, lineno))
        else:
            raise RuleSetParseError(lineno, f"unknown directive '{head}'")

    close_block()
    if not rules:
        raise RuleSetParseError(max(len(lines), 1), "no rules defined")
    return RuleSet(rules)


def serialize_ruleset(rules: RuleSet) -> str:
    """Canonical text: fixed directive order, single spaces, trailing newline."""
    out = [f"elements {rules.universe_size}", f"levels {LEVELS}",
           f"antecedents {rules.antecedent_count}"]
    for rule in rules:
        out.append("rule")
        for m, a in enumerate(rule.antecedents, start=1):
            out.append(f"A{m} " + " ".join(map(str, a)))
        out.append("C " + " ".join(map(str, rule.consequent)))
    return "\n".join(out) + "\n"


def parse_observations(text: str, elements: Optional[int] = None) -> List[FuzzyVector]:
    """One grade row per antecedent variable; blank lines and comments skipped."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        size = elements if elements is not None else len(tokens)
        row = _grade_row(tokens, size, lineno)
        if not MIN_ELEMENTS <= len(row) <= MAX_ELEMENTS:
            raise RuleSetParseError(lineno, f"{len(row)} grades outside "
                                            f"{MIN_ELEMENTS}..{MAX_ELEMENTS}")
        rows.append(FuzzyVector(row))
    if not rows:
        raise RuleSetParseError(1, "no observation rows")
    return rows


def pack_bits(bits: Sequence[int]) -> bytes:
    """MSB-first packing, zero-padded to a whole byte."""
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 0x80 >> (i & 7)
    return bytes(out)


def unpack_bits(data: bytes, count: int) -> tuple:
    return tuple((data[i >> 3] >> (7 - (i & 7))) & 1 for i in range(count))


def rom_dump(image: RomImage) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, image.rule_count, image.universe_size)
    return header + pack_bits(image.antecedent_module) + pack_bits(image.conclusion_module)


def rom_load(data: bytes) -> RomImage:
    if len(data) < _HEADER.size:
        raise RomFormatError(f"truncated header: {len(data)} bytes")
    magic, version, rules, elements = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RomFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise RomFormatError(f"unsupported version {version}")
    if rules < 1:
        raise RomFormatError("rule count is zero")
    if not MIN_ELEMENTS <= elements <= MAX_ELEMENTS:
        raise RomFormatError(f"element count {elements} outside "
                             f"{MIN_ELEMENTS}..{MAX_ELEMENTS}")
    nbits = rules * elements * 4
    nbytes = (nbits + 7) // 8
    payload = data[_HEADER.size:]
    if len(payload) < 2 * nbytes:
        raise RomFormatError(f"truncated payload: {len(payload)} bytes, "
                             f"expected {2 * nbytes}")
    if len(payload) > 2 * nbytes:
        raise RomFormatError(f"payload has {len(payload) - 2 * nbytes} trailing bytes "
                             f"for R={rules}, E={elements}")
    ant = payload[:nbytes]
    con = payload[nbytes:]
    spare = 8 * nbytes - nbits
    if spare and ((ant[-1] | con[-1]) & ((1 << spare) - 1)):
        raise RomFormatError("nonzero padding bits after module payload")
    return RomImage(unpack_bits(ant, nbits), unpack_bits(con, nbits), rules, elements)
