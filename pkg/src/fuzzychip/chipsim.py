"""Cycle-accurate behavioral model of the bit-serial fuzzy inference chip.

Clock schedule, with cycle 1 the reset cycle, ``E`` elements and ``R``
data paths (``L = log2(R)`` tree levels)::

    1                 reset
    2                 idle
    3 .. 2+4E         observation bits in, antecedent ROM read, alpha built
    3+4E .. 2+8E      conclusion ROM read
    5+4E+L .. 4+8E+L  result bits out (valid high)

A conclusion bit read at cycle ``c`` sits in the ROM output register at
``c+1``, in the clip register at ``c+2`` and leaves the last tree level at
``c+2+L``. With 31 elements and 16 paths the output window is 133..256.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .bitserial import (
    UNDECIDED,
    WORD_BITS,
    AlphaRegister,
    LaneMaxTree,
    MaxTree,
    deserialize,
    lanes_max_step,
    lanes_min_step,
    pack_lanes,
    serial_min_step,
    serialize,
)
from .core import (
    MAX_ELEMENTS,
    MIN_ELEMENTS,
    DimensionError,
    FuzzyVector,
    Rule,
    RuleSet,
)

DEFAULT_CAPACITY = 16
MIN_CAPACITY = 2
MAX_CAPACITY = 64
RESET_CYCLE = 1
INPUT_START = 3


class CapacityError(ValueError):
    """More rules than the chip has data paths."""


class UnsupportedRuleShape(ValueError):
    """The chip only evaluates single-antecedent rules."""


class ProtocolError(RuntimeError):
    """Clocking the chip outside its protocol."""


class Phase(Enum):
    IDLE = "IDLE"
    ANTECEDENT = "ANTECEDENT"
    CONCLUSION = "CONCLUSION"
    DONE = "DONE"


@dataclass(frozen=True)
class RomImage:
    """Packed contents of the antecedent and conclusion memory modules.

    Each module is a flat bit tuple: rule 0's grades in universe order, each
    grade MSB first, then rule 1, and so on.
    """

    antecedent_module: tuple
    conclusion_module: tuple
    rule_count: int
    universe_size: int

    def __post_init__(self):
        if self.rule_count < 1:
            raise ValueError("ROM image needs at least one rule")
        if not MIN_ELEMENTS <= self.universe_size <= MAX_ELEMENTS:
            raise ValueError(f"universe size {self.universe_size} outside "
                             f"{MIN_ELEMENTS}..{MAX_ELEMENTS}")
        expected = self.rule_count * self.bits_per_rule
        for name in ("antecedent_module", "conclusion_module"):
            bits = tuple(getattr(self, name))
            if len(bits) != expected:
                raise ValueError(f"{name} holds {len(bits)} bits, expected {expected}")
            if not set(bits) <= {0, 1}:
                raise ValueError(f"{name} contains non-bit values")
            object.__setattr__(self, name, bits)

    @property
    def bits_per_rule(self) -> int:
        return WORD_BITS * self.universe_size

    def rule_bits(self, module: str, index: int) -> tuple:
        bits = self.antecedent_module if module == "antecedent" else self.conclusion_module
        n = self.bits_per_rule
        return bits[index * n:(index + 1) * n]

    def to_ruleset(self) -> RuleSet:
        return RuleSet(
            Rule([deserialize(self.rule_bits("antecedent", i))],
                 deserialize(self.rule_bits("conclusion", i)))
            for i in range(self.rule_count)
        )

    def flip_bit(self, module: str, index: int) -> "RomImage":
        """Copy with one bit inverted; used to prove the checker notices faults."""
        ant, con = list(self.antecedent_module), list(self.conclusion_module)
        target = ant if module == "antecedent" else con
        target[index] ^= 1
        return RomImage(tuple(ant), tuple(con), self.rule_count, self.universe_size)


def check_capacity(capacity: int) -> int:
    if not MIN_CAPACITY <= capacity <= MAX_CAPACITY or capacity & (capacity - 1):
        raise CapacityError(f"capacity {capacity} must be a power of two in "
                            f"{MIN_CAPACITY}..{MAX_CAPACITY}")
    return capacity


def build_rom(rules: RuleSet, capacity: int = DEFAULT_CAPACITY) -> RomImage:
    """Pack a single-antecedent rule set into a ROM padded to ``capacity`` rules."""
    check_capacity(capacity)
    if rules.antecedent_count != 1:
        raise UnsupportedRuleShape(
            f"chip data paths take one antecedent, rule set has {rules.antecedent_count}")
    if len(rules) > capacity:
        raise CapacityError(f"{len(rules)} rules exceed chip capacity {capacity}")
    e = rules.universe_size
    ant: List[int] = []
    con: List[int] = []
    for rule in rules:
        ant.extend(serialize(rule.antecedents[0]))
        con.extend(serialize(rule.consequent))
    pad = (capacity - len(rules)) * WORD_BITS * e
    ant.extend([0] * pad)
    con.extend([0] * pad)
    return RomImage(tuple(ant), tuple(con), capacity, e)


@dataclass
class Controller:
    """Cycle counter plus the two ROM address counters.

    ``cycle_counter`` counts ticks since reset, so the cycle in progress
    during the next tick is ``cycle_counter + 2``.
    """

    cycle_counter: int = 0
    antecedent_address: int = 0
    conclusion_address: int = 0
    phase: Phase = Phase.IDLE

    @property
    def cycle(self) -> int:
        """Number of the last completed clock cycle."""
        return self.cycle_counter + RESET_CYCLE


@dataclass(frozen=True)
class TraceRow:
    cycle: int
    phase: Phase
    input_bit: int
    output_bit: int
    valid: bool
    alphas: Tuple[int, ...]


@dataclass(frozen=True)
class Schedule:
    """Cycle numbers of the protocol for a given shape."""

    universe_size: int
    capacity: int

    @property
    def tree_levels(self) -> int:
        return (self.capacity - 1).bit_length()

    @property
    def latency(self) -> int:
        # ROM output register + clip register + one register per tree level
        return 2 + self.tree_levels

    @property
    def input_start(self) -> int:
        return INPUT_START

    @property
    def input_end(self) -> int:
        return INPUT_START - 1 + WORD_BITS * self.universe_size

    @property
    def conclusion_start(self) -> int:
        return self.input_end + 1

    @property
    def conclusion_end(self) -> int:
        return self.conclusion_start - 1 + WORD_BITS * self.universe_size

    @property
    def first_valid(self) -> int:
        return self.conclusion_start + self.latency

    @property
    def last_cycle(self) -> int:
        return self.conclusion_end + self.latency

    def phase_of(self, cycle: int) -> Phase:
        if cycle < self.input_start:
            return Phase.IDLE
        if cycle <= self.input_end:
            return Phase.ANTECEDENT
        if cycle <= self.last_cycle:
            return Phase.CONCLUSION
        return Phase.DONE


class _ChipBase:
    """ROM, controller and protocol bookkeeping shared by both chip models."""

    def __init__(self, rom: RomImage):
        self.rom = rom
        self.capacity = check_capacity(rom.rule_count)
        self.universe_size = rom.universe_size
        self.schedule = sched = Schedule(rom.universe_size, rom.rule_count)
        self._windows = (sched.input_start, sched.input_end, sched.conclusion_start,
                         sched.conclusion_end, sched.first_valid, sched.last_cycle)
        self.reset()

    @classmethod
    def from_rules(cls, rules: RuleSet, capacity: int = DEFAULT_CAPACITY):
        return cls(build_rom(rules, capacity))

    def reset(self) -> None:
        """Hold reset for one cycle; afterwards cycle 1 has completed."""
        self.controller = Controller()
        self.valid = False
        self._clear_datapaths()

    @property
    def cycle(self) -> int:
        return self.controller.cycle

    @property
    def phase(self) -> Phase:
        return self.controller.phase

    def _begin_cycle(self) -> int:
        ctl = self.controller
        if ctl.phase is Phase.DONE:
            raise ProtocolError("inference finished; reset before clocking again")
        in_lo, in_hi = self._windows[0], self._windows[1]
        cycle = ctl.cycle_counter + RESET_CYCLE + 1
        if cycle < in_lo:
            ctl.phase = Phase.IDLE
        elif cycle <= in_hi:
            ctl.phase = Phase.ANTECEDENT
        else:
            ctl.phase = Phase.CONCLUSION
        return cycle

    def _end_cycle(self, cycle: int, valid: bool) -> None:
        ctl = self.controller
        ctl.cycle_counter += 1
        if cycle == self._windows[5]:
            ctl.phase = Phase.DONE
        self.valid = valid


class FuzzyChip(_ChipBase):
    """One chip: ROM, controller, ``R`` data paths and the max tree.

    The data paths run in lockstep, so every clocked signal is held as one
    integer with data path ``i`` in bit ``i``; each comparator step below
    updates all paths at once. Drive it with :meth:`reset` followed by one
    :meth:`tick` per clock.
    """

    def __init__(self, rom: RomImage):
        r = check_capacity(rom.rule_count)
        # ROM word at each address, one bit per data path
        self._ant = [pack_lanes(col) for col in
                     zip(*(rom.rule_bits("antecedent", i) for i in range(r)))]
        self._con = [pack_lanes(col) for col in
                     zip(*(rom.rule_bits("conclusion", i) for i in range(r)))]
        self.mask = (1 << r) - 1
        self.tree = LaneMaxTree(r)
        super().__init__(rom)

    def _clear_datapaths(self) -> None:
        self.match_sel = (0, 0)
        self.alpha_planes = [0, 0, 0, 0]
        self.alpha_sel = (0, 0)
        self.alpha_committed = (0, 0, 0, 0)
        self.alpha_pos = 0
        self.rom_reg = 0
        self.rom_reg_flag = False
        self.clip_sel = (0, 0)
        self.clip_reg = 0
        self.clip_reg_flag = False
        self.tree.reset()

    def alpha_values(self) -> Tuple[int, ...]:
        p0, p1, p2, p3 = self.alpha_committed
        return tuple(((p0 >> i) & 1) << 3 | ((p1 >> i) & 1) << 2 | ((p2 >> i) & 1) << 1
                     | ((p3 >> i) & 1) for i in range(self.capacity))

    def tick(self, input_bit: int = 0) -> Tuple[int, bool]:
        """Advance one clock; returns ``(output_bit, valid)`` for that cycle."""
        cycle = self._begin_cycle()
        ctl = self.controller
        in_lo, in_hi, con_lo, con_hi, first_valid, last = self._windows
        mask = self.mask
        planes = self.alpha_planes

        # signals visible during this cycle, taken before the clock edge
        out_bit = self.tree.output[0] if self.tree.depth else self.clip_reg & 1
        valid = first_valid <= cycle <= last

        self.tree.step(self.clip_reg, self.clip_reg_flag)

        # clip units: min(alpha, conclusion bit), alpha recirculating
        if con_lo < cycle <= con_hi + 1:
            a_bits = planes.pop(0)
            planes.append(a_bits)
            flag = self.rom_reg_flag
            sa, sb, self.clip_reg = lanes_min_step(*self.clip_sel, a_bits, self.rom_reg,
                                                   flag, mask)
            self.clip_sel = (sa, sb)
            self.clip_reg_flag = flag
        else:
            self.clip_reg = 0
            self.clip_reg_flag = False

        # conclusion ROM read into the output register
        if con_lo <= cycle <= con_hi:
            addr = ctl.conclusion_address
            self.rom_reg = self._con[addr]
            self.rom_reg_flag = addr % WORD_BITS == 0
            ctl.conclusion_address += 1
        else:
            self.rom_reg = 0
            self.rom_reg_flag = False

        # first level: observation against antecedent, running max into alpha
        if in_lo <= cycle <= in_hi:
            addr = ctl.antecedent_address
            word_start = addr % WORD_BITS == 0
            obs = mask if input_bit else 0
            sa, sb, m = lanes_min_step(*self.match_sel, obs, self._ant[addr],
                                       word_start, mask)
            self.match_sel = (sa, sb)
            sa, sb, new = lanes_max_step(*self.alpha_sel, planes.pop(0), m, word_start, mask)
            self.alpha_sel = (sa, sb)
            planes.append(new)
            self.alpha_pos = (self.alpha_pos + 1) % WORD_BITS
            if self.alpha_pos == 0:
                self.alpha_committed = tuple(planes)
            ctl.antecedent_address += 1

        self._end_cycle(cycle, valid)
        return out_bit, valid


class ScalarChip(_ChipBase):
    """Reference chip model with one object per data path unit.

    Roughly five times slower than :class:`FuzzyChip`; kept as an
    independent check of the lane-parallel evaluation.
    """

    def __init__(self, rom: RomImage):
        r = check_capacity(rom.rule_count)
        self._ant = [rom.rule_bits("antecedent", i) for i in range(r)]
        self._con = [rom.rule_bits("conclusion", i) for i in range(r)]
        self.tree = MaxTree(r)
        super().__init__(rom)

    def _clear_datapaths(self) -> None:
        r = self.capacity
        self.match_states = [UNDECIDED] * r
        self.alphas = [AlphaRegister() for _ in range(r)]
        self.rom_reg = [0] * r
        self.rom_reg_flag = False
        self.clip_states = [UNDECIDED] * r
        self.clip_reg = [0] * r
        self.clip_reg_flag = False
        self.tree.reset()

    def alpha_values(self) -> Tuple[int, ...]:
        return tuple(reg.value for reg in self.alphas)

    def tick(self, input_bit: int = 0) -> Tuple[int, bool]:
        cycle = self._begin_cycle()
        ctl = self.controller
        in_lo, in_hi, con_lo, con_hi, first_valid, last = self._windows
        r = self.capacity
        alphas = self.alphas

        out_bit = self.tree.output[0]
        valid = first_valid <= cycle <= last

        self.tree.step(self.clip_reg, self.clip_reg_flag)

        if con_lo < cycle <= con_hi + 1:
            flag = self.rom_reg_flag
            rom_reg, clip_reg, states = self.rom_reg, self.clip_reg, self.clip_states
            for i in range(r):
                states[i], clip_reg[i] = serial_min_step(
                    states[i], alphas[i].recirculate(), rom_reg[i], flag)
            self.clip_reg_flag = flag
        else:
            self.clip_reg = [0] * r
            self.clip_reg_flag = False

        if con_lo <= cycle <= con_hi:
            addr = ctl.conclusion_address
            self.rom_reg = [bits[addr] for bits in self._con]
            self.rom_reg_flag = addr % WORD_BITS == 0
            ctl.conclusion_address += 1
        else:
            self.rom_reg = [0] * r
            self.rom_reg_flag = False

        if in_lo <= cycle <= in_hi:
            addr = ctl.antecedent_address
            word_start = addr % WORD_BITS == 0
            bit = 1 if input_bit else 0
            states, ant = self.match_states, self._ant
            for i in range(r):
                states[i], m = serial_min_step(states[i], bit, ant[i][addr], word_start)
                alphas[i].accumulate_bit(m, word_start)
            ctl.antecedent_address += 1

        self._end_cycle(cycle, valid)
        return out_bit, valid


def _drive(chip, observation: FuzzyVector, trace: Optional[list]):
    if len(observation) != chip.universe_size:
        raise DimensionError(f"observation has {len(observation)} elements, "
                             f"chip uses {chip.universe_size}")
    sched = chip.schedule
    stream = serialize(observation)
    chip.reset()
    if trace is not None:
        trace.append(TraceRow(RESET_CYCLE, Phase.IDLE, 0, 0, False, chip.alpha_values()))
    out: List[int] = []
    for cycle in range(RESET_CYCLE + 1, sched.last_cycle + 1):
        k = cycle - sched.input_start
        in_bit = stream[k] if 0 <= k < len(stream) else 0
        bit, valid = chip.tick(in_bit)
        if valid:
            out.append(bit)
        if trace is not None:
            trace.append(TraceRow(cycle, sched.phase_of(cycle), in_bit, bit, valid,
                                  chip.alpha_values()))
    return FuzzyVector(deserialize(out)), chip.cycle


def run_inference(chip, observation: FuzzyVector) -> Tuple[FuzzyVector, int]:
    """Run the full protocol; returns the decoded result and the cycle count."""
    return _drive(chip, observation, None)


def run_traced(chip, observation: FuzzyVector) -> Tuple[FuzzyVector, List[TraceRow]]:
    trace: List[TraceRow] = []
    result, _ = _drive(chip, observation, trace)
    return result, trace


def trace_header(capacity: int) -> List[str]:
    return (["cycle", "phase", "input_bit", "output_bit", "valid"]
            + [f"alpha_{i}" for i in range(capacity)])


def format_trace(trace: Sequence[TraceRow]) -> str:
    """Comma-delimited trace with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(len(trace[0].alphas) if trace else 0))
    for row in trace:
        writer.writerow([row.cycle, row.phase.value, row.input_bit, row.output_bit,
                         int(row.valid), *row.alphas])
    return buf.getvalue()


def parse_trace(text: str) -> List[TraceRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:5] != trace_header(0):
        raise ValueError(f"unexpected trace header {header[:5]}")
    rows = []
    for rec in reader:
        rows.append(TraceRow(int(rec[0]), Phase(rec[1]), int(rec[2]), int(rec[3]),
                             rec[4] == "1", tuple(int(v) for v in rec[5:])))
    return rows
