"""Bit-serial building blocks of the inference data path.

Grades travel as 4-bit words, most significant bit first, one bit per
clock. A comparator resolves on the first differing bit, so each unit
carries a small select state that is cleared by a word-boundary reset.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Iterable, List, Sequence, Tuple

from .core import check_grade

WORD_BITS = 4


class ComparatorState(IntEnum):
    UNDECIDED = 0
    LEFT_SELECTED = 1
    RIGHT_SELECTED = 2


# plain ints on the hot path; IntEnum comparisons are several times slower
UNDECIDED = int(ComparatorState.UNDECIDED)
LEFT = int(ComparatorState.LEFT_SELECTED)
RIGHT = int(ComparatorState.RIGHT_SELECTED)


def encode_word(g: int) -> Tuple[int, int, int, int]:
    """4-bit unsigned expansion of a grade, MSB first."""
    g = check_grade(g)
    return ((g >> 3) & 1, (g >> 2) & 1, (g >> 1) & 1, g & 1)


def decode_word(bits: Sequence[int]) -> int:
    if len(bits) != WORD_BITS:
        raise ValueError(f"serial word needs {WORD_BITS} bits, got {len(bits)}")
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"not a bit: {b!r}")
        value = (value << 1) | b
    return value


_WORDS = {g: encode_word(g) for g in range(16)}


def serialize(grades: Iterable[int]) -> List[int]:
    """Concatenate the MSB-first words of a grade sequence."""
    bits: List[int] = []
    for g in grades:
        try:
            bits.extend(_WORDS[g])
        except (KeyError, TypeError):
            check_grade(g)
            raise
    return bits


def deserialize(bits: Sequence[int]) -> List[int]:
    if len(bits) % WORD_BITS:
        raise ValueError("bit stream is not word aligned")
    return [decode_word(bits[i:i + WORD_BITS]) for i in range(0, len(bits), WORD_BITS)]


def serial_min_step(state: int, a_bit: int, b_bit: int, reset: bool) -> Tuple[int, int]:
    """One clock of the serial minimum unit; returns ``(state, out_bit)``."""
    if reset:
        state = UNDECIDED
    if state == UNDECIDED:
        if a_bit == b_bit:
            return state, a_bit
        # the operand showing 0 at the first difference is the smaller one
        return (LEFT if a_bit == 0 else RIGHT), 0
    return state, (a_bit if state == LEFT else b_bit)


def serial_max_step(state: int, a_bit: int, b_bit: int, reset: bool) -> Tuple[int, int]:
    """One clock of the serial maximum unit; returns ``(state, out_bit)``."""
    if reset:
        state = UNDECIDED
    if state == UNDECIDED:
        if a_bit == b_bit:
            return state, a_bit
        return (LEFT if a_bit == 1 else RIGHT), 1
    return state, (a_bit if state == LEFT else b_bit)


def stream_words(step, a_words: Sequence[int], b_words: Sequence[int]) -> List[int]:
    """Clock two word streams through a comparator and decode the output."""
    if len(a_words) != len(b_words):
        raise ValueError("word streams differ in length")
    state = UNDECIDED
    out = []
    for a_bits, b_bits in zip(map(encode_word, a_words), map(encode_word, b_words)):
        for pos in range(WORD_BITS):
            state, bit = step(state, a_bits[pos], b_bits[pos], pos == 0)
            out.append(bit)
    return deserialize(out)


class AlphaRegister:
    """4-bit recirculating shift register holding a running maximum.

    While accumulating, the register's MSB and the incoming bit go through a
    serial max unit whose output is shifted back in at the LSB end; after
    four clocks the register holds ``max(old, word)``. While recirculating,
    the MSB is shifted out and fed straight back, replaying the stored word.
    """

    __slots__ = ("bits", "state", "value", "_pos")

    def __init__(self, value: int = 0):
        self.clear(value)

    def clear(self, value: int = 0) -> None:
        self.bits = list(encode_word(value))
        self.state = UNDECIDED
        self.value = value
        self._pos = 0

    def accumulate_bit(self, in_bit: int, reset: bool) -> int:
        bits = self.bits
        self.state, m = serial_max_step(self.state, bits[0], in_bit, reset)
        del bits[0]
        bits.append(m)
        pos = self._pos + 1
        if pos == WORD_BITS:
            self.value = (bits[0] << 3) | (bits[1] << 2) | (bits[2] << 1) | bits[3]
            pos = 0
        self._pos = pos
        return m

    def recirculate(self) -> int:
        bits = self.bits
        b = bits.pop(0)
        bits.append(b)
        self._pos = (self._pos + 1) & 3
        return b

    def copy(self) -> "AlphaRegister":
        reg = AlphaRegister.__new__(AlphaRegister)
        reg.bits = list(self.bits)
        reg.state = self.state
        reg.value = self.value
        reg._pos = self._pos
        return reg

    def __repr__(self) -> str:
        return f"AlphaRegister(value={self.value}, bits={self.bits})"


def alpha_accumulate(reg: AlphaRegister, next_word: Sequence[int]) -> AlphaRegister:
    """Return a new register holding ``max(reg, next_word)``."""
    out = reg.copy()
    for pos, bit in enumerate(next_word):
        out.accumulate_bit(bit, pos == 0)
    return out


class MaxTree:
    """Binary tree of serial max units with a register after every level.

    ``n`` leaves are padded with constant-0 leaves up to a power of two.
    A word-boundary reset flag travels through the level registers next to
    the data so each level's comparators reset on the first bit they see of
    every word. Latency is ``ceil(log2(n))`` clocks.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("tree needs at least one leaf")
        self.n = n
        self.depth = (n - 1).bit_length()
        self.width = 1 << self.depth
        self.reset()

    @property
    def latency(self) -> int:
        return self.depth

    def reset(self) -> None:
        # level L holds width >> (L+1) registered outputs
        self.data = [[0] * (self.width >> (lvl + 1)) for lvl in range(self.depth)]
        self.flags = [False] * self.depth
        self.states = [[UNDECIDED] * (self.width >> (lvl + 1)) for lvl in range(self.depth)]

    @property
    def output(self) -> Tuple[int, bool]:
        """Registered output bit and its word-start flag."""
        return self.data[-1][0], self.flags[-1]

    def step(self, leaves: Sequence[int], reset: bool) -> Tuple[int, bool]:
        """Clock the tree once; returns the output visible before the edge."""
        if self.depth == 0:
            return leaves[0], reset
        data, flags, states = self.data, self.flags, self.states
        out = data[-1][0], flags[-1]
        for lvl in range(self.depth - 1, -1, -1):
            if lvl == 0:
                src = leaves
                if len(src) < self.width:
                    src = list(src) + [0] * (self.width - len(src))
                rst = reset
            else:
                src = data[lvl - 1]
                rst = flags[lvl - 1]
            dst = data[lvl]
            st = states[lvl]
            for k in range(len(dst)):
                st[k], dst[k] = serial_max_step(st[k], src[2 * k], src[2 * k + 1], rst)
            flags[lvl] = rst
        return out


def tree_reduce_max(leaves: Sequence[Sequence[int]], n: int = None) -> List[int]:
    """Reduce word-aligned grade streams to their word-wise maximum.

    ``leaves`` holds one grade sequence per occupied leaf; ``n`` is the tree
    capacity (defaults to the number of leaves) and vacant leaves read 0.
    """
    if n is None:
        n = len(leaves)
    if len(leaves) > n:
        raise ValueError(f"{len(leaves)} leaves exceed tree capacity {n}")
    if not leaves:
        raise ValueError("no leaf streams")
    length = len(leaves[0])
    if any(len(stream) != length for stream in leaves):
        raise ValueError("leaf streams are not word aligned")
    tree = MaxTree(n)
    streams = [serialize(stream) for stream in leaves]
    total = WORD_BITS * length
    out = []
    for t in range(total + tree.latency):
        if t < total:
            bits = [s[t] for s in streams]
            rst = t % WORD_BITS == 0
        else:
            bits, rst = [0] * len(streams), False
        bit, _ = tree.step(bits, rst)
        if t >= tree.latency:
            out.append(bit)
    return deserialize(out)


# Lane-parallel forms. Bit ``i`` of every integer is an independent copy of
# the unit (lane ``i``); ``sel_a``/``sel_b`` are the LEFT/RIGHT selection
# flags of all lanes. Each lane behaves exactly like the scalar step above.

def lanes_min_step(sel_a: int, sel_b: int, a: int, b: int, reset: bool, mask: int):
    """Serial minimum across all lanes; returns ``(sel_a, sel_b, out)``."""
    if reset:
        sel_a = sel_b = 0
    und = mask & ~(sel_a | sel_b)
    out = (und & a & b) | (sel_a & a) | (sel_b & b)
    return sel_a | (und & b & ~a), sel_b | (und & a & ~b), out


def lanes_max_step(sel_a: int, sel_b: int, a: int, b: int, reset: bool, mask: int):
    """Serial maximum across all lanes; returns ``(sel_a, sel_b, out)``."""
    if reset:
        sel_a = sel_b = 0
    und = mask & ~(sel_a | sel_b)
    out = (und & (a | b)) | (sel_a & a) | (sel_b & b)
    return sel_a | (und & a & ~b), sel_b | (und & b & ~a), out


def lane_states(sel_a: int, sel_b: int, lanes: int) -> List[ComparatorState]:
    """Unpack lane selection flags into per-lane comparator states."""
    out = []
    for i in range(lanes):
        if (sel_a >> i) & 1:
            out.append(ComparatorState.LEFT_SELECTED)
        elif (sel_b >> i) & 1:
            out.append(ComparatorState.RIGHT_SELECTED)
        else:
            out.append(ComparatorState.UNDECIDED)
    return out


def pack_lanes(bits: Sequence[int]) -> int:
    """Pack per-lane bits into one integer, lane 0 in the low bit."""
    word = 0
    for b in reversed(bits):
        word = (word << 1) | (b & 1)
    return word


def unpack_lanes(word: int, lanes: int) -> List[int]:
    return [(word >> i) & 1 for i in range(lanes)]


class LaneMaxTree:
    """:class:`MaxTree` evaluated with one integer per level.

    Level ``l`` keeps its unit outputs at lanes that are multiples of
    ``2**(l+1)``; the unit at lane ``k`` combines input lanes ``k`` and
    ``k + 2**l``. The root ends up in lane 0.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("tree needs at least one leaf")
        self.n = n
        self.depth = (n - 1).bit_length()
        self.width = 1 << self.depth
        self.level_masks = []
        for lvl in range(self.depth):
            stride = 1 << (lvl + 1)
            self.level_masks.append(pack_lanes(
                [1 if i % stride == 0 else 0 for i in range(self.width)]))
        self.reset()

    @property
    def latency(self) -> int:
        return self.depth

    def reset(self) -> None:
        self.data = [0] * self.depth
        self.flags = [False] * self.depth
        self.sel_a = [0] * self.depth
        self.sel_b = [0] * self.depth

    @property
    def output(self) -> Tuple[int, bool]:
        if self.depth == 0:
            raise ValueError("a single-leaf tree has no registers")
        return self.data[-1] & 1, self.flags[-1]

    def step(self, leaves: int, reset: bool) -> Tuple[int, bool]:
        """Clock once with packed leaf bits; returns the pre-edge output."""
        if self.depth == 0:
            return leaves & 1, reset
        data, flags, sel_a, sel_b, masks = (self.data, self.flags, self.sel_a,
                                            self.sel_b, self.level_masks)
        out = data[-1] & 1, flags[-1]
        if not (leaves or reset or any(data) or any(flags)):
            # all-zero inputs leave every register and selection unchanged
            return out
        for lvl in range(self.depth - 1, -1, -1):
            if lvl:
                src, rst = data[lvl - 1], flags[lvl - 1]
            else:
                src, rst = leaves, reset
            m = masks[lvl]
            sel_a[lvl], sel_b[lvl], data[lvl] = lanes_max_step(
                sel_a[lvl], sel_b[lvl], src & m, (src >> (1 << lvl)) & m, rst, m)
            flags[lvl] = rst
        return out
