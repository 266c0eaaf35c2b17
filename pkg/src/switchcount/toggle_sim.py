"""Bit-exact multiplier and accumulator simulation that counts bit toggles.

Dynamic power in CMOS is proportional to switching activity, so the number
of bit flips per operation is a platform-independent power proxy.  The units
here model a multiply-accumulate datapath: a shift-and-add multiplier (plain
or Booth-recoded), a wide wrapping accumulator, and the flip-flop register
holding the running sum.  Toggles are counted by comparing each node's bit
pattern against the pattern left there by the previous operation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

DEFAULT_N_SAMPLES = 36000
DEFAULT_ACC_WIDTH = 32


class MultiplierKind(Enum):
    BOOTH_RADIX2 = "booth"
    SERIAL_SHIFT_ADD = "serial"


class Distribution(Enum):
    UNIFORM = "uniform"
    CLIPPED_GAUSSIAN = "gaussian"


def _mask(width):
    return (1 << width) - 1


def _to_signed(u, width):
    return u - (1 << width) if u >> (width - 1) else u


@dataclass(frozen=True)
class Word:
    """Fixed-width integer with an explicit two's-complement interpretation."""

    value: int
    width: int
    signed: bool

    def __post_init__(self):
        lo, hi = word_range(self.width, self.signed)
        if not lo <= self.value < hi:
            raise ValueError(
                f"value {self.value} outside [{lo}, {hi}) for "
                f"{'signed' if self.signed else 'unsigned'} width {self.width}"
            )

    @property
    def bits(self) -> int:
        """Bit pattern as a non-negative int (LSB is bit 0)."""
        return self.value & _mask(self.width)


def word_range(width, signed):
    """Representable [lo, hi) interval."""
    if signed:
        return -(1 << width - 1), 1 << width - 1
    return 0, 1 << width


def encode_word(value: int, width: int, signed: bool) -> Word:
    """Build a Word, range-checking the value."""
    return Word(int(value), width, signed)


def hamming_toggles(prev: Word, next_: Word) -> int:
    """Number of bit positions that differ between two equal-width words."""
    if prev.width != next_.width:
        raise ValueError(f"width mismatch: {prev.width} vs {next_.width}")
    return (prev.bits ^ next_.bits).bit_count()


@dataclass
class ToggleTally:
    """Per-component bit-flip counts for one or more MAC operations."""

    mult_input_a: int = 0
    mult_input_b: int = 0
    mult_internal: int = 0
    acc_input: int = 0
    acc_sum: int = 0
    ff: int = 0

    def total(self) -> int:
        return (self.mult_input_a + self.mult_input_b + self.mult_internal
                + self.acc_input + self.acc_sum + self.ff)

    def add(self, other: "ToggleTally") -> None:
        self.mult_input_a += other.mult_input_a
        self.mult_input_b += other.mult_input_b
        self.mult_internal += other.mult_internal
        self.acc_input += other.acc_input
        self.acc_sum += other.acc_sum
        self.ff += other.ff


@dataclass(frozen=True)
class StreamConfig:
    b_w: int
    b_x: int
    B: int = DEFAULT_ACC_WIDTH
    signed: bool = True
    distribution: Distribution = Distribution.UNIFORM
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 7
    multiplier_kind: MultiplierKind = MultiplierKind.BOOTH_RADIX2

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2; toggles compare consecutive operations")
        if self.b_w < 1 or self.b_x < 1:
            raise ValueError("operand widths must be positive")
        if self.B < self.b_w + self.b_x:
            raise ValueError("accumulator narrower than the product width")


class MacUnitState:
    """Persistent node state of one MAC unit.

    The multiplier is an unrolled shift-and-add datapath: one adder row per
    recoded digit of the activation operand, each row max(b_w,b_x)+1 or +2
    bits wide.  The weight operand drives the addend bus.  Rows whose digit
    is zero are gated and keep their previous node values.  The internal
    snapshot (the two addend inputs of every row adder) has a fixed size for
    a given (kind, b_w, b_x).
    """

    def __init__(self, multiplier_kind, b_w, b_x, B=DEFAULT_ACC_WIDTH, signed=True):
        if B < b_w + b_x:
            raise ValueError("accumulator narrower than the product width")
        self.multiplier_kind = multiplier_kind
        self.b_w = b_w
        self.b_x = b_x
        self.b_acc = b_w + b_x
        self.B = B
        self.signed = signed
        n = max(b_w, b_x)
        self.n = n
        # signed streams never carry into an extra Booth digit; unsigned do
        self.rows = n if signed else n + 1
        self.row_width = n + 1 if signed else n + 2
        self.prev_input_a = encode_word(0, b_w, signed)
        self.prev_input_b = encode_word(0, b_x, signed)
        self._row_a = [0] * self.rows
        self._row_b = [0] * self.rows
        self.prev_acc_in = encode_word(0, B, False)
        self.acc_register = encode_word(0, B, False)

    @property
    def prev_internal_nodes(self):
        """Concatenated snapshot of all row-adder input nodes."""
        snap = 0
        for i in range(self.rows):
            snap = (snap << self.row_width) | self._row_a[i]
            snap = (snap << self.row_width) | self._row_b[i]
        return snap

    def _digits(self, x_val):
        """Per-row digits in {-1, 0, +1} for the activation operand."""
        n, rows = self.n, self.rows
        q = x_val & _mask(rows) if self.signed else x_val
        out = []
        if self.multiplier_kind is MultiplierKind.BOOTH_RADIX2:
            qm1 = 0
            for i in range(rows):
                q0 = (q >> i) & 1
                out.append(qm1 - q0)
                qm1 = q0
        else:
            for i in range(rows):
                bit = (q >> i) & 1
                if self.signed and i == n - 1:
                    out.append(-bit)  # two's-complement MSB has weight -2^(n-1)
                else:
                    out.append(bit)
        return out


def multiply_step(state: MacUnitState, a: Word, b: Word):
    """One exact multiplication; returns (product Word, ToggleTally).

    a is the weight operand (addend bus), b is the activation operand
    (shift/recode control).  Input-register toggles compare against the
    previous operands; internal toggles compare each active row adder's two
    addend inputs against the values they held the last time that row fired.
    """
    if a.width != state.b_w or b.width != state.b_x:
        raise ValueError("operand widths do not match the unit")
    if a.signed != state.signed or b.signed != state.signed:
        raise ValueError("operand signedness does not match the unit")
    tally = ToggleTally()
    tally.mult_input_a = hamming_toggles(state.prev_input_a, a)
    tally.mult_input_b = hamming_toggles(state.prev_input_b, b)
    state.prev_input_a = a
    state.prev_input_b = b

    n, wdt = state.n, state.row_width
    m = _mask(wdt)
    mult = a.value & m  # sign- or zero-extended addend
    acc = 0
    low = 0
    internal = 0
    for i, d in enumerate(state._digits(b.value)):
        if d:
            addend = mult if d == 1 else (~mult) & m
            carry_in = 0 if d == 1 else 1
            internal += (acc ^ state._row_a[i]).bit_count()
            internal += (addend ^ state._row_b[i]).bit_count()
            state._row_a[i] = acc
            state._row_b[i] = addend
            acc = (acc + addend + carry_in) & m
        low |= (acc & 1) << i
        acc = (acc >> 1) | (acc & (1 << wdt - 1))  # arithmetic shift right
    tally.mult_internal = internal

    raw = (acc << state.rows | low) & _mask(2 * n)
    value = _to_signed(raw, 2 * n) if state.signed else raw
    product = encode_word(value, state.b_acc, state.signed)
    return product, tally


def accumulate_step(state: MacUnitState, addend: Word) -> ToggleTally:
    """Add one value into the wrapping B-bit accumulator, counting toggles.

    The addend is sign-extended (signed) or zero-extended (unsigned) to B
    bits.  acc_input compares against the previous accumulator input, acc_sum
    compares old register vs new sum, and the FF latches the sum so its count
    equals acc_sum.
    """
    if addend.width > state.B:
        raise ValueError("addend wider than the accumulator")
    B = state.B
    ext = addend.value & _mask(B)  # two's-complement extension when negative
    tally = ToggleTally()
    tally.acc_input = (ext ^ state.prev_acc_in.bits).bit_count()
    state.prev_acc_in = Word(ext, B, False)
    new = (state.acc_register.value + ext) & _mask(B)
    flips = (new ^ state.acc_register.value).bit_count()
    tally.acc_sum = flips
    tally.ff = flips
    state.acc_register = Word(new, B, False)
    return tally


@dataclass
class ToggleReport:
    """Per-operation averages plus derived totals."""

    config: dict
    averages: dict = field(default_factory=dict)

    @property
    def mult_total(self):
        return (self.averages["mult_input_a"] + self.averages["mult_input_b"]
                + self.averages["mult_internal"])

    @property
    def acc_total(self):
        return (self.averages["acc_input"] + self.averages["acc_sum"]
                + self.averages["ff"])


def gen_words(cfg: StreamConfig, width=None, stream=0):
    """Draw the operand value sequence for one input of the stream.

    Uniform draws cover [-2^(b-1), 2^(b-1)) signed or [0, 2^(b-1)) unsigned.
    Clipped Gaussian draws n standard normals, scales by 2^(b-1) over the max
    absolute value, rounds, and clips back into range (absolute value first
    when unsigned).  Deterministic for a fixed (seed, stream).
    """
    b = width if width is not None else cfg.b_w
    rng = np.random.default_rng([cfg.seed, stream])
    n = cfg.n_samples
    half = 1 << b - 1
    if cfg.distribution is Distribution.UNIFORM:
        lo, hi = (-half, half) if cfg.signed else (0, half)
        vals = rng.integers(lo, hi, size=n)
    else:
        z = rng.standard_normal(n)
        v = np.rint(z / np.abs(z).max() * half)
        if cfg.signed:
            vals = np.clip(v, -half, half - 1)
        else:
            vals = np.clip(np.abs(v), 0, half - 1)
    return [encode_word(int(v), b, cfg.signed) for v in vals]


def run_mac_stream(cfg: StreamConfig) -> ToggleReport:
    """Simulate n_samples MAC operations and average every tally component."""
    ws = gen_words(cfg, cfg.b_w, stream=0)
    xs = gen_words(cfg, cfg.b_x, stream=1)
    state = MacUnitState(cfg.multiplier_kind, cfg.b_w, cfg.b_x, cfg.B, cfg.signed)
    total = ToggleTally()
    for a, b in zip(ws, xs):
        product, t = multiply_step(state, a, b)
        total.add(t)
        total.add(accumulate_step(state, product))
    n = cfg.n_samples
    averages = {
        "mult_input_a": total.mult_input_a / n,
        "mult_input_b": total.mult_input_b / n,
        "mult_internal": total.mult_internal / n,
        "acc_input": total.acc_input / n,
        "acc_sum": total.acc_sum / n,
        "ff": total.ff / n,
    }
    return ToggleReport(config={"kind": cfg.multiplier_kind.value,
                                "b_w": cfg.b_w, "b_x": cfg.b_x, "B": cfg.B,
                                "signed": cfg.signed,
                                "distribution": cfg.distribution.value,
                                "n_samples": cfg.n_samples, "seed": cfg.seed},
                        averages=averages)


def run_pann_stream(weights_q, activations, b_x: int, B: int = DEFAULT_ACC_WIDTH) -> ToggleReport:
    """Multiplier-free accumulation: each activation is added weight-many times.

    weights_q are non-negative integers from the L1-normalized weight
    quantizer; activations are unsigned b_x-bit words.  For element i the
    accumulator input changes once and the same value is then added
    weights_q[i] times, so the input bus stays fixed between those adds.
    Returns per-element averages of the accumulator components.
    """
    if len(weights_q) != len(activations):
        raise ValueError("weights_q and activations must have equal length")
    state = MacUnitState(MultiplierKind.SERIAL_SHIFT_ADD, b_x, b_x, B, signed=False)
    total = ToggleTally()
    for q, x in zip(weights_q, activations):
        q = int(q)
        if q < 0:
            raise ValueError("negative quantized weight; split signs first")
        if q == 0:
            continue  # no adds, the input bus is not driven for this element
        w = x if isinstance(x, Word) else encode_word(int(x), b_x, False)
        for _ in range(q):
            total.add(accumulate_step(state, w))
    n = len(weights_q)
    averages = {
        "mult_input_a": 0.0,
        "mult_input_b": 0.0,
        "mult_internal": 0.0,
        "acc_input": total.acc_input / n,
        "acc_sum": total.acc_sum / n,
        "ff": total.ff / n,
    }
    return ToggleReport(config={"kind": "pann", "b_x": b_x, "B": B,
                                "n_elements": n,
                                "mean_q": float(np.mean([int(q) for q in weights_q]))},
                        averages=averages)
