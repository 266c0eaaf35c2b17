"""Closed-form switching-activity models for MAC and add-only arithmetic.

All powers are average bit flips per operation; fractional values are fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MacPowerBreakdown:
    mult: float
    acc: float
    b_w: int
    b_x: int
    B: int
    signed: bool

    @property
    def total(self) -> float:
        return self.mult + self.acc


@dataclass(frozen=True)
class PowerBudget:
    """Bit-flip budget per MAC-equivalent element."""

    p: float

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("power budget must be positive")


@dataclass(frozen=True)
class EqualPowerPoint:
    b_x: int
    r: float


class InfeasibleBudgetError(ValueError):
    pass


def mac_power(b_w: int, b_x: int, B: int, signed: bool) -> MacPowerBreakdown:
    """Model power of one multiply-accumulate.

    Multiplier: 0.5*max(b_w,b_x)^2 internal plus 0.5(b_w+b_x) at the inputs.
    Accumulator, signed: 0.5B input (two's-complement sign flips reach every
    extension bit) plus b_w+b_x for sum output and FF together.  Unsigned:
    the input term drops to 0.5(b_w+b_x), giving 1.5(b_w+b_x) in total.
    """
    if b_w < 1 or b_x < 1:
        raise ValueError("widths must be positive")
    if B < b_w + b_x:
        raise ValueError("accumulator cannot represent the product")
    b_acc = b_w + b_x
    mult = 0.5 * max(b_w, b_x) ** 2 + 0.5 * b_acc
    if signed:
        acc = 0.5 * B + b_acc
    else:
        acc = 1.5 * b_acc
    return MacPowerBreakdown(mult=mult, acc=acc, b_w=b_w, b_x=b_x, B=B, signed=signed)


def pann_power(r: float, b_x: int) -> float:
    """Average bit flips per element of the add-only scheme: (r + 0.5) * b_x."""
    if r < 0:
        raise ValueError("addition factor must be non-negative")
    if b_x < 1:
        raise ValueError("activation width must be >= 1")
    return (r + 0.5) * b_x


def equal_power_points(budget: PowerBudget, b_x_range) -> list[EqualPowerPoint]:
    """All (b_x, r) pairs matching the budget with r = P/b_x - 0.5 > 0."""
    points = []
    for b_x in b_x_range:
        r = budget.p / b_x - 0.5
        if r > 0:
            points.append(EqualPowerPoint(b_x=b_x, r=r))
    if not points:
        raise InfeasibleBudgetError(
            f"budget {budget.p} too small for every width in {list(b_x_range)}")
    return points


def unsigned_power_save(b: int, B: int) -> float:
    """Fraction of MAC power removed by switching to unsigned arithmetic."""
    if B < 2 * b:
        raise ValueError("accumulator must be at least twice the operand width")
    signed_total = mac_power(b, b, B, signed=True).total
    unsigned_total = mac_power(b, b, B, signed=False).total
    return 1.0 - unsigned_total / signed_total


def required_acc_width(b_x: int, b_w: int, k: int, c_in: int) -> int:
    """Accumulator bits that make overflow impossible for a k*k*c_in reduction."""
    if min(b_x, b_w, k, c_in) < 1:
        raise ValueError("all arguments must be positive")
    return b_x + b_w + 1 + int(math.floor(math.log2(k * k * c_in)))


def network_power(per_mac: float, mac_count: int) -> float:
    """Total bit flips for a network: per-MAC power times MAC count."""
    if per_mac < 0 or mac_count < 0:
        raise ValueError("arguments must be non-negative")
    return per_mac * mac_count
