"""Quantizers and the unsigned layer split.

Three pieces work together here: the positive/negative layer split that lets
all accumulation run over non-negative numbers, an L1-normalized weight
quantizer whose step is chosen to hit a target average number of additions
per element, and a plain uniform quantizer used as the baseline.  A helper
realizes integer multiplication as repeated addition so it can drive the
toggle simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    relu: bool

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("inconsistent layer dimensions")


@dataclass
class SplitLayer:
    """Two non-negative halves with disjoint supports: W = w_plus - w_minus."""

    w_plus: np.ndarray
    w_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray


@dataclass
class QuantizedTensor:
    q: np.ndarray
    gamma: object  # scalar step, or per-row column vector for per-neuron steps
    signed: bool

    @property
    def addition_factor(self) -> float:
        """Average L1 mass of the integer weights per element."""
        return float(np.abs(self.q).sum() / self.q.size)

    def dequantized(self) -> np.ndarray:
        return self.q * self.gamma


@dataclass
class StorageReport:
    b_r: int
    activation_mem_factor: float
    weight_mem_factor: float
    latency_factor: float


def split_layer(layer: DenseLayer) -> SplitLayer:
    """Split into non-negative positive and negative parts."""
    w = layer.weights
    b = layer.bias
    return SplitLayer(
        w_plus=np.maximum(w, 0.0),
        w_minus=np.maximum(-w, 0.0),
        b_plus=np.maximum(b, 0.0),
        b_minus=np.maximum(-b, 0.0),
    )


def recombine(y_plus, y_minus):
    """y = y_plus - y_minus elementwise."""
    y_plus = np.asarray(y_plus)
    y_minus = np.asarray(y_minus)
    if y_plus.shape != y_minus.shape:
        raise ValueError("mismatched shapes")
    return y_plus - y_minus


def _round_half_away(x):
    """Round to nearest integer, ties away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def pann_quantize_weights(w, r_target: float) -> QuantizedTensor:
    """Quantize with step gamma = ||w||_1 / (R*d) and q = round(w/gamma).

    The step normalization makes the average |q| land close to r_target, the
    number of additions per element.  Signed inputs produce signed q; the
    positive and negative entries are later routed to separate unsigned
    accumulation paths.
    """
    w = np.asarray(w, dtype=np.float64)
    if r_target <= 0:
        raise ValueError("r_target must be positive")
    l1 = np.abs(w).sum()
    if l1 == 0:
        raise ValueError("cannot quantize an all-zero vector")
    gamma = l1 / (r_target * w.size)
    q = _round_half_away(w / gamma).astype(np.int64)
    return QuantizedTensor(q=q, gamma=gamma, signed=bool((w < 0).any()))


def pann_quantize_rows(w_matrix, r_target: float) -> QuantizedTensor:
    """Per-neuron variant: each row gets its own L1-normalized step."""
    w = np.asarray(w_matrix, dtype=np.float64)
    l1 = np.abs(w).sum(axis=1, keepdims=True)
    if (l1 == 0).any():
        raise ValueError("cannot quantize an all-zero row")
    gamma = l1 / (r_target * w.shape[1])
    q = _round_half_away(w / gamma).astype(np.int64)
    return QuantizedTensor(q=q, gamma=gamma, signed=bool((w < 0).any()))


def ruq_quantize(x, bits: int, lo: float, hi: float) -> QuantizedTensor:
    """Uniform quantizer over [lo, hi) with 2^bits levels.

    step = (hi - lo) / 2^bits; q = clamp(round((x - lo)/step), 0, 2^bits - 1);
    dequantized value = lo + step * q.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if bits < 1:
        raise ValueError("need at least one bit")
    x = np.asarray(x, dtype=np.float64)
    step = (hi - lo) / 2 ** bits
    q = np.clip(np.rint((x - lo) / step), 0, 2 ** bits - 1).astype(np.int64)
    return QuantizedTensor(q=q, gamma=step, signed=False)


def ruq_dequantize(qt: QuantizedTensor, lo: float) -> np.ndarray:
    return lo + qt.gamma * qt.q


def mul_via_additions(q_w: int, q_x: int) -> int:
    """q_w * q_x computed by an actual loop of q_w additions."""
    if q_w < 0:
        raise ValueError("repeat count must be non-negative")
    acc = 0
    for _ in range(q_w):
        acc += q_x
    return acc


def storage_report(qt: QuantizedTensor, b_x_baseline: int, b_x: int, r: float) -> StorageReport:
    """Memory and latency factors of an add-only configuration vs the baseline."""
    max_q = int(np.abs(qt.q).max())
    b_r = max(1, int(np.ceil(np.log2(max_q + 1))))
    return StorageReport(
        b_r=b_r,
        activation_mem_factor=b_x / b_x_baseline,
        weight_mem_factor=b_r / b_x_baseline,
        latency_factor=r,
    )
