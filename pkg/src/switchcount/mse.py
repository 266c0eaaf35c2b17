"""Quantization-error theory for dot products, plus Monte-Carlo validation.

Closed forms cover a model where activations are uniform on [0, M_x] and
weights are uniform on [-M_w/2, M_w/2].  The Monte-Carlo oracle samples that
model directly (or a Gaussian/ReLU variant) and measures the squared error
between the exact dot product and its quantized evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .quantize import pann_quantize_rows


class ModelKind(Enum):
    UNIFORM_PAPER = "uniform"
    GAUSSIAN_RELU = "gaussian"


@dataclass(frozen=True)
class DistributionModel:
    kind: ModelKind
    m_x: float = 1.0
    m_w: float = 1.0
    mean: float = 0.0
    std: float = 1.0


@dataclass(frozen=True)
class MseParams:
    d: int
    sigma_w2: float
    sigma_x2: float
    sigma_ew2: float
    sigma_ex2: float

    @staticmethod
    def uniform(d, m_x, m_w, b_x, b_w):
        """Moments of the uniform model with b-bit uniform quantizers."""
        return MseParams(
            d=d,
            sigma_x2=m_x ** 2 / 3.0,
            sigma_w2=m_w ** 2 / 12.0,
            sigma_ex2=m_x ** 2 / (12.0 * 4.0 ** b_x),
            sigma_ew2=m_w ** 2 / (12.0 * 4.0 ** b_w),
        )


class InfeasibleBudgetError(ValueError):
    pass


def mse_general(p: MseParams, include_second_order: bool = False) -> float:
    """d * (sigma_w2*sigma_ex2 + sigma_x2*sigma_ew2 [+ sigma_ex2*sigma_ew2])."""
    out = p.sigma_w2 * p.sigma_ex2 + p.sigma_x2 * p.sigma_ew2
    if include_second_order:
        out += p.sigma_ex2 * p.sigma_ew2
    return p.d * out


def mse_ruq(d, m_x, m_w, b_x, b_w) -> float:
    """Closed-form dot-product MSE with uniform quantizers on both operands."""
    if b_x < 1 or b_w < 1:
        raise ValueError("bit widths must be >= 1")
    return d * m_x ** 2 * m_w ** 2 / 144.0 * (4.0 ** -b_x + 4.0 * 4.0 ** -b_w)


def mse_pann_fixed_r(d, m_x, m_w, b_x, r) -> float:
    """Add-only scheme at a fixed addition factor r."""
    if r <= 0:
        raise ValueError("addition factor must be positive")
    return d * m_x ** 2 * m_w ** 2 / 144.0 * (4.0 ** -b_x + 1.0 / (4.0 * r * r))


def mse_pann(d, m_x, m_w, b_x, budget_p) -> float:
    """Add-only scheme with r pinned by the power budget: r = P/b_x - 0.5."""
    if 2 * budget_p <= b_x:
        raise InfeasibleBudgetError(
            f"budget {budget_p} leaves no additions at width {b_x}")
    bracket = 4.0 ** -b_x + b_x ** 2 / (2.0 * budget_p - b_x) ** 2
    return d * m_x ** 2 * m_w ** 2 / 144.0 * bracket


def optimal_bx(d, m_x, m_w, budget_p, b_range=range(2, 9)):
    """Integer activation width minimizing the budgeted MSE; ties go small."""
    best = None
    for b in b_range:
        if 2 * budget_p <= b:
            continue
        val = mse_pann(d, m_x, m_w, b, budget_p)
        if best is None or val < best[1]:
            best = (b, val)
    if best is None:
        raise InfeasibleBudgetError(f"no feasible width in {list(b_range)}")
    return best


def ratio_curve(d, m_x, m_w, bit_list):
    """(b, MSE_RUQ / MSE_PANN) at the unsigned-MAC budget P = 0.5b^2 + 4b."""
    rows = []
    for b in bit_list:
        p = 0.5 * b * b + 4.0 * b
        ruq = mse_ruq(d, m_x, m_w, b, b)
        bx_star, pann = optimal_bx(d, m_x, m_w, p)
        rows.append((b, p, bx_star, ruq, pann, ruq / pann))
    return rows


def _midrise(x, step):
    """Uniform mid-rise quantizer; reconstruction sits at cell centers.

    Matches the moment model exactly: the error is uniform on
    [-step/2, step/2] over the whole support with no edge bias.
    """
    return (np.floor(x / step) + 0.5) * step


def _best_clip_quantizer(sample, bits, signed, grid=16):
    """Clip range by grid search minimizing the empirical quantizer MSE.

    Stand-in for analytic clipping methods; adequate for the qualitative
    Gaussian-vs-uniform comparisons made here.
    """
    peak = np.abs(sample).max()
    best = None
    for frac in np.linspace(0.3, 1.0, grid):
        c = frac * peak
        step = (2 * c if signed else c) / 2 ** bits
        lo = -c if signed else 0.0
        q = np.clip(np.rint((sample - lo) / step), 0, 2 ** bits - 1)
        err = ((lo + step * q - sample) ** 2).mean()
        if best is None or err < best[0]:
            best = (err, lo, step)
    return best[1], best[2]


def monte_carlo_mse(model: DistributionModel, d, quant_config, trials, seed) -> float:
    """Empirical mean of (w.x - dequantized(q_w).dequantized(q_x))^2.

    quant_config: {"weights": ("ruq", bits) or ("pann", r), "acts": ("ruq", bits)}.
    Under the uniform model the uniform quantizers are mid-rise, matching the
    moment assumptions of the closed forms; the Gaussian/ReLU model uses
    clipped quantizers with grid-searched ranges.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    rng = np.random.default_rng(seed)
    wkind, wparam = quant_config["weights"]
    akind, aparam = quant_config["acts"]
    if akind != "ruq":
        raise ValueError("activations are always uniformly quantized")

    total = 0.0
    done = 0
    chunk = 2000
    while done < trials:
        n = min(chunk, trials - done)
        if model.kind is ModelKind.UNIFORM_PAPER:
            w = rng.uniform(-model.m_w / 2, model.m_w / 2, size=(n, d))
            x = rng.uniform(0.0, model.m_x, size=(n, d))
            xq = _midrise(x, model.m_x / 2 ** aparam)
            if wkind == "ruq":
                wq = _midrise(w, model.m_w / 2 ** wparam)
            elif wkind == "pann":
                qt = pann_quantize_rows(w, wparam)
                wq = qt.q * qt.gamma
            else:
                raise ValueError(f"unknown weight quantizer {wkind!r}")
        else:
            w = rng.normal(model.mean, model.std, size=(n, d))
            x = np.maximum(rng.normal(model.mean, model.std, size=(n, d)), 0.0)
            alo, astep = _best_clip_quantizer(x[:200].ravel(), aparam, signed=False)
            q = np.clip(np.rint((x - alo) / astep), 0, 2 ** aparam - 1)
            xq = alo + astep * q
            if wkind == "ruq":
                wlo, wstep = _best_clip_quantizer(w[:200].ravel(), wparam, signed=True)
                q = np.clip(np.rint((w - wlo) / wstep), 0, 2 ** wparam - 1)
                wq = wlo + wstep * q
            elif wkind == "pann":
                qt = pann_quantize_rows(w, wparam)
                wq = qt.q * qt.gamma
            else:
                raise ValueError(f"unknown weight quantizer {wkind!r}")
        exact = (w * x).sum(axis=1)
        approx = (wq * xq).sum(axis=1)
        total += ((exact - approx) ** 2).sum()
        done += n
    return total / trials


def empirical_pann_weight_error(m_w, r, d, trials, seed) -> float:
    """Second moment of w - gamma*q for the L1-normalized quantizer."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-m_w / 2, m_w / 2, size=(trials, d))
    qt = pann_quantize_rows(w, r)
    err = w - qt.q * qt.gamma
    return float((err ** 2).mean())


def gaussian_ratio_curve(d, bit_list, trials, seed):
    """Empirical Gaussian/ReLU analogue of ratio_curve, same row shape."""
    model = DistributionModel(ModelKind.GAUSSIAN_RELU)
    rows = []
    for b in bit_list:
        p = 0.5 * b * b + 4.0 * b
        ruq = monte_carlo_mse(model, d, {"weights": ("ruq", b), "acts": ("ruq", b)},
                              trials, seed)
        best = None
        for bx in range(2, 9):
            r = p / bx - 0.5
            if r <= 0:
                continue
            val = monte_carlo_mse(model, d, {"weights": ("pann", r), "acts": ("ruq", bx)},
                                  trials, seed)
            if best is None or val < best[1]:
                best = (bx, val)
        rows.append((b, p, best[0], ruq, best[1], ruq / best[1]))
    return rows


def gaussian_crossing_bit(d, bit_list, trials, seed) -> int:
    """Smallest b where the empirical Gaussian/ReLU ratio drops below 1."""
    for (b, _p, _bx, _ruq, _pann, ratio) in gaussian_ratio_curve(d, bit_list, trials, seed):
        if ratio < 1.0:
            return b
    return max(bit_list) + 1


def uniform_crossing_bit(d, bit_list) -> int:
    """Smallest b where the analytic uniform-model ratio drops below 1."""
    for (b, _p, _bx, _ruq, _pann, ratio) in ratio_curve(d, 1.0, 1.0, bit_list):
        if ratio < 1.0:
            return b
    return max(bit_list) + 1
