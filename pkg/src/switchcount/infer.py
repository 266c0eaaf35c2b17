"""Dense-network inference with swappable MAC backends.

Three backends evaluate the same model: a float reference, an integer
quantized-multiply path, and an add-only path that splits weights by sign
and accumulates over unsigned integers.  The add-only path can meter its
switching activity with the toggle simulator.  On shared quantized tensors
the multiply and add-only paths agree bit for bit, since
(W_plus - W_minus) @ q == W @ q in exact integer arithmetic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .power_model import mac_power, pann_power
from .quantize import DenseLayer, pann_quantize_rows, storage_report
from .toggle_sim import run_pann_stream

MODEL_FORMAT_VERSION = 1
DATASET_FORMAT_VERSION = 1


class SchemaError(ValueError):
    """Malformed model or dataset file; message carries the field path."""


class InfeasibleBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class FloatRef:
    pass


@dataclass(frozen=True)
class QuantMul:
    b_x: int
    b_w: int


@dataclass(frozen=True)
class PannAdd:
    b_x: int
    r: float
    count_toggles: bool = False


Backend = Union[FloatRef, QuantMul, PannAdd]


@dataclass
class Model:
    layers: list

    def __post_init__(self):
        for i in range(1, len(self.layers)):
            if self.layers[i].weights.shape[1] != self.layers[i - 1].weights.shape[0]:
                raise ValueError(f"layer {i} input dim mismatch")
        for i, layer in enumerate(self.layers[:-1]):
            if not layer.relu:
                raise ValueError(
                    f"hidden layer {i} must use ReLU so activations stay non-negative")
        if self.layers and self.layers[-1].relu:
            raise ValueError("final layer must be linear")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].weights.shape[0]


@dataclass
class Dataset:
    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or self.labels.shape != (self.samples.shape[0],):
            raise ValueError("samples must be (n, d) with one label per row")
        if self.samples.size and (self.samples.min() < 0 or self.samples.max() > 1):
            raise ValueError("features must lie in [0, 1]")

    def __len__(self):
        return len(self.labels)


@dataclass
class QuantLayer:
    """One layer's tensors after range calibration and quantization.

    Weight reconstruction is w_offset + gamma_w * q_w (offset 0 for the
    L1-normalized quantizer); activations reconstruct as act_lo + step * q.
    """

    q_w: np.ndarray
    gamma_w: np.ndarray     # (out,) per-neuron steps, or a length-1 broadcast
    w_offset: float
    bias: np.ndarray
    relu: bool
    act_bits: int
    act_lo: float
    act_step: float


@dataclass
class QuantizedModel:
    layers: list
    backend: Backend

    @property
    def max_weight_magnitude(self) -> int:
        return max(int(np.abs(l.q_w).max()) for l in self.layers)


@dataclass
class EvalReport:
    accuracy: float
    predicted_power: Optional[float]
    measured_power: Optional[float]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy out of range")

    @property
    def power_within_tolerance(self) -> Optional[bool]:
        if self.measured_power is None or self.predicted_power is None:
            return None
        return abs(self.measured_power - self.predicted_power) / self.predicted_power <= 0.15


def load_model(path) -> Model:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level: expected an object")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise SchemaError(f"format_version: expected {MODEL_FORMAT_VERSION}, "
                          f"got {doc.get('format_version')!r}")
    if "layers" not in doc or not isinstance(doc["layers"], list) or not doc["layers"]:
        raise SchemaError("layers: expected a non-empty list")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        for key in ("weights", "bias", "relu"):
            if key not in entry:
                raise SchemaError(f"layers[{i}].{key}: missing field")
        try:
            layers.append(DenseLayer(weights=entry["weights"], bias=entry["bias"],
                                     relu=bool(entry["relu"])))
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"layers[{i}]: {exc}") from exc
    return Model(layers=layers)


def save_model(model: Model, path) -> None:
    doc = {"format_version": MODEL_FORMAT_VERSION,
           "layers": [{"weights": l.weights.tolist(), "bias": l.bias.tolist(),
                       "relu": l.relu} for l in model.layers]}
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_dataset(path, n_classes: Optional[int] = None) -> Dataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith(f"# format_version={DATASET_FORMAT_VERSION}"):
            raise SchemaError(f"header: expected '# format_version="
                              f"{DATASET_FORMAT_VERSION}' comment line")
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("body: no data rows")
    try:
        labels = np.array([int(r[0]) for r in rows])
        samples = np.array([[float(v) for v in r[1:]] for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"body: {exc}") from exc
    ds = Dataset(samples=samples, labels=labels)
    if labels.min() < 0:
        raise SchemaError("labels: negative class index")
    if n_classes is not None and labels.max() >= n_classes:
        raise SchemaError(f"labels: index {labels.max()} >= n_classes {n_classes}")
    return ds


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# format_version={DATASET_FORMAT_VERSION}\n")
        w = csv.writer(fh)
        for label, row in zip(ds.labels, ds.samples):
            w.writerow([int(label)] + [repr(float(v)) for v in row])


def forward_float(model: Model, x: np.ndarray) -> np.ndarray:
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    for layer in model.layers:
        h = h @ layer.weights.T + layer.bias
        if layer.relu:
            h = np.maximum(h, 0.0)
    return h


def calibrate_act_ranges(model: Model, samples: np.ndarray) -> list:
    """(lo, hi) of each layer's input activations over a calibration split."""
    h = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    ranges = []
    for layer in model.layers:
        hi = float(h.max())
        if hi <= 0:
            hi = 1.0  # degenerate calibration split; any positive range works
        ranges.append((max(0.0, float(h.min())), hi))
        h = h @ layer.weights.T + layer.bias
        if layer.relu:
            h = np.maximum(h, 0.0)
    return ranges


def quantize_model(model: Model, backend: Backend, cal_samples: np.ndarray) -> QuantizedModel:
    if isinstance(backend, FloatRef):
        raise ValueError("the float reference backend has no quantized form")
    ranges = calibrate_act_ranges(model, cal_samples)
    qlayers = []
    for layer, (lo, hi) in zip(model.layers, ranges):
        if isinstance(backend, QuantMul):
            b_w = backend.b_w
            peak = float(np.abs(layer.weights).max())
            if peak == 0:
                peak = 1.0
            # symmetric range [-peak, peak); unsigned codes with an offset
            step_w = 2.0 * peak / 2 ** b_w
            q_w = np.clip(np.rint((layer.weights + peak) / step_w),
                          0, 2 ** b_w - 1).astype(np.int64)
            gamma_w = np.full(layer.weights.shape[0], step_w)
            offset = -peak
            b_x = backend.b_x
        else:
            qt = pann_quantize_rows(layer.weights, backend.r)
            q_w = qt.q
            gamma_w = np.asarray(qt.gamma).ravel()
            offset = 0.0
            b_x = backend.b_x
        step_x = (hi - lo) / 2 ** b_x
        qlayers.append(QuantLayer(q_w=q_w, gamma_w=gamma_w, w_offset=offset,
                                  bias=layer.bias, relu=layer.relu,
                                  act_bits=b_x, act_lo=lo, act_step=step_x))
    return QuantizedModel(layers=qlayers, backend=backend)


def run_quantized(qmodel: QuantizedModel, x: np.ndarray,
                  use_additions: bool) -> np.ndarray:
    """Integer evaluation; the two paths share every float operation.

    With use_additions the signed weight integers are split into two
    non-negative halves accumulated separately and recombined, which equals
    the direct signed integer dot product exactly.  The elementwise repeated
    addition realization of each product is metered separately by the toggle
    simulator; here the sums are vectorized for throughput.
    """
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    for lyr in qmodel.layers:
        if h.min() < -1e-12:
            raise ValueError("negative activation in a fixed-point layer; "
                             "a preceding ReLU is missing")
        q_x = np.clip(np.rint((h - lyr.act_lo) / lyr.act_step),
                      0, 2 ** lyr.act_bits - 1).astype(np.int64)
        if use_additions:
            q_plus = np.maximum(lyr.q_w, 0)
            q_minus = np.maximum(-lyr.q_w, 0)
            acc = q_x @ q_plus.T - q_x @ q_minus.T
        else:
            acc = q_x @ lyr.q_w.T
        w_sums = lyr.w_offset * lyr.q_w.shape[1] + lyr.gamma_w * lyr.q_w.sum(axis=1)
        h = (lyr.act_step * acc * lyr.gamma_w
             + lyr.act_lo * w_sums
             + lyr.w_offset * lyr.act_step * q_x.sum(axis=1, keepdims=True)
             + lyr.bias)
        if lyr.relu:
            h = np.maximum(h, 0.0)
    return h


def forward(model: Model, x, backend: Backend, cal_samples=None) -> np.ndarray:
    if isinstance(backend, FloatRef):
        return forward_float(model, x)
    if cal_samples is None:
        cal_samples = np.atleast_2d(np.asarray(x, dtype=np.float64))
    qmodel = quantize_model(model, backend, cal_samples)
    return run_quantized(qmodel, x, use_additions=isinstance(backend, PannAdd))


def measured_pann_power(qmodel: QuantizedModel, samples: np.ndarray,
                        max_streams: int = 60, seed: int = 0) -> float:
    """Average toggles per element from bit-exact streams of real operands.

    Each sampled (input sample, neuron) pair yields one accumulation stream
    per sign half; a stream's per-element toggles are the accumulator input,
    sum, and register flips divided by the fan-in.
    """
    rng = np.random.default_rng(seed)
    h = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    per_stream = []
    for lyr in qmodel.layers:
        q_x = np.clip(np.rint((h - lyr.act_lo) / lyr.act_step),
                      0, 2 ** lyr.act_bits - 1).astype(np.int64)
        n_pick = max(1, max_streams // len(qmodel.layers))
        rows = rng.integers(0, lyr.q_w.shape[0], size=n_pick)
        cols = rng.integers(0, q_x.shape[0], size=n_pick)
        for neuron, sample in zip(rows, cols):
            total = 0.0
            for half in (np.maximum(lyr.q_w[neuron], 0),
                         np.maximum(-lyr.q_w[neuron], 0)):
                rep = run_pann_stream(half, q_x[sample], lyr.act_bits)
                total += (rep.averages["acc_input"] + rep.averages["acc_sum"]
                          + rep.averages["ff"])
            per_stream.append(total)
        # advance activations in float for the next layer's operand streams
        h = run_quantized(QuantizedModel([lyr], qmodel.backend), h, True)
    return float(np.mean(per_stream))


def evaluate(model: Model, dataset: Dataset, backend: Backend,
             calibration: Optional[Dataset] = None, seed: int = 0,
             acc_width: int = 32) -> EvalReport:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.samples.shape[1] != model.input_dim:
        raise ValueError("sample dim does not match model input dim")
    cal = (calibration or dataset).samples
    predicted = measured = None
    if isinstance(backend, FloatRef):
        logits = forward_float(model, dataset.samples)
    else:
        qmodel = quantize_model(model, backend, cal)
        logits = run_quantized(qmodel, dataset.samples,
                               use_additions=isinstance(backend, PannAdd))
        if isinstance(backend, QuantMul):
            predicted = mac_power(backend.b_w, backend.b_x, acc_width, signed=True).total
        else:
            predicted = pann_power(backend.r, backend.b_x)
            if backend.count_toggles:
                measured = measured_pann_power(qmodel, dataset.samples, seed=seed)
    accuracy = float((logits.argmax(axis=1) == dataset.labels).mean())
    return EvalReport(accuracy=accuracy, predicted_power=predicted,
                      measured_power=measured,
                      config={"backend": repr(backend), "seed": seed})


@dataclass
class BudgetSearchResult:
    b_x: int
    r: float
    table: list  # (b_x, r, accuracy) per feasible candidate


def _feasible_points(budget_p: float, b_range) -> list:
    pts = [(b, budget_p / b - 0.5) for b in b_range]
    pts = [(b, r) for b, r in pts if r > 0]
    if not pts:
        min_p = 0.5 * min(b_range)
        raise InfeasibleBudgetError(
            f"budget {budget_p} infeasible; need P > {min_p} "
            f"for the smallest width in {list(b_range)}")
    return pts


def budget_search(model: Model, dataset: Dataset, budget_p: float,
                  b_range=range(2, 9), calibration: Optional[Dataset] = None,
                  seed: int = 0) -> BudgetSearchResult:
    """Sweep activation widths at equal power and keep the most accurate."""
    table = []
    for b, r in _feasible_points(budget_p, b_range):
        rep = evaluate(model, dataset, PannAdd(b_x=b, r=r),
                       calibration=calibration, seed=seed)
        table.append((b, r, rep.accuracy))
    best = max(table, key=lambda row: row[2])
    return BudgetSearchResult(b_x=best[0], r=best[1], table=table)


@dataclass
class TradeoffRow:
    b_x: int
    latency: float
    b_r: int
    act_mem: float
    weight_mem: float
    accuracy: float


def tradeoff_table(model: Model, dataset: Dataset, budget_p: float,
                   b_x_baseline: int, b_range=range(2, 9),
                   calibration: Optional[Dataset] = None,
                   seed: int = 0) -> list:
    """Full equal-power frontier; no winner is chosen."""
    rows = []
    cal = (calibration or dataset).samples
    for b, r in _feasible_points(budget_p, b_range):
        qmodel = quantize_model(model, PannAdd(b_x=b, r=r), cal)
        first = pann_quantize_rows(model.layers[0].weights, r)
        sr = storage_report(first, b_x_baseline, b, r)
        b_r = max(1, int(np.ceil(np.log2(qmodel.max_weight_magnitude + 1))))
        rep = evaluate(model, dataset, PannAdd(b_x=b, r=r),
                       calibration=calibration, seed=seed)
        rows.append(TradeoffRow(b_x=b, latency=r, b_r=b_r,
                                act_mem=sr.activation_mem_factor,
                                weight_mem=b_r / b_x_baseline,
                                accuracy=rep.accuracy))
    return rows
