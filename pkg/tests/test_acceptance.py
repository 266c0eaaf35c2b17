"""Acceptance suite: nine numbered criteria, one pass/fail line each.

Each test computes its quantities from scratch, prints a single
"CRITERION n: PASS/FAIL" line with the governing numbers, and asserts the
stated tolerance.  Criteria that the implementation genuinely cannot meet
are asserted anyway and fail honestly; the analysis lives in the decisions
ledger under notes/.
"""

import hashlib
import math
import pathlib
import time

import numpy as np
import pytest

from switchcount import infer, mse
from switchcount.cli import main as cli_main
from switchcount.power_model import (PowerBudget, equal_power_points,
                                     required_acc_width, unsigned_power_save)
from switchcount.quantize import (DenseLayer, mul_via_additions,
                                  pann_quantize_weights, recombine,
                                  split_layer)
from switchcount.toggle_sim import StreamConfig, run_mac_stream, run_pann_stream

BITS = range(2, 9)


def report(n, ok, detail):
    print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def signed_sweep():
    return {b: run_mac_stream(StreamConfig(b_w=b, b_x=b)) for b in BITS}


@pytest.fixture(scope="module")
def unsigned_sweep():
    return {b: run_mac_stream(StreamConfig(b_w=b, b_x=b, signed=False)) for b in BITS}


def test_criterion_1_toggle_model_agreement():
    t0 = time.time()
    sweep = {b: run_mac_stream(StreamConfig(b_w=b, b_x=b)) for b in BITS}
    bad = []
    for b, rep in sweep.items():
        a = rep.averages
        checks = [("mult_input_a", a["mult_input_a"], 0.5 * b, 0.05),
                  ("mult_input_b", a["mult_input_b"], 0.5 * b, 0.05),
                  ("mult_internal", a["mult_internal"], 0.5 * b * b, 0.15),
                  ("acc_input", a["acc_input"], 16.0, 0.07),
                  ("acc_sum", a["acc_sum"], b, 0.15),
                  ("ff", a["ff"], b, 0.15)]
        for name, got, want, tol in checks:
            if abs(got - want) / want > tol:
                bad.append(f"b={b} {name}={got:.2f} (want {want}+-{tol:.0%})")
    elapsed = time.time() - t0
    ok = not bad and elapsed < 30
    report(1, ok, f"{len(bad)} component(s) out of tolerance "
                  f"({'; '.join(bad[:4])}{'...' if len(bad) > 4 else ''}), "
                  f"runtime {elapsed:.1f}s")


def test_criterion_2_unsigned_switch(signed_sweep, unsigned_sweep):
    bad = []
    for b, rep in unsigned_sweep.items():
        got = rep.averages["acc_input"]
        if abs(got - b) / b > 0.15:
            bad.append(f"b={b} acc_input={got:.2f} (want {b}+-15%)")
    if abs(unsigned_power_save(4, 32) - 1 / 3) > 1e-9:
        bad.append("analytic save at (4,32) != 33.3%")
    if abs(unsigned_power_save(2, 32) - 7 / 12) > 1e-9:
        bad.append("analytic save at (2,32) != 58.3%")
    for b, pct in zip(range(2, 7), (39, 28, 21, 16, 13)):
        B = required_acc_width(b, b, 3, 512)
        if int(100 * unsigned_power_save(b, B)) != pct:
            bad.append(f"Table column b={b}: {100 * unsigned_power_save(b, B):.1f} != {pct}")
    s_tot = signed_sweep[4].mult_total + signed_sweep[4].acc_total
    u_tot = unsigned_sweep[4].mult_total + unsigned_sweep[4].acc_total
    sim_save = 1 - u_tot / s_tot
    if abs(sim_save - 1 / 3) / (1 / 3) > 0.15:
        bad.append(f"simulated save at (4,32) = {sim_save:.1%} vs 33.3%+-15%")
    report(2, not bad, f"{len(bad)} check(s) failed "
                       f"({'; '.join(bad[:4])}{'...' if len(bad) > 4 else ''})")


def test_criterion_3_mixed_width():
    bad = []
    totals = {}
    for b_w in BITS:
        rep = run_mac_stream(StreamConfig(b_w=b_w, b_x=8))
        totals[b_w] = rep.mult_total
        want = 0.5 * 64 + 0.5 * (b_w + 8)
        if abs(totals[b_w] - want) / want > 0.10:
            bad.append(f"b_w={b_w}: {totals[b_w]:.2f} vs {want}+-10%")
    ratio = totals[4] / totals[8]
    if not 0.90 <= ratio <= 1.05:
        bad.append(f"signed ratio {ratio:.3f} not in [0.90, 1.05]")
    u48 = run_mac_stream(StreamConfig(b_w=4, b_x=8, signed=False)).mult_total
    u88 = run_mac_stream(StreamConfig(b_w=8, b_x=8, signed=False)).mult_total
    uratio = u48 / u88
    if not 0.85 <= uratio <= 1.00:
        bad.append(f"unsigned ratio {uratio:.3f} not in [0.85, 1.00]")
    report(3, not bad,
           f"signed ratio {ratio:.3f}, unsigned {uratio:.3f}, "
           f"{len(bad)} check(s) failed{': ' + '; '.join(bad) if bad else ''}")


def test_criterion_4_exactness(toy_model, toy_test, toy_cal):
    bad = []
    vals = np.arange(-8, 8, dtype=np.float64)
    layer = DenseLayer(vals.reshape(4, 4), np.zeros(4), relu=False)
    s = split_layer(layer)
    if not np.array_equal(s.w_plus - s.w_minus, layer.weights):
        bad.append("4-bit split not bit-exact")
    rng = np.random.default_rng(123)
    for _ in range(100):
        w = rng.normal(0, 1, (10, 10))
        x = rng.uniform(0, 1, (10, 10))
        sl = split_layer(DenseLayer(w, np.zeros(10), relu=False))
        got = recombine(sl.w_plus @ x, sl.w_minus @ x)
        if not np.allclose(got, w @ x, rtol=1e-9):
            bad.append("float split/recombine over 1e-9")
            break
    if any(mul_via_additions(qw, qx) != qw * qx
           for qw in range(64) for qx in range(-128, 128)):
        bad.append("mul_via_additions mismatch")
    qm = infer.quantize_model(toy_model, infer.PannAdd(5, 1.5), toy_cal.samples)
    lm = infer.run_quantized(qm, toy_test.samples, use_additions=False)
    la = infer.run_quantized(qm, toy_test.samples, use_additions=True)
    if not np.array_equal(lm, la):
        bad.append("PannAdd logits differ from QuantMul logits")
    report(4, not bad, f"{len(bad)} identity broken "
                       f"({'; '.join(bad) if bad else 'all identities exact'})")


def test_criterion_5_pann_power_law():
    rng = np.random.default_rng(11)
    d = 4000
    w = rng.normal(0, 1, d)
    bad = 0
    worst = 0.0
    for r_target in range(1, 9):
        qt = pann_quantize_weights(w, r_target)
        q = np.abs(qt.q)
        for bx in BITS:
            x = rng.integers(0, 2 ** (bx - 1), d)
            rep = run_pann_stream(q, x, bx)
            got = rep.acc_total
            want = (q.mean() + 0.5) * bx
            rel = abs(got - want) / want
            worst = max(worst, rel)
            if rel > 0.10:
                bad += 1
    report(5, bad == 0, f"{bad}/56 grid cells outside 10% of (R+0.5)*b_x "
                        f"(worst {worst:.0%})")


def test_criterion_6_equal_power_tables(toy_model, toy_test, toy_cal):
    expected = [(10.0, 6, 1.16, 0.01), (16.5, 6, 2.25, 0.01),
                (24.0, 7, 2.9, 0.05), (32.5, 8, 3.5, 0.05),
                (42.0, 8, 4.75, 0.05), (52.5, 8, 6.06, 0.05),
                (64.0, 8, 7.5, 0.05)]
    bad = []
    for p, bx, r_want, tol in expected:
        pts = {pt.b_x: pt.r for pt in equal_power_points(PowerBudget(p), BITS)}
        if abs(pts[bx] - r_want) > tol:
            bad.append(f"P={p} b_x={bx}: r={pts[bx]:.4f} vs {r_want}+-{tol}")
    rows = {row.b_x: row for row in infer.tradeoff_table(
        toy_model, toy_test, 10.0, 2, calibration=toy_cal)}
    # published tables truncate to two decimals
    trunc = lambda v: math.floor(v * 100) / 100
    for bx, lat, amem in [(6, 1.16, 3.00), (8, 0.75, 4.00)]:
        if trunc(rows[bx].latency) != lat or trunc(rows[bx].act_mem) != amem:
            bad.append(f"tradeoff row b_x={bx}: latency {rows[bx].latency:.4f}, "
                       f"act_mem {rows[bx].act_mem}")
    report(6, not bad, f"{len(bad)} row(s) off "
                       f"({'; '.join(bad) if bad else 'all rows match'})")


def test_criterion_7_mse_theory():
    t0 = time.time()
    bad = []
    model = mse.DistributionModel(mse.ModelKind.UNIFORM_PAPER)
    for b in (2, 4, 6):
        got = mse.monte_carlo_mse(model, 1024, {"weights": ("ruq", b),
                                                "acts": ("ruq", b)}, 10000, seed=21)
        want = mse.mse_ruq(1024, 1.0, 1.0, b, b)
        if abs(got - want) / want > 0.10:
            bad.append(f"RUQxRUQ b={b}: {got:.3e} vs {want:.3e}")
    for r in (1.0, 2.0, 4.0):
        got = mse.monte_carlo_mse(model, 1024, {"weights": ("pann", r),
                                                "acts": ("ruq", 4)}, 10000, seed=22)
        want = mse.mse_pann_fixed_r(1024, 1.0, 1.0, 4, r)
        if abs(got - want) / want > 0.10:
            bad.append(f"PANNxRUQ R={r}: {got:.3e} vs {want:.3e}")
    got = mse.empirical_pann_weight_error(1.0, 2.0, 1024, trials=100, seed=23)
    want = 1.0 / (192 * 4)
    if abs(got - want) / want > 0.10:
        bad.append(f"sigma_ew^2 {got:.3e} vs {want:.3e}")
    ratios = {b: r for b, _, _, _, _, r in mse.ratio_curve(1024, 1.0, 1.0, list(BITS))}
    if not (ratios[2] > 1 and ratios[3] > 1 and ratios[4] > 1 and ratios[8] < 1):
        bad.append(f"ratio endpoints wrong: {ratios}")
    g_cross = mse.gaussian_crossing_bit(1024, list(BITS), trials=1500, seed=24)
    u_cross = mse.uniform_crossing_bit(1024, list(BITS))
    if g_cross < u_cross:
        bad.append(f"gaussian crossing {g_cross} < uniform {u_cross}")
    elapsed = time.time() - t0
    ok = not bad and elapsed < 60
    report(7, ok, f"{len(bad)} check(s) failed, crossings gaussian={g_cross} "
                  f"uniform={u_cross}, runtime {elapsed:.1f}s")


def test_criterion_8_algorithm1_end_to_end(toy_model, toy_test, toy_train, toy_cal):
    t0 = time.time()
    rng = np.random.default_rng(31)
    wins = 0
    details = []
    for trial in range(5):
        idx = rng.choice(len(toy_train), 200, replace=False)
        cal = infer.Dataset(toy_train.samples[idx], toy_train.labels[idx])
        res = infer.budget_search(toy_model, toy_test, 10.0, BITS,
                                  calibration=cal, seed=trial)
        rep = infer.evaluate(toy_model, toy_test,
                             infer.PannAdd(res.b_x, res.r, count_toggles=True),
                             calibration=cal, seed=trial)
        ruq = infer.evaluate(toy_model, toy_test, infer.QuantMul(2, 2),
                             calibration=cal).accuracy
        power_ok = abs(rep.predicted_power - 10.0) <= 1e-9
        meas_ok = abs(rep.measured_power - 10.0) / 10.0 <= 0.15
        acc_ok = rep.accuracy >= ruq
        if power_ok and meas_ok and acc_ok:
            wins += 1
        details.append(f"seed{trial}: b_x={res.b_x} meas={rep.measured_power:.2f} "
                       f"acc={rep.accuracy:.3f} vs ruq {ruq:.3f}")
    elapsed = time.time() - t0
    ok = wins >= 3 and elapsed < 60
    report(8, ok, f"{wins}/5 seeds satisfied all gates, runtime {elapsed:.1f}s "
                  f"({'; '.join(details)})")


def test_criterion_9_reproducibility(tmp_path):
    def sha(p):
        return hashlib.sha256(p.read_bytes()).hexdigest()

    data = pathlib.Path(__file__).resolve().parent.parent / "data"
    cases = [
        (tmp_path / "sim.csv",
         ["simulate", "--bw", "4", "--bx", "4", "--n", "6000", "--seed", "5"]),
        (tmp_path / "mse.csv",
         ["mse", "--curve", "ratio", "--dist", "uniform", "--seed", "5"]),
        (tmp_path / "to.csv",
         ["tradeoff", "--model", str(data / "toy_model.json"),
          "--data", str(data / "toy_train.csv"), "--budget", "10",
          "--baseline-bits", "2", "--seed", "5"]),
    ]
    bad = []
    for out, argv in cases:
        assert cli_main(argv + ["--out", str(out)]) == 0
        before = sha(out)
        assert cli_main(["replay", str(out) + ".manifest.json"]) == 0
        if sha(out) != before:
            bad.append(argv[0])
    report(9, not bad, f"{len(cases) - len(bad)}/{len(cases)} commands replay "
                       f"byte-identically{(': ' + ', '.join(bad)) if bad else ''}")
