"""Meter one multiply-accumulate unit and compare against the closed forms."""

from switchcount.power_model import mac_power
from switchcount.toggle_sim import StreamConfig, run_mac_stream

cfg = StreamConfig(b_w=4, b_x=4, B=32, signed=True, seed=7)
report = run_mac_stream(cfg)
formula = mac_power(4, 4, 32, signed=True)

print("component        measured   model")
for name, value in report.averages.items():
    print(f"{name:15s}  {value:8.3f}")
print(f"{'mult_total':15s}  {report.mult_total:8.3f}  {formula.mult:6.1f}")
print(f"{'acc_total':15s}  {report.acc_total:8.3f}  {formula.acc:6.1f}")
