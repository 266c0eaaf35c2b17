"""How much power disappears when the accumulator never sees sign flips.

A signed stream toggles all B high bits whenever the product changes sign;
restricting operands to non-negative values drops that to the product width.
"""

from switchcount.power_model import required_acc_width, unsigned_power_save
from switchcount.toggle_sim import StreamConfig, run_mac_stream

for b in range(2, 7):
    signed = run_mac_stream(StreamConfig(b_w=b, b_x=b))
    unsigned = run_mac_stream(StreamConfig(b_w=b, b_x=b, signed=False))
    analytic = unsigned_power_save(b, 32)
    B_tight = required_acc_width(b, b, 3, 512)
    tight = unsigned_power_save(b, B_tight)
    print(f"b={b}: acc_input {signed.averages['acc_input']:6.2f} -> "
          f"{unsigned.averages['acc_input']:5.2f} flips, "
          f"save {analytic:4.0%} at B=32, {tight:4.0%} at B={B_tight}")
