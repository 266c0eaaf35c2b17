"""Where do repeated additions beat a plain uniform quantizer?

At a fixed power budget the add-only scheme can afford wider activations;
the closed-form error ratio shows it winning below ~5 bits and losing above.
"""

from switchcount.mse import ratio_curve

print("bits  budget  best_bx  mse_ratio (uniform quantizer / add-only)")
for b, p, bx, _ruq, _pann, ratio in ratio_curve(1024, 1.0, 1.0, range(2, 9)):
    marker = "<-- additions win" if ratio > 1 else ""
    print(f"{b:4d}  {p:6.1f}  {bx:7d}  {ratio:9.3f}  {marker}")
