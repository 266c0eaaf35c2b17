"""Trade activation width against additions on a constant power curve."""

from switchcount.power_model import PowerBudget, equal_power_points, mac_power

for b in (2, 3, 4):
    budget = mac_power(b, b, 32, signed=False).total
    points = equal_power_points(PowerBudget(budget), range(2, 9))
    frontier = ", ".join(f"({p.b_x}, R={p.r:.2f})" for p in points)
    print(f"{b}-bit unsigned MAC budget P={budget}: {frontier}")
