"""Run the bundled toy classifier with every backend at the 2-bit budget."""

import pathlib

from switchcount import infer

data = pathlib.Path(__file__).resolve().parent.parent / "data"
model = infer.load_model(data / "toy_model.json")
test = infer.load_dataset(data / "toy_test.csv", model.n_classes)
train = infer.load_dataset(data / "toy_train.csv", model.n_classes)
cal = infer.Dataset(train.samples[:200], train.labels[:200])

print("float reference :", infer.evaluate(model, test, infer.FloatRef()).accuracy)
print("2-bit multiply  :", infer.evaluate(model, test, infer.QuantMul(2, 2),
                                          calibration=cal).accuracy)

result = infer.budget_search(model, test, budget_p=10.0, calibration=cal)
print(f"add-only search : b_x={result.b_x}, R={result.r:.3f}")
report = infer.evaluate(model, test,
                        infer.PannAdd(result.b_x, result.r, count_toggles=True),
                        calibration=cal)
print(f"add-only result : accuracy {report.accuracy}, "
      f"power {report.measured_power:.2f} measured vs {report.predicted_power} budget")
