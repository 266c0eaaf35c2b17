"""Generate and train the bundled toy classification task.

Ten Gaussian class prototypes in [0,1]^64, samples drawn around them with
clipped noise, and a small dense net (64-32-10, ReLU then linear) trained
with plain softmax SGD.  Outputs are committed under data/ so the library
and tests never train anything at runtime.

Usage: python3 tools/make_toy_task.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from switchcount.infer import Dataset, Model, save_dataset, save_model
from switchcount.quantize import DenseLayer

SEED = 2024
N_TRAIN = 2000
N_TEST = 1000
N_FEATURES = 64
N_CLASSES = 10
NOISE = 0.45


def make_split(rng, protos, n):
    labels = rng.integers(0, N_CLASSES, n)
    x = protos[labels] + rng.normal(0.0, NOISE, (n, N_FEATURES))
    return np.clip(x, 0.0, 1.0), labels


def train(x, y, rng, hidden=32, epochs=60, lr=0.5, batch=64):
    w1 = rng.normal(0, 0.1, (hidden, N_FEATURES))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0, 0.1, (N_CLASSES, hidden))
    b2 = np.zeros(N_CLASSES)
    n = len(y)
    onehot = np.eye(N_CLASSES)[y]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            xb, tb = x[idx], onehot[idx]
            h = np.maximum(xb @ w1.T + b1, 0.0)
            z = h @ w2.T + b2
            p = np.exp(z - z.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            dz = (p - tb) / len(idx)
            dh = (dz @ w2) * (h > 0)
            w2 -= lr * dz.T @ h
            b2 -= lr * dz.sum(axis=0)
            w1 -= lr * dh.T @ xb
            b1 -= lr * dh.sum(axis=0)
    return Model(layers=[DenseLayer(w1, b1, relu=True),
                         DenseLayer(w2, b2, relu=False)])


def main():
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    protos = rng.uniform(0.0, 1.0, (N_CLASSES, N_FEATURES))
    xtr, ytr = make_split(rng, protos, N_TRAIN)
    xte, yte = make_split(rng, protos, N_TEST)
    model = train(xtr, ytr, rng)
    from switchcount.infer import forward_float
    acc = (forward_float(model, xte).argmax(axis=1) == yte).mean()
    print(f"test accuracy (float): {acc:.4f}")
    save_model(model, outdir / "toy_model.json")
    save_dataset(Dataset(xtr, ytr), outdir / "toy_train.csv")
    save_dataset(Dataset(xte, yte), outdir / "toy_test.csv")


if __name__ == "__main__":
    main()
