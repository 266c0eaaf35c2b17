import pathlib

import pytest

from switchcount import infer

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def toy_model():
    return infer.load_model(DATA / "toy_model.json")


@pytest.fixture(scope="session")
def toy_test(toy_model):
    return infer.load_dataset(DATA / "toy_test.csv", toy_model.n_classes)


@pytest.fixture(scope="session")
def toy_train(toy_model):
    return infer.load_dataset(DATA / "toy_train.csv", toy_model.n_classes)


@pytest.fixture(scope="session")
def toy_cal(toy_train):
    return infer.Dataset(toy_train.samples[:200], toy_train.labels[:200])
