import numpy as np
import pytest

from mlmr.harness import load_config, shipped_config

# Reference tables for the two shipped examples, transcribed independently of the configs.
P01 = [[0.5, 0.4, 0.7, 0.3], [0.2, 0.9, 0.9, 0.7]]
P10 = [[0.6, 0.7, 0.8, 0.9], [0.9, 0.5, 0.4, 0.4]]
EX1_THETA0 = [[0.6, 0.5, 0.2, 0.4], [0.3, 0.7, 0.8, 0.3]]
EX1_THETA1 = [[0.8, 0.2, 0.7, 0.5], [0.5, 0.3, 0.6, 0.6]]
EX2_THETA0 = [[0.7, 0.3, 0.5, 0.5], [0.65, 0.7, 0.8, 0.4]]
EX2_THETA1 = [[0.4, 0.6, 0.7, 0.45], [0.5, 0.5, 0.6, 0.55]]

EX1_MU = [[0.6909, 0.3909, 0.4333, 0.425], [0.3363, 0.4429, 0.6615, 0.4909]]
EX2_MU = [[0.5636, 0.4091, 0.5933, 0.4875], [0.6227, 0.5714, 0.6615, 0.4954]]


def closed_form_mu(theta0, theta1):
    p01, p10 = np.array(P01), np.array(P10)
    pi0 = p10 / (p01 + p10)
    return np.array(theta0) * pi0 + np.array(theta1) * (1 - pi0)


@pytest.fixture(scope="session")
def ex1_config():
    return load_config(shipped_config("example1.cfg"))


@pytest.fixture(scope="session")
def ex2_config():
    return load_config(shipped_config("example2.cfg"))


@pytest.fixture(scope="session")
def ex1(ex1_config):
    return ex1_config.instance


@pytest.fixture(scope="session")
def ex2(ex2_config):
    return ex2_config.instance
