import os

import numpy as np
import pytest
from click.testing import CliRunner

from src import get_settings
from src.dataset import LabeledDataset


@pytest.fixture(autouse=True)
def testing_env(monkeypatch):
    """
    Every test resolves settings from config.TestingConfig
    """

    monkeypatch.setenv("HDLSS_ENV", "testing")


@pytest.fixture()
def settings():
    """
    Testing settings with small ensembles and few MCD starts
    """

    return get_settings(env="testing")


@pytest.fixture()
def fast_settings(settings):
    """
    Settings small enough to run every method inside a unit test
    """

    settings.update(B=15, MCD_STARTS=20, PP_RANDOM_DIRECTIONS=30, PP_REFINE_ROUNDS=10)
    return settings


@pytest.fixture()
def two_gaussians():
    """
    Two well separated Gaussian classes in 2-D, 40 rows each
    """

    rng = np.random.default_rng(7)
    X = np.vstack([rng.standard_normal((40, 2)), rng.standard_normal((40, 2)) + [6.0, 0.0]])
    y = np.repeat([1, 2], 40)
    return LabeledDataset(features=X, labels=y, name="two-gaussians")


@pytest.fixture()
def three_gaussians():
    """
    Three mutually separated Gaussian classes in 3-D, 30 rows each
    """

    rng = np.random.default_rng(11)
    centers = np.array([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 5.0, 0.0]])
    X = np.vstack([rng.standard_normal((30, 3)) + center for center in centers])
    y = np.repeat([1, 2, 3], 30)
    return LabeledDataset(features=X, labels=y, name="three-gaussians")


@pytest.fixture()
def runner():
    """
    Invoke the command line without spawning a process
    """

    return CliRunner()


@pytest.fixture()
def write_file(tmp_path):
    """
    Write text into tmp_path and return the path
    """

    def write(name, text):
        path = os.path.join(tmp_path, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    return write


def literal_discriminant(x, means, precision, priors):
    """
    delta_k(x) computed one class at a time, straight from the formula
    """

    scores = []
    for mean, prior in zip(means, priors):
        diff = np.asarray(x, dtype=float) - mean
        scores.append(-0.5 * float(diff @ precision @ diff) + float(np.log(prior)))
    return np.array(scores)
