from pathlib import Path

import numpy as np
import pytest

from AdvShift.DataGenerator import DataGenerator
from AdvShift.DataModels.Dataset import Dataset, SynthConfig
from AdvShift.DataModels.LabelDistribution import LabelDistribution

CONFIG_DIR = Path(__file__).parent.parent / "ExampleData" / "configs"


@pytest.fixture
def generator():
    return DataGenerator()


@pytest.fixture
def small_dataset(generator):
    """60 examples, 3 overlapping classes in 2 dimensions."""
    return generator.gaussian_mixture_dataset(SynthConfig(num_classes=3, dim=2, n=60, separation=1.5, seed=0))


@pytest.fixture
def separable_dataset():
    """Two well separated classes, 40 examples each."""
    rng = np.random.default_rng(7)
    features = np.vstack([rng.normal(-4.0, 0.5, (40, 2)), rng.normal(4.0, 0.5, (40, 2))])
    labels = np.repeat([0, 1], 40)
    return Dataset(features, labels, 2)


@pytest.fixture
def overlapping_balanced_dataset():
    """Two balanced, overlapping classes; no linear separator exists."""
    rng = np.random.default_rng(11)
    features = np.vstack([rng.normal(-0.5, 1.0, (30, 2)), rng.normal(0.5, 1.0, (30, 2))])
    labels = np.repeat([0, 1], 30)
    return Dataset(features, labels, 2)


@pytest.fixture
def imbalanced_dataset(generator):
    """90/10 two-class problem with overlapping classes."""
    return generator.gaussian_mixture_dataset(
        SynthConfig(num_classes=2, dim=2, n=400, separation=1.0, noise=1.0, marginal=[0.9, 0.1], seed=3)
    )


@pytest.fixture
def uniform3():
    return LabelDistribution.uniform(3)


@pytest.fixture
def write_text(tmp_path):
    """Writes a text file under tmp_path and returns its path as a string."""

    def _write(name, content):
        path = tmp_path / name
        path.write_text(content)
        return str(path)

    return _write


@pytest.fixture
def data_csv(tmp_path, generator):
    """Saves a dataset under tmp_path and returns the CSV path."""

    def _save(dataset, name="data.csv"):
        path = tmp_path / name
        generator.save_csv(dataset, path)
        return str(path)

    return _save


def simplex_grid(step):
    """All points of the 3-class simplex with coordinates on a grid of the given step."""
    count = int(round(1.0 / step))
    i, j = np.meshgrid(np.arange(count + 1), np.arange(count + 1), indexing="ij")
    mask = i + j <= count
    a = i[mask] * step
    b = j[mask] * step
    c = np.clip(1.0 - a - b, 0.0, None)
    return np.stack([a, b, c], axis=1)


def grid_kl(points, q):
    """KL(point || q) for every row of points, with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(points > 0, points * np.log(points / q), 0.0)
    return terms.sum(axis=1)
