import csv
import logging
from pathlib import Path

import numpy as np

from AdvShift import Seeding
from AdvShift.DataModels.Dataset import Dataset, SynthConfig
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from Exceptions.ConfigExceptions import InputFileDoesNotExist, ParseError
from Exceptions.DomainExceptions import DomainError
from Exceptions.LoaderExceptions import LoaderException

logger = logging.getLogger(__name__)


class DataGenerator:
    """
    Produces, reads and writes labelled samples.

    Methods:
        gaussian_mixture_dataset(cfg: SynthConfig) -> Dataset:
            Seeded class-conditional Gaussian mixture.

        resample_label_distribution(data: Dataset, target: LabelDistribution, n: int, seed: int) -> Dataset:
            Label-shifted resample: labels from the target marginal, features from the class pools.

        load_csv(path) -> Dataset / save_csv(data, path) -> None:
            CSV with header label,f0,...,f{d-1}.
    """

    def gaussian_mixture_dataset(self, cfg: SynthConfig) -> Dataset:
        """
        Class means are separation * N(0, I) draws from the "means" stream of
        cfg.mixture_seed; each example is its class mean plus isotropic Gaussian noise
        with the class's own scale, drawn from the "data" stream of cfg.seed. Train and
        test samples of one problem share means_seed and differ in seed.

        :param cfg: Mixture recipe
        :return: Deterministic dataset for (cfg.mixture_seed, cfg.seed)
        """
        means = cfg.separation * Seeding.stream(cfg.mixture_seed, "means").standard_normal((cfg.num_classes, cfg.dim))
        rng = Seeding.stream(cfg.seed, "data")
        labels = rng.choice(cfg.num_classes, size=cfg.n, p=cfg.label_marginal.probs)
        noise = rng.standard_normal((cfg.n, cfg.dim)) * cfg.noise_per_class[labels][:, None]
        logger.debug("Generated %d examples over %d classes (seed %d)", cfg.n, cfg.num_classes, cfg.seed)
        return Dataset(means[labels] + noise, labels, cfg.num_classes)

    def resample_label_distribution(
        self, data: Dataset, target: LabelDistribution, n: int, seed: int
    ) -> Dataset:
        """
        Draws n labels from the target marginal and, for each, a feature vector uniformly
        with replacement from the examples of that class, so p(x | y) is unchanged.

        :param data: Source sample
        :param target: Target label marginal over data.num_classes classes
        :param n: Size of the resample
        :param seed: Seed for the "resample" stream
        """
        if target.num_classes != data.num_classes:
            raise DomainError(f"target has {target.num_classes} classes, data has {data.num_classes}")
        supported = np.nonzero(target.probs > 0)[0]
        missing = [int(c) for c in supported if data.class_counts[c] == 0]
        if missing:
            raise DomainError(f"target puts mass on classes absent from the data: {missing}")
        rng = Seeding.stream(seed, "resample")
        labels = rng.choice(data.num_classes, size=n, p=target.probs)
        indices = np.empty(n, dtype=int)
        for c in np.unique(labels):
            pool = np.nonzero(data.labels == c)[0]
            slots = np.nonzero(labels == c)[0]
            indices[slots] = rng.choice(pool, size=slots.size, replace=True)
        return Dataset(data.features[indices], labels, data.num_classes)

    def load_csv(self, path) -> Dataset:
        """
        Reads a dataset CSV. The number of classes is inferred as max label + 1
        (0 for a header-only file).

        :param path: CSV file with header label,f0,...
        """
        if not Path(path).is_file():
            raise InputFileDoesNotExist(str(path))
        features, labels = [], []
        with open(path, "r", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header or header[0].strip() != "label":
                raise ParseError(str(path), 1, "header must start with 'label'")
            dim = len(header) - 1
            expected = [f"f{i}" for i in range(dim)]
            if [h.strip() for h in header[1:]] != expected:
                raise ParseError(str(path), 1, f"feature columns must be {','.join(expected)}")
            for row in reader:
                if not row:
                    continue
                if len(row) != dim + 1:
                    raise ParseError(str(path), reader.line_num, f"expected {dim + 1} fields, got {len(row)}")
                try:
                    label = int(row[0])
                    values = [float(v) for v in row[1:]]
                except ValueError as e:
                    raise ParseError(str(path), reader.line_num, str(e))
                if label < 0:
                    raise ParseError(str(path), reader.line_num, f"negative label {label}")
                labels.append(label)
                features.append(values)
        num_classes = max(labels) + 1 if labels else 0
        return Dataset(np.array(features, dtype=float).reshape(len(labels), dim), np.array(labels, dtype=int), num_classes)

    def save_csv(self, data: Dataset, path) -> None:
        """
        Writes a dataset CSV; floats use repr so values round-trip exactly.
        """
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["label"] + [f"f{i}" for i in range(data.dim)])
                for x, y in zip(data.features, data.labels):
                    writer.writerow([int(y)] + [repr(float(v)) for v in x])
        except OSError:
            raise LoaderException(path)
