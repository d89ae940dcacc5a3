"""
Labeled data representation, CSV ingestion, preprocessing and stratified splitting.
"""
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from src import LOGGER
from src.errors import DataError, ValidationError
from src.seeding import make_rng


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    An n x p feature matrix with integer class labels in 1..G
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    feature_names: Optional[Tuple[str, ...]] = None
    label_names: Optional[Tuple[str, ...]] = None
    n_classes: Optional[int] = None
    contaminated: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        features = _frozen(self.features, float)
        labels = _frozen(self.labels, int)
        if features.ndim != 2:
            raise ValidationError(f"features must be a matrix, got shape {features.shape}")
        n, p = features.shape
        if n < 2 or p < 1:
            raise ValidationError(f"a dataset needs n >= 2 and p >= 1, got n={n}, p={p}")
        if labels.shape != (n,):
            raise ValidationError(f"expected {n} labels, got shape {labels.shape}")
        if not np.all(np.isfinite(features)):
            raise ValidationError("features contain non-finite values")

        n_classes = self.n_classes if self.n_classes is not None else int(labels.max())
        if labels.min() < 1 or labels.max() > n_classes:
            raise ValidationError(f"labels must lie in 1..{n_classes}")
        missing = sorted(set(range(1, n_classes + 1)) - set(np.unique(labels).tolist()))
        if missing:
            raise ValidationError(f"classes {missing} have no rows")
        if self.feature_names is not None and len(self.feature_names) != p:
            raise ValidationError(f"expected {p} feature names, got {len(self.feature_names)}")

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_classes", n_classes)
        if self.contaminated is not None:
            object.__setattr__(self, "contaminated", _frozen(self.contaminated, bool))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def G(self):
        return self.n_classes

    def class_rows(self, k):
        return self.features[self.labels == k]

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=int)
        return LabeledDataset(
            features=self.features[indices],
            labels=self.labels[indices],
            name=name or self.name,
            feature_names=self.feature_names,
            label_names=self.label_names,
            n_classes=self.n_classes,
            contaminated=None if self.contaminated is None else self.contaminated[indices],
        )

    def decode_labels(self, labels=None):
        """
        Map encoded labels back to the raw values they were read from
        """

        labels = self.labels if labels is None else np.asarray(labels, dtype=int)
        if self.label_names is None:
            return [str(label) for label in labels]
        return [self.label_names[label - 1] for label in labels]


@dataclass(frozen=True)
class SplitPlan:
    train_fraction: float = 2 / 3
    seed: int = 0
    replication_index: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValidationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.replication_index < 0:
            raise ValidationError("replication_index must be nonnegative")


@dataclass(frozen=True)
class ClassMembership:
    indicators: np.ndarray
    counts: np.ndarray
    proportions: np.ndarray


def _sort_raw_labels(raw_labels):
    distinct = set(raw_labels)
    try:
        return sorted(distinct, key=float)
    except ValueError:
        return sorted(distinct)


def _parse_floats(cells) -> np.ndarray:
    """
    Correctly rounded parse of every cell; unparseable cells become NaN
    """

    try:
        return np.asarray(cells, dtype=float)
    except (TypeError, ValueError):
        pass
    parsed = np.full(len(cells), np.nan)
    for i, cell in enumerate(cells):
        try:
            parsed[i] = float(cell)
        except (TypeError, ValueError):
            continue
    return parsed


def load_csv(path, label_column="label", min_class_rows=2) -> LabeledDataset:
    """
    Read a header-first, comma-separated file; every column except ``label_column`` is a numeric feature.

    Classes with fewer than ``min_class_rows`` rows are rejected, two being the least a split can use.
    """

    if not os.path.isfile(path):
        raise DataError(f"No such dataset file: '{path}'")

    LOGGER.info(f"Load dataset from '{path}'")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse '{path}': {e}")

    if label_column not in frame.columns:
        raise DataError(f"Label column '{label_column}' not found in '{path}'. Columns: {', '.join(frame.columns)}")

    feature_columns = [column for column in frame.columns if column != label_column]
    if not feature_columns:
        raise DataError(f"'{path}' has no feature columns")

    values = np.empty((len(frame), len(feature_columns)))
    for j, column in enumerate(feature_columns):
        parsed = _parse_floats(frame[column].str.strip().to_numpy())
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            row = int(bad[0])
            # header is line 1
            raise DataError(
                f"Unparseable cell at row {row + 1} (line {row + 2}), column '{column}': '{frame[column].iloc[row]}'"
            )
        values[:, j] = parsed

    raw_labels = frame[label_column].str.strip().tolist()
    label_names = _sort_raw_labels(raw_labels)
    if len(label_names) < 2:
        raise DataError(f"'{path}' has fewer than 2 classes")

    encoding = {raw: k + 1 for k, raw in enumerate(label_names)}
    labels = np.array([encoding[raw] for raw in raw_labels], dtype=int)
    counts = np.bincount(labels, minlength=len(label_names) + 1)[1:]
    small = [label_names[k] for k in np.flatnonzero(counts < min_class_rows)]
    if small:
        raise DataError(f"Classes {small} have fewer than {min_class_rows} rows")

    LOGGER.info(f"Loaded {len(labels)} rows, {len(feature_columns)} features, {len(label_names)} classes")
    return LabeledDataset(
        features=values,
        labels=labels,
        name=os.path.splitext(os.path.basename(path))[0],
        feature_names=tuple(feature_columns),
        label_names=tuple(label_names),
    )


def write_csv(ds: LabeledDataset, path, label_column="label"):
    feature_names = ds.feature_names or tuple(f"x{j + 1}" for j in range(ds.p))
    frame = pd.DataFrame(ds.features, columns=list(feature_names))
    frame[label_column] = ds.decode_labels() if ds.label_names else ds.labels
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")


def normalize_log_median(ds: LabeledDataset) -> LabeledDataset:
    """
    Log-transform every cell, then center each row on its own median
    """

    bad = np.argwhere(ds.features <= 0)
    if bad.size:
        row, column = bad[0]
        column_name = ds.feature_names[column] if ds.feature_names else f"x{column + 1}"
        raise DataError(
            f"Log-median normalization needs positive cells; row {row + 1}, column '{column_name}' "
            f"is {ds.features[row, column]}"
        )

    logged = np.log(ds.features)
    centered = logged - np.median(logged, axis=1, keepdims=True)
    return LabeledDataset(
        features=centered,
        labels=ds.labels,
        name=ds.name,
        feature_names=ds.feature_names,
        label_names=ds.label_names,
        n_classes=ds.n_classes,
    )


def class_membership(ds: LabeledDataset) -> ClassMembership:
    indicators = (ds.labels[:, None] == np.arange(1, ds.G + 1)[None, :]).astype(int)
    counts = indicators.sum(axis=0)
    return ClassMembership(indicators=indicators, counts=counts, proportions=counts / ds.n)


def train_count(n_k: int, train_fraction: float) -> int:
    # guard against 2/3 * 9 landing a hair above 6
    return int(math.ceil(train_fraction * n_k - 1e-9))


def split_indices(ds: LabeledDataset, plan: SplitPlan):
    """
    Stratified partition: per class, ceil(train_fraction * n_k) rows of a seeded shuffle go to train
    """

    rng = make_rng(plan.seed, plan.replication_index)
    train, test = [], []
    for k in range(1, ds.G + 1):
        rows = np.flatnonzero(ds.labels == k)
        n_train = train_count(rows.size, plan.train_fraction)
        if n_train < 1 or n_train >= rows.size:
            raise ValidationError(
                f"class {k} has {rows.size} rows; a {plan.train_fraction:.4g} split leaves its train or test part empty"
            )
        shuffled = rows[rng.permutation(rows.size)]
        train.append(shuffled[:n_train])
        test.append(shuffled[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(ds: LabeledDataset, plan: SplitPlan):
    train_idx, test_idx = split_indices(ds, plan)
    return ds.subset(train_idx), ds.subset(test_idx)
