"""
Gini decision trees and the random subspace ensemble: bootstrap rows, draw a feature subset per learner,
grow a tree on it and aggregate by majority vote.
"""
import json
import math
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from src import LOGGER
from src.classifiers.base import BaseClassifier, check_features
from src.dataset import LabeledDataset
from src.errors import ValidationError
from src.seeding import make_rng

D_MODES = ("fixed", "sqrt", "uniform_random")
FOREST_FORMAT_VERSION = 2
FOREST_MAGIC = b"HDLSSRF\x00"
HEADER_LENGTH = struct.Struct("<Q")
NODE_ARRAYS = (("feature", "<i8"), ("threshold", "<f8"), ("left", "<i8"), ("right", "<i8"), ("label", "<i8"))
TIE_TOLERANCE = 1e-12
LEAF = -1


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 20
    min_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ValidationError(f"max_depth and min_leaf must be >= 1, got {self.max_depth}, {self.min_leaf}")


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """
    Flat node arrays; ``feature[i] == -1`` marks a leaf whose class is ``label[i]``. Rows with
    x[feature] <= threshold go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    feature_subset: Tuple[int, ...]

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X):
        nodes = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        active = self.feature[nodes] != LEAF
        while np.any(active):
            current = nodes[active]
            goes_left = X[rows[active], self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(goes_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return self.label[nodes]


@dataclass(frozen=True)
class ForestConfig:
    B: int = 500
    d_mode: str = "sqrt"
    d: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValidationError(f"B must be >= 1, got {self.B}")
        if self.d_mode not in D_MODES:
            raise ValidationError(f"Unknown d_mode '{self.d_mode}'. Use one of: {', '.join(D_MODES)}")
        if self.d_mode == "fixed" and (self.d is None or self.d < 1):
            raise ValidationError(f"fixed d_mode needs d >= 1, got {self.d}")


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: Tuple[DecisionTree, ...]
    config: ForestConfig
    tree_config: TreeConfig
    n_classes: int
    n_features: int


def gini(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=-1)
    shares = counts / np.where(totals > 0, totals, 1.0)[..., None]
    return 1 - np.sum(shares ** 2, axis=-1)


def _best_threshold(x, y, n_classes, min_leaf):
    """
    Lowest weighted child Gini over midpoints of consecutive distinct values; (cost, threshold) or None
    """

    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    left_counts = np.cumsum(np.eye(n_classes)[y[order] - 1], axis=0)[:-1]
    right_counts = left_counts[-1] + np.eye(n_classes)[y[order[-1]] - 1] - left_counts
    n_left = np.arange(1, n)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not np.any(valid):
        return None

    cost = (n_left * gini(left_counts) + (n - n_left) * gini(right_counts)) / n
    cost = np.where(valid, cost, np.inf)
    best = np.flatnonzero(cost <= cost.min() + TIE_TOLERANCE)[0]
    threshold = (xs[best] + xs[best + 1]) / 2
    # adjacent floats can round the midpoint onto the right value
    if threshold >= xs[best + 1]:
        threshold = xs[best]
    return float(cost[best]), float(threshold)


class _TreeBuilder:
    def __init__(self, X, y, n_classes, cfg: TreeConfig, features):
        self.X, self.y, self.n_classes, self.cfg, self.features = X, y, n_classes, cfg, features
        self.feature, self.threshold, self.left, self.right, self.label = [], [], [], [], []

    def _add_node(self, rows):
        counts = np.bincount(self.y[rows], minlength=self.n_classes + 1)[1:]
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        # majority, smaller label on ties
        self.label.append(int(np.argmax(counts)) + 1)
        return len(self.feature) - 1, counts

    def _split(self, rows, counts):
        parent = float(gini(counts))
        best = None
        for j in self.features:
            found = _best_threshold(self.X[rows, j], self.y[rows], self.n_classes, self.cfg.min_leaf)
            if found is None:
                continue
            if best is None or found[0] < best[0] - TIE_TOLERANCE:
                best = (found[0], j, found[1])
        # zero decrease is allowed so that XOR-like patterns can be split
        if best is None or best[0] > parent + TIE_TOLERANCE:
            return None
        return best[1], best[2]

    def build(self):
        root, counts = self._add_node(np.arange(self.y.size))
        stack = [(root, np.arange(self.y.size), counts, 0)]
        while stack:
            node, rows, counts, depth = stack.pop()
            if depth >= self.cfg.max_depth or np.count_nonzero(counts) <= 1 or rows.size < 2 * self.cfg.min_leaf:
                continue
            split = self._split(rows, counts)
            if split is None:
                continue
            j, threshold = split
            goes_left = self.X[rows, j] <= threshold
            left, left_counts = self._add_node(rows[goes_left])
            right, right_counts = self._add_node(rows[~goes_left])
            self.feature[node], self.threshold[node] = j, threshold
            self.left[node], self.right[node] = left, right
            stack.append((right, rows[~goes_left], right_counts, depth + 1))
            stack.append((left, rows[goes_left], left_counts, depth + 1))

        return DecisionTree(
            feature=np.array(self.feature, dtype=int),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=int),
            right=np.array(self.right, dtype=int),
            label=np.array(self.label, dtype=int),
            feature_subset=tuple(int(j) for j in self.features),
        )


def _grow(X, y, n_classes, cfg: TreeConfig, features) -> DecisionTree:
    features = sorted(set(int(j) for j in features))
    if not features:
        raise ValidationError("a tree needs at least one allowed feature")
    if features[0] < 0 or features[-1] >= X.shape[1]:
        raise ValidationError(f"allowed features must lie in 0..{X.shape[1] - 1}")
    return _TreeBuilder(X, y, n_classes, cfg, features).build()


def tree_fit(data: LabeledDataset, cfg: TreeConfig = TreeConfig(), allowed_features=None) -> DecisionTree:
    """
    Recursive partitioning on Gini impurity over ``allowed_features`` (all features when None)
    """

    features = range(data.p) if allowed_features is None else allowed_features
    return _grow(data.features, data.labels, data.G, cfg, features)


def subset_size(cfg: ForestConfig, p: int, rng=None) -> int:
    if cfg.d_mode == "sqrt":
        return max(1, int(math.floor(math.sqrt(p))))
    if cfg.d_mode == "uniform_random":
        if p < 2:
            raise ValidationError("uniform_random subsets need p >= 2")
        return int(rng.integers(1, p))
    if cfg.d > p:
        raise ValidationError(f"fixed d={cfg.d} exceeds p={p}")
    return cfg.d


def bootstrap_indices(rng, n):
    return rng.integers(0, n, size=n)


def _fit_learner(X, y, n_classes, cfg: ForestConfig, tree_cfg: TreeConfig, b):
    rng = make_rng(cfg.seed, b)
    n, p = X.shape
    rows = bootstrap_indices(rng, n)
    d = subset_size(cfg, p, rng)
    features = np.sort(rng.choice(p, size=d, replace=False))
    return _grow(X[rows], y[rows], n_classes, tree_cfg, features)


def rsl_fit(train: LabeledDataset, cfg: ForestConfig = ForestConfig(), tree_cfg: TreeConfig = TreeConfig(),
            n_jobs=1) -> ForestModel:
    """
    B learners, each on a bootstrap of the rows and a random feature subset, seeded per learner index
    """

    p = train.p
    if cfg.d_mode == "fixed" and cfg.d == p:
        LOGGER.debug("fixed d equals p: plain bagging")
    else:
        subset_size(cfg, p, make_rng(cfg.seed))

    LOGGER.debug(f"Fit forest: B={cfg.B}, d_mode={cfg.d_mode}, n={train.n}, p={p}")
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_fit_learner)(train.features, train.labels, train.G, cfg, tree_cfg, b) for b in range(cfg.B)
    )
    return ForestModel(trees=tuple(trees), config=cfg, tree_config=tree_cfg, n_classes=train.G, n_features=p)


def majority_vote(votes) -> int:
    votes = np.asarray(votes, dtype=int).ravel()
    if votes.size == 0:
        raise ValidationError("majority_vote needs at least one vote")
    values, counts = np.unique(votes, return_counts=True)
    return int(values[np.argmax(counts)])


def forest_predict(model: ForestModel, x):
    X = check_features(x, model.n_features)
    predictions = np.vstack([tree.predict(X) for tree in model.trees])
    counts = np.stack([(predictions == k).sum(axis=0) for k in range(1, model.n_classes + 1)], axis=1)
    labels = np.argmax(counts, axis=1) + 1
    return labels[0] if np.ndim(x) == 1 else labels


def oob_probability(n: int) -> float:
    """
    Chance that a given row is missing from a bootstrap sample of size n
    """

    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return (1 - 1 / n) ** n


def serialize_forest(model: ForestModel) -> bytes:
    """
    Magic, a length-prefixed JSON header, then every tree's node arrays as little-endian fixed-width bytes
    """

    header = {
        "version": FOREST_FORMAT_VERSION,
        "config": [model.config.B, model.config.d_mode, model.config.d, model.config.seed],
        "tree_config": [model.tree_config.max_depth, model.tree_config.min_leaf],
        "n_classes": model.n_classes,
        "n_features": model.n_features,
        "trees": [{"n_nodes": tree.n_nodes, "feature_subset": [int(j) for j in tree.feature_subset]}
                  for tree in model.trees],
    }
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [FOREST_MAGIC, HEADER_LENGTH.pack(len(encoded)), encoded]
    for tree in model.trees:
        parts.extend(np.ascontiguousarray(getattr(tree, name), dtype=dtype).tobytes() for name, dtype in NODE_ARRAYS)
    return b"".join(parts)


def deserialize_forest(blob: bytes) -> ForestModel:
    blob = bytes(blob)
    start = len(FOREST_MAGIC) + HEADER_LENGTH.size
    if len(blob) < start or not blob.startswith(FOREST_MAGIC):
        raise ValidationError("not a serialized forest")
    (length,) = HEADER_LENGTH.unpack_from(blob, len(FOREST_MAGIC))
    try:
        header = json.loads(blob[start:start + length].decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise ValidationError("corrupt forest header")
    if header.get("version") != FOREST_FORMAT_VERSION:
        raise ValidationError(f"unsupported forest format version {header.get('version')}")

    offset, trees = start + length, []
    for entry in header["trees"]:
        n_nodes, arrays = entry["n_nodes"], {}
        for name, dtype in NODE_ARRAYS:
            size = n_nodes * np.dtype(dtype).itemsize
            if offset + size > len(blob):
                raise ValidationError("truncated forest blob")
            arrays[name] = np.frombuffer(blob, dtype=dtype, count=n_nodes, offset=offset).astype(dtype[1:])
            offset += size
        trees.append(DecisionTree(feature_subset=tuple(entry["feature_subset"]), **arrays))
    if offset != len(blob):
        raise ValidationError(f"{len(blob) - offset} trailing bytes after the last tree")

    B, d_mode, d, seed = header["config"]
    return ForestModel(
        trees=tuple(trees),
        config=ForestConfig(B=B, d_mode=d_mode, d=d, seed=seed),
        tree_config=TreeConfig(*header["tree_config"]),
        n_classes=header["n_classes"],
        n_features=header["n_features"],
    )


class ForestClassifier(BaseClassifier):
    method_name = "rf"

    def __init__(self, B=500, d_mode="sqrt", d=None, max_depth=20, min_leaf=1, n_jobs=1, random_state=0):
        self.B = B
        self.d_mode = d_mode
        self.d = d
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _fit_dataset(self, train):
        cfg = ForestConfig(B=self.B, d_mode=self.d_mode, d=self.d, seed=self.random_state)
        return rsl_fit(train, cfg, TreeConfig(self.max_depth, self.min_leaf), n_jobs=self.n_jobs)

    def _predict_encoded(self, X):
        return forest_predict(self.model_, X)
