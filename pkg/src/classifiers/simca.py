"""
Robust SIMCA: one trimmed PCA model per class, classification by the combined score/orthogonal distance.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed

from src import LOGGER
from src.classifiers.base import BaseClassifier, check_features
from src.dataset import LabeledDataset, class_membership
from src.errors import InfeasibleError, ValidationError

CUTOFF_QUANTILE = 0.975
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SimcaClass:
    center: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    sd_cutoff: float
    od_cutoff: float
    kept: Tuple[int, ...] = ()

    @property
    def n_components(self):
        return self.loadings.shape[1]


@dataclass(frozen=True, eq=False)
class SimcaModel:
    classes: Tuple[SimcaClass, ...]
    variance_retained: float
    trim: float


def _numerical_rank(singular_values, shape):
    if singular_values.size == 0 or singular_values[0] == 0:
        return 0
    tolerance = singular_values[0] * max(shape) * np.finfo(float).eps
    return int(np.sum(singular_values > tolerance))


def _n_components(singular_values, variance_retained, cap):
    """
    Smallest k whose leading components hold variance_retained of the total, capped
    """

    variances = singular_values ** 2
    explained = np.cumsum(variances) / variances.sum()
    k = int(np.searchsorted(explained, variance_retained - 1e-12)) + 1
    return max(1, min(k, cap))


def distances(Z, loadings, eigenvalues):
    """
    Score distance sqrt(sum t_i^2 / lambda_i) and orthogonal distance |z - L t| of centered rows Z
    """

    scores = Z @ loadings
    sd = np.sqrt(np.sum(scores ** 2 / eigenvalues, axis=1))
    od = np.linalg.norm(Z - scores @ loadings.T, axis=1)
    return sd, od


def _spherical_od(X, variance_retained, cap):
    """
    Orthogonal distances to a spatial-sign PCA subspace of the median-centered rows
    """

    Z = X - np.median(X, axis=0)
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    signs = np.divide(Z, norms, out=np.zeros_like(Z), where=norms > 0)
    _, singular_values, vt = np.linalg.svd(signs, full_matrices=False)
    rank = _numerical_rank(singular_values, signs.shape)
    if rank == 0:
        return np.zeros(X.shape[0])
    loadings = vt[:_n_components(singular_values[:rank], variance_retained, min(cap, rank))].T
    return np.linalg.norm(Z - Z @ loadings @ loadings.T, axis=1)


def _fit_class(X, k, variance_retained, trim) -> SimcaClass:
    n, p = X.shape
    cap = min(n - 2, p)
    od = _spherical_od(X, variance_retained, cap)
    n_kept = n - int(math.floor(trim * n))
    if n_kept < 3:
        raise InfeasibleError(f"rsimca: class {k} keeps {n_kept} rows after trimming, needs at least 3")
    kept = np.sort(np.argsort(od, kind="stable")[:n_kept])

    rows = X[kept]
    center = np.median(rows, axis=0)
    Z = rows - center
    _, singular_values, vt = np.linalg.svd(Z, full_matrices=False)
    rank = _numerical_rank(singular_values, Z.shape)
    if rank == 0:
        raise InfeasibleError(f"rsimca: class {k} has no spread after trimming")
    n_components = _n_components(singular_values[:rank], variance_retained, min(cap, rank))

    loadings = vt[:n_components].T
    eigenvalues = singular_values[:n_components] ** 2 / (n_kept - 1)
    sd, od = distances(Z, loadings, eigenvalues)
    LOGGER.debug(f"rsimca class {k}: {n_components} components, kept {n_kept}/{n} rows")
    return SimcaClass(
        center=center,
        loadings=loadings,
        eigenvalues=eigenvalues,
        sd_cutoff=max(float(np.quantile(sd, CUTOFF_QUANTILE)), DISTANCE_FLOOR),
        od_cutoff=max(float(np.quantile(od, CUTOFF_QUANTILE)), DISTANCE_FLOOR),
        kept=tuple(int(i) for i in kept),
    )


def rsimca_fit(train: LabeledDataset, variance_retained=0.90, trim=0.25, n_jobs=1) -> SimcaModel:
    """
    Per class: trim the rows farthest from a spherical PCA subspace, then refit PCA on the rest
    """

    if not 0 < variance_retained <= 1:
        raise ValidationError(f"variance_retained must lie in (0, 1], got {variance_retained}")
    if not 0 <= trim < 1:
        raise ValidationError(f"trim must lie in [0, 1), got {trim}")
    counts = class_membership(train).counts
    if counts.min() < 4:
        raise InfeasibleError(f"rsimca needs at least 4 rows per class, got {counts.tolist()}")

    LOGGER.debug(f"Fit rsimca on {train.n} rows, p={train.p}, variance {variance_retained:g}, trim {trim:g}")
    classes = Parallel(n_jobs=n_jobs)(
        delayed(_fit_class)(train.class_rows(k), k, variance_retained, trim) for k in range(1, train.G + 1)
    )
    return SimcaModel(classes=tuple(classes), variance_retained=variance_retained, trim=trim)


def combined_distances(model: SimcaModel, x) -> np.ndarray:
    X = check_features(x, model.classes[0].center.size)
    combined = np.empty((X.shape[0], len(model.classes)))
    for g, cls in enumerate(model.classes):
        sd, od = distances(X - cls.center, cls.loadings, cls.eigenvalues)
        combined[:, g] = np.sqrt((sd / cls.sd_cutoff) ** 2 + (od / cls.od_cutoff) ** 2)
    return combined[0] if np.ndim(x) == 1 else combined


def rsimca_predict(model: SimcaModel, x):
    labels = np.argmin(combined_distances(model, check_features(x, model.classes[0].center.size)), axis=1) + 1
    return labels[0] if np.ndim(x) == 1 else labels


class RSimcaClassifier(BaseClassifier):
    method_name = "rsimca"

    def __init__(self, variance_retained=0.90, trim=0.25, n_jobs=1):
        self.variance_retained = variance_retained
        self.trim = trim
        self.n_jobs = n_jobs

    def _fit_dataset(self, train):
        return rsimca_fit(train, self.variance_retained, self.trim, n_jobs=self.n_jobs)

    def _predict_encoded(self, X):
        return rsimca_predict(self.model_, X)
