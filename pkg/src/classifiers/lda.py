"""
Linear discriminant rules sharing one scatter matrix: classic LDA, MCD-based Linda and diagonal DA.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from src import LOGGER
from src.classifiers.base import BaseClassifier, check_features
from src.dataset import LabeledDataset, class_membership
from src.errors import InfeasibleError, ValidationError
from src.estimators import RegularizationSpec, default_h, mcd_fast, pooled_cov, regularize, sample_mean_cov
from src.seeding import derive_seed

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class DiscriminantModel:
    class_means: np.ndarray
    precision: np.ndarray
    log_priors: np.ndarray
    covariance_method: str
    regularization: RegularizationSpec
    h: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class DdaModel:
    class_means: np.ndarray
    pooled_variances: np.ndarray
    log_priors: np.ndarray
    degenerate: Tuple[bool, ...] = ()


def _log_priors(train: LabeledDataset):
    return np.log(class_membership(train).proportions)


def _precision(sigma, reg: RegularizationSpec, rank_bound=None):
    p = sigma.shape[0]
    if reg.kind == "none" and rank_bound is not None and rank_bound < p:
        raise InfeasibleError(
            f"pooled covariance is singular (rank <= {rank_bound} < p={p}); use ridge or convex regularization"
        )
    try:
        factor = scipy.linalg.cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError:
        raise InfeasibleError("pooled covariance is singular; use ridge or convex regularization")
    diagonal = np.abs(np.diag(factor[0]))
    if diagonal.min() <= 1e-8 * diagonal.max():
        raise InfeasibleError("pooled covariance is numerically singular; use ridge or convex regularization")
    precision = scipy.linalg.cho_solve(factor, np.eye(p))
    return (precision + precision.T) / 2


def lda_fit(train: LabeledDataset, reg: RegularizationSpec = RegularizationSpec()) -> DiscriminantModel:
    """
    Class sample means, pooled covariance (optionally regularized) and empirical priors
    """

    LOGGER.debug(f"Fit lda on {train.n} rows, p={train.p}, regularization={reg.describe()}")
    estimates = [sample_mean_cov(train.class_rows(k)) for k in range(1, train.G + 1)]
    counts = class_membership(train).counts
    sigma = pooled_cov([(n_k, est.sigma) for n_k, est in zip(counts, estimates)])
    sigma = regularize(sigma, reg)
    return DiscriminantModel(
        class_means=np.vstack([est.mu for est in estimates]),
        precision=_precision(sigma, reg, rank_bound=train.n - train.G),
        log_priors=_log_priors(train),
        covariance_method="sample",
        regularization=reg,
    )


def linda_fit(train: LabeledDataset, h=None, reg: RegularizationSpec = RegularizationSpec(), n_starts=500,
              seed=0) -> DiscriminantModel:
    """
    Per-class FAST-MCD location and scatter pooled with weights h_k - 1.

    ``h`` is None for the maximal-breakdown default per class, an int, or one int per class.
    """

    p = train.p
    if h is None:
        h_values = [default_h(int(n_k), p) for n_k in class_membership(train).counts]
    elif np.isscalar(h):
        h_values = [int(h)] * train.G
    else:
        h_values = [int(v) for v in h]
        if len(h_values) != train.G:
            raise ValidationError(f"expected {train.G} subset sizes, got {len(h_values)}")

    for k, h_k in enumerate(h_values, start=1):
        if p >= h_k:
            raise InfeasibleError(f"linda: MCD cannot be computed when p>h (class {k}: p={p}, h={h_k})")

    LOGGER.debug(f"Fit linda on {train.n} rows, p={p}, h={h_values}")
    estimates = [
        mcd_fast(train.class_rows(k), h_k, n_starts=n_starts, seed=derive_seed(seed, k))
        for k, h_k in enumerate(h_values, start=1)
    ]
    sigma = regularize(pooled_cov([(h_k, est.sigma) for h_k, est in zip(h_values, estimates)]), reg)
    return DiscriminantModel(
        class_means=np.vstack([est.mu for est in estimates]),
        precision=_precision(sigma, reg),
        log_priors=_log_priors(train),
        covariance_method="mcd",
        regularization=reg,
        h=tuple(h_values),
    )


def discriminant_scores(model: DiscriminantModel, x) -> np.ndarray:
    """
    delta_k(x) = -1/2 (x - mu_k)' Sigma^-1 (x - mu_k) + log pi_k; one row of G scores per input row
    """

    X = check_features(x, model.class_means.shape[1])
    differences = X[:, None, :] - model.class_means[None, :, :]
    quadratic = np.einsum("mgp,mgp->mg", differences @ model.precision, differences)
    scores = -0.5 * quadratic + model.log_priors
    return scores[0] if np.ndim(x) == 1 else scores


def lda_predict(model: DiscriminantModel, x):
    labels = np.argmax(discriminant_scores(model, check_features(x, model.class_means.shape[1])), axis=1) + 1
    return labels[0] if np.ndim(x) == 1 else labels


def dda_fit(train: LabeledDataset) -> DdaModel:
    """
    Diagonal LDA: class means and per-feature pooled variances
    """

    if train.n <= train.G:
        raise ValidationError(f"dda needs n > G, got n={train.n}, G={train.G}")
    means = np.vstack([train.class_rows(k).mean(axis=0) for k in range(1, train.G + 1)])
    residuals = train.features - means[train.labels - 1]
    variances = np.sum(residuals ** 2, axis=0) / (train.n - train.G)
    degenerate = variances < VARIANCE_FLOOR
    if np.any(degenerate):
        LOGGER.warning(f"dda: {int(degenerate.sum())} zero-variance features floored at {VARIANCE_FLOOR:g}")
    return DdaModel(
        class_means=means,
        pooled_variances=np.maximum(variances, VARIANCE_FLOOR),
        log_priors=_log_priors(train),
        degenerate=tuple(bool(v) for v in degenerate),
    )


def dda_scores(model: DdaModel, x) -> np.ndarray:
    X = check_features(x, model.class_means.shape[1])
    differences = X[:, None, :] - model.class_means[None, :, :]
    scores = -0.5 * np.sum(differences ** 2 / model.pooled_variances, axis=2) + model.log_priors
    return scores[0] if np.ndim(x) == 1 else scores


def dda_predict(model: DdaModel, x):
    labels = np.argmax(dda_scores(model, check_features(x, model.class_means.shape[1])), axis=1) + 1
    return labels[0] if np.ndim(x) == 1 else labels


def _regularization(kind, lam, alpha):
    return RegularizationSpec(kind=kind, lam=lam, alpha=alpha)


class LdaClassifier(BaseClassifier):
    method_name = "lda"

    def __init__(self, regularization="none", lam=None, alpha=None):
        self.regularization = regularization
        self.lam = lam
        self.alpha = alpha

    def _fit_dataset(self, train):
        return lda_fit(train, _regularization(self.regularization, self.lam, self.alpha))

    def _predict_encoded(self, X):
        return lda_predict(self.model_, X)


class LindaClassifier(BaseClassifier):
    method_name = "linda"

    def __init__(self, h=None, regularization="none", lam=None, alpha=None, n_starts=500, random_state=0):
        self.h = h
        self.regularization = regularization
        self.lam = lam
        self.alpha = alpha
        self.n_starts = n_starts
        self.random_state = random_state

    def _fit_dataset(self, train):
        return linda_fit(
            train,
            h=self.h,
            reg=_regularization(self.regularization, self.lam, self.alpha),
            n_starts=self.n_starts,
            seed=self.random_state,
        )

    def _predict_encoded(self, X):
        return lda_predict(self.model_, X)


class DdaClassifier(BaseClassifier):
    method_name = "dda"

    def _fit_dataset(self, train):
        return dda_fit(train)

    def _predict_encoded(self, X):
        return dda_predict(self.model_, X)
