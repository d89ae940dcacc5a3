"""
Location/scatter estimation: sample and pooled covariance, regularization, exact and fast MCD, and the robust
univariate location/scale estimators used by projection pursuit.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import chi2

from src import LOGGER
from src.errors import InfeasibleError, ValidationError
from src.seeding import make_rng

MCD_METHODS = ("mcd_exact", "mcd_fast")
REGULARIZATION_KINDS = ("none", "ridge", "convex")
UNIVARIATE_KINDS = ("classical", "median_mad", "huber", "s_estimator")

EXACT_ENUMERATION_LIMIT = 25
MAD_CONSISTENCY = 1.4826
MEAN_ABS_CONSISTENCY = 1.253


@dataclass(frozen=True, eq=False)
class LocationScatter:
    mu: np.ndarray
    sigma: np.ndarray
    method: str
    h: Optional[int] = None
    support: Optional[Tuple[int, ...]] = None
    log_det: float = float("nan")
    consistency: float = 1.0
    trace: Tuple[float, ...] = ()
    degenerate: bool = False


@dataclass(frozen=True)
class RegularizationSpec:
    kind: str = "none"
    lam: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in REGULARIZATION_KINDS:
            raise ValidationError(f"Unknown regularization '{self.kind}'. "
                                  f"Use one of: {', '.join(REGULARIZATION_KINDS)}")
        if self.kind == "ridge" and (self.lam is None or self.lam <= 0):
            raise ValidationError(f"ridge regularization needs lambda > 0, got {self.lam}")
        if self.kind == "convex" and (self.alpha is None or not 0 < self.alpha <= 1):
            raise ValidationError(f"convex regularization needs alpha in (0, 1], got {self.alpha}")

    def describe(self):
        if self.kind == "ridge":
            return f"ridge(lambda={self.lam:g})"
        if self.kind == "convex":
            return f"convex(alpha={self.alpha:g})"
        return "none"


@dataclass(frozen=True)
class UnivariateEstimate:
    location: float
    scale: float
    kind: str
    degenerate: bool = False


def cholesky_log_det(sigma) -> float:
    """
    log det via the Cholesky factor; -inf when sigma is not positive definite
    """

    try:
        factor = scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError:
        return -math.inf
    diagonal = np.diag(factor)
    if np.any(diagonal <= 0):
        return -math.inf
    return 2.0 * float(np.sum(np.log(diagonal)))


def _mean_cov(X):
    mu = X.mean(axis=0)
    centered = X - mu
    return mu, centered.T @ centered / (X.shape[0] - 1)


def sample_mean_cov(X) -> LocationScatter:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError(f"sample covariance needs at least 2 rows, got shape {X.shape}")
    mu, sigma = _mean_cov(X)
    log_det = cholesky_log_det(sigma)
    return LocationScatter(mu=mu, sigma=sigma, method="sample", log_det=log_det, degenerate=math.isinf(log_det))


def pooled_cov(groups: Sequence[Tuple[int, np.ndarray]]) -> np.ndarray:
    """
    sum_k (n_k - 1) S_k / (sum_k n_k - G)
    """

    groups = list(groups)
    if not groups:
        raise ValidationError("pooled covariance needs at least one group")
    denominator = sum(n_k for n_k, _ in groups) - len(groups)
    if denominator <= 0:
        raise ValidationError(f"pooled covariance denominator is {denominator}; need sum(n_k) > G")
    return sum((n_k - 1) * np.asarray(S_k, dtype=float) for n_k, S_k in groups) / denominator


def regularize(sigma, spec: RegularizationSpec) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-10 * max(1.0, np.abs(sigma).max(initial=0))):
        raise ValidationError("only symmetric matrices can be regularized")
    p = sigma.shape[0]
    if spec.kind == "ridge":
        return sigma + spec.lam * np.eye(p)
    if spec.kind == "convex":
        return (1 - spec.alpha) * sigma + (spec.alpha / p) * np.trace(sigma) * np.eye(p)
    return sigma.copy()


def default_h(n: int, p: int) -> int:
    """
    floor((n + p + 1) / 2), the maximal-breakdown subset size, clamped to [ceil(n/2), n - 1]
    """

    if n < 2:
        raise ValidationError(f"default_h needs n >= 2, got {n}")
    h = (n + p + 1) // 2
    low, high = math.ceil(n / 2), n - 1
    clamped = min(max(h, low), high)
    if clamped != h:
        LOGGER.warning(f"h={h} for n={n}, p={p} clamped to {clamped}")
    return clamped


def consistency_factor(h: int, n: int, p: int) -> float:
    """
    Multiplier making the raw h-subset covariance consistent at the normal model
    """

    if h >= n:
        return 1.0
    quantile = chi2.ppf(h / n, p)
    return (h / n) / chi2.cdf(quantile, p + 2)


def _check_mcd(X, h):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"MCD needs a matrix, got shape {X.shape}")
    n, p = X.shape
    if p >= h:
        raise InfeasibleError(f"MCD cannot be computed when p>h (p={p}, h={h}); every h-subset covariance is singular")
    if h > n:
        raise ValidationError(f"h={h} exceeds n={n}")
    return X


def _mcd_result(X, support, log_det, method, trace=()):
    n, p = X.shape
    if math.isinf(log_det):
        raise InfeasibleError(f"{method}: the best h-subset has a singular covariance (exact fit)")
    support = np.sort(np.asarray(support, dtype=int))
    mu, raw = _mean_cov(X[support])
    factor = consistency_factor(support.size, n, p)
    return LocationScatter(
        mu=mu,
        sigma=factor * raw,
        method=method,
        h=int(support.size),
        support=tuple(int(i) for i in support),
        log_det=float(log_det),
        consistency=float(factor),
        trace=tuple(float(v) for v in trace),
    )


def _batch_log_det(X, combos):
    subsets = X[combos]
    centered = subsets - subsets.mean(axis=1, keepdims=True)
    covs = np.einsum("mhi,mhj->mij", centered, centered) / (combos.shape[1] - 1)
    try:
        factors = np.linalg.cholesky(covs)
        return 2.0 * np.log(np.diagonal(factors, axis1=1, axis2=2)).sum(axis=1)
    except np.linalg.LinAlgError:
        return np.array([cholesky_log_det(cov) for cov in covs])


def mcd_exact(X, h: int, chunk_size: int = 20000) -> LocationScatter:
    """
    Enumerate every h-subset and keep the one whose covariance has the smallest determinant.

    Ties go to the lexicographically smallest index set (enumeration order).
    """

    X = _check_mcd(X, h)
    n = X.shape[0]
    if n > EXACT_ENUMERATION_LIMIT:
        raise ValidationError("exact MCD enumerates C(n, h) subsets; "
                              f"n={n} exceeds the limit {EXACT_ENUMERATION_LIMIT}")

    LOGGER.debug(f"Exact MCD over C({n}, {h}) = {math.comb(n, h)} subsets")
    combos = itertools.combinations(range(n), h)
    best_support, best_log_det = None, math.inf
    while True:
        chunk = np.array(list(itertools.islice(combos, chunk_size)), dtype=int)
        if chunk.size == 0:
            break
        log_dets = _batch_log_det(X, chunk)
        # singular subsets are exact fits; ordered below every regular subset
        log_dets = np.where(np.isfinite(log_dets), log_dets, -np.inf)
        i = int(np.argmin(log_dets))
        if best_support is None or log_dets[i] < best_log_det:
            best_support, best_log_det = chunk[i], float(log_dets[i])
    return _mcd_result(X, best_support, best_log_det, "mcd_exact")


def c_step(X, support):
    """
    One concentration step: estimate on ``support``, keep the h rows with the smallest Mahalanobis distances.

    Returns the new support and the log-determinant of the covariance of the old one.
    """

    X = np.asarray(X, dtype=float)
    support = np.asarray(support, dtype=int)
    mu, sigma = _mean_cov(X[support])
    try:
        factor = scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError:
        return support, -math.inf
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
    whitened = scipy.linalg.solve_triangular(factor, (X - mu).T, lower=True)
    distances = np.sum(whitened ** 2, axis=0)
    new_support = np.sort(np.argsort(distances, kind="stable")[:support.size])
    return new_support, log_det


def _initial_subset(X, rng):
    n, p = X.shape
    order = rng.permutation(n)
    size = p + 1
    while size <= n:
        subset = order[:size]
        if np.isfinite(cholesky_log_det(_mean_cov(X[subset])[1])):
            return subset
        size += 1
    return None


def _refine(X, h, rng, max_iterations):
    subset = _initial_subset(X, rng)
    if subset is None:
        return None, math.inf, ()
    mu, sigma = _mean_cov(X[subset])
    factor = scipy.linalg.cholesky(sigma, lower=True)
    whitened = scipy.linalg.solve_triangular(factor, (X - mu).T, lower=True)
    support = np.sort(np.argsort(np.sum(whitened ** 2, axis=0), kind="stable")[:h])

    trace = []
    for _ in range(max_iterations):
        new_support, log_det = c_step(X, support)
        trace.append(log_det)
        if math.isinf(log_det):
            break
        if len(trace) > 1 and trace[-2] - log_det < 1e-12:
            break
        if np.array_equal(new_support, support):
            break
        support = new_support
    else:
        trace.append(c_step(X, support)[1])
    return support, trace[-1], tuple(trace)


def mcd_fast(X, h: int, n_starts: int = 500, seed: int = 0, max_iterations: int = 100) -> LocationScatter:
    """
    FAST-MCD: random (p+1)-subsets seed candidates that C-steps refine until the determinant stops decreasing.

    Start ``s`` draws from its own stream derived from ``seed``; the lowest determinant wins and ties go to
    the smallest start index, so the result does not depend on evaluation order.
    """

    X = _check_mcd(X, h)
    n, p = X.shape
    if np.unique(X, axis=0).shape[0] < p + 1:
        raise InfeasibleError(f"FAST-MCD needs at least p+1={p + 1} distinct rows")

    best = (None, math.inf, ())
    for start in range(n_starts):
        support, log_det, trace = _refine(X, h, make_rng(seed, start), max_iterations)
        if support is not None and (best[0] is None or log_det < best[1]):
            best = (support, log_det, trace)

    if best[0] is None:
        raise InfeasibleError("FAST-MCD found no nonsingular starting subset")
    return _mcd_result(X, best[0], best[1], "mcd_fast", trace=best[2])


def _robust_start(Z):
    """
    Median and MAD per column; a zero MAD on a non-constant column falls back to 1.253 * mean |z - median|
    """

    median = np.median(Z, axis=0)
    deviations = np.abs(Z - median)
    scale = MAD_CONSISTENCY * np.median(deviations, axis=0)
    zero = scale == 0
    if np.any(zero):
        scale[zero] = MEAN_ABS_CONSISTENCY * deviations[:, zero].mean(axis=0)
    return median, scale


def _huber(Z, c, tol, max_iterations):
    location, scale = _robust_start(Z)
    safe = np.where(scale > 0, scale, 1.0)
    for _ in range(max_iterations):
        u = np.abs(Z - location) / safe
        weights = np.minimum(1.0, c / np.maximum(u, 1e-300))
        updated = np.sum(weights * Z, axis=0) / np.sum(weights, axis=0)
        updated = np.where(scale > 0, updated, location)
        done = np.all(np.abs(updated - location) <= tol * safe)
        location = updated
        if done:
            break
    return location, scale


def _biweight_rho(u, c):
    inside = np.abs(u) <= c
    return np.where(inside, c ** 2 / 6 * (1 - (1 - (u / c) ** 2) ** 3), c ** 2 / 6)


def _s_estimator(Z, c, tol, max_iterations):
    location, scale = _robust_start(Z)
    degenerate = scale == 0
    scale = np.where(degenerate, 1.0, scale)
    # 50% breakdown: b = rho(inf) / 2
    b = c ** 2 / 12
    for _ in range(max_iterations):
        u = (Z - location) / scale
        new_scale = scale * np.sqrt(np.mean(_biweight_rho(u, c), axis=0) / b)
        new_scale = np.where(degenerate, scale, new_scale)

        u = (Z - location) / new_scale
        weights = np.where(np.abs(u) < c, (1 - (u / c) ** 2) ** 2, 0.0)
        total = np.sum(weights, axis=0)
        new_location = np.where(total > 0, np.sum(weights * Z, axis=0) / np.where(total > 0, total, 1.0), location)
        new_location = np.where(degenerate, location, new_location)

        done = np.all(np.abs(new_location - location) <= tol * new_scale) and \
            np.all(np.abs(new_scale - scale) <= tol * new_scale)
        location, scale = new_location, new_scale
        if done:
            break
    return location, np.where(degenerate, 0.0, scale)


def univariate_columns(Z, kind: str, huber_c: float = 1.345, biweight_c: float = 1.547645, tol: float = 1e-10,
                       max_iterations: int = 100):
    """
    Location and scale of every column of Z. Returns (locations, scales, degenerate flags).
    """

    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] < 2:
        raise ValidationError(f"univariate estimators need at least 2 values, got {Z.shape[0]}")
    if kind not in UNIVARIATE_KINDS:
        raise ValidationError(f"Unknown estimator '{kind}'. Use one of: {', '.join(UNIVARIATE_KINDS)}")

    if kind == "classical":
        location, scale = Z.mean(axis=0), Z.std(axis=0, ddof=1)
    elif kind == "median_mad":
        location, scale = _robust_start(Z)
    elif kind == "huber":
        location, scale = _huber(Z, huber_c, tol, max_iterations)
    else:
        location, scale = _s_estimator(Z, biweight_c, tol, max_iterations)

    constant = np.ptp(Z, axis=0) == 0
    scale = np.where(constant, 0.0, scale)
    return location, scale, scale == 0


def univariate(x, kind: str, **kwargs) -> UnivariateEstimate:
    location, scale, degenerate = univariate_columns(np.asarray(x, dtype=float).reshape(-1, 1), kind, **kwargs)
    return UnivariateEstimate(
        location=float(location[0]), scale=float(scale[0]), kind=kind, degenerate=bool(degenerate[0])
    )
