"""
Synthetic data: covariance builders, multivariate Gaussian sampling and the epsilon-contamination mixture.
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Tuple

import numpy as np
import scipy.linalg

from src import LOGGER
from src.dataset import LabeledDataset
from src.errors import ValidationError
from src.seeding import MASK64, make_rng

COV_KINDS = ("equicorrelation", "ar1")


@dataclass(frozen=True)
class CovSpec:
    kind: str = "equicorrelation"
    tau: float = 1.0
    rho: float = 0.0
    p: int = 10

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise ValidationError(f"Unknown covariance kind '{self.kind}'. Use one of: {', '.join(COV_KINDS)}")
        if self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if self.p < 1:
            raise ValidationError(f"p must be positive, got {self.p}")
        if self.kind == "equicorrelation" and not 0 <= self.rho < 1:
            raise ValidationError(f"equicorrelation rho must lie in [0, 1), got {self.rho}")
        if self.kind == "ar1" and not -1 < self.rho < 1:
            raise ValidationError(f"ar1 rho must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True, eq=False)
class ContaminationSpec:
    epsilon: float = 0.0
    eta: Tuple[float, ...] = ()
    kappa: float = 1.0

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValidationError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.kappa < 1:
            raise ValidationError(f"kappa must be >= 1, got {self.kappa}")
        object.__setattr__(self, "eta", tuple(float(v) for v in self.eta))

    @classmethod
    def constant_shift(cls, c, p, epsilon=0.0, kappa=1.0):
        """
        Location shift c * 1_p
        """

        return cls(epsilon=epsilon, eta=(float(c),) * p, kappa=kappa)


@dataclass(frozen=True, eq=False)
class SimDesign:
    G: int
    p: int
    n_per_class: Tuple[int, ...]
    class_means: Tuple[Tuple[float, ...], ...]
    cov: CovSpec
    contamination: ContaminationSpec
    seed: int = 0
    name: str = field(default="design", compare=False)

    def __post_init__(self):
        if self.G < 2:
            raise ValidationError(f"a design needs G >= 2, got {self.G}")
        if len(self.n_per_class) != self.G or min(self.n_per_class) < 2:
            raise ValidationError(f"n_per_class needs {self.G} entries, each >= 2; got {list(self.n_per_class)}")
        if len(self.class_means) != self.G or any(len(mean) != self.p for mean in self.class_means):
            raise ValidationError(f"class_means needs {self.G} vectors of length {self.p}")
        if self.cov.p != self.p:
            raise ValidationError(f"covariance dimension {self.cov.p} does not match p={self.p}")
        if len(self.contamination.eta) != self.p:
            raise ValidationError(f"eta has length {len(self.contamination.eta)}, expected {self.p}")
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n_per_class", tuple(int(n) for n in self.n_per_class))
        object.__setattr__(self, "class_means", tuple(tuple(float(v) for v in mean) for mean in self.class_means))

    @property
    def n(self):
        return sum(self.n_per_class)

    def with_seed(self, seed):
        return replace(self, seed=int(seed) & MASK64)


class ClassSample(NamedTuple):
    features: np.ndarray
    contaminated: np.ndarray


def default_means(G, p, delta=2.0):
    """
    mu_k = (k - 1) * delta * e_1
    """

    means = np.zeros((G, p))
    means[:, 0] = delta * np.arange(G)
    return tuple(tuple(row) for row in means)


def pad_vector(values, p, what="vector"):
    """
    Leading coordinates given, the rest zero
    """

    values = [float(v) for v in values]
    if len(values) > p:
        raise ValidationError(f"{what} has {len(values)} values, more than p={p}")
    return tuple(values + [0.0] * (p - len(values)))


def default_design(G=2, p=10, rho=0.0, epsilon=0.0, kappa=9.0, n_per_class=30, delta=2.0, eta_shift=3.0,
                   tau=1.0, cov_kind="equicorrelation", seed=0, name=None, class_means=None, eta=None):
    """
    The benchmark design; ``class_means`` (G vectors) and ``eta`` replace the delta and eta_shift layouts
    when given, shorter vectors being zero-padded to length p
    """

    n_per_class = (n_per_class,) * G if np.isscalar(n_per_class) else tuple(n_per_class)
    if class_means is None:
        means = default_means(G, p, delta)
    elif len(class_means) != G:
        raise ValidationError(f"class_means has {len(class_means)} vectors, expected G={G}")
    else:
        means = tuple(pad_vector(mean, p, f"class {k} mean") for k, mean in enumerate(class_means, start=1))
    if eta is None:
        contamination = ContaminationSpec.constant_shift(eta_shift, p, epsilon=epsilon, kappa=kappa)
    else:
        contamination = ContaminationSpec(epsilon=epsilon, eta=pad_vector(eta, p, "eta"), kappa=kappa)
    return SimDesign(
        G=G,
        p=p,
        n_per_class=n_per_class,
        class_means=means,
        cov=CovSpec(kind=cov_kind, tau=tau, rho=rho, p=p),
        contamination=contamination,
        seed=seed,
        name=name or f"G{G}_p{p}_rho{rho:g}_eps{epsilon:g}_kappa{kappa:g}",
    )


def build_cov(spec: CovSpec) -> np.ndarray:
    if spec.kind == "equicorrelation":
        sigma = spec.tau * ((1 - spec.rho) * np.eye(spec.p) + spec.rho * np.ones((spec.p, spec.p)))
    else:
        lags = np.abs(np.subtract.outer(np.arange(spec.p), np.arange(spec.p)))
        sigma = spec.tau * spec.rho ** lags

    try:
        scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError:
        raise ValidationError(f"{spec.kind} covariance with rho={spec.rho}, p={spec.p} is not positive definite")
    return sigma


def _cholesky(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError(f"sigma must be square, got shape {sigma.shape}")
    try:
        return scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError:
        raise ValidationError("sigma is not symmetric positive definite")


def _draw(rng, mu, factor, n):
    z = rng.standard_normal((n, factor.shape[0]))
    return np.asarray(mu, dtype=float) + z @ factor.T


def sample_mvn(mu, sigma, n, seed) -> np.ndarray:
    """
    n i.i.d. rows mu + L z with L the lower Cholesky factor of sigma
    """

    factor = _cholesky(sigma)
    if len(mu) != factor.shape[0]:
        raise ValidationError(f"mu has length {len(mu)}, sigma is {factor.shape[0]}x{factor.shape[0]}")
    return _draw(make_rng(seed), mu, factor, int(n))


def sample_contaminated_class(k: int, design: SimDesign, sigma=None) -> ClassSample:
    """
    Rows of class k from (1 - eps) N(mu_k, Sigma) + eps N(mu_k + eta, kappa Sigma)
    """

    if not 1 <= k <= design.G:
        raise ValidationError(f"class index {k} outside 1..{design.G}")
    factor = _cholesky(build_cov(design.cov) if sigma is None else sigma)
    rng = make_rng(design.seed, k)
    n_k = design.n_per_class[k - 1]
    mu = np.asarray(design.class_means[k - 1])
    contamination = design.contamination

    flags = rng.random(n_k) < contamination.epsilon
    clean = _draw(rng, mu, factor, n_k)
    outliers = _draw(rng, mu + np.asarray(contamination.eta), np.sqrt(contamination.kappa) * factor, n_k)
    return ClassSample(features=np.where(flags[:, None], outliers, clean), contaminated=flags)


def generate(design: SimDesign) -> LabeledDataset:
    """
    Class-blocked samples for every class, then one global shuffle driven by the design seed
    """

    LOGGER.debug(f"Generate '{design.name}' with seed {design.seed}")
    sigma = build_cov(design.cov)
    samples = [sample_contaminated_class(k, design, sigma) for k in range(1, design.G + 1)]
    features = np.vstack([sample.features for sample in samples])
    flags = np.concatenate([sample.contaminated for sample in samples])
    labels = np.repeat(np.arange(1, design.G + 1), design.n_per_class)

    order = make_rng(design.seed).permutation(labels.size)
    return LabeledDataset(
        features=features[order],
        labels=labels[order],
        name=design.name,
        n_classes=design.G,
        contaminated=flags[order],
    )
