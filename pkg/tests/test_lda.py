import numpy as np
import pytest

from src.classifiers.lda import (DdaClassifier, DdaModel, DiscriminantModel, LdaClassifier, LindaClassifier, dda_fit,
                                 dda_predict, dda_scores, discriminant_scores, lda_fit, lda_predict, linda_fit)
from src.dataset import LabeledDataset, SplitPlan, split
from src.errors import InfeasibleError, ValidationError
from src.estimators import RegularizationSpec
from src.synth import default_design, generate
from tests.conftest import literal_discriminant


def _model(means, priors, precision=None):
    means = np.asarray(means, dtype=float)
    return DiscriminantModel(
        class_means=means,
        precision=np.eye(means.shape[1]) if precision is None else precision,
        log_priors=np.log(priors),
        covariance_method="sample",
        regularization=RegularizationSpec(),
    )


def test_nearest_mean_with_identity():
    """
    Identity covariance and equal priors reduce to the nearest mean
    """

    model = _model([[0, 0], [4, 0]], [0.5, 0.5])
    assert lda_predict(model, [1.0, 0.0]) == 1
    assert lda_predict(model, [3.0, 0.0]) == 2


def test_prior_shift():
    """
    Priors 0.9 / 0.1 keep x=(2.2, 0) in class 1
    """

    model = _model([[0, 0], [4, 0]], [0.9, 0.1])
    scores = discriminant_scores(model, [2.2, 0.0])
    np.testing.assert_allclose(scores, [-2.42 + np.log(0.9), -1.62 + np.log(0.1)])
    assert lda_predict(model, [2.2, 0.0]) == 1


def test_scores_match_formula():
    """
    Vectorized scores agree with a class-by-class evaluation of the formula
    """

    rng = np.random.default_rng(0)
    for _ in range(200):
        p = int(rng.integers(1, 6))
        A = rng.standard_normal((p, p))
        precision = A @ A.T + p * np.eye(p)
        means = rng.standard_normal((3, p))
        priors = rng.dirichlet(np.ones(3))
        x = rng.standard_normal(p)
        model = _model(means, priors, precision)
        np.testing.assert_allclose(discriminant_scores(model, x), literal_discriminant(x, means, precision, priors),
                                   rtol=0, atol=1e-12 * max(1.0, np.abs(literal_discriminant(
                                       x, means, precision, priors)).max()))


def test_score_at_class_mean():
    """
    With equal priors a class mean scores highest for its own class
    """

    model = _model([[0, 0], [3, 1], [-2, 4]], [1 / 3] * 3)
    for k, mean in enumerate(model.class_means, start=1):
        assert np.argmax(discriminant_scores(model, mean)) + 1 == k


def test_argmax_invariance():
    """
    Scaling every prior by the same factor shifts scores by a constant
    """

    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 2)) * 3
    base = _model([[0, 0], [2, 1], [-1, 2]], [0.2, 0.3, 0.5])
    scaled = DiscriminantModel(base.class_means, base.precision, base.log_priors + np.log(7.0), "sample",
                               base.regularization)
    np.testing.assert_array_equal(lda_predict(base, X), lda_predict(scaled, X))
    np.testing.assert_allclose(discriminant_scores(scaled, X) - discriminant_scores(base, X), np.log(7.0))


def test_lda_fit(two_gaussians):
    """
    Class means, pooled precision and priors come from the training rows
    """

    model = lda_fit(two_gaussians)
    np.testing.assert_allclose(model.class_means[0], two_gaussians.class_rows(1).mean(axis=0))
    np.testing.assert_allclose(np.exp(model.log_priors).sum(), 1.0, atol=1e-9)
    np.testing.assert_allclose(model.precision, model.precision.T)
    assert np.mean(lda_predict(model, two_gaussians.features) == two_gaussians.labels) >= 0.97


def test_lda_singular():
    """
    p=50 with n=20 is singular without regularization and fits with it
    """

    rng = np.random.default_rng(2)
    ds = LabeledDataset(features=rng.standard_normal((20, 50)), labels=np.repeat([1, 2], 10))
    with pytest.raises(InfeasibleError, match="regularization"):
        lda_fit(ds)
    model = lda_fit(ds, RegularizationSpec("ridge", lam=0.5))
    assert model.regularization.kind == "ridge"
    lda_fit(ds, RegularizationSpec("convex", alpha=0.3))


def test_discriminant_dimension_mismatch():
    """
    Inputs of the wrong width are rejected
    """

    with pytest.raises(ValidationError):
        discriminant_scores(_model([[0, 0], [1, 1]], [0.5, 0.5]), [1.0, 2.0, 3.0])


def test_linda_agrees_with_lda_on_clean_data():
    """
    On uncontaminated Gaussian data with 50 rows per feature and class, linda and lda predict alike
    over 20 seeds
    """

    agreement = []
    for seed in range(20):
        design = default_design(G=2, p=2, n_per_class=100, delta=3.0, seed=seed)
        train, test = split(generate(design), SplitPlan(seed=seed))
        lda = lda_predict(lda_fit(train), test.features)
        linda = lda_predict(linda_fit(train, n_starts=50, seed=seed), test.features)
        agreement.append(np.mean(lda == linda))
    assert np.mean(agreement) >= 0.9
    assert min(agreement) >= 0.8


def test_linda_mean_is_robust():
    """
    With 15% shifted outliers the linda class mean is closer to the truth than the sample mean
    """

    wins = 0
    for seed in range(10):
        design = default_design(G=2, p=3, n_per_class=60, epsilon=0.15, kappa=1.0, eta_shift=8.0, seed=seed)
        ds = generate(design)
        truth = np.array(design.class_means[0])
        lda_error = np.linalg.norm(lda_fit(ds).class_means[0] - truth)
        linda_error = np.linalg.norm(linda_fit(ds, n_starts=30, seed=seed).class_means[0] - truth)
        wins += linda_error < lda_error
    assert wins >= 8


def test_linda_infeasible():
    """
    n_k=10 with p=20 cannot be fitted
    """

    rng = np.random.default_rng(4)
    ds = LabeledDataset(features=rng.standard_normal((20, 20)), labels=np.repeat([1, 2], 10))
    with pytest.raises(InfeasibleError, match="cannot be computed when p>h"):
        linda_fit(ds)


def test_linda_pools_support_sizes(two_gaussians):
    """
    The fitted model records one subset size per class
    """

    model = linda_fit(two_gaussians, n_starts=20, seed=1)
    assert model.h == (21, 21)
    assert model.covariance_method == "mcd"
    with pytest.raises(ValidationError):
        linda_fit(two_gaussians, h=[25, 25, 25])


def test_dda_example():
    """
    Variances (1, 4), means (0, 0) and (2, 2): x=(1.5, 0.5) goes to class 2
    """

    model = DdaModel(class_means=np.array([[0.0, 0.0], [2.0, 2.0]]), pooled_variances=np.array([1.0, 4.0]),
                     log_priors=np.log([0.5, 0.5]))
    scores = dda_scores(model, [1.5, 0.5]) - np.log(0.5)
    np.testing.assert_allclose(scores, [-1.15625, -0.40625])
    assert dda_predict(model, [1.5, 0.5]) == 2


def test_dda_high_dimension():
    """
    p=2000 with n=62 fits without error
    """

    rng = np.random.default_rng(5)
    ds = LabeledDataset(features=rng.standard_normal((62, 2000)), labels=np.repeat([1, 2], 31))
    model = dda_fit(ds)
    assert np.all(model.pooled_variances > 0)


def test_dda_floors_zero_variance():
    """
    A constant feature is floored and flagged
    """

    X = np.column_stack([np.arange(6.0), np.ones(6)])
    model = dda_fit(LabeledDataset(features=X, labels=[1, 1, 1, 2, 2, 2]))
    assert model.degenerate == (False, True)
    assert model.pooled_variances[1] == 1e-12


def test_dda_equal_variances_is_nearest_mean(three_gaussians):
    """
    With equal pooled variances and equal priors DDA picks the nearest mean
    """

    model = dda_fit(three_gaussians)
    equal = DdaModel(model.class_means, np.ones(3), np.log(np.full(3, 1 / 3)))
    X = np.random.default_rng(6).standard_normal((40, 3)) * 4
    nearest = np.argmin(((X[:, None, :] - model.class_means[None]) ** 2).sum(axis=2), axis=1) + 1
    np.testing.assert_array_equal(dda_predict(equal, X), nearest)


def test_classifier_contract(two_gaussians):
    """
    Estimators accept arbitrary labels and return them from predict
    """

    y = np.where(two_gaussians.labels == 1, "healthy", "tumor")
    for classifier in (LdaClassifier(), LindaClassifier(n_starts=10), DdaClassifier()):
        predictions = classifier.fit(two_gaussians.features, y).predict(two_gaussians.features)
        assert set(predictions) <= {"healthy", "tumor"}
        assert np.mean(predictions == y) > 0.95
        with pytest.raises(ValidationError):
            classifier.predict(np.zeros((2, 5)))
