import numpy as np
import pytest

from src.classifiers.simca import (RSimcaClassifier, SimcaModel, combined_distances, distances, rsimca_fit,
                                   rsimca_predict)
from src.dataset import LabeledDataset
from src.errors import InfeasibleError, ValidationError


def _two_lines(rng, n=20):
    t = rng.standard_normal((n, 1)) * 3
    first = t @ np.array([[1.0, 2.0, 3.0]])
    second = t @ np.array([[3.0, -1.0, 0.5]]) + [10.0, 10.0, 10.0]
    return LabeledDataset(features=np.vstack([first, second]), labels=np.repeat([1, 2], n))


def test_points_on_a_line():
    """
    A class lying on a line gets one component and zero orthogonal distance
    """

    model = rsimca_fit(_two_lines(np.random.default_rng(1)))
    first = model.classes[0]
    assert first.n_components == 1
    _, od = distances(np.array([[2.0, 4.0, 6.0]]) - first.center, first.loadings, first.eigenvalues)
    assert od[0] == pytest.approx(0.0, abs=1e-9)


def test_full_variance_caps_components():
    """
    Retaining all variance without trimming keeps min(n_k - 2, p) components
    """

    rng = np.random.default_rng(2)
    wide = LabeledDataset(features=rng.standard_normal((20, 20)), labels=np.repeat([1, 2], 10))
    model = rsimca_fit(wide, variance_retained=1.0, trim=0.0)
    assert [cls.n_components for cls in model.classes] == [8, 8]

    tall = LabeledDataset(features=rng.standard_normal((24, 5)), labels=np.repeat([1, 2], 12))
    model = rsimca_fit(tall, variance_retained=1.0, trim=0.0)
    assert [cls.n_components for cls in model.classes] == [5, 5]


def test_outlier_is_trimmed():
    """
    A far point off a low-rank class is left out of the class model
    """

    rng = np.random.default_rng(3)
    p = 10
    direction = np.zeros(p)
    direction[0] = 1.0
    clean = rng.standard_normal((19, 1)) * 5 @ direction[None, :] + rng.standard_normal((19, p)) * 0.01
    outlier = np.zeros((1, p))
    outlier[0, p - 1] = 100.0
    other = rng.standard_normal((20, p)) + 5.0
    ds = LabeledDataset(features=np.vstack([clean, outlier, other]), labels=np.repeat([1, 2], 20))

    first = rsimca_fit(ds).classes[0]
    assert 19 not in first.kept
    assert len(first.kept) == 15
    assert abs(first.loadings[0, 0]) > 0.99


def test_center_goes_to_its_class(three_gaussians):
    """
    Each class center scores zero for its own class
    """

    model = rsimca_fit(three_gaussians)
    for k, cls in enumerate(model.classes, start=1):
        assert rsimca_predict(model, cls.center) == k
        assert combined_distances(model, cls.center)[k - 1] == pytest.approx(0.0)


def test_identical_models_tie():
    """
    Equal combined distances go to the smaller label
    """

    model = rsimca_fit(_two_lines(np.random.default_rng(4)))
    twin = SimcaModel(classes=(model.classes[1], model.classes[1]), variance_retained=0.9, trim=0.25)
    points = np.random.default_rng(5).standard_normal((10, 3))
    assert rsimca_predict(twin, points).tolist() == [1] * 10


def test_loadings_are_orthonormal(three_gaussians):
    """
    L'L is the identity and eigenvalues are positive and sorted
    """

    for cls in rsimca_fit(three_gaussians, variance_retained=0.6).classes:
        np.testing.assert_allclose(cls.loadings.T @ cls.loadings, np.eye(cls.n_components), atol=1e-10)
        assert np.all(cls.eigenvalues > 0)
        assert np.all(np.diff(cls.eigenvalues) <= 0)
        assert cls.sd_cutoff > 0 and cls.od_cutoff > 0


def test_separated_classes(three_gaussians):
    """
    Well separated classes are recovered
    """

    model = rsimca_fit(three_gaussians)
    assert np.mean(rsimca_predict(model, three_gaussians.features) == three_gaussians.labels) >= 0.9


def test_too_few_rows():
    """
    Fewer than four rows in a class is infeasible
    """

    ds = LabeledDataset(features=np.random.default_rng(6).standard_normal((7, 2)), labels=[1, 1, 1, 2, 2, 2, 2])
    with pytest.raises(InfeasibleError, match="at least 4 rows"):
        rsimca_fit(ds)


@pytest.mark.parametrize("kwargs", [{"variance_retained": 0.0}, {"variance_retained": 1.5}, {"trim": 1.0},
                                    {"trim": -0.1}])
def test_parameter_validation(three_gaussians, kwargs):
    """
    Variance and trim outside their ranges are rejected
    """

    with pytest.raises(ValidationError):
        rsimca_fit(three_gaussians, **kwargs)


def test_classifier(three_gaussians):
    """
    The estimator wrapper decodes labels back to the caller's values
    """

    y = np.array(["a", "b", "c"])[three_gaussians.labels - 1]
    classifier = RSimcaClassifier(trim=0.1).fit(three_gaussians.features, y)
    assert np.mean(classifier.predict(three_gaussians.features) == y) >= 0.9
    assert classifier.method_name == "rsimca"
