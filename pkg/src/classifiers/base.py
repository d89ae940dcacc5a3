import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from src.dataset import LabeledDataset
from src.errors import ValidationError


class BaseClassifier(ClassifierMixin, BaseEstimator):
    """
    Uniform fit/predict contract shared by every method.

    Subclasses implement ``_fit_dataset(train)`` returning a fitted model value and ``_predict_encoded(X)``
    returning labels in 1..G; this class handles validation and the mapping from arbitrary labels to 1..G.
    """

    method_name = None

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValidationError(f"{self.method_name} needs at least 2 classes, got {self.classes_.size}")
        self.n_features_in_ = X.shape[1]
        train = LabeledDataset(features=X, labels=encoded + 1, name=self.method_name, n_classes=self.classes_.size)
        self.model_ = self._fit_dataset(train)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"{self.method_name} was fitted on {self.n_features_in_} features, got {X.shape[1]}"
            )
        return self.classes_[self._predict_encoded(X) - 1]

    def _fit_dataset(self, train):
        raise NotImplementedError

    def _predict_encoded(self, X):
        raise NotImplementedError


def check_features(x, p):
    """
    Accept one p-vector or an m x p matrix; always return a matrix
    """

    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != p:
        raise ValidationError(f"expected {p} features, got shape {np.asarray(x).shape}")
    return X
