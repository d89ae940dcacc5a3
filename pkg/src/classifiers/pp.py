"""
Projection-pursuit discrimination: one robust separating direction per class pair, aggregated by voting.
"""
import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed

from src import LOGGER
from src.classifiers.base import BaseClassifier, check_features
from src.dataset import LabeledDataset, class_membership
from src.errors import InfeasibleError, ValidationError
from src.estimators import UNIVARIATE_KINDS, univariate_columns
from src.seeding import make_rng

PP_KINDS = {"pp-class": "classical", "pp-huber": "huber", "pp-mad": "median_mad", "pp-sest": "s_estimator"}


@dataclass(frozen=True, eq=False)
class PPPair:
    j: int
    k: int
    direction: np.ndarray
    cutoff: float
    orientation: int
    index: float
    # label voted for regardless of x when the pair has no separating direction; 0 otherwise
    prior_vote: int = 0


@dataclass(frozen=True, eq=False)
class PPModel:
    pairs: Tuple[PPPair, ...]
    estimator_kind: str
    n_classes: int


@dataclass(frozen=True)
class PPSearch:
    random_directions: int = 200
    refine_rounds: int = 50
    step: float = 0.1
    pairwise_limit: int = 100
    refine_coordinates: int = 100
    huber_c: float = 1.345
    biweight_c: float = 1.547645
    min_index: float = 1e-6

    def __post_init__(self):
        if self.random_directions < 0 or self.refine_rounds < 0 or self.step <= 0 or self.refine_coordinates < 1 \
                or self.min_index < 0:
            raise ValidationError(f"invalid projection search settings: {self}")


def _unit_columns(A):
    norms = np.linalg.norm(A, axis=0)
    keep = norms > 0
    return A[:, keep] / norms[keep]


class _PairIndex:
    """
    I(a) = |m_j - m_k| / (s_j + s_k) evaluated on many projections at once
    """

    def __init__(self, kind, search: PPSearch):
        self.kind = kind
        self.constants = {"huber_c": search.huber_c, "biweight_c": search.biweight_c}

    def estimates(self, Pj, Pk):
        mj, sj, _ = univariate_columns(Pj, self.kind, **self.constants)
        mk, sk, _ = univariate_columns(Pk, self.kind, **self.constants)
        return mj, sj, mk, sk

    def __call__(self, Pj, Pk):
        mj, sj, mk, sk = self.estimates(Pj, Pk)
        spread = sj + sk
        return np.where(spread > 0, np.abs(mj - mk) / np.where(spread > 0, spread, 1.0), -np.inf)


def _candidates(Xj, Xk, index: _PairIndex, search: PPSearch, rng):
    p = Xj.shape[1]
    centers_j, _, _ = univariate_columns(Xj, index.kind, **index.constants)
    centers_k, _, _ = univariate_columns(Xk, index.kind, **index.constants)
    blocks = [(centers_j - centers_k)[:, None], rng.standard_normal((p, search.random_directions))]
    if Xj.shape[0] + Xk.shape[0] <= search.pairwise_limit:
        blocks.append((Xj[:, None, :] - Xk[None, :, :]).reshape(-1, p).T)
    return _unit_columns(np.hstack(blocks))


def _refine(Xj, Xk, direction, value, index: _PairIndex, search: PPSearch, rng):
    """
    Coordinate-wise perturbation a +- step * e_c on a seeded coordinate sample; the step halves on failure
    """

    p = Xj.shape[1]
    proj_j, proj_k = Xj @ direction, Xk @ direction
    step = search.step
    for _ in range(search.refine_rounds):
        if p <= search.refine_coordinates:
            columns = np.arange(p)
        else:
            columns = np.sort(rng.choice(p, size=search.refine_coordinates, replace=False))
        shifts = np.concatenate([np.full(columns.size, step), np.full(columns.size, -step)])
        columns = np.concatenate([columns, columns])
        # |a + s e_c|^2 = 1 + 2 s a_c + s^2 for unit a
        norms = np.sqrt(1 + 2 * shifts * direction[columns] + shifts ** 2)
        Pj = (proj_j[:, None] + shifts * Xj[:, columns]) / norms
        Pk = (proj_k[:, None] + shifts * Xk[:, columns]) / norms
        values = index(Pj, Pk)
        best = int(np.argmax(values))
        if values[best] > value:
            direction = direction.copy()
            direction[columns[best]] += shifts[best]
            direction /= np.linalg.norm(direction)
            proj_j, proj_k = Xj @ direction, Xk @ direction
            value = float(index(proj_j[:, None], proj_k[:, None])[0])
        else:
            step /= 2
    return direction, value


def _fit_pair(Xj, Xk, j, k, kind, search: PPSearch, seed, pair_index) -> PPPair:
    index = _PairIndex(kind, search)
    rng = make_rng(seed, pair_index)
    candidates = _candidates(Xj, Xk, index, search, rng)
    values = index(Xj @ candidates, Xk @ candidates)
    best = int(np.argmax(values))
    if not np.isfinite(values[best]):
        raise InfeasibleError(f"pp: classes {j} and {k} have zero spread along every candidate direction")

    direction, value = _refine(Xj, Xk, candidates[:, best], float(values[best]), index, search, rng)
    mj, sj, mk, sk = (float(v[0]) for v in index.estimates((Xj @ direction)[:, None], (Xk @ direction)[:, None]))
    LOGGER.debug(f"pp pair ({j}, {k}): index {value:.4f} after refinement")
    prior_vote = 0
    if value <= search.min_index:
        # the larger class of the pair, j on equal counts
        prior_vote = j if Xj.shape[0] >= Xk.shape[0] else k
        LOGGER.warning(f"pp: classes {j} and {k} do not separate (index {value:.2g}); "
                       f"the pair votes for class {prior_vote}")
    return PPPair(
        j=j,
        k=k,
        direction=direction,
        cutoff=(mj * sk + mk * sj) / (sj + sk),
        orientation=1 if mj >= mk else -1,
        index=value,
        prior_vote=prior_vote,
    )


def pp_fit(train: LabeledDataset, estimator_kind: str, search: PPSearch = PPSearch(), seed=0, n_jobs=1) -> PPModel:
    """
    Best direction per unordered class pair among robust center differences, seeded random directions
    and (for small pairs) all cross-class point differences, then refined coordinate-wise.
    """

    if estimator_kind not in UNIVARIATE_KINDS:
        raise ValidationError(f"Unknown estimator '{estimator_kind}'. Use one of: {', '.join(UNIVARIATE_KINDS)}")
    counts = class_membership(train).counts
    if counts.min() < 3:
        raise InfeasibleError(f"pp needs at least 3 rows per class, got {counts.tolist()}")

    LOGGER.debug(f"Fit pp ({estimator_kind}) on {train.n} rows, p={train.p}")
    pairs = list(itertools.combinations(range(1, train.G + 1), 2))
    fitted = Parallel(n_jobs=n_jobs)(
        delayed(_fit_pair)(train.class_rows(j), train.class_rows(k), j, k, estimator_kind, search, seed, i)
        for i, (j, k) in enumerate(pairs)
    )
    return PPModel(pairs=tuple(fitted), estimator_kind=estimator_kind, n_classes=train.G)


def pp_predict(model: PPModel, x):
    """
    Pairwise votes; most votes wins, then larger margin sum, then the smaller label
    """

    p = model.pairs[0].direction.size
    X = check_features(x, p)
    directions = np.column_stack([pair.direction for pair in model.pairs])
    cutoffs = np.array([pair.cutoff for pair in model.pairs])
    orientations = np.array([pair.orientation for pair in model.pairs])
    scores = orientations * (X @ directions - cutoffs)

    # a point on the cutoff goes to j, the smaller label of the pair
    winners = np.where(scores >= 0, [pair.j for pair in model.pairs], [pair.k for pair in model.pairs])
    fixed = np.array([pair.prior_vote for pair in model.pairs])
    winners = np.where(fixed > 0, fixed, winners)
    scores = np.where(fixed > 0, 0.0, scores)
    votes = np.zeros((X.shape[0], model.n_classes))
    margins = np.zeros_like(votes)
    rows = np.arange(X.shape[0])
    for column in range(len(model.pairs)):
        votes[rows, winners[:, column] - 1] += 1
        margins[rows, winners[:, column] - 1] += np.abs(scores[:, column])

    leading = votes == votes.max(axis=1, keepdims=True)
    masked = np.where(leading, margins, -np.inf)
    leading &= masked == masked.max(axis=1, keepdims=True)
    labels = np.argmax(leading, axis=1) + 1
    return labels[0] if np.ndim(x) == 1 else labels


class PPClassifier(BaseClassifier):
    def __init__(self, estimator_kind="classical", random_directions=200, refine_rounds=50, step=0.1,
                 pairwise_limit=100, refine_coordinates=100, huber_c=1.345, biweight_c=1.547645, n_jobs=1,
                 random_state=0):
        self.estimator_kind = estimator_kind
        self.random_directions = random_directions
        self.refine_rounds = refine_rounds
        self.step = step
        self.pairwise_limit = pairwise_limit
        self.refine_coordinates = refine_coordinates
        self.huber_c = huber_c
        self.biweight_c = biweight_c
        self.n_jobs = n_jobs
        self.random_state = random_state

    @property
    def method_name(self):
        names = {kind: name for name, kind in PP_KINDS.items()}
        return names.get(self.estimator_kind, "pp")

    def _fit_dataset(self, train):
        search = PPSearch(
            random_directions=self.random_directions,
            refine_rounds=self.refine_rounds,
            step=self.step,
            pairwise_limit=self.pairwise_limit,
            refine_coordinates=self.refine_coordinates,
            huber_c=self.huber_c,
            biweight_c=self.biweight_c,
        )
        return pp_fit(train, self.estimator_kind, search, seed=self.random_state, n_jobs=self.n_jobs)

    def _predict_encoded(self, X):
        return pp_predict(self.model_, X)
