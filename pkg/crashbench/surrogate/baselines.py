# Copyright 2019 Miguel Angel Abella Gonzalez <miguel.abella@udc.es>
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Tabular baselines on design inputs: ridge regression and inverse-distance k-nearest neighbours."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from crashbench.crashbench_classes import InvalidConfigError


def _standardizer(X: np.ndarray) -> (np.ndarray, np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    return mean, np.where(scale > 0, scale, 1.0)


@dataclass
class RidgeModel:
    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray
    intercept: np.ndarray

    @property
    def coefficients(self) -> np.ndarray:
        """Weights in the original feature units."""
        return self.weights / self.scale[:, None] if self.weights.ndim == 2 else self.weights / self.scale


def ridge_fit(X, y, alpha: float = 1.0) -> RidgeModel:
    """Closed-form ridge regression on standardised features; the intercept is not penalised.

    :param X: design matrix (rows x features).
    :param y: targets, one column per output (or a vector).
    :param float alpha: penalty; 0 gives ordinary least squares.
    :raise InvalidConfigError: on a negative alpha, an empty design or a singular system with alpha = 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < 1 or y.shape[0] != X.shape[0]:
        raise InvalidConfigError(f'Invalid value for parameter "X". Expected "at least one row matching y"; '
                                 f'received "{X.shape}" and "{y.shape}"')
    if alpha < 0:
        raise InvalidConfigError(f'Invalid value for parameter "alpha". Expected "alpha >= 0"; received "{alpha}"')
    mean, scale = _standardizer(X)
    Z = (X - mean) / scale
    centre = y.mean(axis=0)
    gram = Z.T @ Z + alpha * np.eye(Z.shape[1])
    if alpha == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise InvalidConfigError('Invalid value for parameter "alpha". Expected "alpha > 0 for a rank-deficient '
                                 'design"; received "0"')
    try:
        weights = linalg.solve(gram, Z.T @ (y - centre), assume_a='pos')
    except linalg.LinAlgError as error:
        raise InvalidConfigError(f'Singular ridge system: {error}')
    return RidgeModel(mean, scale, weights, centre)


def ridge_predict(model: RidgeModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return ((X - model.mean) / model.scale) @ model.weights + model.intercept


def knn_predict(train_X, train_y, query, k: int = 10) -> np.ndarray:
    """Inverse-distance weighted mean of the k nearest training points in standardised feature space.

    A query that coincides with training points returns the mean of their targets.

    :raise InvalidConfigError: when k < 1 or k exceeds the training size.
    """
    train_X = np.atleast_2d(np.asarray(train_X, dtype=np.float64))
    train_y = np.asarray(train_y, dtype=np.float64)
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    if not 1 <= k <= train_X.shape[0]:
        raise InvalidConfigError(f'Invalid value for parameter "k". Expected "1 <= k <= {train_X.shape[0]}"; '
                                 f'received "{k}"')
    mean, scale = _standardizer(train_X)
    distances = cdist((query - mean) / scale, (train_X - mean) / scale)
    nearest = np.argsort(distances, axis=1, kind='stable')[:, :k]
    predictions = []
    for row, neighbours in zip(distances, nearest):
        near = row[neighbours]
        exact = neighbours[near == 0]
        if exact.size:
            predictions.append(train_y[exact].mean(axis=0))
            continue
        weights = 1.0 / near
        predictions.append(np.tensordot(weights, train_y[neighbours], axes=1) / weights.sum())
    return np.array(predictions)
