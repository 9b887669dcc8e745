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

"""Scalar-response regression metrics and the tabular baseline benchmark on the master table."""

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError
from crashbench.datastore.tables import INPUT_COLUMNS, QOI_COLUMNS, SplitSet
from crashbench.surrogate.baselines import knn_predict, ridge_fit, ridge_predict


TABULAR_COLUMNS = ['model', 'target', 'r2', 'mae', 'rmse', 'mape_pct']


def regression_metrics(y_true, y_pred) -> dict:
    """R^2, MAE, RMSE and MAPE (percent, over non-zero targets) of one response."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    residual = y_true - y_pred
    total = np.sum((y_true - y_true.mean()) ** 2)
    nonzero = y_true != 0
    return {
        'r2': float(1.0 - np.sum(residual ** 2) / total) if total > 0 else float('nan'),
        'mae': float(np.mean(np.abs(residual))),
        'rmse': float(np.sqrt(np.mean(residual ** 2))),
        'mape_pct': float(100.0 * np.mean(np.abs(residual[nonzero] / y_true[nonzero]))) if nonzero.any()
        else float('nan'),
    }


def feature_columns(master: pd.DataFrame) -> list:
    """Design-input columns with a value in every row."""
    return [column for column in INPUT_COLUMNS if master[column].notna().all()]


def tabular_benchmark(master: pd.DataFrame, splits: SplitSet, targets=None, alpha: float = 1.0,
                      k: int = 10) -> pd.DataFrame:
    """Fits ridge and inverse-distance kNN on the training split and scores them on the test split."""
    targets = list(QOI_COLUMNS if targets is None else targets)
    indexed = master.set_index('case_id')
    features = feature_columns(master)
    if not features:
        raise InvalidConfigError('Invalid value for parameter "master". Expected "complete design-input columns"; '
                                 'received "none"')
    train, test = indexed.loc[splits.train], indexed.loc[splits.test]
    if train.empty or test.empty:
        raise InvalidConfigError(f'Invalid value for parameter "splits". Expected "non-empty train and test '
                                 f'splits"; received "{len(train)}/{len(test)}"')
    X_train, X_test = train[features].to_numpy(), test[features].to_numpy()
    y_train, y_test = train[targets].to_numpy(), test[targets].to_numpy()
    predictions = {
        'ridge': ridge_predict(ridge_fit(X_train, y_train, alpha), X_test),
        'knn': knn_predict(X_train, y_train, X_test, min(k, len(train))),
    }
    rows = []
    for model, predicted in predictions.items():
        for column, target in enumerate(targets):
            rows.append({'model': model, 'target': target,
                         **regression_metrics(y_test[:, column], predicted[:, column])})
    return pd.DataFrame(rows, columns=TABULAR_COLUMNS)
