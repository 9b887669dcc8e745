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

"""Per-case field-prediction metrics and the model leaderboard."""

from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError, ShapeMismatchError


METRIC_COLUMNS = ['rmse', 'mae', 'rel_l2_x', 'rel_l2_u', 'rmse_at_probe', 'rmse_final']
LEADERBOARD_COLUMNS = ['rank', 'model', 'rmse', 'mae', 'rel_l2_x', 'rel_l2_u', 'rmse_at_probe']


@dataclass
class CaseMetrics:
    """Position-error metrics of one case; distances in mm."""
    rmse: float
    mae: float
    rel_l2_x: float
    rel_l2_u: float
    rmse_at_probe: float
    rmse_final: float

    def to_dict(self) -> dict:
        return asdict(self)


def probe_frame(times, probe_ms: float = None) -> int:
    """Index of the output frame nearest the probe time (mid-sequence when no probe is given).

    :raise InvalidConfigError: when the probe lies outside the span of the output frames.
    """
    times = np.asarray(times, dtype=np.float64)
    if probe_ms is None:
        return (times.size - 1) // 2
    if not times[0] - 1e-9 <= probe_ms <= times[-1] + 1e-9:
        raise InvalidConfigError(f'Invalid value for parameter "probe_ms". Expected "{times[0]} <= probe <= '
                                 f'{times[-1]}"; received "{probe_ms}"')
    return int(np.argmin(np.abs(times - probe_ms)))


def case_metrics(predicted, target, reference, times=None, probe_ms: float = None) -> CaseMetrics:
    """Metrics of predicted against true displacements (both n x N x 3) of a case with reference coordinates X0.

    :param times: output-frame times in ms; frames are numbered 1..n when omitted.
    :raise InvalidConfigError: when the true displacements are identically zero.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if predicted.shape != target.shape or target.ndim != 3 or target.shape[1:] != reference.shape:
        raise ShapeMismatchError('metrics', f'predicted {predicted.shape}, target {target.shape}, reference '
                                            f'{reference.shape}')
    norm_u = np.linalg.norm(target)
    if norm_u == 0:
        raise InvalidConfigError('Invalid value for parameter "target". Expected "non-zero displacements"; '
                                 'received "all zeros"')
    positions = reference[None] + target
    error = np.linalg.norm((reference[None] + predicted) - positions, axis=2)
    times = np.arange(1, target.shape[0] + 1, dtype=np.float64) if times is None else times
    probe = probe_frame(times, probe_ms)
    return CaseMetrics(
        rmse=float(np.sqrt(np.mean(error ** 2))),
        mae=float(np.mean(error)),
        rel_l2_x=float(np.linalg.norm(predicted - target) / np.linalg.norm(positions)),
        rel_l2_u=float(np.linalg.norm(predicted - target) / norm_u),
        rmse_at_probe=float(np.sqrt(np.mean(error[probe] ** 2))),
        rmse_final=float(np.sqrt(np.mean(error[-1] ** 2))),
    )


def metrics_frame(model: str, case_ids, metrics) -> pd.DataFrame:
    rows = [{'model': model, 'case_id': case_id, **case.to_dict()} for case_id, case in zip(case_ids, metrics)]
    return pd.DataFrame(rows, columns=['model', 'case_id'] + METRIC_COLUMNS)


def leaderboard(frames) -> pd.DataFrame:
    """Per-model means of the per-case metrics, ranked by mean RMSE."""
    table = pd.concat(list(frames), ignore_index=True)
    means = table.groupby('model', sort=False)[METRIC_COLUMNS].mean().reset_index()
    means = means.sort_values(['rmse', 'model'], kind='stable').reset_index(drop=True)
    means.insert(0, 'rank', np.arange(1, len(means) + 1))
    return means[LEADERBOARD_COLUMNS]
