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

"""Uniformly sampled global time histories of a solve."""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError


HISTORY_COLUMNS = ['time_ms', 'fx_kN', 'fy_kN', 'fz_kN', 'e_kin_kJ', 'e_int_kJ', 'e_cont_kJ', 'e_hg_kJ', 'w_p_kJ',
                   'a_mm_ms2']


@dataclass
class TimeHistories:
    """Wall reaction (summed over walls), energies and rigid-body acceleration on one uniform time grid."""
    time: np.ndarray
    wall_force: np.ndarray
    e_kin: np.ndarray
    e_int: np.ndarray
    e_cont: np.ndarray
    e_hg: np.ndarray
    w_p: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=np.float64).reshape(-1)
        self.wall_force = np.asarray(self.wall_force, dtype=np.float64).reshape(-1, 3)
        for name in ('e_kin', 'e_int', 'e_cont', 'e_hg', 'w_p', 'a'):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(-1))
        lengths = {name: len(getattr(self, name)) for name in ('time', 'wall_force', 'e_kin', 'e_int', 'e_cont',
                                                               'e_hg', 'w_p', 'a')}
        if len(set(lengths.values())) != 1:
            raise InvalidConfigError(f'Invalid value for parameter "histories". Expected "equal channel lengths"; '
                                     f'received "{lengths}"')

    def __len__(self):
        return len(self.time)

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0]) if len(self.time) > 1 else 0.0

    def validate(self):
        """Checks the strictly increasing, uniform time grid."""
        if len(self.time) < 2:
            raise InvalidConfigError(f'Invalid value for parameter "time". Expected "at least 2 samples"; '
                                     f'received "{len(self.time)}"')
        steps = np.diff(self.time)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-6 * steps[0]:
            raise InvalidConfigError('Invalid value for parameter "time". Expected "uniform increasing grid"; '
                                     f'received steps in [{steps.min()}, {steps.max()}]')
        return self

    @property
    def force_magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.wall_force, axis=1)

    def channels(self) -> dict:
        return {
            'time_ms': self.time, 'fx_kN': self.wall_force[:, 0], 'fy_kN': self.wall_force[:, 1],
            'fz_kN': self.wall_force[:, 2], 'e_kin_kJ': self.e_kin, 'e_int_kJ': self.e_int,
            'e_cont_kJ': self.e_cont, 'e_hg_kJ': self.e_hg, 'w_p_kJ': self.w_p, 'a_mm_ms2': self.a,
        }

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(values)) for values in self.channels().values())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.channels(), columns=HISTORY_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame):
        missing = [column for column in HISTORY_COLUMNS if column not in frame.columns]
        if missing:
            raise InvalidConfigError(f'Invalid value for parameter "columns". Expected "{HISTORY_COLUMNS}"; '
                                     f'missing "{missing}"')
        return cls(time=frame['time_ms'].to_numpy(dtype=np.float64),
                   wall_force=frame[['fx_kN', 'fy_kN', 'fz_kN']].to_numpy(dtype=np.float64),
                   e_kin=frame['e_kin_kJ'].to_numpy(dtype=np.float64),
                   e_int=frame['e_int_kJ'].to_numpy(dtype=np.float64),
                   e_cont=frame['e_cont_kJ'].to_numpy(dtype=np.float64),
                   e_hg=frame['e_hg_kJ'].to_numpy(dtype=np.float64),
                   w_p=frame['w_p_kJ'].to_numpy(dtype=np.float64),
                   a=frame['a_mm_ms2'].to_numpy(dtype=np.float64))
