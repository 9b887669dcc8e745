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

"""Reduced quantities of interest extracted from the time histories of one case."""

from dataclasses import dataclass, field, asdict

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError, QoiConfig
from crashbench.signals.cfc import cfc_filter
from crashbench.signals.histories import TimeHistories


@dataclass
class QcDiagnostics:
    """Quality-control diagnostics; percentages are plain numbers (1.4 means 1.4 %)."""
    energy_error_pct: float = 0.0
    hourglass_pct: float = 0.0
    added_mass_pct: float = 0.0
    final_time_ms: float = 0.0
    passed: bool = True
    reasons: list = field(default_factory=list)


@dataclass
class QoiRecord:
    """Peak wall force (kN), peak internal energy (kJ), absorbed kinetic-energy fraction, peak acceleration
    (mm/ms^2), force-window times (ms), peak plastic work (kJ) and initial kinetic energy (kJ)."""
    f_wall_max: float
    e_int_max: float
    eta_ke: float
    a_max: float
    t1: float
    t2: float
    t_imp: float
    w_p_max: float
    e_kin_0: float
    no_contact: bool = False
    qc: QcDiagnostics = field(default_factory=QcDiagnostics)

    def values(self) -> np.ndarray:
        return np.array([self.f_wall_max, self.e_int_max, self.eta_ke, self.a_max, self.t1, self.t2, self.t_imp,
                         self.w_p_max, self.e_kin_0])

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values())))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict):
        values = dict(values)
        values['qc'] = QcDiagnostics(**values.get('qc', {}))
        return cls(**values)


def force_window(force: np.ndarray, time: np.ndarray, fraction: float) -> (float, float, bool):
    """First and last sample time with force strictly above fraction * peak; (0, 0, True) without contact."""
    peak = float(np.max(force)) if len(force) else 0.0
    if not peak > 0:
        return 0.0, 0.0, True
    above = np.flatnonzero(force > fraction * peak)
    return float(time[above[0]]), float(time[above[-1]]), False


def extract_qoi(histories: TimeHistories, config: QoiConfig = None) -> QoiRecord:
    """Computes the reduced QoIs of one case.

    :param TimeHistories histories: uniformly sampled histories; force and acceleration are CFC filtered first
                                    when the configuration asks for it.
    :param QoiConfig config: filter class, threshold fraction and filter switches.
    :return: a QoiRecord with default (passing) QC diagnostics.
    :raise InvalidConfigError: when the initial kinetic energy is zero.
    """
    config = QoiConfig() if config is None else config
    histories.validate()
    dt = histories.dt
    force = histories.wall_force
    if config.FILTER_FORCE:
        force = np.column_stack([cfc_filter(force[:, axis], dt, config.CFC_CLASS) for axis in range(3)])
    magnitude = np.linalg.norm(force, axis=1)
    acceleration = cfc_filter(histories.a, dt, config.CFC_CLASS) if config.FILTER_ACCELERATION else histories.a

    e_kin_0 = float(histories.e_kin[0])
    if e_kin_0 == 0:
        raise InvalidConfigError('Invalid value for parameter "e_kin". Expected "E_kin(0) > 0"; received "0"')
    t1, t2, no_contact = force_window(magnitude, histories.time, config.FORCE_THRESHOLD_FRACTION)
    return QoiRecord(
        f_wall_max=float(np.max(magnitude)),
        e_int_max=float(np.max(histories.e_int)),
        eta_ke=float(1.0 - histories.e_kin[-1] / e_kin_0),
        a_max=float(np.max(np.abs(acceleration))),
        t1=t1,
        t2=t2,
        t_imp=t2 - t1,
        w_p_max=float(np.max(histories.w_p)),
        e_kin_0=e_kin_0,
        no_contact=no_contact,
    )
