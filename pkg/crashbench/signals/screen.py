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

"""Automated quality screen of a solved case."""

import numpy as np

from crashbench.crashbench_classes import QcThresholds, TerminationCause
from crashbench.signals.histories import TimeHistories
from crashbench.signals.qoi import QcDiagnostics


ABNORMAL_TERMINATION = 'abnormal-termination'
ENERGY_BALANCE = 'energy-balance'
HOURGLASS = 'hourglass'
NON_FINITE_CHANNEL = 'non-finite-channel'
PLASTIC_WORK_DECREASE = 'plastic-work-decrease'
TIMESTEP_COLLAPSE = 'timestep-collapse'


def quality_screen(histories: TimeHistories, report, thresholds: QcThresholds = None) -> (bool, list):
    """Checks one case against the QC rules.

    Added mass is a diagnostic only and never fails a case.

    :param TimeHistories histories: the recorded histories.
    :param report: the solver's TerminationReport.
    :param QcThresholds thresholds: limits of the energy error, hourglass ratio and floor-step fraction.
    :return: the pass flag and the list of failure reasons, in rule order.
    """
    thresholds = QcThresholds() if thresholds is None else thresholds
    reasons = []
    if report.cause == TerminationCause.NUMERICAL_BLOWUP:
        reasons.append(ABNORMAL_TERMINATION)
    if not abs(report.energy_error_max) * 100.0 <= thresholds.MAX_ENERGY_ERROR_PCT:
        reasons.append(ENERGY_BALANCE)
    if not report.hourglass_ratio * 100.0 <= thresholds.MAX_HOURGLASS_PCT:
        reasons.append(HOURGLASS)
    if not histories.all_finite():
        reasons.append(NON_FINITE_CHANNEL)
    else:
        scale = max(1.0, float(np.max(np.abs(histories.w_p)))) if len(histories) else 1.0
        if np.any(np.diff(histories.w_p) < -1e-12 * scale):
            reasons.append(PLASTIC_WORK_DECREASE)
    if report.floor_step_fraction > thresholds.MAX_FLOOR_STEP_FRACTION:
        reasons.append(TIMESTEP_COLLAPSE)
    return len(reasons) == 0, reasons


def qc_diagnostics(histories: TimeHistories, report, thresholds: QcThresholds = None) -> QcDiagnostics:
    """Runs the screen and packs its outcome with the diagnostic percentages."""
    passed, reasons = quality_screen(histories, report, thresholds)
    return QcDiagnostics(
        energy_error_pct=100.0 * report.energy_error_max,
        hourglass_pct=100.0 * report.hourglass_ratio,
        added_mass_pct=100.0 * report.added_mass_fraction,
        final_time_ms=report.final_time,
        passed=passed,
        reasons=reasons,
    )
