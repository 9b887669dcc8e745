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

"""CFC filtering, reduced QoIs, the quality screen and dataset statistics."""

import numpy as np
import pandas as pd
import pytest

from crashbench.crashbench_classes import InvalidConfigError, QcThresholds, QoiConfig, TerminationCause
from crashbench.solver import TerminationReport
from crashbench.signals import (TimeHistories, cfc60, cfc_filter, describe, extract_qoi, quality_screen,
                                qc_diagnostics, two_pass_gain)
from crashbench.signals.screen import (ABNORMAL_TERMINATION, ENERGY_BALANCE, NON_FINITE_CHANNEL,
                                       PLASTIC_WORK_DECREASE, TIMESTEP_COLLAPSE)


def rectangle_histories(peak: float = 600.0, start: float = 10.0, end: float = 80.0) -> TimeHistories:
    """Rectangular wall pulse on a 0.1 ms grid over 100 ms; kinetic energy falls from 100 to 4 kJ."""
    time = np.round(np.arange(1001) * 0.1, 12)
    force = np.zeros((len(time), 3))
    force[(time >= start - 1e-9) & (time <= end + 1e-9), 0] = -peak
    e_kin = np.linspace(100.0, 4.0, len(time))
    return TimeHistories(time=time, wall_force=force, e_kin=e_kin, e_int=100.0 - e_kin, e_cont=np.zeros(len(time)),
                         e_hg=np.zeros(len(time)), w_p=0.8 * (100.0 - e_kin), a=np.zeros(len(time)))


def unfiltered() -> QoiConfig:
    config = QoiConfig()
    config.FILTER_FORCE = False
    config.FILTER_ACCELERATION = False
    return config


def test_cfc_passes_constant_signals():
    signal = np.full(300, 3.5)
    assert np.allclose(cfc_filter(signal, 0.1), 3.5, atol=1e-9)
    assert two_pass_gain(0.0, 0.1) == pytest.approx(1.0)


def test_cfc_is_linear_and_keeps_length():
    rng = np.random.default_rng(0)
    first, second = rng.normal(size=400), rng.normal(size=400)
    combined = cfc_filter(2.0 * first - 3.0 * second, 0.1)
    assert combined.shape == (400,)
    assert np.allclose(combined, 2.0 * cfc_filter(first, 0.1) - 3.0 * cfc_filter(second, 0.1), atol=1e-9)


def test_cfc_commutes_with_time_reversal():
    signal = np.random.default_rng(1).normal(size=400)
    assert np.allclose(cfc60(signal[::-1], 0.1), cfc60(signal, 0.1)[::-1], rtol=0.0, atol=1e-9)


def test_cfc_attenuates_high_frequencies():
    frequencies = np.linspace(0.0, 1000.0, 101)
    gain = two_pass_gain(frequencies, 0.1)
    assert np.all(np.diff(gain) <= 1e-12)
    assert gain[-1] < 0.01
    time = np.arange(2000) * 0.1e-3
    noise = np.sin(2.0 * np.pi * 1000.0 * time)
    assert np.max(np.abs(cfc_filter(noise, 0.1)[200:-200])) < 0.05


def test_cfc_rejects_short_or_coarse_signals():
    with pytest.raises(InvalidConfigError):
        cfc_filter(np.zeros(9), 0.1)
    with pytest.raises(InvalidConfigError):
        cfc_filter(np.zeros(50), 5.0)


def test_rectangle_pulse_window():
    record = extract_qoi(rectangle_histories(), unfiltered())
    assert record.f_wall_max == pytest.approx(600.0)
    assert record.t1 == pytest.approx(10.0)
    assert record.t2 == pytest.approx(80.0)
    assert record.t_imp == pytest.approx(70.0)
    assert record.eta_ke == pytest.approx(0.96)
    assert record.e_int_max == pytest.approx(96.0)
    assert record.w_p_max == pytest.approx(76.8)
    assert record.e_kin_0 == 100.0
    assert not record.no_contact


def test_filtered_pulse_stays_close():
    record = extract_qoi(rectangle_histories())
    assert record.f_wall_max == pytest.approx(600.0, rel=0.1)
    assert abs(record.t1 - 10.0) < 5.0
    assert abs(record.t2 - 80.0) < 5.0


def test_no_contact_gives_zero_window():
    histories = rectangle_histories(peak=0.0)
    record = extract_qoi(histories, unfiltered())
    assert record.no_contact
    assert (record.f_wall_max, record.t1, record.t2, record.t_imp) == (0.0, 0.0, 0.0, 0.0)


def test_zero_initial_kinetic_energy_is_rejected():
    histories = rectangle_histories()
    histories.e_kin[:] = 0.0
    with pytest.raises(InvalidConfigError):
        extract_qoi(histories, unfiltered())


def test_quality_screen_reasons():
    histories = rectangle_histories()
    assert quality_screen(histories, TerminationReport(energy_error_max=0.02, steps=100)) == (True, [])

    report = TerminationReport(cause=TerminationCause.NUMERICAL_BLOWUP, energy_error_max=-0.06, steps=100,
                               floor_steps=80)
    passed, reasons = quality_screen(histories, report)
    assert not passed
    assert reasons == [ABNORMAL_TERMINATION, ENERGY_BALANCE, TIMESTEP_COLLAPSE]

    histories.w_p[500] = 0.0
    histories.a[3] = np.nan
    _, reasons = quality_screen(histories, TerminationReport(steps=10))
    assert reasons == [NON_FINITE_CHANNEL]
    histories.a[3] = 0.0
    _, reasons = quality_screen(histories, TerminationReport(steps=10))
    assert reasons == [PLASTIC_WORK_DECREASE]


def test_added_mass_never_fails_a_case():
    thresholds = QcThresholds()
    thresholds.MAX_ENERGY_ERROR_PCT = 1.0
    diagnostics = qc_diagnostics(rectangle_histories(),
                                 TerminationReport(added_mass_fraction=0.5, energy_error_max=0.005, final_time=100.0,
                                                   steps=50), thresholds)
    assert diagnostics.passed
    assert diagnostics.added_mass_pct == pytest.approx(50.0)
    assert diagnostics.energy_error_pct == pytest.approx(0.5)
    assert diagnostics.final_time_ms == 100.0


def test_histories_frame_round_trip():
    histories = rectangle_histories()
    frame = histories.to_frame()
    restored = TimeHistories.from_frame(frame)
    assert np.array_equal(restored.wall_force, histories.wall_force)
    with pytest.raises(InvalidConfigError):
        TimeHistories.from_frame(frame.drop(columns=['w_p_kJ']))


def test_describe_table():
    master = pd.DataFrame({'case_id': ['a', 'b', 'c'], 'v': [2.0, 4.0, 9.0], 'f_wall_max_kN': [1.0, np.nan, 3.0],
                           'phase': [1, 1, 2]})
    table = describe(master)
    assert table['quantity'].tolist() == ['v', 'f_wall_max_kN']
    v = table.set_index('quantity').loc['v']
    assert (v['count'], v['min'], v['median'], v['max']) == (3, 2.0, 4.0, 9.0)
    assert table.set_index('quantity').loc['f_wall_max_kN', 'count'] == 2
    with pytest.raises(InvalidConfigError):
        describe(master, ['missing'])
