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

"""Channel Frequency Class filtering of crash signals (SAE J211 two-pass Butterworth)."""

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from crashbench.crashbench_classes import InvalidConfigError


MIN_SAMPLES = 10
PADDING_PERIODS = 10    # Mirror padding of 10 / CFC seconds at each end


def cfc_coefficients(cfc: float, dt_ms: float) -> (np.ndarray, np.ndarray):
    """Numerator and denominator of the single-pass filter in scipy.signal.lfilter form.

    :param cfc: channel frequency class (60 for CFC60).
    :param dt_ms: sampling interval in ms.
    :raise InvalidConfigError: when the sampling interval is too coarse for the class.
    """
    if not dt_ms > 0:
        raise InvalidConfigError(f'Invalid value for parameter "dt". Expected "dt > 0"; received "{dt_ms}"')
    dt = dt_ms * 1e-3
    omega_d = 2.0 * np.pi * cfc * 2.0775
    if omega_d * dt >= np.pi:
        raise InvalidConfigError(f'Invalid value for parameter "dt". Expected "2 pi CFC 2.0775 dt < pi"; '
                                 f'received "{dt_ms} ms for CFC{cfc}"')
    omega_a = np.tan(omega_d * dt / 2.0)
    denominator = 1.0 + np.sqrt(2.0) * omega_a + omega_a ** 2
    a0 = omega_a ** 2 / denominator
    b1 = -2.0 * (omega_a ** 2 - 1.0) / denominator
    b2 = (-1.0 + np.sqrt(2.0) * omega_a - omega_a ** 2) / denominator
    return np.array([a0, 2.0 * a0, a0]), np.array([1.0, -b1, -b2])


def _single_pass(numerator, denominator, values):
    initial = lfilter_zi(numerator, denominator) * values[0]
    filtered, _ = lfilter(numerator, denominator, values, zi=initial)
    return filtered


def cfc_filter(signal, dt_ms: float, cfc: float = 60) -> np.ndarray:
    """Phaseless forward and reverse pass of the CFC Butterworth filter.

    Both ends are padded by odd mirror reflection about the end sample over 10 / CFC seconds.

    :param signal: uniformly sampled values.
    :param dt_ms: sampling interval in ms.
    :param cfc: channel frequency class.
    :return: the filtered signal, same length as the input.
    """
    values = np.asarray(signal, dtype=np.float64).reshape(-1)
    if len(values) < MIN_SAMPLES:
        raise InvalidConfigError(f'Invalid value for parameter "signal". Expected "at least {MIN_SAMPLES} samples"; '
                                 f'received "{len(values)}"')
    numerator, denominator = cfc_coefficients(cfc, dt_ms)
    pad = int(round(PADDING_PERIODS / cfc / (dt_ms * 1e-3)))
    padded = np.pad(values, pad, mode='reflect', reflect_type='odd') if pad > 0 else values
    forward = _single_pass(numerator, denominator, padded)
    both = _single_pass(numerator, denominator, forward[::-1])[::-1]
    return both[pad:pad + len(values)] if pad > 0 else both


def cfc60(signal, dt_ms: float) -> np.ndarray:
    return cfc_filter(signal, dt_ms, 60)


def two_pass_gain(frequency_hz, dt_ms: float, cfc: float = 60) -> np.ndarray:
    """Analytic amplitude ratio |H(e^(j w dt))|^2 of the two-pass filter at the given frequencies."""
    numerator, denominator = cfc_coefficients(cfc, dt_ms)
    z = np.exp(-1j * 2.0 * np.pi * np.asarray(frequency_hz, dtype=np.float64) * dt_ms * 1e-3)
    response = np.polyval(numerator[::-1], z) / np.polyval(denominator[::-1], z)
    return np.abs(response) ** 2
