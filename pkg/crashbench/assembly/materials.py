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

"""Material cards and the quasi-static, isothermal Johnson-Cook hardening law."""

from dataclasses import dataclass, asdict

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError


GPA = 1.0  # Stress unit of the (t, mm, ms) system


@dataclass(frozen=True)
class Material:
    """Elasto-plastic bar material. Stresses in GPa, density in t/mm^3.

    Rate and thermal factors of the Johnson-Cook law are disabled, so the flow stress depends on the plastic strain
    only."""
    E: float = 210.0
    nu: float = 0.30
    rho: float = 7.85e-6
    A: float = 0.35
    B: float = 0.35
    n: float = 0.35
    eps_p_fail: float = 0.0
    name: str = ''

    def __post_init__(self):
        checks = (
            ('E', self.E > 0, 'E > 0'),
            ('nu', 0 <= self.nu < 0.5, '0 <= nu < 0.5'),
            ('rho', self.rho > 0, 'rho > 0'),
            ('A', self.A > 0, 'A > 0'),
            ('B', self.B >= 0, 'B >= 0'),
            ('n', 0 < self.n <= 1, '0 < n <= 1'),
            ('eps_p_fail', self.eps_p_fail >= 0, 'eps_p_fail >= 0'),
        )
        for name, passed, rule in checks:
            if not passed:
                raise InvalidConfigError(f'Invalid value for parameter "{name}". Expected "{rule}"; '
                                         f'received "{getattr(self, name)}"')

    @classmethod
    def from_yield(cls, A: float, eps_p_fail: float = 0.0, E: float = 210.0, nu: float = 0.30,
                   rho: float = 7.85e-6, name: str = ''):
        """Builds a dual-phase steel card from its yield parameter: B = A and n = A / (1 GPa)."""
        return cls(E=E, nu=nu, rho=rho, A=A, B=A, n=A / GPA, eps_p_fail=eps_p_fail, name=name)

    @property
    def wave_speed(self) -> float:
        """Bar wave speed sqrt(E / rho) in mm/ms."""
        return float(np.sqrt(self.E / self.rho))

    def to_dict(self) -> dict:
        return asdict(self)


def jc_flow_stress(mat: Material, eps_p):
    """Returns the flow stress A + B * eps_p^n (GPa) for a scalar or an array of plastic strains.

    :param Material mat: the material card.
    :param eps_p: equivalent plastic strain, non-negative.
    :return: the flow stress with the shape of eps_p.
    """
    strain = np.asarray(eps_p, dtype=np.float64)
    if np.any(strain < 0) or not np.all(np.isfinite(strain)):
        raise InvalidConfigError(f'Invalid value for parameter "eps_p". Expected "finite eps_p >= 0"; '
                                 f'received "{eps_p}"')
    stress = mat.A + mat.B * np.power(strain, mat.n)
    return float(stress) if stress.ndim == 0 else stress


def flow_stress_slope(mat: Material, eps_p):
    """Derivative of the flow stress with respect to the plastic strain; the singular slope at zero is capped."""
    strain = np.maximum(np.asarray(eps_p, dtype=np.float64), 1e-12)
    return mat.B * mat.n * np.power(strain, mat.n - 1.0)
