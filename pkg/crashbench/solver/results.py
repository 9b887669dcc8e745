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

"""Outputs of an explicit solve: the field trajectory and the termination report."""

from dataclasses import dataclass, field

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError, TerminationCause


@dataclass
class FieldTrajectory:
    """Frames of nodal and element fields sampled every ``dt_anim`` ms, frame 0 being the reference state."""
    times: np.ndarray
    reference: np.ndarray            # X^(0), N x 3
    displacements: np.ndarray        # F x N x 3
    velocities: np.ndarray           # F x N x 3
    stress: np.ndarray               # F x E
    plastic_strain: np.ndarray       # F x E
    eroded: np.ndarray               # F x E, bool
    node_ids: np.ndarray
    element_ids: np.ndarray
    part_ids: np.ndarray
    dt_anim: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        self.reference = np.asarray(self.reference, dtype=np.float64)
        frames = len(self.times)
        nodes = self.reference.shape[0]
        elements = len(self.element_ids)
        self.displacements = np.asarray(self.displacements, dtype=np.float64).reshape(frames, nodes, 3)
        self.velocities = np.asarray(self.velocities, dtype=np.float64).reshape(frames, nodes, 3)
        self.stress = np.asarray(self.stress, dtype=np.float64).reshape(frames, elements)
        self.plastic_strain = np.asarray(self.plastic_strain, dtype=np.float64).reshape(frames, elements)
        self.eroded = np.asarray(self.eroded, dtype=bool).reshape(frames, elements)
        self.node_ids = np.asarray(self.node_ids, dtype=np.int64).reshape(nodes)
        self.element_ids = np.asarray(self.element_ids, dtype=np.int64).reshape(elements)
        self.part_ids = np.asarray(self.part_ids, dtype=np.int64).reshape(elements)
        if not self.dt_anim > 0:
            raise InvalidConfigError(f'Invalid value for parameter "dt_anim". Expected "dt_anim > 0"; '
                                     f'received "{self.dt_anim}"')

    @property
    def frame_count(self) -> int:
        return len(self.times)

    @property
    def node_count(self) -> int:
        return self.reference.shape[0]

    @property
    def element_count(self) -> int:
        return len(self.element_ids)

    @property
    def positions(self) -> np.ndarray:
        """Deformed coordinates X(t) = X^(0) + U(t) for every frame."""
        return self.reference[None, :, :] + self.displacements


@dataclass
class TerminationReport:
    """How a solve ended, with the diagnostics used by the quality screen."""
    cause: TerminationCause = TerminationCause.NORMAL
    message: str = ''
    final_time: float = 0.0
    steps: int = 0
    added_mass_fraction: float = 0.0
    energy_error_max: float = 0.0          # signed E_err with the largest magnitude
    energy_error_final: float = 0.0
    floor_steps: int = 0
    hourglass_ratio: float = 0.0
    initial_kinetic_energy: float = 0.0
    initial_total_energy: float = 0.0
    failed_step: int = -1
    wall_clock_s: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def abnormal(self) -> bool:
        return self.cause == TerminationCause.NUMERICAL_BLOWUP

    @property
    def floor_step_fraction(self) -> float:
        return self.floor_steps / self.steps if self.steps > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            'cause': self.cause.name.lower(),
            'message': self.message,
            'final_time_ms': self.final_time,
            'steps': self.steps,
            'added_mass_fraction': self.added_mass_fraction,
            'energy_error_max': self.energy_error_max,
            'energy_error_final': self.energy_error_final,
            'floor_steps': self.floor_steps,
            'hourglass_ratio': self.hourglass_ratio,
            'initial_kinetic_energy_kJ': self.initial_kinetic_energy,
            'initial_total_energy_kJ': self.initial_total_energy,
            'failed_step': self.failed_step,
            'wall_clock_s': self.wall_clock_s,
        }

    @classmethod
    def from_dict(cls, values: dict):
        return cls(
            cause=TerminationCause[str(values.get('cause', 'normal')).upper()],
            message=values.get('message', ''),
            final_time=float(values.get('final_time_ms', 0.0)),
            steps=int(values.get('steps', 0)),
            added_mass_fraction=float(values.get('added_mass_fraction', 0.0)),
            energy_error_max=float(values.get('energy_error_max', 0.0)),
            energy_error_final=float(values.get('energy_error_final', 0.0)),
            floor_steps=int(values.get('floor_steps', 0)),
            hourglass_ratio=float(values.get('hourglass_ratio', 0.0)),
            initial_kinetic_energy=float(values.get('initial_kinetic_energy_kJ', 0.0)),
            initial_total_energy=float(values.get('initial_total_energy_kJ', 0.0)),
            failed_step=int(values.get('failed_step', -1)),
            wall_clock_s=float(values.get('wall_clock_s', 0.0)),
        )
