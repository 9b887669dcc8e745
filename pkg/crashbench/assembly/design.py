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

"""Design vectors and the bounded, gridded design spaces they are drawn from."""

import json
from dataclasses import dataclass, fields, asdict, replace
from pathlib import Path

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError


KMH_PER_MM_MS = 3.6
GRID_TOLERANCE = 1e-9
REFINED_VARIABLES = ('v', 'd_pole')


def round_half_away(values):
    """Rounds to the nearest integer, halves away from zero."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


@dataclass(frozen=True)
class DesignVector:
    """One campaign input. Only the variables of the owning DesignSpace are set; the others stay None.

    Values are expressed in the units declared by the space (velocity in mm/ms for bumper spaces, km/h for vehicle
    spaces); DesignSpace.velocity_mm_ms() converts."""
    v: float = None
    t_cb: float = None
    t_bb: float = None
    sigma_y_cb: float = None
    sigma_y_bb: float = None
    d_pole: float = None
    y_pole: float = None
    s_front: float = None
    s_rail: float = None

    @classmethod
    def from_mapping(cls, values: dict):
        known = {item.name for item in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidConfigError(f'Invalid value for parameter "design". Expected keys in "{sorted(known)}"; '
                                     f'received "{sorted(unknown)}"')
        return cls(**{key: (None if value is None else float(value)) for key, value in values.items()})

    def to_dict(self) -> dict:
        return {key: value for key, value in asdict(self).items() if value is not None}

    def as_array(self, names) -> np.ndarray:
        return np.array([getattr(self, name) for name in names], dtype=np.float64)


@dataclass(frozen=True)
class DesignVariable:
    """Bounds, grid step and unit of one design variable."""
    name: str
    minimum: float
    maximum: float
    step: float
    unit: str = ''
    nominal: float = None

    def __post_init__(self):
        if not self.minimum < self.maximum:
            raise InvalidConfigError(f'Invalid value for parameter "{self.name}". Expected "min < max"; '
                                     f'received "{self.minimum}, {self.maximum}"')
        if not self.step > 0:
            raise InvalidConfigError(f'Invalid value for parameter "{self.name}". Expected "grid_step > 0"; '
                                     f'received "{self.step}"')
        intervals = (self.maximum - self.minimum) / self.step
        if abs(intervals - round(intervals)) > GRID_TOLERANCE * max(1.0, intervals):
            raise InvalidConfigError(f'Invalid value for parameter "{self.name}". '
                                     f'Expected "grid_step divides max - min"; received "{self.step}"')

    @property
    def grid_points(self) -> int:
        return int(round((self.maximum - self.minimum) / self.step)) + 1

    @property
    def midpoint(self) -> float:
        return self.snap(0.5 * (self.minimum + self.maximum))

    @property
    def baseline(self) -> float:
        return self.midpoint if self.nominal is None else self.nominal

    def snap(self, values):
        """Nearest grid point (halves away from zero), clipped to the bounds."""
        index = round_half_away((np.asarray(values, dtype=np.float64) - self.minimum) / self.step)
        snapped = np.clip(np.round(self.minimum + index * self.step, 12), self.minimum, self.maximum)
        return float(snapped) if snapped.ndim == 0 else snapped

    def ceil(self, value: float) -> float:
        index = np.ceil((value - self.minimum) / self.step - GRID_TOLERANCE)
        return float(np.clip(np.round(self.minimum + index * self.step, 12), self.minimum, self.maximum))

    def floor(self, value: float) -> float:
        index = np.floor((value - self.minimum) / self.step + GRID_TOLERANCE)
        return float(np.clip(np.round(self.minimum + index * self.step, 12), self.minimum, self.maximum))

    def contains(self, value: float) -> bool:
        return self.minimum - GRID_TOLERANCE <= value <= self.maximum + GRID_TOLERANCE

    def on_grid(self, value: float) -> bool:
        offset = (value - self.minimum) / self.step
        return abs(offset - round(offset)) <= GRID_TOLERANCE * max(1.0, abs(offset))


class DesignSpace:
    """Ordered collection of design variables plus the identifier of the feasibility rule set ('bumper' or 'none')."""

    def __init__(self, variables, constraint: str = 'none', name: str = ''):
        self.variables = tuple(variables)
        names = [variable.name for variable in self.variables]
        if len(names) == 0 or len(set(names)) != len(names):
            raise InvalidConfigError(f'Invalid value for parameter "variables". Expected "unique, non-empty"; '
                                     f'received "{names}"')
        unknown = set(names) - {item.name for item in fields(DesignVector)}
        if unknown:
            raise InvalidConfigError(f'Invalid value for parameter "variables". Expected DesignVector fields; '
                                     f'received "{sorted(unknown)}"')
        if constraint not in ('bumper', 'none'):
            raise InvalidConfigError(f'Invalid value for parameter "constraint". Expected "bumper" or "none"; '
                                     f'received "{constraint}"')
        self.constraint = constraint
        self.name = name

    #
    # Presets
    #
    @staticmethod
    def bumper(phase: int = 1):
        """Seven-variable pole-impact space. Phase 3 refines the velocity and pole-diameter grids."""
        space = DesignSpace((
            DesignVariable('v', 2.0, 15.0, 0.5, 'mm/ms'),
            DesignVariable('t_cb', 1.0, 3.0, 0.1, 'mm'),
            DesignVariable('t_bb', 1.0, 3.0, 0.1, 'mm'),
            DesignVariable('sigma_y_cb', 0.15, 0.60, 0.025, 'GPa'),
            DesignVariable('sigma_y_bb', 0.25, 1.00, 0.025, 'GPa'),
            DesignVariable('d_pole', 100.0, 500.0, 10.0, 'mm'),
            DesignVariable('y_pole', 0.0, 800.0, 25.0, 'mm'),
        ), constraint='bumper', name=f'bumper-phase{phase}')
        return space.refined(name=space.name) if phase == 3 else space

    @staticmethod
    def vehicle():
        """Three-variable full-frontal space: speed and the two thickness scale factors."""
        return DesignSpace((
            DesignVariable('v', 50.0, 64.0, 0.5, 'km/h', nominal=56.0),
            DesignVariable('s_front', 0.9, 1.1, 0.01, '-', nominal=1.0),
            DesignVariable('s_rail', 0.9, 1.1, 0.01, '-', nominal=1.0),
        ), constraint='none', name='vehicle')

    def refined(self, names=REFINED_VARIABLES, factor: int = 2, name: str = None):
        """Copy of the space whose listed variables, when present, get a grid ``factor`` times finer."""
        if int(factor) != factor or factor < 1:
            raise InvalidConfigError(f'Invalid value for parameter "factor". Expected "integer >= 1"; '
                                     f'received "{factor}"')
        variables = [replace(variable, step=variable.step / factor) if variable.name in names else variable
                     for variable in self.variables]
        return DesignSpace(variables, self.constraint, f'{self.name}-refined' if name is None else name)

    #
    # Geometry of the space
    #
    @property
    def names(self) -> list:
        return [variable.name for variable in self.variables]

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([variable.minimum for variable in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([variable.maximum for variable in self.variables])

    def variable(self, name: str) -> DesignVariable:
        for variable in self.variables:
            if variable.name == name:
                return variable
        raise InvalidConfigError(f'Invalid value for parameter "name". Expected one of "{self.names}"; '
                                 f'received "{name}"')

    def from_unit(self, unit_points) -> list:
        """Maps points of [0, 1]^d linearly to the bounds and rounds them to the grid."""
        unit_points = np.atleast_2d(np.asarray(unit_points, dtype=np.float64))
        raw = self.lower + unit_points * (self.upper - self.lower)
        columns = [variable.snap(raw[:, index]) for index, variable in enumerate(self.variables)]
        values = np.column_stack(columns)
        return [self.make(row) for row in values]

    def make(self, values) -> DesignVector:
        return DesignVector(**{name: float(value) for name, value in zip(self.names, values)})

    def to_array(self, designs) -> np.ndarray:
        return np.array([design.as_array(self.names) for design in designs], dtype=np.float64).reshape(-1,
                                                                                                   self.dimension)

    def normalize(self, designs) -> np.ndarray:
        """Min-max scaling of design values to [0, 1]^d."""
        return (self.to_array(designs) - self.lower) / (self.upper - self.lower)

    def contains(self, design: DesignVector) -> bool:
        return all(getattr(design, name) is not None and variable.contains(getattr(design, name))
                   for name, variable in zip(self.names, self.variables))

    def on_grid(self, design: DesignVector) -> bool:
        return all(variable.on_grid(getattr(design, variable.name)) for variable in self.variables)

    def velocity_mm_ms(self, design: DesignVector) -> float:
        unit = self.variable('v').unit
        return design.v / KMH_PER_MM_MS if unit == 'km/h' else design.v

    #
    # Serialization
    #
    def to_dict(self) -> dict:
        return {'name': self.name, 'constraint': self.constraint,
                'variables': [asdict(variable) for variable in self.variables]}

    @classmethod
    def from_dict(cls, values: dict):
        return cls([DesignVariable(**variable) for variable in values['variables']],
                   constraint=values.get('constraint', 'none'), name=values.get('name', ''))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + '\n', encoding='utf-8')
        return text

    @classmethod
    def from_json(cls, path):
        with open(Path(path), encoding='utf-8') as json_file:
            return cls.from_dict(json.load(json_file))

    def __eq__(self, other):
        return isinstance(other, DesignSpace) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f'DesignSpace({self.name!r}, {self.names})'
