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

"""Mesh-level domain types: parts, thickness edits and the immutable bar-element Assembly."""

from dataclasses import dataclass, field, replace

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError
from crashbench.assembly.materials import Material
from crashbench.assembly.walls import RigidWall


@dataclass(frozen=True)
class Part:
    """A named set of elements sharing a thickness group and a semantic component label."""
    part_id: int
    name: str
    group: str
    component: str
    thickness: float

    def to_dict(self) -> dict:
        return {'part_id': self.part_id, 'name': self.name, 'group': self.group, 'component': self.component,
                'thickness': self.thickness}


@dataclass(frozen=True)
class ThicknessEdit:
    """Scales every element of a thickness group: t_g = scale * baseline."""
    group: str
    scale: float
    baseline: float = None
    scale_bounds: tuple = (0.9, 1.1)

    @property
    def thickness(self) -> float:
        """Edited gauge of the group when its baseline is known."""
        return None if self.baseline is None else self.scale * self.baseline


def lumped_masses(coordinates: np.ndarray, connectivity: np.ndarray, areas: np.ndarray, densities: np.ndarray,
                  node_count: int) -> np.ndarray:
    """Row-sum lumping: each node receives half of rho * A * L of every incident element."""
    lengths = np.linalg.norm(coordinates[connectivity[:, 1]] - coordinates[connectivity[:, 0]], axis=1)
    half = 0.5 * densities * areas * lengths
    masses = np.zeros(node_count)
    np.add.at(masses, connectivity[:, 0], half)
    np.add.at(masses, connectivity[:, 1], half)
    return masses


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Assembly:
    """Nodes, two-node bar elements, parts, lumped masses, boundary conditions and walls.

    Arrays are stored read-only so that one assembly can be shared by concurrent solves. Element connectivity refers
    to node *indices* (rows of ``coordinates``); ``node_ids`` and ``element_ids`` hold the persistent identifiers."""
    node_ids: np.ndarray
    coordinates: np.ndarray
    element_ids: np.ndarray
    connectivity: np.ndarray
    element_parts: np.ndarray
    areas: np.ndarray
    element_materials: np.ndarray
    materials: tuple
    parts: dict
    masses: np.ndarray
    point_masses: np.ndarray
    fixed_dofs: np.ndarray
    initial_velocity: np.ndarray
    external_forces: np.ndarray
    walls: tuple = ()
    unit_width: float = 10.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, dtype in (('node_ids', np.int64), ('coordinates', np.float64), ('element_ids', np.int64),
                            ('connectivity', np.int64), ('element_parts', np.int64), ('areas', np.float64),
                            ('element_materials', np.int64), ('masses', np.float64), ('point_masses', np.float64),
                            ('fixed_dofs', bool), ('initial_velocity', np.float64),
                            ('external_forces', np.float64)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype))
        object.__setattr__(self, 'materials', tuple(self.materials))
        object.__setattr__(self, 'walls', tuple(self.walls))
        self._validate()

    def _validate(self):
        node_count = self.coordinates.shape[0]
        if self.coordinates.ndim != 2 or self.coordinates.shape[1] != 3:
            raise InvalidConfigError(f'Invalid value for parameter "coordinates". Expected "N x 3"; '
                                     f'received "{self.coordinates.shape}"')
        if len(np.unique(self.node_ids)) != node_count or len(np.unique(self.element_ids)) != len(self.element_ids):
            raise InvalidConfigError('Invalid value for parameter "ids". Expected "unique ids"; received duplicates')
        if self.connectivity.size and (self.connectivity.min() < 0 or self.connectivity.max() >= node_count):
            raise InvalidConfigError('Invalid value for parameter "connectivity". Expected "existing nodes"; '
                                     f'received "{self.connectivity.min()}..{self.connectivity.max()}"')
        if np.any(self.element_lengths() <= 0):
            bad = self.element_ids[self.element_lengths() <= 0]
            raise InvalidConfigError(f'Invalid value for parameter "elements". Expected "non-zero length"; '
                                     f'received zero-length elements "{bad.tolist()}"')
        missing = set(np.unique(self.element_parts).tolist()) - set(self.parts.keys())
        if missing:
            raise InvalidConfigError(f'Invalid value for parameter "element_parts". Expected "declared parts"; '
                                     f'received "{sorted(missing)}"')
        if np.any(self.areas <= 0):
            raise InvalidConfigError('Invalid value for parameter "areas". Expected "area > 0"; received '
                                     f'"{self.areas.min()}"')
        if self.element_materials.size and self.element_materials.max() >= len(self.materials):
            raise InvalidConfigError('Invalid value for parameter "element_materials". Expected "material index"; '
                                     f'received "{self.element_materials.max()}"')
        for name in ('fixed_dofs', 'initial_velocity', 'external_forces'):
            if getattr(self, name).shape != (node_count, 3):
                raise InvalidConfigError(f'Invalid value for parameter "{name}". Expected "N x 3"; '
                                         f'received "{getattr(self, name).shape}"')
        if not self.masses.sum() > 0 or np.any(self.masses < 0):
            raise InvalidConfigError('Invalid value for parameter "masses". Expected "total mass > 0"; '
                                     f'received "{self.masses.sum()}"')

    @classmethod
    def create(cls, coordinates, connectivity, element_parts, areas, materials, element_materials, parts: dict,
               point_masses=None, fixed_dofs=None, initial_velocity=None, external_forces=None, walls=(),
               node_ids=None, element_ids=None, unit_width: float = 10.0, metadata: dict = None):
        """Builds an assembly and lumps the nodal masses from the element data.

        :param coordinates: reference coordinates, N x 3 (mm).
        :param connectivity: element node indices, E x 2.
        :param element_parts: part id per element.
        :param areas: cross-section area per element (mm^2).
        :param materials: sequence of Material cards.
        :param element_materials: material index per element.
        :param dict parts: part id -> Part.
        :return: the new Assembly.
        """
        coordinates = np.asarray(coordinates, dtype=np.float64)
        connectivity = np.asarray(connectivity, dtype=np.int64).reshape(-1, 2)
        node_count = coordinates.shape[0]
        element_count = connectivity.shape[0]
        element_materials = np.asarray(element_materials, dtype=np.int64).reshape(element_count)
        areas = np.asarray(areas, dtype=np.float64).reshape(element_count)
        point_masses = np.zeros(node_count) if point_masses is None else np.asarray(point_masses, dtype=np.float64)
        densities = np.array([materials[index].rho for index in element_materials])
        masses = lumped_masses(coordinates, connectivity, areas, densities, node_count) + point_masses
        zeros = np.zeros((node_count, 3))
        return cls(
            node_ids=np.arange(1, node_count + 1) if node_ids is None else node_ids,
            coordinates=coordinates,
            element_ids=np.arange(1, element_count + 1) if element_ids is None else element_ids,
            connectivity=connectivity,
            element_parts=element_parts,
            areas=areas,
            element_materials=element_materials,
            materials=tuple(materials),
            parts=dict(parts),
            masses=masses,
            point_masses=point_masses,
            fixed_dofs=np.zeros((node_count, 3), dtype=bool) if fixed_dofs is None else fixed_dofs,
            initial_velocity=zeros if initial_velocity is None else initial_velocity,
            external_forces=zeros if external_forces is None else external_forces,
            walls=tuple(walls),
            unit_width=unit_width,
            metadata={} if metadata is None else dict(metadata),
        )

    #
    # Derived quantities
    #
    @property
    def node_count(self) -> int:
        return self.coordinates.shape[0]

    @property
    def element_count(self) -> int:
        return self.connectivity.shape[0]

    @property
    def nodes(self) -> list:
        """(id, x, y, z) tuples in storage order."""
        return [(int(node_id), *map(float, xyz)) for node_id, xyz in zip(self.node_ids, self.coordinates)]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def structural_mass(self) -> float:
        return float(self.masses.sum() - self.point_masses.sum())

    @property
    def groups(self) -> set:
        return {part.group for part in self.parts.values()}

    @property
    def thicknesses(self) -> np.ndarray:
        return self.areas / self.unit_width

    def element_lengths(self, coordinates: np.ndarray = None) -> np.ndarray:
        coordinates = self.coordinates if coordinates is None else coordinates
        return np.linalg.norm(coordinates[self.connectivity[:, 1]] - coordinates[self.connectivity[:, 0]], axis=1)

    def element_property(self, name: str) -> np.ndarray:
        """Per-element array of a Material attribute."""
        table = np.array([getattr(material, name) for material in self.materials], dtype=np.float64)
        return table[self.element_materials]

    def element_groups(self) -> np.ndarray:
        return np.array([self.parts[int(part_id)].group for part_id in self.element_parts])

    def _first_elements(self) -> np.ndarray:
        first = np.full(self.node_count, self.element_count)
        for column in (0, 1):
            np.minimum.at(first, self.connectivity[:, column], np.arange(self.element_count))
        return first

    def node_parts(self) -> np.ndarray:
        """Part id of each node, inherited from its lowest-index incident element (0 for free nodes)."""
        first = self._first_elements()
        labels = np.zeros(self.node_count, dtype=np.int64)
        has_element = first < self.element_count
        labels[has_element] = self.element_parts[first[has_element]]
        return labels

    def node_thickness(self) -> np.ndarray:
        """Per-node thickness feature, inherited like node_parts()."""
        first = self._first_elements()
        thickness = np.zeros(self.node_count)
        has_element = first < self.element_count
        thickness[has_element] = self.thicknesses[first[has_element]]
        return thickness

    def lumped_structural_masses(self) -> np.ndarray:
        return lumped_masses(self.coordinates, self.connectivity, self.areas, self.element_property('rho'),
                             self.node_count)

    def rear_nodes(self) -> np.ndarray:
        """Indices of the nodes carrying attachment masses."""
        return np.flatnonzero(self.point_masses > 0)

    def replace(self, **changes):
        """Returns a copy with some fields changed; the new assembly is validated again."""
        return replace(self, **changes)

    def equals(self, other) -> bool:
        """Exact (bit-for-bit) comparison of every array, part, material and wall."""
        if not isinstance(other, Assembly):
            return False
        for name in ('node_ids', 'coordinates', 'element_ids', 'connectivity', 'element_parts', 'areas',
                     'element_materials', 'masses', 'point_masses', 'fixed_dofs', 'initial_velocity',
                     'external_forces'):
            mine, theirs = getattr(self, name), getattr(other, name)
            if mine.shape != theirs.shape or mine.tobytes() != theirs.tobytes():
                return False
        return (self.materials == other.materials and self.parts == other.parts
                and list(self.walls) == list(other.walls) and self.unit_width == other.unit_width)

    def topology(self) -> dict:
        """JSON-ready description of the mesh used by case manifests."""
        return {
            'node_ids': self.node_ids.tolist(),
            'element_ids': self.element_ids.tolist(),
            'connectivity': self.node_ids[self.connectivity].tolist(),
            'element_parts': self.element_parts.tolist(),
            'parts': {str(part_id): part.to_dict() for part_id, part in sorted(self.parts.items())},
            'materials': [material.to_dict() for material in self.materials],
            'unit_width_mm': self.unit_width,
        }
