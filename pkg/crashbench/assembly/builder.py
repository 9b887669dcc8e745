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

"""Construction of the bar-element bumper assembly and gauge editing.

The bumper beam is a two-chord truss spanning the car width. Two crash boxes, also braced two-chord trusses, run
rearwards from beam stations mirrored about y = 0. Optional rails continue the crash boxes. Members meet at shared
nodes, so no tied constraints are needed."""

import logging

import numpy as np

from crashbench.crashbench_classes import BumperConfig, InvalidConfigError, ScaleOutOfBoundsError
from crashbench.crashbench_classes import UnknownGroupError
from crashbench.assembly.materials import Material
from crashbench.assembly.types import Assembly, Part, ThicknessEdit, lumped_masses


logger = logging.getLogger(__name__)

BEAM_PART = 1
CRASH_BOX_PARTS = (2, 3)    # left (y < 0), right
RAIL_PARTS = (4, 5)

# Material indices inside Assembly.materials
CRASH_BOX_GRADE, BEAM_GRADE, RAIL_GRADE = 0, 1, 2


class _TrussWriter:
    """Accumulates nodes and bar elements, remembering which member created each node."""

    def __init__(self):
        self.coordinates = []
        self.node_members = []
        self.elements = []          # (node a, node b, part id)

    def add_node(self, x: float, y: float, member: str) -> int:
        self.coordinates.append((float(x), float(y), 0.0))
        self.node_members.append(member)
        return len(self.coordinates) - 1

    def add_bar(self, node_a: int, node_b: int, part_id: int):
        self.elements.append((node_a, node_b, part_id))

    def add_braced_member(self, first: list, second: list, part_id: int, braced_start: bool):
        """Chords, transverse bars and alternating diagonals between two chords of equal station count."""
        stations = len(first)
        for k in range(stations - 1):
            self.add_bar(first[k], first[k + 1], part_id)
            self.add_bar(second[k], second[k + 1], part_id)
        for k in range(0 if braced_start else 1, stations):
            self.add_bar(first[k], second[k], part_id)
        for k in range(stations - 1):
            if k % 2 == 0:
                self.add_bar(first[k], second[k + 1], part_id)
            else:
                self.add_bar(second[k], first[k + 1], part_id)


def _check_geometry(config: BumperConfig):
    for key in ('BEAM_LENGTH_MM', 'BEAM_DEPTH_MM', 'CRASH_BOX_LENGTH_MM', 'T_CB_MM', 'T_BB_MM', 'UNIT_WIDTH_MM'):
        if not config[key] > 0:
            raise InvalidConfigError(f'Invalid value for parameter "{key}". Expected "{key} > 0"; '
                                     f'received "{config[key]}"')
    if config.RAIL_LENGTH_MM > 0 and not config.T_RAIL_MM > 0:
        raise InvalidConfigError(f'Invalid value for parameter "T_RAIL_MM". Expected "T_RAIL_MM > 0"; '
                                 f'received "{config.T_RAIL_MM}"')
    config.validate()


def _beam_station_offset(config: BumperConfig, y: np.ndarray) -> np.ndarray:
    """Set-back of the beam at lateral position y; zero at mid-span, BEAM_SWEEP_MM at the tips."""
    return config.BEAM_SWEEP_MM * (2.0 * y / config.BEAM_LENGTH_MM) ** 2


def build_bumper_assembly(config: BumperConfig, walls=()) -> Assembly:
    """Builds the bumper beam and crash-box assembly described by a BumperConfig.

    :param BumperConfig config: geometry, gauges, grades and loading.
    :param walls: rigid walls to attach (for instance the pole of a design).
    :return: an immutable Assembly with rear nodes constrained, rear attachment masses lumped on them and the
             initial velocity (-v, 0, 0) on every node.
    """
    _check_geometry(config)
    writer = _TrussWriter()

    # Beam: front chord then rear chord, one node per station
    stations = np.linspace(-0.5 * config.BEAM_LENGTH_MM, 0.5 * config.BEAM_LENGTH_MM, config.BEAM_NODES)
    setback = _beam_station_offset(config, stations)
    front = [writer.add_node(config.X_BUMPER_MM + dx, y, 'beam') for y, dx in zip(stations, setback)]
    rear = [writer.add_node(config.X_BUMPER_MM + config.BEAM_DEPTH_MM + dx, y, 'beam')
            for y, dx in zip(stations, setback)]
    for j in range(config.BEAM_NODES - 1):
        writer.add_bar(front[j], front[j + 1], BEAM_PART)
        writer.add_bar(rear[j], rear[j + 1], BEAM_PART)
    for j in range(config.BEAM_NODES):
        writer.add_bar(front[j], rear[j], BEAM_PART)
    # Diagonals mirrored about y = 0
    last_bay = config.BEAM_NODES - 2
    for j in range(config.BEAM_NODES - 1):
        if 0.5 * (stations[j] + stations[j + 1]) <= 0:
            if j % 2 == 0:
                writer.add_bar(front[j], rear[j + 1], BEAM_PART)
            else:
                writer.add_bar(rear[j], front[j + 1], BEAM_PART)
        else:
            if (last_bay - j) % 2 == 0:
                writer.add_bar(front[j + 1], rear[j], BEAM_PART)
            else:
                writer.add_bar(rear[j + 1], front[j], BEAM_PART)

    # Crash boxes (and rails) hang from rear-chord stations snapped to the box chord lines
    rear_nodes = []
    for side, (box_part, rail_part) in zip((-1.0, 1.0), zip(CRASH_BOX_PARTS, RAIL_PARTS)):
        targets = side * (config.CRASH_BOX_OFFSET_MM + np.array([-0.5, 0.5]) * config.CRASH_BOX_WIDTH_MM)
        inner_index, outer_index = (int(np.argmin(np.abs(stations - target))) for target in targets)
        if inner_index == outer_index:
            raise InvalidConfigError('Invalid value for parameter "CRASH_BOX_WIDTH_MM". Expected "box chords on '
                                     f'distinct beam stations"; received "{config.CRASH_BOX_WIDTH_MM}"')
        chords = []
        for index in (inner_index, outer_index):
            x0 = writer.coordinates[rear[index]][0]
            xs = np.linspace(x0, x0 + config.CRASH_BOX_LENGTH_MM, config.CRASH_BOX_NODES)
            chords.append([rear[index]] + [writer.add_node(x, stations[index], 'crash_box') for x in xs[1:]])
        writer.add_braced_member(chords[0], chords[1], box_part, braced_start=abs(inner_index - outer_index) != 1)
        ends = [chord[-1] for chord in chords]

        if config.RAIL_LENGTH_MM > 0:
            rails = []
            for chord, index in zip(chords, (inner_index, outer_index)):
                x0 = writer.coordinates[chord[-1]][0]
                xs = np.linspace(x0, x0 + config.RAIL_LENGTH_MM, config.RAIL_NODES)
                rails.append([chord[-1]] + [writer.add_node(x, stations[index], 'rail') for x in xs[1:]])
            writer.add_braced_member(rails[0], rails[1], rail_part, braced_start=False)
            ends = [rail[-1] for rail in rails]
        rear_nodes.extend(ends)

    return _finish(config, writer, rear_nodes, walls)


def _finish(config: BumperConfig, writer: _TrussWriter, rear_nodes: list, walls) -> Assembly:
    coordinates = np.array(writer.coordinates)
    elements = np.array(writer.elements, dtype=np.int64)
    node_count = coordinates.shape[0]

    # Storage order equals id order; optionally the crash boxes are numbered before the rest
    if config.NUMBER_CRASH_BOXES_FIRST:
        members = np.array(writer.node_members)
        node_order = np.concatenate([np.flatnonzero(members == 'crash_box'), np.flatnonzero(members != 'crash_box')])
        box_elements = np.isin(elements[:, 2], CRASH_BOX_PARTS)
        element_order = np.concatenate([np.flatnonzero(box_elements), np.flatnonzero(~box_elements)])
    else:
        node_order = np.arange(node_count)
        element_order = np.arange(elements.shape[0])
    new_index = np.empty(node_count, dtype=np.int64)
    new_index[node_order] = np.arange(node_count)
    coordinates = coordinates[node_order]
    elements = elements[element_order]
    connectivity = new_index[elements[:, :2]]
    element_parts = elements[:, 2]
    rear = new_index[np.array(rear_nodes, dtype=np.int64)]

    materials = (
        Material.from_yield(config.SIGMA_Y_CB_GPA, config.EPS_P_FAIL, config.YOUNGS_MODULUS_GPA,
                            config.POISSON_RATIO, config.DENSITY, 'DP600'),
        Material.from_yield(config.SIGMA_Y_BB_GPA, config.EPS_P_FAIL, config.YOUNGS_MODULUS_GPA,
                            config.POISSON_RATIO, config.DENSITY, 'DP1000'),
        Material.from_yield(config.SIGMA_Y_RAIL_GPA, config.EPS_P_FAIL, config.YOUNGS_MODULUS_GPA,
                            config.POISSON_RATIO, config.DENSITY, 'DP600-rail'),
    )
    parts = {
        BEAM_PART: Part(BEAM_PART, 'bumper_beam', 'bb', 'bumper_beam', config.T_BB_MM),
        CRASH_BOX_PARTS[0]: Part(CRASH_BOX_PARTS[0], 'crash_box_left', 'cb', 'crash_box', config.T_CB_MM),
        CRASH_BOX_PARTS[1]: Part(CRASH_BOX_PARTS[1], 'crash_box_right', 'cb', 'crash_box', config.T_CB_MM),
    }
    if config.RAIL_LENGTH_MM > 0:
        parts[RAIL_PARTS[0]] = Part(RAIL_PARTS[0], 'rail_left', 'rail', 'rail', config.T_RAIL_MM)
        parts[RAIL_PARTS[1]] = Part(RAIL_PARTS[1], 'rail_right', 'rail', 'rail', config.T_RAIL_MM)
    grade = {BEAM_PART: BEAM_GRADE, CRASH_BOX_PARTS[0]: CRASH_BOX_GRADE, CRASH_BOX_PARTS[1]: CRASH_BOX_GRADE,
             RAIL_PARTS[0]: RAIL_GRADE, RAIL_PARTS[1]: RAIL_GRADE}
    element_materials = np.array([grade[int(part_id)] for part_id in element_parts], dtype=np.int64)
    areas = np.array([parts[int(part_id)].thickness for part_id in element_parts]) * config.UNIT_WIDTH_MM

    point_masses = np.zeros(node_count)
    point_masses[rear] = config.REAR_MASS_T / len(rear)
    fixed_dofs = np.zeros((node_count, 3), dtype=bool)
    fixed_dofs[:, 2] = True
    fixed_dofs[rear, 1] = True
    initial_velocity = np.zeros((node_count, 3))
    initial_velocity[:, 0] = -config.VELOCITY_MM_MS

    assembly = Assembly.create(
        coordinates=coordinates, connectivity=connectivity, element_parts=element_parts, areas=areas,
        materials=materials, element_materials=element_materials, parts=parts, point_masses=point_masses,
        fixed_dofs=fixed_dofs, initial_velocity=initial_velocity, walls=walls, unit_width=config.UNIT_WIDTH_MM,
        metadata={'x_bumper_mm': config.X_BUMPER_MM},
    )
    logger.debug('Built assembly with %d nodes, %d elements, total mass %.6g',
                 assembly.node_count, assembly.element_count, assembly.total_mass)
    return assembly


def apply_thickness_edits(assembly: Assembly, edits) -> Assembly:
    """Scales the areas (and the part gauges) of the edited thickness groups.

    :param Assembly assembly: the assembly to edit; it is not modified.
    :param edits: iterable of ThicknessEdit.
    :return: a new Assembly whose lumped masses follow the new areas.
    :raise UnknownGroupError: when an edit names a group without elements.
    :raise ScaleOutOfBoundsError: when a scale lies outside its bounds.
    """
    edits = list(edits)
    groups = assembly.groups
    for edit in edits:
        if not isinstance(edit, ThicknessEdit):
            raise InvalidConfigError(f'Invalid value for parameter "edits". Expected "ThicknessEdit"; '
                                     f'received "{type(edit).__name__}"')
        if edit.group not in groups:
            raise UnknownGroupError(f'Invalid value for parameter "group". Expected one of "{sorted(groups)}"; '
                                    f'received "{edit.group}"')
        low, high = edit.scale_bounds
        if not low - 1e-12 <= edit.scale <= high + 1e-12:
            raise ScaleOutOfBoundsError(f'Invalid value for parameter "scale". Expected "{low} <= s <= {high}"; '
                                        f'received "{edit.scale}"')

    areas = np.array(assembly.areas)
    parts = dict(assembly.parts)
    element_groups = assembly.element_groups()
    for edit in edits:
        areas[element_groups == edit.group] *= edit.scale
        for part_id, part in parts.items():
            if part.group == edit.group:
                parts[part_id] = Part(part.part_id, part.name, part.group, part.component, part.thickness * edit.scale)
    masses = lumped_masses(assembly.coordinates, assembly.connectivity, areas, assembly.element_property('rho'),
                           assembly.node_count) + assembly.point_masses
    return assembly.replace(areas=areas, parts=parts, masses=masses)
