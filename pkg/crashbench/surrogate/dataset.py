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

"""Learning samples built from persisted case bundles."""

import json
from pathlib import Path

import numpy as np

from crashbench.crashbench_classes import ShapeMismatchError
from crashbench.assembly import DesignSpace
from crashbench.datastore import read_bundle
from crashbench.surrogate.crashsolver import LearningSample, component_map


def load_component_table(path) -> dict:
    """Reads a ``{part_id: component_name}`` JSON table."""
    with open(Path(path), encoding='utf-8') as json_file:
        return {int(part_id): name for part_id, name in json.load(json_file).items()}


def design_space_for(design: dict) -> DesignSpace:
    return DesignSpace.vehicle() if 's_front' in design else DesignSpace.bumper(1)


def frame_indices(frame_count: int, frames: int) -> np.ndarray:
    """Output frames evenly spread over 1..F-1, the last frame always included."""
    if frame_count - 1 < frames:
        raise ShapeMismatchError('sample', f'{frames} output frames requested from a trajectory of {frame_count}')
    return np.round(np.linspace(0, frame_count - 1, frames + 1)[1:]).astype(np.int64)


def node_part_ids(node_ids, connectivity, element_parts) -> np.ndarray:
    """Part of each node's lowest-index incident element."""
    index = {int(node_id): position for position, node_id in enumerate(node_ids)}
    parts = np.full(len(node_ids), -1, dtype=np.int64)
    for (first, second), part_id in zip(connectivity, element_parts):
        for node in (index[int(first)], index[int(second)]):
            if parts[node] < 0:
                parts[node] = int(part_id)
    return parts


def sample_from_bundle(bundle, frames: int, table: dict = None, components: int = 5,
                       part_rows: int = 8) -> LearningSample:
    """Builds the LearningSample of a passing case bundle.

    :param bundle: a CaseBundle whose manifest carries the mesh topology.
    :param int frames: number of output frames n.
    :param dict table: part id to component name; defaults to the component labels stored in the topology.
    :param int components: number of component labels C.
    :param int part_rows: rows of the part embedding table; part ids map to ``part_id mod part_rows``.
    """
    topology = bundle.metadata['topology']
    trajectory = bundle.trajectory
    node_ids = topology['node_ids']
    index = {int(node_id): position for position, node_id in enumerate(node_ids)}
    edges = np.array([[index[int(first)], index[int(second)]] for first, second in topology['connectivity']],
                     dtype=np.int64)
    parts = node_part_ids(node_ids, topology['connectivity'], topology['element_parts'])
    part_table = {int(part_id): values for part_id, values in topology['parts'].items()}
    if table is None:
        table = {part_id: values['component'] for part_id, values in part_table.items()}
    thickness = np.array([part_table[int(part_id)]['thickness'] for part_id in parts])

    design = bundle.design.to_dict()
    space = design_space_for(design)
    selected = frame_indices(trajectory.frame_count, frames)
    return LearningSample(
        reference=trajectory.reference,
        edges=edges,
        parts=parts % part_rows,
        components=component_map(parts, table, components),
        thickness=thickness,
        design=space.normalize([bundle.design])[0],
        target=trajectory.displacements[selected],
        times=trajectory.times[selected],
        case_id=bundle.case_id,
    )


def load_samples(root, case_ids, frames: int, table: dict = None, components: int = 5,
                 part_rows: int = 8) -> list:
    root = Path(root)
    return [sample_from_bundle(read_bundle(root / case_id), frames, table, components, part_rows)
            for case_id in case_ids]
