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

"""Node-to-rigid-wall penalty contact with a regularised Coulomb friction cap."""

import numpy as np

from crashbench.assembly import Assembly, RigidWall


def element_axial_stiffness(assembly: Assembly) -> np.ndarray:
    """E * A / L0 of every element (kN/mm)."""
    return assembly.element_property('E') * assembly.areas / assembly.element_lengths()


def nodal_stiffness(assembly: Assembly, reduce: str = 'sum') -> np.ndarray:
    """Per-node sum (or max) of the axial stiffness of the incident elements."""
    stiffness = element_axial_stiffness(assembly)
    result = np.zeros(assembly.node_count)
    operation = np.add if reduce == 'sum' else np.maximum
    for column in (0, 1):
        operation.at(result, assembly.connectivity[:, column], stiffness)
    return result


def penalty_stiffness(assembly: Assembly, wall: RigidWall, scale: float = 1.0) -> np.ndarray:
    """Penalty stiffness per node for one wall.

    An explicit wall value is used as is. Otherwise each node gets the largest E * A / L0 among its incident elements
    times ``scale``; free nodes without elements fall back to the assembly-wide maximum."""
    if wall.penalty is not None:
        return np.full(assembly.node_count, wall.penalty)
    stiffness = nodal_stiffness(assembly, reduce='max')
    if np.any(stiffness == 0):
        stiffness[stiffness == 0] = stiffness.max() if stiffness.max() > 0 else 1.0
    return scale * stiffness


def contact_forces(assembly: Assembly, state, walls=None) -> (np.ndarray, np.ndarray):
    """Penalty normal forces and capped friction forces from every wall at the current state.

    The state provides ``positions()``, the displacement increment of the last step (``increment``), the per-wall
    penalty stiffness (``contact_stiffness``) and the tangential forces of the previous evaluation (``friction``),
    which are updated in place.

    :return: forces acting on the nodes (N x 3, kN) and the reaction on each wall (W x 3, kN), the latter being
             minus the sum of the nodal contact forces of that wall.
    """
    walls = assembly.walls if walls is None else walls
    positions = state.positions()
    forces = np.zeros((assembly.node_count, 3))
    reactions = np.zeros((len(walls), 3))
    for index, wall in enumerate(walls):
        gap, normals = wall.penetration(positions)
        stiffness = state.contact_stiffness[index]
        touching = gap > 0
        normal_force = np.where(touching, stiffness * gap, 0.0)

        # Tangential trial force from the previous one, rotated into the current tangent plane
        previous = state.friction[index]
        previous = previous - np.sum(previous * normals, axis=1)[:, None] * normals
        slip = state.increment - np.sum(state.increment * normals, axis=1)[:, None] * normals
        trial = previous - stiffness[:, None] * slip
        magnitude = np.linalg.norm(trial, axis=1)
        cap = wall.friction * normal_force
        factor = np.ones_like(magnitude)
        sliding = magnitude > cap
        factor[sliding] = np.divide(cap[sliding], magnitude[sliding], out=np.zeros(np.count_nonzero(sliding)),
                                    where=magnitude[sliding] > 0)
        tangential = trial * factor[:, None]
        tangential[~touching] = 0.0
        state.friction[index] = tangential

        wall_forces = normal_force[:, None] * normals + tangential
        wall_forces[assembly.fixed_dofs] = 0.0
        forces += wall_forces
        reactions[index] = -wall_forces.sum(axis=0)
    return forces, reactions
