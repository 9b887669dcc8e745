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

"""Miniature explicit crash solver: bar plasticity, rigid-wall contact, erosion, timestep control and mass scaling."""

from crashbench.solver.results import FieldTrajectory, TerminationReport
from crashbench.solver.contact import contact_forces, element_axial_stiffness, nodal_stiffness, penalty_stiffness
from crashbench.solver.explicit import (SolverState, initial_state, internal_forces, critical_timestep,
                                        apply_mass_scaling, run_explicit)

__all__ = ['FieldTrajectory', 'TerminationReport', 'contact_forces', 'element_axial_stiffness', 'nodal_stiffness',
           'penalty_stiffness', 'SolverState', 'initial_state', 'internal_forces', 'critical_timestep',
           'apply_mass_scaling', 'run_explicit']
