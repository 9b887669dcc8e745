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

"""Domain types shared by every other package: materials, walls, design vectors and the bar-element assembly."""

from crashbench.assembly.materials import Material, jc_flow_stress, flow_stress_slope
from crashbench.assembly.walls import RigidWall
from crashbench.assembly.design import DesignVector, DesignVariable, DesignSpace, KMH_PER_MM_MS
from crashbench.assembly.types import Assembly, Part, ThicknessEdit, lumped_masses
from crashbench.assembly.builder import build_bumper_assembly, apply_thickness_edits

__all__ = ['Material', 'jc_flow_stress', 'flow_stress_slope', 'RigidWall', 'DesignVector', 'DesignVariable',
           'DesignSpace', 'KMH_PER_MM_MS', 'Assembly', 'Part', 'ThicknessEdit', 'lumped_masses',
           'build_bumper_assembly', 'apply_thickness_edits']
