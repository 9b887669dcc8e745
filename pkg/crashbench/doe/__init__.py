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

"""Campaign design generation: samplers, feasibility rules, anchors, pre-screening and maximin continuation."""

from crashbench.doe.sampling import (sobol_sample, lhs_sample, lhs_unit, maximin_next, maximin_index, feasible,
                                     place_pole, make_pole, prescreen_geometry)
from crashbench.doe.anchors import Anchor, anchors, anchor_set, project_to_feasible
from crashbench.doe.planner import CampaignPlan, CampaignPlanner, PlanEntry, plan_campaign

__all__ = ['sobol_sample', 'lhs_sample', 'lhs_unit', 'maximin_next', 'maximin_index', 'feasible', 'place_pole',
           'make_pole', 'prescreen_geometry', 'Anchor', 'anchors', 'anchor_set', 'project_to_feasible',
           'CampaignPlan', 'CampaignPlanner', 'PlanEntry', 'plan_campaign']
