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

"""Samplers, feasibility rules, anchors and campaign plans."""

from dataclasses import replace

import numpy as np
import pytest

from crashbench.crashbench_classes import BumperConfig, CampaignKind, InfeasibleAnchorError, InvalidConfigError, Origin
from crashbench.assembly import DesignSpace, DesignVector
from crashbench.doe import planner as planner_module
from crashbench.doe import (CampaignPlan, CampaignPlanner, anchor_set, feasible, lhs_unit, maximin_index,
                            place_pole, plan_campaign, sobol_sample)


def test_lhs_one_point_per_stratum():
    points = lhs_unit(3, 40, 11)
    assert points.shape == (40, 3)
    for column in points.T:
        assert sorted(np.floor(column * 40).astype(int).tolist()) == list(range(40))
        assert np.allclose(column * 40 - np.floor(column * 40), 0.5)


def test_sobol_sample_is_seeded_and_on_grid():
    space = DesignSpace.bumper(1)
    first = sobol_sample(space, 16, 5)
    assert first == sobol_sample(space, 16, 5)
    assert first != sobol_sample(space, 16, 6)
    assert all(space.contains(design) and space.on_grid(design) for design in first)
    with pytest.raises(InvalidConfigError):
        sobol_sample(space, 0, 5)


def test_maximin_matches_brute_force():
    rng = np.random.default_rng(3)
    accumulated, candidates = rng.random((12, 4)), rng.random((50, 4))
    best, chosen = -1.0, None
    for index, candidate in enumerate(candidates):
        distance = min(np.linalg.norm(candidate - point) for point in accumulated)
        if distance > best:
            best, chosen = distance, index
    assert maximin_index(accumulated, candidates) == chosen
    with pytest.raises(InvalidConfigError):
        maximin_index(np.empty((0, 4)), candidates)


def test_feasibility_rules():
    good = DesignVector(v=10.0, t_cb=1.5, t_bb=1.5, sigma_y_cb=0.35, sigma_y_bb=0.675, d_pole=200.0, y_pole=0.0)
    assert feasible(good) == (True, [])
    passed, violations = feasible(DesignVector(v=10.0, t_cb=1.5, t_bb=1.5, sigma_y_cb=0.35, sigma_y_bb=0.3,
                                               d_pole=200.0, y_pole=0.0))
    assert not passed
    assert len(violations) == 1 and 'grade ordering' in violations[0]
    passed, violations = feasible(DesignVector(v=10.0, t_cb=3.0, t_bb=3.0, sigma_y_cb=0.6, sigma_y_bb=1.0,
                                               d_pole=200.0, y_pole=0.0))
    assert not passed and len(violations) == 2
    assert feasible(DesignVector(v=56.0, s_front=1.0, s_rail=1.0)) == (True, [])


def test_pole_placement():
    assert place_pole(200.0, -40.0, 10.0) == -150.0
    with pytest.raises(InvalidConfigError):
        place_pole(0.0, -40.0, 10.0)
    with pytest.raises(InvalidConfigError):
        place_pole(200.0, -40.0, -1.0)


def test_bumper_anchors_are_feasible_and_seed_free():
    space = DesignSpace.bumper(1)
    anchors = anchor_set(space, 'bumper')
    assert len(anchors) == 8
    assert all(feasible(anchor.design)[0] and space.on_grid(anchor.design) for anchor in anchors)
    lightest = next(anchor for anchor in anchors if anchor.label == 'lightest-gauge')
    assert lightest.projected
    assert lightest.design.t_cb == 1.0 and lightest.design.t_bb == 1.0
    assert anchors == anchor_set(space, CampaignKind.BUMPER)


def test_bumper_plan():
    planner = CampaignPlanner('bumper', config=BumperConfig())
    plan = planner.plan(20, seed=7)
    assert len(plan) == 20
    assert plan.count(Origin.ANCHOR) == 8 and plan.count(Origin.SOBOL) == 12
    assert plan.case_ids[0] == 'sim_00001' and plan.case_ids[-1] == 'sim_00020'
    assert all(planner.accepts(design) for design in plan.designs)
    assert len({tuple(design.as_array(plan.space.names)) for design in plan.designs}) == 20
    assert plan.to_dict() == planner.plan(20, seed=7).to_dict()
    assert plan.designs[8:] != planner.plan(20, seed=8).designs[8:]
    with pytest.raises(InvalidConfigError):
        planner.plan(5, seed=7)


def test_bumper_plan_continuation():
    plan = plan_campaign(DesignSpace.bumper(1), 'bumper', 10, seed=3, continuation=[2])
    assert len(plan) == 12
    assert [entry.origin for entry in plan.entries[-2:]] == [Origin.MAXIMIN, Origin.MAXIMIN]
    assert len({tuple(design.as_array(plan.space.names)) for design in plan.designs}) == 12


def test_refined_phase_follows_the_plan_space():
    narrow = DesignSpace([replace(variable, minimum=4.0, maximum=12.0, step=1.0) if variable.name == 'v' else variable
                          for variable in DesignSpace.bumper(1).variables], constraint='bumper', name='narrow')
    plan = plan_campaign(narrow, 'bumper', [8, 0, 6], seed=5)
    refined = [entry.design for entry in plan.entries if entry.phase == 3]
    assert len(refined) == 6
    fine = narrow.refined()
    assert fine.variable('v').step == 0.5 and fine.variable('d_pole').step == 5.0
    assert all(4.0 <= design.v <= 12.0 and fine.contains(design) and fine.on_grid(design) for design in refined)


def test_anchors_go_through_the_geometric_prescreen(monkeypatch):
    original = planner_module.prescreen_geometry

    def reject_far_offsets(assembly, wall):
        return wall.center[1] < 800.0 and original(assembly, wall)

    monkeypatch.setattr(planner_module, 'prescreen_geometry', reject_far_offsets)
    with pytest.raises(InfeasibleAnchorError):
        CampaignPlanner('bumper').plan(20, seed=7)


def test_vehicle_plan_of_five_hundred():
    plan = plan_campaign(DesignSpace.vehicle(), 'vehicle', 500, seed=42)
    assert len(plan) == 500
    assert plan.count(Origin.ANCHOR) == 15 and plan.count(Origin.LHS) == 485
    assert [entry.phase for entry in plan.entries].count(1) == 75
    assert all(plan.space.contains(design) for design in plan.designs)
    assert plan.entries[0].label == 'baseline'
    assert plan.entries[0].design == DesignVector(v=56.0, s_front=1.0, s_rail=1.0)


def test_plan_json_round_trip(tmp_path):
    plan = plan_campaign(DesignSpace.vehicle(), 'vehicle', 20, seed=1)
    path = tmp_path / 'plan.json'
    plan.to_json(path)
    loaded = CampaignPlan.from_json(path)
    assert loaded.to_dict() == plan.to_dict()
    assert loaded.kind == CampaignKind.VEHICLE
