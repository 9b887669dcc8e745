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

"""Shared fixtures: small assemblies, short solver settings and a tiny persisted campaign."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from crashbench.crashbench_classes import BumperConfig, CampaignKind, Origin, SolverConfig  # noqa: E402
from crashbench.assembly import Assembly, DesignSpace, DesignVector, Material, Part  # noqa: E402
from crashbench.doe import CampaignPlan  # noqa: E402


def straight_bar(elements: int = 10, length: float = 100.0, x0: float = 0.0, velocity: float = 0.0,
                 area: float = 20.0, walls=(), end_force: float = 0.0, material: Material = None) -> Assembly:
    """Uniform bar along X, restrained in Y and Z, optionally pushed at its first node."""
    coordinates = np.zeros((elements + 1, 3))
    coordinates[:, 0] = x0 + np.linspace(0.0, length, elements + 1)
    connectivity = np.column_stack([np.arange(elements), np.arange(1, elements + 1)])
    fixed = np.zeros((elements + 1, 3), dtype=bool)
    fixed[:, 1:] = True
    initial_velocity = np.zeros((elements + 1, 3))
    initial_velocity[:, 0] = velocity
    forces = np.zeros((elements + 1, 3))
    forces[0, 0] = end_force
    return Assembly.create(coordinates, connectivity, np.ones(elements, dtype=np.int64), np.full(elements, area),
                           [Material() if material is None else material], np.zeros(elements, dtype=np.int64),
                           {1: Part(1, 'bar', 'bb', 'bar', area / 10.0)}, fixed_dofs=fixed,
                           initial_velocity=initial_velocity, external_forces=forces, walls=walls)


@pytest.fixture
def small_config() -> BumperConfig:
    config = BumperConfig()
    config.CRASH_BOX_NODES = 3
    return config


@pytest.fixture
def short_solver() -> SolverConfig:
    config = SolverConfig()
    config.TERMINATION_TIME_MS = 2.0
    config.ANIMATION_INTERVAL_MS = 0.5
    return config


def bumper_design(v: float = 10.0, y_pole: float = 0.0) -> DesignVector:
    return DesignVector(v=v, t_cb=1.5, t_bb=1.5, sigma_y_cb=0.35, sigma_y_bb=0.675, d_pole=200.0, y_pole=y_pole)


def small_plan(count: int = 3) -> CampaignPlan:
    plan = CampaignPlan(CampaignKind.BUMPER, DesignSpace.bumper(1), 42)
    for index in range(count):
        plan.add(bumper_design(6.0 + index, 25.0 * index), Origin.SOBOL, 1)
    return plan


@pytest.fixture(scope='session')
def campaign_root(tmp_path_factory):
    """A persisted campaign of eight passing bumper cases."""
    from crashbench.datastore import CaseBuilder, run_campaign

    config = BumperConfig()
    config.CRASH_BOX_NODES = 3
    solver = SolverConfig()
    solver.TERMINATION_TIME_MS = 2.0
    solver.ANIMATION_INTERVAL_MS = 0.5
    root = tmp_path_factory.mktemp('campaign')
    report = run_campaign(small_plan(8), CaseBuilder('bumper', config), solver, root)
    assert len(report.passed) == 8
    return root
