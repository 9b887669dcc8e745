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

"""Materials, walls, design spaces and the bar-element bumper assembly."""

import numpy as np
import pytest

from crashbench.crashbench_classes import (BumperConfig, InvalidConfigError, ScaleOutOfBoundsError,
                                           UnknownGroupError)
from crashbench.assembly import (DesignSpace, DesignVariable, Material, RigidWall, ThicknessEdit,
                                 apply_thickness_edits, build_bumper_assembly, jc_flow_stress, lumped_masses)


def test_flow_stress_examples():
    """Hardening term vanishes at zero strain and doubles A at unit strain."""
    card = Material(A=0.35, B=0.35, n=0.35)
    assert jc_flow_stress(card, 0.0) == pytest.approx(0.35)
    assert jc_flow_stress(card, 1.0) == pytest.approx(0.70)
    stiff = Material(A=0.6, B=0.6, n=0.6)
    assert jc_flow_stress(stiff, 0.25) == pytest.approx(0.6 * (1.0 + 0.25 ** 0.6), rel=1e-12)


def test_flow_stress_monotone_and_rejects_negative_strain():
    card = Material.from_yield(0.675)
    stresses = jc_flow_stress(card, np.linspace(0.0, 2.0, 100))
    assert np.all(np.diff(stresses) >= 0)
    with pytest.raises(InvalidConfigError):
        jc_flow_stress(card, -0.01)


def test_material_from_yield_rule():
    card = Material.from_yield(0.35, eps_p_fail=0.05)
    assert card.B == card.A == 0.35
    assert card.n == pytest.approx(0.35)
    assert card.wave_speed == pytest.approx(np.sqrt(210.0 / 7.85e-6))
    with pytest.raises(InvalidConfigError):
        Material(nu=0.5)


def test_rigid_wall_dispatch_and_checks():
    plane = RigidWall('plane', normal=(1, 0, 0), offset=-50.0)
    pole = RigidWall('cylinder', center=(-150.0, 0.0, 0.0), radius=100.0)
    assert plane.penetration(np.array([[-50.1, 0.0, 0.0]]))[0][0] == pytest.approx(0.1)
    assert pole.clearance(np.array([[-40.0, 0.0, 0.0]])) == pytest.approx(10.0)
    assert RigidWall.from_dict(pole.to_dict()) == pole
    with pytest.raises(InvalidConfigError):
        RigidWall('cylinder', radius=0.0)
    with pytest.raises(InvalidConfigError):
        RigidWall('plane', normal=(2, 0, 0))
    with pytest.raises(InvalidConfigError):
        RigidWall('plane', friction=-0.1)


def test_design_variable_grid_rules():
    with pytest.raises(InvalidConfigError):
        DesignVariable('v', 2.0, 15.0, 0.3)
    with pytest.raises(InvalidConfigError):
        DesignVariable('v', 15.0, 2.0, 0.5)
    speed = DesignVariable('v', 2.0, 15.0, 0.5)
    assert speed.grid_points == 27
    assert speed.snap(2.25) == 2.5
    assert speed.on_grid(7.5) and not speed.on_grid(7.6)


def test_design_space_presets_round_trip(tmp_path):
    space = DesignSpace.bumper(3)
    assert space.variable('v').step == 0.25 and space.variable('d_pole').step == 5.0
    path = tmp_path / 'space.json'
    space.to_json(path)
    assert DesignSpace.from_json(path) == space
    vehicle = DesignSpace.vehicle()
    design = vehicle.make([54.0, 1.0, 1.0])
    assert vehicle.velocity_mm_ms(design) == pytest.approx(15.0)


def test_bumper_assembly_construction_rules():
    """Areas follow thickness x unit width and every node starts at (-v, 0, 0)."""
    config = BumperConfig()
    config.T_CB_MM = 1.0
    config.T_BB_MM = 1.0
    config.VELOCITY_MM_MS = 10.0
    assembly = build_bumper_assembly(config)
    assert np.allclose(assembly.areas, 1.0 * config.UNIT_WIDTH_MM)
    assert np.all(assembly.initial_velocity == np.array([-10.0, 0.0, 0.0]))
    assert assembly.groups == {'bb', 'cb'}
    assert len(assembly.rear_nodes()) == 4
    assert np.all(assembly.fixed_dofs[:, 2])
    assert np.all(assembly.fixed_dofs[assembly.rear_nodes(), 1])
    assert np.array_equal(assembly.node_ids, np.arange(1, assembly.node_count + 1))


def test_bumper_assembly_rejects_bad_geometry():
    config = BumperConfig()
    config.T_BB_MM = 0.0
    with pytest.raises(InvalidConfigError):
        build_bumper_assembly(config)
    config = BumperConfig()
    config.BEAM_NODES = 1
    with pytest.raises(InvalidConfigError):
        build_bumper_assembly(config)


def test_numbering_does_not_change_geometry():
    """Renumbering the crash boxes first gives the same geometry after sorting."""
    first = build_bumper_assembly(BumperConfig())
    config = BumperConfig()
    config.NUMBER_CRASH_BOXES_FIRST = True
    second = build_bumper_assembly(config)

    def key(assembly):
        return np.array(sorted(map(tuple, np.round(assembly.coordinates, 9))))

    assert np.array_equal(key(first), key(second))
    assert first.total_mass == pytest.approx(second.total_mass, rel=1e-12)


def test_lumped_masses_consistent():
    assembly = build_bumper_assembly(BumperConfig())
    lengths = assembly.element_lengths()
    structural = np.sum(assembly.element_property('rho') * assembly.areas * lengths)
    assert assembly.structural_mass == pytest.approx(structural, rel=1e-12)
    assert assembly.total_mass == pytest.approx(assembly.masses.sum(), rel=1e-12)
    recomputed = lumped_masses(assembly.coordinates, assembly.connectivity, assembly.areas,
                               assembly.element_property('rho'), assembly.node_count)
    assert np.allclose(recomputed + assembly.point_masses, assembly.masses, rtol=1e-12)


def test_thickness_edits():
    config = BumperConfig()
    config.RAIL_LENGTH_MM = 300.0
    config.T_BB_MM = 2.0
    assembly = build_bumper_assembly(config)
    edited = apply_thickness_edits(assembly, [ThicknessEdit('bb', 1.1, 2.0)])
    beam = assembly.element_groups() == 'bb'
    assert np.allclose(edited.thicknesses[beam], 2.2)
    assert np.array_equal(edited.areas[~beam], assembly.areas[~beam])
    assert ThicknessEdit('bb', 1.1, 2.0).thickness == pytest.approx(2.2)

    unchanged = apply_thickness_edits(assembly, [ThicknessEdit(group, 1.0) for group in ('bb', 'cb', 'rail')])
    assert unchanged.equals(assembly)

    twice = apply_thickness_edits(apply_thickness_edits(assembly, [ThicknessEdit('cb', 1.05)]),
                                  [ThicknessEdit('cb', 1.04)])
    once = apply_thickness_edits(assembly, [ThicknessEdit('cb', 1.05 * 1.04, scale_bounds=(0.8, 1.2))])
    assert np.allclose(twice.areas, once.areas, rtol=1e-12)

    with pytest.raises(ScaleOutOfBoundsError):
        apply_thickness_edits(assembly, [ThicknessEdit('bb', 0.89)])
    with pytest.raises(UnknownGroupError):
        apply_thickness_edits(assembly, [ThicknessEdit('door', 1.0)])


def test_config_overrides_and_json(tmp_path):
    config = BumperConfig().apply_overrides('T_CB_MM=1.5,NUMBER_CRASH_BOXES_FIRST')
    assert config.T_CB_MM == 1.5 and config.NUMBER_CRASH_BOXES_FIRST is True
    path = tmp_path / 'bumper.json'
    config.to_json(path)
    assert BumperConfig.from_json(path) == config
    with pytest.raises(InvalidConfigError):
        BumperConfig().apply_overrides('NO_SUCH_KEY=1')
