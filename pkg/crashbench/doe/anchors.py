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

"""Deterministic anchor designs reserved ahead of every sampled campaign."""

import logging
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from crashbench.crashbench_classes import CampaignKind, InfeasibleAnchorError, enum_from_name
from crashbench.assembly import DesignSpace, DesignVector, KMH_PER_MM_MS
from crashbench.doe.sampling import BEAM_WINDOW, CRASH_BOX_WINDOW, feasible


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Anchor:
    """An anchor design, its label and whether it was moved to satisfy the feasibility rules."""
    label: str
    design: DesignVector
    projected: bool = False


def _baseline(space: DesignSpace) -> dict:
    return {variable.name: variable.baseline for variable in space.variables}


def _gauge_window(space: DesignSpace, yield_name: str, thickness: float, window: tuple) -> (float, float):
    """Grid range of a yield parameter that keeps thickness * sqrt(yield) inside the window."""
    variable = space.variable(yield_name)
    return variable.ceil((window[0] / thickness) ** 2), variable.floor((window[1] / thickness) ** 2)


def project_to_feasible(space: DesignSpace, design: DesignVector) -> DesignVector:
    """Moves the yield parameters to the nearest grid values that satisfy the feasibility rules.

    Gauges, speed and pole variables are never changed.

    :raise InfeasibleAnchorError: when no yield pair satisfies the rules for the given gauges.
    """
    if feasible(design)[0]:
        return design
    beam_low, beam_high = _gauge_window(space, 'sigma_y_bb', design.t_bb, BEAM_WINDOW)
    box_low, box_high = _gauge_window(space, 'sigma_y_cb', design.t_cb, CRASH_BOX_WINDOW)
    beam = float(np.clip(design.sigma_y_bb, beam_low, beam_high))
    box = float(np.clip(design.sigma_y_cb, box_low, box_high))
    if beam < box:
        # Lower the crash-box grade first, then raise the beam grade
        box = max(box_low, space.variable('sigma_y_cb').floor(beam))
        if beam < box:
            beam = min(beam_high, space.variable('sigma_y_bb').ceil(box))
    projected = replace(design, sigma_y_bb=beam, sigma_y_cb=box)
    passed, violations = feasible(projected)
    if not passed:
        raise InfeasibleAnchorError(f'Anchor {design.to_dict()} stays infeasible after projection: {violations}')
    return projected


def _bumper_anchors(space: DesignSpace) -> list:
    base = _baseline(space)
    speed = space.variable('v')
    gauge_cb, gauge_bb = space.variable('t_cb'), space.variable('t_bb')
    yield_cb, yield_bb = space.variable('sigma_y_cb'), space.variable('sigma_y_bb')
    pole_d, pole_y = space.variable('d_pole'), space.variable('y_pole')
    specs = [
        ('low-speed', {'v': speed.minimum, 'y_pole': pole_y.minimum}),
        ('frontal-50kmh', {'v': speed.snap(50.0 / KMH_PER_MM_MS), 'y_pole': pole_y.minimum}),
        ('frontal-54kmh', {'v': speed.snap(54.0 / KMH_PER_MM_MS), 'y_pole': pole_y.minimum}),
        ('lightest-gauge', {'t_cb': gauge_cb.minimum, 't_bb': gauge_bb.minimum, 'sigma_y_cb': yield_cb.minimum,
                            'sigma_y_bb': yield_bb.minimum}),
        ('heaviest-gauge', {'t_cb': gauge_cb.maximum, 't_bb': gauge_bb.maximum, 'sigma_y_cb': yield_cb.maximum,
                            'sigma_y_bb': yield_bb.maximum}),
        ('smallest-pole', {'d_pole': pole_d.minimum}),
        ('largest-pole', {'d_pole': pole_d.maximum}),
        ('max-offset', {'y_pole': pole_y.maximum}),
    ]
    anchors = []
    for label, changes in specs:
        design = space.make([{**base, **changes}[name] for name in space.names])
        projected = project_to_feasible(space, design)
        if projected != design:
            logger.warning('Anchor "%s" projected to feasibility: %s -> %s', label, design.to_dict(),
                           projected.to_dict())
        anchors.append(Anchor(label, projected, projected != design))
    return anchors


def _vehicle_anchors(space: DesignSpace) -> list:
    """Baseline, one-factor extrema and corners: 1 + 2d + 2^d designs."""
    base = _baseline(space)
    anchors = [Anchor('baseline', space.make([base[name] for name in space.names]))]
    for variable in space.variables:
        for bound, value in (('min', variable.minimum), ('max', variable.maximum)):
            values = dict(base, **{variable.name: value})
            anchors.append(Anchor(f'{variable.name}-{bound}', space.make([values[name] for name in space.names])))
    for corner in product(*[(variable.minimum, variable.maximum) for variable in space.variables]):
        label = 'corner-' + ''.join('+' if value == variable.maximum else '-'
                                    for value, variable in zip(corner, space.variables))
        anchors.append(Anchor(label, space.make(corner)))
    return anchors


def anchor_set(space: DesignSpace, kind) -> list:
    """Labelled anchors of a campaign kind; independent of any seed."""
    kind = enum_from_name(CampaignKind, kind)
    if kind == CampaignKind.BUMPER:
        return _bumper_anchors(space)
    return _vehicle_anchors(space)


def anchors(space: DesignSpace, kind) -> list:
    """Anchor designs of a campaign kind, in their fixed order."""
    return [anchor.design for anchor in anchor_set(space, kind)]
