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

"""Campaign plans: anchors first, then Sobol (bumper) or Latin-hypercube (vehicle) fill, then optional maximin
continuation batches."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crashbench.crashbench_classes import (BumperConfig, CampaignKind, InfeasibleAnchorError, InfeasibleSpaceError,
                                           InvalidConfigError, Origin, enum_from_name, resolve_seed)
from crashbench.assembly import DesignSpace, DesignVector, RigidWall, build_bumper_assembly
from crashbench.doe.anchors import anchor_set
from crashbench.doe.sampling import (feasible, lhs_sample, make_pole, maximin_index, prescreen_geometry,
                                     sobol_engine, sobol_points)


logger = logging.getLogger(__name__)

CASE_ID_FORMAT = 'sim_{:05d}'
SOBOL_CHUNK = 1024
REJECTION_WINDOW = 100000         # Draws after which the rejection rate is judged
MAX_REJECTION_RATE = 0.99
MAX_DRAWS = 1000000
CANDIDATE_POOL = 4096             # Sobol candidates per maximin continuation batch
PILOT_CASES = 75                  # Vehicle campaigns: first cases form the pilot phase


@dataclass(frozen=True)
class PlanEntry:
    case_id: str
    design: DesignVector
    origin: Origin
    phase: int
    label: str = ''

    def to_dict(self) -> dict:
        return {'case_id': self.case_id, 'design': self.design.to_dict(), 'origin': self.origin.name.lower(),
                'phase': self.phase, 'label': self.label}

    @classmethod
    def from_dict(cls, values: dict):
        return cls(values['case_id'], DesignVector.from_mapping(values['design']),
                   enum_from_name(Origin, values['origin']), int(values['phase']), values.get('label', ''))


@dataclass
class CampaignPlan:
    """Ordered cases of a campaign with the space they were drawn from and the seed that drew them."""
    kind: CampaignKind
    space: DesignSpace
    seed: int
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def designs(self) -> list:
        return [entry.design for entry in self.entries]

    @property
    def case_ids(self) -> list:
        return [entry.case_id for entry in self.entries]

    def count(self, origin) -> int:
        origin = enum_from_name(Origin, origin)
        return sum(1 for entry in self.entries if entry.origin == origin)

    def next_case_id(self) -> str:
        return CASE_ID_FORMAT.format(len(self.entries) + 1)

    def add(self, design: DesignVector, origin: Origin, phase: int, label: str = '') -> PlanEntry:
        entry = PlanEntry(self.next_case_id(), design, origin, phase, label)
        self.entries.append(entry)
        return entry

    def units(self) -> dict:
        return {variable.name: variable.unit for variable in self.space.variables}

    def to_dict(self) -> dict:
        return {'kind': self.kind.name.lower(), 'seed': self.seed, 'space': self.space.to_dict(),
                'units': self.units(), 'cases': [entry.to_dict() for entry in self.entries]}

    @classmethod
    def from_dict(cls, values: dict):
        return cls(enum_from_name(CampaignKind, values['kind']), DesignSpace.from_dict(values['space']),
                   int(values['seed']), [PlanEntry.from_dict(entry) for entry in values.get('cases', [])])

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + '\n', encoding='utf-8')
        return text

    @classmethod
    def from_json(cls, path):
        with open(Path(path), encoding='utf-8') as json_file:
            return cls.from_dict(json.load(json_file))


class CampaignPlanner:
    """Builds CampaignPlans for one campaign kind.

    ``CampaignPlanner('bumper', config=...)`` samples the seven-variable pole space with feasibility and geometric
    pre-screening; ``CampaignPlanner('vehicle')`` fills the three-variable full-frontal space by Latin hypercube."""

    def __new__(cls, kind, *args, **kwargs):
        kind = enum_from_name(CampaignKind, kind)
        if kind == CampaignKind.BUMPER:
            return _BumperPlanner.__new__(_BumperPlanner, kind, *args, **kwargs)
        elif kind == CampaignKind.VEHICLE:
            return _VehiclePlanner.__new__(_VehiclePlanner, kind, *args, **kwargs)

    def __init__(self, kind, space: DesignSpace = None, config: BumperConfig = None):
        if self.__class__ != CampaignPlanner and issubclass(self.__class__, CampaignPlanner):
            self.kind = enum_from_name(CampaignKind, kind)
            self.space = space if space is not None else self.default_space()
            self.config = BumperConfig() if config is None else config
            # Reference geometry for the pre-screen; it does not depend on gauges or grades
            self.reference = build_bumper_assembly(self.config)
        else:
            raise RuntimeError('Abstract classes cannot be instantiated.')

    def default_space(self) -> DesignSpace:
        raise NotImplementedError('Default space not implemented')

    def wall(self, design: DesignVector) -> RigidWall:
        raise NotImplementedError('Wall construction not implemented')

    def accepts(self, design: DesignVector, space: DesignSpace = None) -> bool:
        """Bounds, grid, feasibility and geometric pre-screen."""
        space = self.space if space is None else space
        return (space.contains(design) and space.on_grid(design) and feasible(design)[0]
                and prescreen_geometry(self.reference, self.wall(design)))

    def plan(self, sizes, seed=None, continuation=()) -> CampaignPlan:
        raise NotImplementedError('Planning not implemented')

    def _anchors(self) -> list:
        """Anchors of the campaign kind; each must pass the same screen as the sampled designs.

        :raise InfeasibleAnchorError: when an anchor falls off the grid or intersects the reference assembly.
        """
        anchor_list = anchor_set(self.space, self.kind)
        for anchor in anchor_list:
            if not self.accepts(anchor.design):
                raise InfeasibleAnchorError(f'Anchor "{anchor.label}" fails the pre-screen: '
                                            f'{anchor.design.to_dict()}')
        return anchor_list

    #
    # Shared sampling loops
    #
    def _sobol_fill(self, plan: CampaignPlan, space: DesignSpace, count: int, stream, origin: Origin, phase: int,
                    seen: set):
        """Appends ``count`` accepted Sobol designs. Rejected draws are skipped and the sequence index advances."""
        engine = sobol_engine(space.dimension, stream)
        accepted = draws = 0
        while accepted < count:
            for design in space.from_unit(sobol_points(engine, SOBOL_CHUNK)):
                draws += 1
                key = tuple(design.as_array(space.names))
                if key in seen or not self.accepts(design, space):
                    continue
                seen.add(key)
                plan.add(design, origin, phase)
                accepted += 1
                if accepted == count:
                    break
            rejected = draws - accepted
            if draws >= REJECTION_WINDOW and rejected > MAX_REJECTION_RATE * draws or draws >= MAX_DRAWS:
                raise InfeasibleSpaceError(f'Rejected {rejected} of {draws} draws in space "{space.name}"')
        logger.debug('Phase %d: accepted %d of %d Sobol draws', phase, accepted, draws)

    def _maximin_batch(self, plan: CampaignPlan, space: DesignSpace, count: int, stream, phase: int, seen: set):
        """Greedy maximin continuation over a fresh Sobol candidate pool, in normalised coordinates."""
        pool = [design for design in space.from_unit(sobol_points(sobol_engine(space.dimension, stream),
                                                                  CANDIDATE_POOL))
                if tuple(design.as_array(space.names)) not in seen and self.accepts(design, space)]
        unique = {}
        for design in pool:
            unique.setdefault(tuple(design.as_array(space.names)), design)
        pool = list(unique.values())
        if len(pool) < count:
            raise InfeasibleSpaceError(f'Only {len(pool)} admissible continuation candidates for {count} cases')
        candidates = space.normalize(pool)
        accumulated = space.normalize(plan.designs)
        for _ in range(count):
            index = maximin_index(accumulated, candidates)
            design = pool.pop(index)
            seen.add(tuple(design.as_array(space.names)))
            plan.add(design, Origin.MAXIMIN, phase)
            accumulated = np.vstack([accumulated, candidates[index]])
            candidates = np.delete(candidates, index, axis=0)


def _as_sizes(sizes) -> list:
    sizes = [int(sizes)] if np.isscalar(sizes) else [int(size) for size in sizes]
    if not sizes or any(size < 0 for size in sizes):
        raise InvalidConfigError(f'Invalid value for parameter "sizes". Expected "non-negative counts"; '
                                 f'received "{sizes}"')
    return sizes


class _BumperPlanner(CampaignPlanner):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_BumperPlanner)

    def default_space(self) -> DesignSpace:
        return DesignSpace.bumper(1)

    def wall(self, design: DesignVector) -> RigidWall:
        return make_pole(design, self.config.X_BUMPER_MM, self.config.POLE_GAP_MM, self.config.FRICTION,
                         self.config.PENALTY_STIFFNESS)

    def plan(self, sizes, seed=None, continuation=()) -> CampaignPlan:
        """Anchors, then one Sobol stream per phase.

        :param sizes: total case count of phase 1 (anchors included), or per-phase totals (phase 1, 2, 3). Phase 3
                      draws from the refined space.
        :param seed: master seed; every phase gets its own spawned stream.
        :param continuation: sizes of maximin continuation batches appended to the last phase.
        """
        sizes = _as_sizes(sizes)
        if len(sizes) > 3:
            raise InvalidConfigError(f'Invalid value for parameter "sizes". Expected "at most 3 phases"; '
                                     f'received "{sizes}"')
        seed = resolve_seed(seed)
        continuation = [int(size) for size in continuation]
        streams = np.random.SeedSequence(seed).spawn(3 + len(continuation))
        plan = CampaignPlan(CampaignKind.BUMPER, self.space, seed)
        seen = set()

        anchor_list = self._anchors()
        if sizes[0] < len(anchor_list):
            raise InvalidConfigError(f'Invalid value for parameter "sizes". Expected "at least {len(anchor_list)} '
                                     f'cases (the anchors)"; received "{sizes[0]}"')
        for anchor in anchor_list:
            seen.add(tuple(anchor.design.as_array(self.space.names)))
            plan.add(anchor.design, Origin.ANCHOR, 1, anchor.label)

        phase_spaces = [self.space, self.space, self.space.refined()]
        for phase, size in enumerate(sizes, start=1):
            fill = size - (len(anchor_list) if phase == 1 else 0)
            self._sobol_fill(plan, phase_spaces[phase - 1], fill, streams[phase - 1], Origin.SOBOL, phase, seen)
        for batch, size in enumerate(continuation):
            self._maximin_batch(plan, phase_spaces[len(sizes) - 1], size, streams[3 + batch], len(sizes), seen)
        logger.info('Planned %d bumper cases (%d anchors)', len(plan), plan.count(Origin.ANCHOR))
        return plan


class _VehiclePlanner(CampaignPlanner):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_VehiclePlanner)

    def default_space(self) -> DesignSpace:
        return DesignSpace.vehicle()

    def wall(self, design: DesignVector) -> RigidWall:
        return RigidWall('plane', normal=(1, 0, 0), offset=self.config.X_BUMPER_MM - self.config.POLE_GAP_MM,
                         friction=self.config.FRICTION, penalty=self.config.PENALTY_STIFFNESS)

    def plan(self, sizes, seed=None, continuation=()) -> CampaignPlan:
        """Anchors plus a Latin-hypercube fill up to the total; the first 75 cases form the pilot phase.

        Grid collisions of the rounded hypercube are kept: the stratification is defined on the unrounded
        points. Continuation batches (phase 3) are maximin picks from fresh Sobol pools and never repeat a design.
        """
        total = sum(_as_sizes(sizes))
        seed = resolve_seed(seed)
        continuation = [int(size) for size in continuation]
        streams = np.random.SeedSequence(seed).spawn(1 + len(continuation))
        plan = CampaignPlan(CampaignKind.VEHICLE, self.space, seed)
        anchor_list = self._anchors()
        if total < len(anchor_list):
            raise InvalidConfigError(f'Invalid value for parameter "sizes". Expected "at least {len(anchor_list)} '
                                     f'cases (the anchors)"; received "{total}"')
        designs = [(anchor.design, Origin.ANCHOR, anchor.label) for anchor in anchor_list]
        if total > len(anchor_list):
            designs += [(design, Origin.LHS, '') for design in lhs_sample(self.space, total - len(anchor_list),
                                                                          streams[0])]
        for index, (design, origin, label) in enumerate(designs):
            plan.add(design, origin, 1 if index < PILOT_CASES else 2, label)
        seen = {tuple(design.as_array(self.space.names)) for design in plan.designs}
        for batch, size in enumerate(continuation):
            self._maximin_batch(plan, self.space, size, streams[1 + batch], 3, seen)
        logger.info('Planned %d vehicle cases (%d anchors)', len(plan), plan.count(Origin.ANCHOR))
        return plan


def plan_campaign(space: DesignSpace, kind, sizes, seed=None, continuation=(), config: BumperConfig = None):
    """Convenience wrapper around CampaignPlanner(kind, space, config).plan(...)."""
    return CampaignPlanner(kind, space, config).plan(sizes, seed, continuation)
