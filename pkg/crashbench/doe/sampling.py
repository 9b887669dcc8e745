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

"""Quasi-random and stratified samplers, feasibility rules, pole placement and maximin continuation."""

import warnings

import numpy as np
from scipy.stats import qmc
from scipy.spatial.distance import cdist

from crashbench.crashbench_classes import InvalidConfigError, WallKind
from crashbench.assembly import Assembly, DesignSpace, DesignVector, RigidWall


SOBOL_MAX_DIMENSION = 21201
FEASIBILITY_TOLERANCE = 1e-12

# Gauge-strength windows (mm * sqrt(GPa)) and the grade ordering of the bumper space
BEAM_WINDOW = (0.8, 2.5)
CRASH_BOX_WINDOW = (0.6, 2.0)


def _generator(seed):
    """Accepts an integer seed, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


#
# Samplers
#
def sobol_engine(dimension: int, seed, scramble: bool = True) -> qmc.Sobol:
    if not 1 <= dimension <= SOBOL_MAX_DIMENSION:
        raise InvalidConfigError(f'Invalid value for parameter "dimension". '
                                 f'Expected "1 <= d <= {SOBOL_MAX_DIMENSION}"; received "{dimension}"')
    return qmc.Sobol(d=dimension, scramble=scramble, seed=_generator(seed))


def sobol_points(engine: qmc.Sobol, count: int) -> np.ndarray:
    """Next ``count`` points of a Sobol engine; counts that are not powers of two are accepted silently."""
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', UserWarning)
        return engine.random(count)


def sobol_sample(space: DesignSpace, count: int, seed, scramble: bool = True) -> list:
    """Scrambled Sobol points mapped to the bounds of the space and rounded to its grid.

    :param DesignSpace space: the design space.
    :param int count: number of points.
    :param seed: integer seed, SeedSequence or Generator.
    :param bool scramble: False gives the plain sequence, whose first point is the origin.
    :return: list of DesignVector.
    """
    if count < 1:
        raise InvalidConfigError(f'Invalid value for parameter "count". Expected "count >= 1"; received "{count}"')
    return space.from_unit(sobol_points(sobol_engine(space.dimension, seed, scramble), count))


def lhs_unit(dimension: int, count: int, seed) -> np.ndarray:
    """Centred Latin hypercube in [0, 1]^d: exactly one point per stratum [i/n, (i+1)/n) in every dimension."""
    if count < 1:
        raise InvalidConfigError(f'Invalid value for parameter "count". Expected "count >= 1"; received "{count}"')
    return qmc.LatinHypercube(d=dimension, scramble=False, seed=_generator(seed)).random(count)


def lhs_sample(space: DesignSpace, count: int, seed) -> list:
    """Latin-hypercube designs rounded to the grid of the space."""
    return space.from_unit(lhs_unit(space.dimension, count, seed))


def maximin_index(accumulated, candidates) -> int:
    """Index of the candidate whose smallest distance to the accumulated set is largest (first index on ties)."""
    accumulated = np.atleast_2d(np.asarray(accumulated, dtype=np.float64))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if accumulated.size == 0 or candidates.size == 0:
        raise InvalidConfigError('Invalid value for parameter "points". Expected "non-empty accumulated and '
                                 f'candidate sets"; received "{accumulated.shape}, {candidates.shape}"')
    return int(np.argmax(cdist(candidates, accumulated).min(axis=1)))


def maximin_next(accumulated, candidates) -> np.ndarray:
    """Greedy maximin continuation point among the candidates (normalised coordinates)."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    return candidates[maximin_index(accumulated, candidates)]


#
# Feasibility and geometry
#
def feasible(design: DesignVector) -> (bool, list):
    """Manufacturability rules of the bumper space: gauge-strength windows and grade ordering.

    Designs without gauge or yield variables (vehicle spaces) have nothing to violate.

    :return: the verdict and the list of violated rules.
    """
    if None in (design.t_bb, design.t_cb, design.sigma_y_bb, design.sigma_y_cb):
        return True, []
    violations = []
    beam = design.t_bb * np.sqrt(design.sigma_y_bb)
    box = design.t_cb * np.sqrt(design.sigma_y_cb)
    if not BEAM_WINDOW[0] - FEASIBILITY_TOLERANCE <= beam <= BEAM_WINDOW[1] + FEASIBILITY_TOLERANCE:
        violations.append(f'beam gauge-strength {beam:.6g} outside [{BEAM_WINDOW[0]}, {BEAM_WINDOW[1]}]')
    if not CRASH_BOX_WINDOW[0] - FEASIBILITY_TOLERANCE <= box <= CRASH_BOX_WINDOW[1] + FEASIBILITY_TOLERANCE:
        violations.append(f'crash-box gauge-strength {box:.6g} outside [{CRASH_BOX_WINDOW[0]}, '
                          f'{CRASH_BOX_WINDOW[1]}]')
    if design.sigma_y_bb < design.sigma_y_cb - FEASIBILITY_TOLERANCE:
        violations.append(f'grade ordering: beam yield {design.sigma_y_bb} below crash-box yield '
                          f'{design.sigma_y_cb}')
    return len(violations) == 0, violations


def place_pole(d_pole: float, x_bumper: float, gap: float) -> float:
    """X of the pole axis that leaves ``gap`` mm between the pole and the front face."""
    if not d_pole > 0:
        raise InvalidConfigError(f'Invalid value for parameter "d_pole". Expected "d_pole > 0"; received "{d_pole}"')
    if gap < 0:
        raise InvalidConfigError(f'Invalid value for parameter "gap". Expected "gap >= 0"; received "{gap}"')
    return -(abs(x_bumper) + 0.5 * d_pole + gap)


def make_pole(design: DesignVector, x_bumper: float, gap: float, friction: float = 0.20,
              penalty: float = None) -> RigidWall:
    """Vertical rigid cylinder of the design's diameter at lateral offset y_pole."""
    x_c = place_pole(design.d_pole, x_bumper, gap)
    return RigidWall('cylinder', center=(x_c, design.y_pole, 0.0), radius=0.5 * design.d_pole, axis=(0, 0, 1),
                     friction=friction, penalty=penalty)


def prescreen_geometry(assembly: Assembly, pole: RigidWall) -> bool:
    """Initial-intersection check: the smallest XY distance from a node to the pole axis must be at least D/2.

    Plane walls only require every node to lie on the allowed side."""
    if pole.kind == WallKind.PLANE:
        return pole.clearance(assembly.coordinates) >= 0
    delta = np.hypot(assembly.coordinates[:, 0] - pole.center[0], assembly.coordinates[:, 1] - pole.center[1])
    return bool(np.min(delta) >= pole.radius)
