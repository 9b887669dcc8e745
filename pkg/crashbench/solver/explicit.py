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

"""Explicit central-difference integration of M u'' = f_ext - f_int + f_contact for bar assemblies.

Velocities live at half steps, the step size may change from one step to the next, and the constitutive update is
a one-dimensional radial return against the Johnson-Cook flow stress. Energies are accumulated with the trapezoidal
rule so that the balance E_kin + E_int + E_cont = E_kin(0) + W_ext can be checked at every step."""

import logging
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from crashbench.crashbench_classes import NumericalBlowupError, SolverConfig, SolverFinished, TerminationCause
from crashbench.assembly import Assembly
from crashbench.solver.contact import contact_forces, nodal_stiffness, penalty_stiffness
from crashbench.solver.results import FieldTrajectory, TerminationReport
from crashbench.signals.histories import TimeHistories


logger = logging.getLogger(__name__)

RETURN_MAP_ITERATIONS = 100
TIME_TOLERANCE = 1e-12
FLOOR_TOLERANCE = 1e-9


class _ElementData:
    """Per-element constants gathered once from the assembly."""

    def __init__(self, assembly: Assembly):
        self.node_a = assembly.connectivity[:, 0]
        self.node_b = assembly.connectivity[:, 1]
        self.area = np.array(assembly.areas)
        self.length0 = assembly.element_lengths()
        self.E = assembly.element_property('E')
        self.A = assembly.element_property('A')
        self.B = assembly.element_property('B')
        self.n = assembly.element_property('n')
        self.rho = assembly.element_property('rho')
        self.eps_p_fail = assembly.element_property('eps_p_fail')
        self.volume = self.area * self.length0

    def flow_stress(self, eps_p: np.ndarray, index=slice(None)) -> np.ndarray:
        return self.A[index] + self.B[index] * np.power(eps_p, self.n[index])

    def flow_slope(self, eps_p: np.ndarray, index=slice(None)) -> np.ndarray:
        strain = np.maximum(eps_p, 1e-12)
        return self.B[index] * self.n[index] * np.power(strain, self.n[index] - 1.0)


@dataclass
class SolverState:
    """Mutable state of one solve. Nodal arrays are N x 3, element arrays have length E."""
    reference: np.ndarray
    u: np.ndarray
    velocity: np.ndarray
    v_half: np.ndarray
    increment: np.ndarray
    f_ext: np.ndarray
    f_int: np.ndarray
    f_contact: np.ndarray
    net_force: np.ndarray
    strain: np.ndarray
    stress: np.ndarray
    eps_p: np.ndarray
    eroded: np.ndarray
    masses: np.ndarray
    rho_eff: np.ndarray
    movable: np.ndarray
    friction: list
    contact_stiffness: list
    wall_reactions: np.ndarray
    timestep_scale: float
    timestep_floor: float
    elements: _ElementData
    node_stiffness: np.ndarray
    time: float = 0.0
    step: int = 0
    dt_prev: float = 0.0
    floor_steps: int = 0
    initial_mass: float = 0.0
    added_mass: float = 0.0
    e_kin: float = 0.0
    e_int: float = 0.0
    e_cont: float = 0.0
    e_hg: float = 0.0
    w_p: float = 0.0
    w_ext: float = 0.0
    extras: dict = field(default_factory=dict)

    def positions(self) -> np.ndarray:
        return self.reference + self.u

    @property
    def total_energy(self) -> float:
        return self.e_kin + self.e_int + self.e_cont + self.e_hg

    @property
    def added_mass_fraction(self) -> float:
        return self.added_mass / self.initial_mass if self.initial_mass > 0 else 0.0

    @property
    def rigid_body_acceleration(self) -> float:
        """X component of sum(m a) / sum(m)."""
        return float(self.net_force[:, 0].sum() / self.masses.sum())


def initial_state(assembly: Assembly, config: SolverConfig = None) -> SolverState:
    """Reference state with the assembly's initial velocity and zero stress."""
    config = SolverConfig() if config is None else config
    nodes, elements = assembly.node_count, assembly.element_count
    velocity = np.array(assembly.initial_velocity)
    velocity[assembly.fixed_dofs] = 0.0
    data = _ElementData(assembly)
    state = SolverState(
        reference=np.array(assembly.coordinates),
        u=np.zeros((nodes, 3)),
        velocity=velocity,
        v_half=velocity.copy(),
        increment=np.zeros((nodes, 3)),
        f_ext=np.array(assembly.external_forces),
        f_int=np.zeros((nodes, 3)),
        f_contact=np.zeros((nodes, 3)),
        net_force=np.zeros((nodes, 3)),
        strain=np.zeros(elements),
        stress=np.zeros(elements),
        eps_p=np.zeros(elements),
        eroded=np.zeros(elements, dtype=bool),
        masses=np.array(assembly.masses),
        rho_eff=np.array(data.rho),
        movable=~np.all(assembly.fixed_dofs, axis=1),
        friction=[np.zeros((nodes, 3)) for _ in assembly.walls],
        contact_stiffness=[penalty_stiffness(assembly, wall, config.PENALTY_SCALE) for wall in assembly.walls],
        wall_reactions=np.zeros((len(assembly.walls), 3)),
        timestep_scale=config.TIMESTEP_SCALE,
        timestep_floor=config.TIMESTEP_FLOOR_MS,
        elements=data,
        node_stiffness=nodal_stiffness(assembly) if elements else np.zeros(nodes),
        initial_mass=assembly.total_mass,
    )
    state.e_kin = 0.5 * float(np.sum(state.masses[:, None] * state.velocity ** 2))
    return state


#
# Constitutive update and internal forces
#
def _return_map(data: _ElementData, index: np.ndarray, trial: np.ndarray, eps_p: np.ndarray) -> np.ndarray:
    """Plastic multiplier of the yielding elements: |trial| - E dg - flow_stress(eps_p + dg) = 0.

    Safeguarded Newton iteration on the bracket [0, excess / E]; steps leaving the bracket fall back to bisection."""
    E = data.E[index]
    magnitude = np.abs(trial)

    def residual(gamma):
        return magnitude - E * gamma - data.flow_stress(eps_p + gamma, index)

    low = np.zeros_like(magnitude)
    high = (magnitude - data.flow_stress(eps_p, index)) / E
    gamma = high / (1.0 + data.flow_slope(eps_p, index) / E)
    for _ in range(RETURN_MAP_ITERATIONS):
        value = residual(gamma)
        positive = value > 0
        low = np.where(positive, gamma, low)
        high = np.where(positive, high, gamma)
        if np.all(np.abs(value) <= 1e-14 * np.maximum(magnitude, 1.0)):
            break
        slope = -E - data.flow_slope(eps_p + gamma, index)
        newton = gamma - value / slope
        inside = (newton > low) & (newton < high)
        gamma = np.where(inside, newton, 0.5 * (low + high))
    return gamma


def internal_forces(assembly: Assembly, state: SolverState) -> np.ndarray:
    """Updates stresses, plastic strains, erosion flags, W_p and E_int for the current displacements and returns
    the internal force vector f_int (N x 3, kN), i.e. minus the element forces acting on the nodes.

    :raise NumericalBlowupError: when the state holds non-finite values or an active element has collapsed.
    """
    data = state.elements
    if not np.all(np.isfinite(state.u)):
        raise NumericalBlowupError(f'Non-finite displacements at step {state.step}', state.step, state.time)
    positions = state.positions()
    chord = positions[data.node_b] - positions[data.node_a]
    length = np.linalg.norm(chord, axis=1)
    active = ~state.eroded
    if np.any(length[active] <= 0):
        raise NumericalBlowupError(f'Element collapsed to zero length at step {state.step}', state.step, state.time)

    strain = (length - data.length0) / data.length0
    delta = strain - state.strain
    old_stress = state.stress.copy()
    trial = old_stress + data.E * delta
    excess = np.abs(trial) - data.flow_stress(state.eps_p)
    yielding = np.flatnonzero(active & (excess > 0))
    stress = trial
    if yielding.size:
        gamma = _return_map(data, yielding, trial[yielding], state.eps_p[yielding])
        stress[yielding] = np.sign(trial[yielding]) * (np.abs(trial[yielding]) - data.E[yielding] * gamma)
        state.eps_p[yielding] += gamma
        state.w_p += float(np.sum(data.flow_stress(state.eps_p[yielding], yielding) * gamma * data.volume[yielding]))

    failing = active & (data.eps_p_fail > 0) & (state.eps_p >= data.eps_p_fail)
    if np.any(failing):
        logger.debug('Eroding %d element(s) at t = %.6g ms', np.count_nonzero(failing), state.time)
        state.eroded |= failing
    stress[state.eroded] = 0.0

    state.e_int += float(np.sum(0.5 * (old_stress + stress) * delta * data.volume))
    state.strain = strain
    state.stress = stress

    axial = np.zeros_like(length)
    nonzero = length > 0
    axial[nonzero] = stress[nonzero] * data.area[nonzero] / length[nonzero]
    element_force = axial[:, None] * chord
    f_int = np.zeros_like(positions)
    np.add.at(f_int, data.node_a, -element_force)
    np.add.at(f_int, data.node_b, element_force)
    return f_int


#
# Timestep control
#
def critical_timestep(assembly: Assembly, state: SolverState) -> float:
    """Stable step alpha * min(L / c) over active elements, with c = sqrt(E / rho_eff) and L the current length
    (never above the reference length). With walls, the nodal bound alpha * sqrt(2 m / (K + k_pen)) also applies.

    :raise SolverFinished: when every element has eroded.
    """
    data = state.elements
    bounds = []
    active = ~state.eroded
    if np.any(active):
        positions = state.positions()
        length = np.linalg.norm(positions[data.node_b[active]] - positions[data.node_a[active]], axis=1)
        length = np.minimum(length, data.length0[active])
        speed = np.sqrt(data.E[active] / state.rho_eff[active])
        bounds.append(float(np.min(length / speed)))
    elif assembly.element_count > 0:
        raise SolverFinished('All elements eroded')
    if assembly.walls and np.any(state.movable):
        contact = np.sum(state.contact_stiffness, axis=0)
        stiffness = (state.node_stiffness + contact)[state.movable]
        bounds.append(float(np.sqrt(2.0 * np.min(state.masses[state.movable] / stiffness))))
    if not bounds:
        raise SolverFinished('Nothing left to integrate')
    return state.timestep_scale * min(bounds)


def apply_mass_scaling(assembly: Assembly, state: SolverState, dt_target: float) -> float:
    """Adds the least nodal mass that lifts every element (and contact node) step to dt_target.

    Element mass grows through its effective density, half of the increment going to each end node. The kinetic
    energy carried by the new mass is booked as external work.

    :return: the cumulative added-mass fraction of the initial total mass.
    """
    data = state.elements
    alpha = state.timestep_scale
    added = np.zeros(assembly.node_count)
    active = np.flatnonzero(~state.eroded)
    if active.size:
        positions = state.positions()
        length = np.linalg.norm(positions[data.node_b[active]] - positions[data.node_a[active]], axis=1)
        length = np.minimum(length, data.length0[active])
        needed = data.E[active] * (dt_target / (alpha * length)) ** 2
        grow = needed > state.rho_eff[active]
        if np.any(grow):
            elements = active[grow]
            extra = (needed[grow] - state.rho_eff[elements]) * data.volume[elements]
            state.rho_eff[elements] = needed[grow]
            np.add.at(added, data.node_a[elements], 0.5 * extra)
            np.add.at(added, data.node_b[elements], 0.5 * extra)
    if assembly.walls:
        candidate = state.masses + added
        needed = 0.5 * (state.node_stiffness + np.sum(state.contact_stiffness, axis=0)) * (dt_target / alpha) ** 2
        grow = state.movable & (needed > candidate)
        added[grow] += needed[grow] - candidate[grow]
    if np.any(added > 0):
        state.w_ext += 0.5 * float(np.sum(added[:, None] * state.velocity ** 2))
        state.masses += added
        state.added_mass += float(added.sum())
        state.e_kin = 0.5 * float(np.sum(state.masses[:, None] * state.velocity ** 2))
    return state.added_mass_fraction


def _stable_step(assembly: Assembly, state: SolverState) -> float:
    dt = critical_timestep(assembly, state)
    if dt < state.timestep_floor:
        apply_mass_scaling(assembly, state, state.timestep_floor)
        dt = max(critical_timestep(assembly, state), state.timestep_floor)
    # Mass-scaled steps land within rounding of the floor on either side.
    if dt <= state.timestep_floor * (1.0 + FLOOR_TOLERANCE):
        state.floor_steps += 1
    return dt


#
# Output sampling
#
def _output_grid(termination: float, interval: float) -> np.ndarray:
    count = int(np.floor(termination / interval + 1e-9)) + 1
    return np.round(np.arange(count) * interval, 12)


class _Recorder:
    """Samples frames and histories on exact grid times by linear interpolation between consecutive steps, so the
    output intervals never influence the step sequence."""

    FRAME_FIELDS = ('u', 'velocity', 'stress', 'eps_p')
    HISTORY_FIELDS = ('force', 'e_kin', 'e_int', 'e_cont', 'e_hg', 'w_p', 'a')

    def __init__(self, config: SolverConfig):
        self.frame_times = _output_grid(config.TERMINATION_TIME_MS, config.ANIMATION_INTERVAL_MS)
        self.history_times = _output_grid(config.TERMINATION_TIME_MS, config.HISTORY_INTERVAL_MS)
        self.frames = {name: [] for name in self.FRAME_FIELDS + ('eroded',)}
        self.histories = {name: [] for name in self.HISTORY_FIELDS}
        self.previous = None

    @staticmethod
    def snapshot(state: SolverState) -> dict:
        return {
            'time': state.time, 'u': state.u.copy(), 'velocity': state.velocity.copy(),
            'stress': state.stress.copy(), 'eps_p': state.eps_p.copy(), 'eroded': state.eroded.copy(),
            'force': state.wall_reactions.sum(axis=0), 'e_kin': state.e_kin, 'e_int': state.e_int,
            'e_cont': state.e_cont, 'e_hg': state.e_hg, 'w_p': state.w_p, 'a': state.rigid_body_acceleration,
        }

    def _sample(self, grid: np.ndarray, done: int, new: dict, fields: tuple, target: dict, with_flags: bool) -> int:
        old = self.previous if self.previous is not None else new
        span = new['time'] - old['time']
        while done < len(grid) and grid[done] <= new['time'] + TIME_TOLERANCE * max(1.0, new['time']):
            weight = 1.0 if span <= 0 else min(max((grid[done] - old['time']) / span, 0.0), 1.0)
            for name in fields:
                target[name].append((1.0 - weight) * old[name] + weight * new[name])
            if with_flags:
                target['eroded'].append(new['eroded'] if weight >= 0.5 else old['eroded'])
            done += 1
        return done

    def record(self, state: SolverState):
        new = self.snapshot(state)
        self._sample(self.frame_times, len(self.frames['u']), new, self.FRAME_FIELDS, self.frames, True)
        self._sample(self.history_times, len(self.histories['e_kin']), new, self.HISTORY_FIELDS, self.histories,
                     False)
        self.previous = new

    def trajectory(self, assembly: Assembly, config: SolverConfig) -> FieldTrajectory:
        count = len(self.frames['u'])
        return FieldTrajectory(
            times=self.frame_times[:count], reference=np.array(assembly.coordinates),
            displacements=np.array(self.frames['u']).reshape(count, assembly.node_count, 3),
            velocities=np.array(self.frames['velocity']).reshape(count, assembly.node_count, 3),
            stress=np.array(self.frames['stress']).reshape(count, assembly.element_count),
            plastic_strain=np.array(self.frames['eps_p']).reshape(count, assembly.element_count),
            eroded=np.array(self.frames['eroded']).reshape(count, assembly.element_count),
            node_ids=assembly.node_ids, element_ids=assembly.element_ids, part_ids=assembly.element_parts,
            dt_anim=config.ANIMATION_INTERVAL_MS)

    def time_histories(self) -> TimeHistories:
        count = len(self.histories['e_kin'])
        return TimeHistories(time=self.history_times[:count],
                             wall_force=np.array(self.histories['force']).reshape(count, 3),
                             e_kin=self.histories['e_kin'], e_int=self.histories['e_int'],
                             e_cont=self.histories['e_cont'], e_hg=self.histories['e_hg'],
                             w_p=self.histories['w_p'], a=self.histories['a'])


#
# Driver
#
def _update_forces(assembly: Assembly, state: SolverState):
    state.f_int = internal_forces(assembly, state)
    if assembly.walls:
        state.f_contact, state.wall_reactions = contact_forces(assembly, state)
    net = state.f_ext - state.f_int + state.f_contact
    net[assembly.fixed_dofs] = 0.0
    state.net_force = net


def _energy_error(state: SolverState, initial_total: float) -> float:
    if initial_total == 0:
        return 0.0
    return (state.total_energy - initial_total - state.w_ext) / initial_total


def _advance(assembly: Assembly, state: SolverState, termination: float):
    """One central-difference step; the last step is shortened to land on the termination time."""
    dt = _stable_step(assembly, state)
    remaining = termination - state.time
    final = dt >= remaining
    dt = remaining if final else dt

    acceleration = state.net_force / state.masses[:, None]
    state.v_half = state.v_half + acceleration * (0.5 * (state.dt_prev + dt))
    state.v_half[assembly.fixed_dofs] = 0.0
    state.increment = dt * state.v_half
    state.u = state.u + state.increment
    state.time = termination if final else state.time + dt
    state.step += 1

    f_contact_old, f_ext_old = state.f_contact, state.f_ext
    _update_forces(assembly, state)
    state.velocity = state.v_half + (0.5 * dt) * state.net_force / state.masses[:, None]
    state.velocity[assembly.fixed_dofs] = 0.0
    state.e_cont -= 0.5 * float(np.sum((f_contact_old + state.f_contact) * state.increment))
    state.w_ext += 0.5 * float(np.sum((f_ext_old + state.f_ext) * state.increment))
    state.e_kin = 0.5 * float(np.sum(state.masses[:, None] * state.velocity ** 2))
    state.dt_prev = dt
    if not (np.isfinite(state.e_kin) and np.isfinite(state.e_int) and np.all(np.isfinite(state.net_force))):
        raise NumericalBlowupError(f'Non-finite state at step {state.step}', state.step, state.time)


def run_explicit(assembly: Assembly, config: SolverConfig = None) -> (FieldTrajectory, TimeHistories,
                                                                      TerminationReport):
    """Integrates the assembly from its initial state to the termination time (or until every element erodes).

    A numerical blow-up does not raise: the report carries the cause and the outputs stop at the last stable
    sample.

    :param Assembly assembly: the structure, its boundary conditions and walls.
    :param SolverConfig config: integration controls.
    :return: the field trajectory, the time histories and the termination report.
    """
    config = SolverConfig() if config is None else config
    config.validate()
    started = perf_counter()
    state = initial_state(assembly, config)
    recorder = _Recorder(config)
    report = TerminationReport(initial_kinetic_energy=state.e_kin)

    try:
        _update_forces(assembly, state)
        initial_total = state.total_energy
        report.initial_total_energy = initial_total
        recorder.record(state)
        worst = 0.0
        while state.time < config.TERMINATION_TIME_MS - TIME_TOLERANCE:
            if state.step >= config.MAX_STEPS:
                raise NumericalBlowupError(f'Step limit {config.MAX_STEPS} reached at t = {state.time:.6g} ms',
                                           state.step, state.time)
            _advance(assembly, state, config.TERMINATION_TIME_MS)
            error = _energy_error(state, initial_total)
            if abs(error) > abs(worst):
                worst = error
            recorder.record(state)
            if state.step % 10000 == 0:
                logger.debug('Step %d, t = %.6g ms, E_err = %.3e', state.step, state.time, error)
        report.cause = TerminationCause.NORMAL
        report.energy_error_max = worst
        report.energy_error_final = _energy_error(state, initial_total)
    except SolverFinished as finished:
        report.cause = TerminationCause.ALL_ERODED
        report.message = str(finished)
        report.energy_error_final = _energy_error(state, report.initial_total_energy)
        report.energy_error_max = report.energy_error_final
        logger.info('Solve finished early at t = %.6g ms: %s', state.time, finished)
    except NumericalBlowupError as blowup:
        report.cause = TerminationCause.NUMERICAL_BLOWUP
        report.message = str(blowup)
        report.failed_step = blowup.step
        logger.warning('Numerical blow-up: %s', blowup)

    report.final_time = float(recorder.previous['time']) if recorder.previous is not None else 0.0
    report.steps = state.step
    report.floor_steps = state.floor_steps
    report.added_mass_fraction = state.added_mass_fraction
    report.hourglass_ratio = 0.0
    report.wall_clock_s = perf_counter() - started
    return recorder.trajectory(assembly, config), recorder.time_histories(), report
