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

"""Campaign orchestration: build each planned case, solve it, screen it and persist it.

Workers only solve and write their own bundle; the orchestrating process is the single writer of ``master.csv``
and ``campaign_progress.json``."""

import json
import logging
import shutil
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from crashbench.crashbench_classes import (BumperConfig, BundleExistsError, CampaignKind, InvalidConfigError,
                                           QcThresholds, QoiConfig, SolverConfig, TerminationCause, enum_from_name)
from crashbench.assembly import (Assembly, KMH_PER_MM_MS, RigidWall, ThicknessEdit,
                                 apply_thickness_edits, build_bumper_assembly)
from crashbench.doe import CampaignPlan, PlanEntry, make_pole
from crashbench.datastore.bundle import FAILED, PASSED, CaseBundle, write_bundle
from crashbench.datastore.tables import MASTER_FILE, append_master_row, master_row, master_table, write_master
from crashbench.signals import extract_qoi, qc_diagnostics
from crashbench.solver import run_explicit


logger = logging.getLogger(__name__)

FAILED_DIR = 'failed'
PROGRESS_FILE = 'campaign_progress.json'
PHASE3_EPS_P_FAIL = 0.05
VEHICLE_RAIL_LENGTH_MM = 300.0
NUMERICAL_BLOWUP = 'numerical-blowup'
QOI_EXTRACTION = 'qoi-extraction'
BUILD_ERROR = 'build-error'
SOLVER_ERROR = 'solver-error'


@dataclass
class BuiltCase:
    """An assembly ready to solve plus the physical inputs recorded in the master table."""
    assembly: Assembly
    inputs: dict
    x_c_mm: float = float('nan')


class CaseBuilder:
    """Turns a PlanEntry into a BuiltCase.

    ``CaseBuilder('bumper')`` applies gauges, yield parameters, speed and pole placement to a BumperConfig;
    ``CaseBuilder('vehicle')`` adds rails, converts km/h to mm/ms, places a rigid plane and scales the front and
    rail thickness groups."""

    def __new__(cls, kind, *args, **kwargs):
        kind = enum_from_name(CampaignKind, kind)
        if kind == CampaignKind.BUMPER:
            return _BumperCaseBuilder.__new__(_BumperCaseBuilder, kind, *args, **kwargs)
        elif kind == CampaignKind.VEHICLE:
            return _VehicleCaseBuilder.__new__(_VehicleCaseBuilder, kind, *args, **kwargs)

    def __init__(self, kind, config: BumperConfig = None):
        if self.__class__ != CaseBuilder and issubclass(self.__class__, CaseBuilder):
            self.kind = enum_from_name(CampaignKind, kind)
            self.config = BumperConfig() if config is None else config.copy()
            self.config.validate()
        else:
            raise RuntimeError('Abstract classes cannot be instantiated.')

    def __call__(self, entry: PlanEntry) -> BuiltCase:
        raise NotImplementedError('Case construction not implemented')


class _BumperCaseBuilder(CaseBuilder):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_BumperCaseBuilder)

    def __call__(self, entry: PlanEntry) -> BuiltCase:
        design = entry.design
        config = self.config.copy()
        config.VELOCITY_MM_MS = design.v
        config.T_CB_MM = design.t_cb
        config.T_BB_MM = design.t_bb
        config.SIGMA_Y_CB_GPA = design.sigma_y_cb
        config.SIGMA_Y_BB_GPA = design.sigma_y_bb
        if entry.phase == 3:
            config.EPS_P_FAIL = PHASE3_EPS_P_FAIL
        config.validate()
        pole = make_pole(design, config.X_BUMPER_MM, config.POLE_GAP_MM, config.FRICTION, config.PENALTY_STIFFNESS)
        assembly = build_bumper_assembly(config, [pole])
        return BuiltCase(assembly, design.to_dict(), pole.x_c)


class _VehicleCaseBuilder(CaseBuilder):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_VehicleCaseBuilder)

    def __call__(self, entry: PlanEntry) -> BuiltCase:
        design = entry.design
        config = self.config.copy()
        if config.RAIL_LENGTH_MM <= 0:
            config.RAIL_LENGTH_MM = VEHICLE_RAIL_LENGTH_MM
        config.VELOCITY_MM_MS = design.v / KMH_PER_MM_MS
        config.validate()
        wall = RigidWall('plane', normal=(1, 0, 0), offset=config.X_BUMPER_MM - config.POLE_GAP_MM,
                         friction=config.FRICTION, penalty=config.PENALTY_STIFFNESS)
        assembly = apply_thickness_edits(build_bumper_assembly(config, [wall]), [
            ThicknessEdit('bb', design.s_front, config.T_BB_MM),
            ThicknessEdit('cb', design.s_front, config.T_CB_MM),
            ThicknessEdit('rail', design.s_rail, config.T_RAIL_MM),
        ])
        inputs = {'v': config.VELOCITY_MM_MS, 't_cb': design.s_front * config.T_CB_MM,
                  't_bb': design.s_front * config.T_BB_MM, 'sigma_y_cb': config.SIGMA_Y_CB_GPA,
                  'sigma_y_bb': config.SIGMA_Y_BB_GPA, 't_rail': design.s_rail * config.T_RAIL_MM}
        return BuiltCase(assembly, inputs)


#
# One case
#
@dataclass
class CaseOutcome:
    case_id: str
    status: str
    reasons: list = field(default_factory=list)
    cause: str = ''
    path: str = ''
    row: dict = None

    @property
    def passed(self) -> bool:
        return self.status == PASSED


def _case_dirs(root: Path, case_id: str) -> (Path, Path):
    return root / case_id, root / FAILED_DIR / case_id


def run_case(entry: PlanEntry, assembly_factory, solver_config: SolverConfig, root, seed: int = 0,
             overwrite: bool = False, qoi_config: QoiConfig = None, thresholds: QcThresholds = None) -> CaseOutcome:
    """Builds, solves, screens and persists one planned case.

    Passing bundles go to ``<root>/<case_id>``, failing ones to ``<root>/failed/<case_id>``. Any error other than
    an I/O error turns into a failure reason.

    :raise OSError: when the bundle cannot be written.
    """
    root = Path(root)
    try:
        built = assembly_factory(entry)
    except (InvalidConfigError, ValueError) as error:
        logger.warning('Case %s skipped: %s', entry.case_id, error)
        return CaseOutcome(entry.case_id, FAILED, [BUILD_ERROR], _cause_name(None), '')

    try:
        trajectory, histories, report = run_explicit(built.assembly, solver_config)
    except (ArithmeticError, ValueError, RuntimeError) as error:
        logger.warning('Case %s failed in the solver: %s', entry.case_id, error)
        return CaseOutcome(entry.case_id, FAILED, [SOLVER_ERROR], _cause_name(None), '')

    qc = qc_diagnostics(histories, report, thresholds)
    reasons = list(qc.reasons)
    if report.cause == TerminationCause.NUMERICAL_BLOWUP:
        reasons.insert(0, NUMERICAL_BLOWUP)
    qoi = None
    try:
        qoi = extract_qoi(histories, qoi_config)
        qoi.qc = qc
    except (InvalidConfigError, ValueError) as error:
        logger.debug('Case %s: no QoIs (%s)', entry.case_id, error)
        reasons.append(QOI_EXTRACTION)
    status = PASSED if not reasons else FAILED
    qc.passed, qc.reasons = status == PASSED, reasons

    metadata = {
        'label': entry.label,
        'inputs': built.inputs,
        'x_c_mm': None if np.isnan(built.x_c_mm) else float(built.x_c_mm),
        'walls': [wall.to_dict() for wall in built.assembly.walls],
        'topology': built.assembly.topology(),
        'solver': solver_config.as_dict(),
        'termination_cause': report.cause.name.lower(),
        'wall_clock_s': report.wall_clock_s,
        'reasons': reasons,
    }
    bundle = CaseBundle(entry.case_id, entry.design, entry.origin, entry.phase, seed, status, trajectory,
                        histories, report, qoi, metadata)
    passed_dir, failed_dir = _case_dirs(root, entry.case_id)
    path = write_bundle(bundle, root if status == PASSED else root / FAILED_DIR, overwrite)
    stale = failed_dir if status == PASSED else passed_dir
    if overwrite and stale.exists():
        shutil.rmtree(stale)

    row = None
    if status == PASSED:
        row = master_row(bundle.manifest())
        logger.info('Case %s passed (t = %.4g ms, %d steps)', entry.case_id, report.final_time, report.steps)
    else:
        logger.info('Case %s failed: %s', entry.case_id, ', '.join(reasons))
    return CaseOutcome(entry.case_id, status, reasons, _cause_name(report), str(path), row)


def _cause_name(report) -> str:
    return '' if report is None else report.cause.name.lower()


def _run_case_worker(arguments):
    return run_case(*arguments)


#
# Whole campaigns
#
@dataclass
class CampaignReport:
    """Pass/fail counts and per-case failure reasons of one campaign run."""
    total: int = 0
    passed: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)
    causes: dict = field(default_factory=dict)
    master_path: str = ''
    aborted: str = ''

    @property
    def completed(self) -> int:
        return len(self.passed) + len(self.failed)

    def record(self, outcome: CaseOutcome):
        if outcome.passed:
            self.passed.append(outcome.case_id)
        else:
            self.failed[outcome.case_id] = outcome.reasons
        if outcome.cause:
            self.causes[outcome.cause] = self.causes.get(outcome.cause, 0) + 1

    def reason_counts(self) -> dict:
        counts = {}
        for reasons in self.failed.values():
            for reason in reasons:
                counts[reason] = counts.get(reason, 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict:
        return {'total': self.total, 'completed': self.completed, 'passed': len(self.passed),
                'failed': len(self.failed), 'failures': self.failed, 'reason_counts': self.reason_counts(),
                'causes': self.causes, 'master': self.master_path, 'aborted': self.aborted,
                'finished': self.completed == self.total and not self.aborted}


def _write_progress(root: Path, report: CampaignReport):
    with open(root / PROGRESS_FILE, 'w', encoding='utf-8') as progress_file:
        json.dump(report.to_dict(), progress_file, indent=2)
        progress_file.write('\n')


def _check_collisions(plan: CampaignPlan, root: Path):
    for case_id in plan.case_ids:
        for path in _case_dirs(root, case_id):
            if path.exists():
                raise BundleExistsError(f'Case directory "{path}" already exists')


def run_campaign(plan: CampaignPlan, assembly_factory=None, solver_config: SolverConfig = None, root='.',
                 workers: int = 1, overwrite: bool = False, qoi_config: QoiConfig = None,
                 thresholds: QcThresholds = None) -> CampaignReport:
    """Solves every case of a plan and appends the passing ones to ``<root>/master.csv``.

    Case failures are recorded in the report and never stop the campaign. Rows reach the master table in plan
    order whatever the number of workers.

    :param CampaignPlan plan: the cases to run.
    :param assembly_factory: callable mapping a PlanEntry to a BuiltCase; defaults to ``CaseBuilder(plan.kind)``.
    :param SolverConfig solver_config: integration controls shared by every case.
    :param root: campaign directory.
    :param int workers: number of worker processes; 1 solves in this process.
    :param bool overwrite: replace existing case directories instead of refusing to start.
    :raise BundleExistsError: before any solve, when a planned case directory already exists.
    :raise OSError: after writing ``campaign_progress.json``, when the campaign directory cannot be written.
    """
    if workers < 1:
        raise InvalidConfigError(f'Invalid value for parameter "workers". Expected "workers >= 1"; '
                                 f'received "{workers}"')
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    solver_config = SolverConfig() if solver_config is None else solver_config
    assembly_factory = CaseBuilder(plan.kind) if assembly_factory is None else assembly_factory
    if not overwrite:
        _check_collisions(plan, root)

    master_path = root / MASTER_FILE
    report = CampaignReport(total=len(plan), master_path=str(master_path))
    arguments = [(entry, assembly_factory, solver_config, root, plan.seed, overwrite, qoi_config, thresholds)
                 for entry in plan.entries]
    logger.info('Running %d cases with %d worker(s) into %s', len(arguments), workers, root)
    try:
        if workers == 1 or len(arguments) <= 1:
            outcomes = map(_run_case_worker, arguments)
            _collect(outcomes, report, root, master_path, overwrite)
        else:
            with Pool(processes=workers) as pool:
                _collect(pool.imap(_run_case_worker, arguments), report, root, master_path, overwrite)
        if overwrite or not master_path.exists():
            write_master(master_table(root), master_path)
    except OSError as error:
        report.aborted = str(error)
        _write_progress(root, report)
        logger.error('Campaign aborted after %d of %d cases: %s', report.completed, report.total, error)
        raise
    _write_progress(root, report)
    logger.info('Campaign finished: %d passed, %d failed', len(report.passed), len(report.failed))
    return report


def _collect(outcomes, report: CampaignReport, root: Path, master_path: Path, overwrite: bool):
    for outcome in outcomes:
        report.record(outcome)
        if outcome.passed and not overwrite:
            append_master_row(master_path, outcome.row)
        _write_progress(root, report)
