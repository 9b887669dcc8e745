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

"""Batch command-line front end of crashbench.

Every command reads its inputs from files given on the command line, writes its outputs under the directory it is
pointed at (together with a ``run_manifest.json`` describing the invocation) and prints a short summary on stdout.

Exit codes: 0 success, 1 empty result or infeasible request, 2 usage error or missing input, 3 output collision."""

# Using argparse for parsing commandline options. See: https://docs.python.org/3.7/library/argparse.html
import argparse
import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from crashbench import __version__
from crashbench.crashbench_classes import (BumperConfig, BundleExistsError, CorruptBundleError, CrashSolverConfig,
                                           InfeasibleAnchorError, InfeasibleSpaceError, InvalidConfigError,
                                           Origin, PairingError, QcThresholds, QoiConfig, ShapeMismatchError,
                                           SolverConfig, TrainingDivergedError, TrainSchedule, resolve_seed)
from crashbench.assembly import DesignSpace
from crashbench.doe import CampaignPlan, CampaignPlanner
from crashbench.signals import cfc_filter, describe
from crashbench.datastore import (CaseBuilder, MASTER_FILE, SPLITS_FILE, SplitSet, make_splits, parse_fractions,
                                  read_master, run_campaign)
from crashbench.datastore.bundle import HISTORY_FILE, MANIFEST_FILE
from crashbench.surrogate import (CrashSolver, ZERO_CHECKPOINT, ZeroModel, load_checkpoint, load_component_table,
                                  load_samples, save_checkpoint, train)
from crashbench.evalstats import case_metrics, leaderboard, metrics_frame, significance_report, tabular_benchmark


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_USAGE = 2
EXIT_COLLISION = 3

RUN_MANIFEST_FILE = 'run_manifest.json'
LOG_FORMAT = '%(asctime)s [%(levelname)s] %(message)s'


@dataclass
class RunManifest:
    """Provenance of one command invocation, written into its output directory before any work starts."""
    command: str
    config: str
    seed: int
    output_root: str
    version: str = __version__
    timestamp: str = ''

    def write(self) -> Path:
        root = Path(self.output_root)
        root.mkdir(parents=True, exist_ok=True)
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec='seconds')
        path = root / RUN_MANIFEST_FILE
        path.write_text(json.dumps(asdict(self), indent=2) + '\n', encoding='utf-8')
        return path


def _require_file(path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'{what} "{path}" does not exist')
    return path


def _load_options(options_class, path, overrides):
    """Defaults, then the JSON file, then the KEY=VAL overrides."""
    if path is not None:
        _require_file(path, 'Configuration file')
    return options_class.from_json(path).apply_overrides(overrides)


def _splits_for(root: Path, splits) -> SplitSet:
    return SplitSet.from_json(_require_file(root / SPLITS_FILE if splits is None else splits, 'Split file'))


#
# Commands
#
def cmd_plan(args) -> int:
    """Samples a campaign plan and writes it as JSON."""
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    RunManifest('plan', str(args.space or ''), seed, str(out.parent.resolve())).write()
    space = DesignSpace.from_json(_require_file(args.space, 'Design space file')) if args.space else None
    config = _load_options(BumperConfig, args.config, args.overrides)
    sizes = [int(size) for size in args.sizes.split(',')] if args.sizes else args.count
    if sizes is None:
        raise InvalidConfigError('Invalid value for parameter "count". Expected "--count or --sizes"; received "none"')
    continuation = [int(size) for size in args.continuation.split(',')] if args.continuation else ()
    plan = CampaignPlanner(args.kind, space, config).plan(sizes, seed, continuation)
    plan.to_json(out)
    anchors = plan.count(Origin.ANCHOR)
    print(f'{anchors} anchors + {len(plan) - anchors} samples written to {out}')
    return EXIT_OK


def cmd_run(args) -> int:
    """Runs every case of a plan into a campaign directory."""
    plan_path = _require_file(args.plan, 'Plan file')
    plan = CampaignPlan.from_json(plan_path)
    root = Path(args.out)
    RunManifest('run', str(args.solver or ''), plan.seed, str(root)).write()
    solver_config = _load_options(SolverConfig, args.solver, args.solver_overrides)
    builder = CaseBuilder(plan.kind, _load_options(BumperConfig, args.config, args.overrides))
    qoi_config = _load_options(QoiConfig, args.qoi, None)
    thresholds = _load_options(QcThresholds, args.thresholds, None)
    report = run_campaign(plan, builder, solver_config, root, args.workers, args.overwrite, qoi_config, thresholds)
    print(f'{len(report.passed)} passed, {len(report.failed)} failed of {report.total} cases')
    for reason, count in report.reason_counts().items():
        print(f'  {reason}: {count}')
    if not report.passed:
        print('no passing cases')
        return EXIT_EMPTY
    return EXIT_OK


def cmd_split(args) -> int:
    """Splits the passing cases of a campaign into train/validation/test sets."""
    root = Path(args.root)
    seed = resolve_seed(args.seed)
    out = root / SPLITS_FILE if args.out is None else Path(args.out)
    RunManifest('split', str(root / MASTER_FILE), seed, str(out.parent)).write()
    master = read_master(_require_file(root / MASTER_FILE, 'Master table'))
    splits = make_splits(master, parse_fractions(args.fractions), seed)
    splits.to_json(out)
    train_size, validation_size, test_size = splits.sizes
    print(f'train {train_size} / validation {validation_size} / test {test_size} written to {out}')
    return EXIT_OK


def cmd_train(args) -> int:
    """Trains the mesh surrogate on the training split and writes the best-validation checkpoint."""
    root = Path(args.root)
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    RunManifest('train', str(args.model or ''), seed, str(out.parent.resolve())).write()
    config = _load_options(CrashSolverConfig, args.model, args.model_overrides)
    schedule = _load_options(TrainSchedule, args.schedule, None)
    if args.epochs is not None:
        schedule.EPOCHS = args.epochs
    if args.steps is not None:
        schedule.MAX_STEPS = args.steps
    splits = _splits_for(root, args.splits)
    table = load_component_table(_require_file(args.components, 'Component table')) if args.components else None

    samples = load_samples(root, splits.train, config.FRAMES, table, config.COMPONENTS, config.PARTS)
    validation = load_samples(root, splits.validation, config.FRAMES, table, config.COMPONENTS, config.PARTS)
    if samples:
        config.DESIGN_DIM = int(samples[0].design.size)
    model = CrashSolver(config, seed)
    result = train(model, samples, validation, schedule)
    save_checkpoint(model, out, {'best_epoch': result.best_epoch, 'steps': result.steps,
                                 'splits': str(args.splits or root / SPLITS_FILE)})
    history_path = out.with_name(out.stem + '_history.csv')
    result.history.to_csv(history_path, index=False)
    print(f'{result.steps} step(s); kept epoch {result.best_epoch}; checkpoint {out}; history {history_path}')
    return EXIT_OK


def _model_names(paths) -> list:
    names = []
    for path in paths:
        name = ZERO_CHECKPOINT if path == ZERO_CHECKPOINT else Path(path).stem
        candidate, copy = name, 1
        while candidate in names:
            copy += 1
            candidate = f'{name}#{copy}'
        names.append(candidate)
    return names


def cmd_eval(args) -> int:
    """Scores checkpoints on a split: per-case metrics and a leaderboard ranked by mean RMSE."""
    root = Path(args.root)
    out = root / 'eval' if args.out is None else Path(args.out)
    RunManifest('eval', args.ckpt, resolve_seed(args.seed), str(out)).write()
    splits = _splits_for(root, args.splits)
    case_ids = getattr(splits, args.split)
    if not case_ids:
        print(f'the {args.split} split is empty')
        return EXIT_EMPTY
    paths = [path.strip() for path in args.ckpt.split(',') if path.strip()]
    table = load_component_table(_require_file(args.components, 'Component table')) if args.components else None

    models = []
    for path in paths:
        models.append(load_checkpoint(path if path == ZERO_CHECKPOINT else _require_file(path, 'Checkpoint')))
    reference_config = next((model.config for model in models if isinstance(model, CrashSolver)),
                            CrashSolverConfig())
    frames = []
    for name, model in zip(_model_names(paths), models):
        config = model.config if isinstance(model, CrashSolver) else reference_config
        samples = load_samples(root, case_ids, config.FRAMES, table, config.COMPONENTS, config.PARTS)
        if isinstance(model, ZeroModel):
            model.frames = config.FRAMES
        metrics = [case_metrics(model.predict(sample), sample.target, sample.reference, sample.times, args.probe_ms)
                   for sample in samples]
        frame = metrics_frame(name, [sample.case_id for sample in samples], metrics)
        frame.to_csv(out / f'metrics_{name}.csv', index=False)
        frames.append(frame)
        logger.info('Evaluated %s on %d case(s)', name, len(samples))

    pd.concat(frames, ignore_index=True).to_csv(out / 'metrics.csv', index=False)
    board = leaderboard(frames)
    board.to_csv(out / 'leaderboard.csv', index=False)
    print(board.to_string(index=False))
    return EXIT_OK


def cmd_stats(args) -> int:
    """Paired significance report of one per-case metrics file against others."""
    seed = resolve_seed(args.seed)
    first = _require_file(args.metrics, 'Metrics file')
    others = [_require_file(path.strip(), 'Metrics file') for path in args.against.split(',') if path.strip()]
    out = first.parent if args.out is None else Path(args.out)
    RunManifest('stats', str(first), seed, str(out)).write()
    report = significance_report(pd.read_csv(first), [pd.read_csv(path) for path in others], args.replicates,
                                 args.permutations, seed)
    report.to_json(out / 'significance.json')
    text = report.table().to_string(index=False)
    (out / 'significance.txt').write_text(text + '\n', encoding='utf-8')
    print(text)
    return EXIT_OK


def cmd_filter(args) -> int:
    """Writes the history file with the CFC-filtered version of one channel next to the original column.

    Without ``--out`` the result goes to ``<stem>_<channel>_cfc<class>.csv`` beside the input; a case bundle's own
    ``history.csv`` is never overwritten."""
    source = _require_file(args.input, 'History file')
    column = f'{args.channel}_cfc{args.cfc:g}'
    out = source.with_name(f'{source.stem}_{column}.csv') if args.out is None else Path(args.out)
    if out.name == HISTORY_FILE and (out.parent / MANIFEST_FILE).is_file():
        raise InvalidConfigError(f'Invalid value for parameter "out". Expected "a file outside the case bundle"; '
                                 f'received "{out}"')
    RunManifest('filter', str(source), resolve_seed(None), str(out.parent.resolve())).write()
    frame = pd.read_csv(source)
    for name in ('time_ms', args.channel):
        if name not in frame.columns:
            raise InvalidConfigError(f'Invalid value for parameter "channel". Expected one of '
                                     f'"{list(frame.columns)}"; received "{name}"')
    times = frame['time_ms'].to_numpy(dtype=float)
    dt_ms = float(times[1] - times[0]) if times.size > 1 else 0.0
    frame[column] = cfc_filter(frame[args.channel].to_numpy(dtype=float), dt_ms, args.cfc)
    frame.to_csv(out, index=False)
    print(f'column {column} written to {out}')
    return EXIT_OK


def cmd_describe(args) -> int:
    """Minimum, median and maximum of every input and response column of a campaign."""
    root = Path(args.root)
    RunManifest('describe', str(root / MASTER_FILE), resolve_seed(None), str(root)).write()
    master = read_master(_require_file(root / MASTER_FILE, 'Master table'))
    if master.empty:
        print('no passing cases')
        return EXIT_EMPTY
    table = describe(master)
    table.to_csv(root / 'describe.csv', index=False)
    print(f'{len(master)} passing cases')
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_tabular(args) -> int:
    """Ridge and kNN baselines on the master table, scored per response target on the test split."""
    root = Path(args.root)
    seed = resolve_seed(args.seed)
    out = root / 'tabular.csv' if args.out is None else Path(args.out)
    RunManifest('tabular', str(root / MASTER_FILE), seed, str(out.parent)).write()
    master = read_master(_require_file(root / MASTER_FILE, 'Master table'))
    splits = _splits_for(root, args.splits) if args.splits else make_splits(master, (0.7, 0.15, 0.15), seed)
    table = tabular_benchmark(master, splits, alpha=args.alpha, k=args.k)
    table.to_csv(out, index=False)
    print(table.to_string(index=False))
    return EXIT_OK


#
# Command line
#
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='crashbench', description='Desk-scale crash-simulation benchmark: plan and '
                                     'run campaigns, split, train, evaluate and compare surrogates.')
    parser.add_argument('--verbose', action='store_true', help='Log at DEBUG level.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    plan = commands.add_parser('plan', help='Sample a campaign plan.')
    plan.add_argument('--kind', choices=['bumper', 'vehicle'], default='bumper')
    plan.add_argument('--space', default=None, help='Design space JSON; the preset of the campaign kind otherwise.')
    plan.add_argument('--count', type=int, default=None, help='Total number of cases, anchors included.')
    plan.add_argument('--sizes', default=None, help='Comma separated per-phase totals (bumper campaigns).')
    plan.add_argument('--continuation', default=None, help='Comma separated maximin continuation batch sizes.')
    plan.add_argument('--config', default=None, help='BumperConfig JSON used by the geometric pre-screen.')
    plan.add_argument('--overrides', default=None, help='KEY=VAL,... applied to the BumperConfig.')
    plan.add_argument('--seed', type=int, default=None)
    plan.add_argument('--out', required=True, help='Plan JSON to write.')
    plan.set_defaults(handler=cmd_plan)

    run = commands.add_parser('run', help='Run a campaign plan.')
    run.add_argument('--plan', required=True)
    run.add_argument('--out', required=True, help='Campaign directory.')
    run.add_argument('--workers', type=int, default=1)
    run.add_argument('--solver', default=None, help='SolverConfig JSON.')
    run.add_argument('--solver-overrides', dest='solver_overrides', default=None,
                     help='KEY=VAL,... applied to the SolverConfig, e.g. TERMINATION_TIME_MS=10.')
    run.add_argument('--config', default=None, help='BumperConfig JSON.')
    run.add_argument('--overrides', default=None, help='KEY=VAL,... applied to the BumperConfig.')
    run.add_argument('--qoi', default=None, help='QoiConfig JSON.')
    run.add_argument('--thresholds', default=None, help='QcThresholds JSON.')
    run.add_argument('--overwrite', action='store_true', help='Replace existing case directories.')
    run.set_defaults(handler=cmd_run)

    split = commands.add_parser('split', help='Split the passing cases of a campaign.')
    split.add_argument('--root', required=True)
    split.add_argument('--fractions', default='0.7,0.15,0.15')
    split.add_argument('--seed', type=int, default=None)
    split.add_argument('--out', default=None, help='Split JSON; <root>/splits.json by default.')
    split.set_defaults(handler=cmd_split)

    train_parser = commands.add_parser('train', help='Train the mesh surrogate.')
    train_parser.add_argument('--root', required=True)
    train_parser.add_argument('--splits', default=None)
    train_parser.add_argument('--model', default=None, help='CrashSolverConfig JSON.')
    train_parser.add_argument('--model-overrides', dest='model_overrides', default=None,
                              help='KEY=VAL,... applied to the CrashSolverConfig.')
    train_parser.add_argument('--schedule', default=None, help='TrainSchedule JSON.')
    train_parser.add_argument('--epochs', type=int, default=None)
    train_parser.add_argument('--steps', type=int, default=None, help='Optimiser step cap.')
    train_parser.add_argument('--components', default=None, help='Part-to-component JSON table.')
    train_parser.add_argument('--seed', type=int, default=None)
    train_parser.add_argument('--out', required=True, help='Checkpoint to write.')
    train_parser.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser('eval', help='Score checkpoints on a split.')
    evaluate.add_argument('--root', required=True)
    evaluate.add_argument('--splits', default=None)
    evaluate.add_argument('--split', choices=['train', 'validation', 'test'], default='test')
    evaluate.add_argument('--ckpt', required=True, help='Comma separated checkpoints; "zero" is the zero baseline.')
    evaluate.add_argument('--probe-ms', dest='probe_ms', type=float, default=None)
    evaluate.add_argument('--components', default=None, help='Part-to-component JSON table.')
    evaluate.add_argument('--seed', type=int, default=None)
    evaluate.add_argument('--out', default=None, help='Output directory; <root>/eval by default.')
    evaluate.set_defaults(handler=cmd_eval)

    stats = commands.add_parser('stats', help='Paired significance tests between per-case metric files.')
    stats.add_argument('--metrics', required=True)
    stats.add_argument('--against', required=True, help='Comma separated metric files.')
    stats.add_argument('--replicates', type=int, default=10000)
    stats.add_argument('--permutations', type=int, default=10000)
    stats.add_argument('--seed', type=int, default=None)
    stats.add_argument('--out', default=None, help='Output directory; next to --metrics by default.')
    stats.set_defaults(handler=cmd_stats)

    filter_parser = commands.add_parser('filter', help='CFC-filter one channel of a history file.')
    filter_parser.add_argument('--in', dest='input', required=True)
    filter_parser.add_argument('--channel', required=True)
    filter_parser.add_argument('--cfc', type=float, default=60)
    filter_parser.add_argument('--out', default=None,
                               help='CSV to write; <stem>_<channel>_cfc<class>.csv beside the input by default.')
    filter_parser.set_defaults(handler=cmd_filter)

    describe_parser = commands.add_parser('describe', help='Dataset statistics of a campaign.')
    describe_parser.add_argument('--root', required=True)
    describe_parser.set_defaults(handler=cmd_describe)

    tabular = commands.add_parser('tabular', help='Ridge and kNN baselines on the master table.')
    tabular.add_argument('--root', required=True)
    tabular.add_argument('--splits', default=None)
    tabular.add_argument('--alpha', type=float, default=1.0)
    tabular.add_argument('--k', type=int, default=10)
    tabular.add_argument('--seed', type=int, default=None)
    tabular.add_argument('--out', default=None, help='CSV to write; <root>/tabular.csv by default.')
    tabular.set_defaults(handler=cmd_tabular)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        return args.handler(args)
    except BundleExistsError as error:
        logger.error('%s; rerun with --overwrite to replace it', error)
        return EXIT_COLLISION
    except (InfeasibleSpaceError, InfeasibleAnchorError, TrainingDivergedError) as error:
        logger.error('%s', error)
        return EXIT_EMPTY
    except (FileNotFoundError, InvalidConfigError, PairingError, ShapeMismatchError, CorruptBundleError) as error:
        logger.error('%s', error)
        return EXIT_USAGE
