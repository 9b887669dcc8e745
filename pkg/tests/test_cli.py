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


import json
import shutil

import numpy as np
import pandas as pd
import pytest

from conftest import small_plan

from crashbench.cli import EXIT_COLLISION, EXIT_EMPTY, EXIT_OK, EXIT_USAGE, RUN_MANIFEST_FILE, build_parser, main
from crashbench.crashbench_classes import CampaignKind
from crashbench.assembly import DesignSpace
from crashbench.datastore import MASTER_FILE, SplitSet, read_bundle, read_master
from crashbench.datastore.bundle import HISTORY_FILE
from crashbench.doe import CampaignPlan


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(['--help'])
    assert excinfo.value.code == 0
    assert 'plan' in capsys.readouterr().out


def test_a_command_is_required():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([])
    assert excinfo.value.code == 2


def test_plan_writes_a_plan_and_a_manifest(tmp_path):
    out = tmp_path / 'plan.json'
    assert main(['plan', '--kind', 'bumper', '--count', '12', '--seed', '3', '--out', str(out)]) == EXIT_OK
    values = json.loads(out.read_text(encoding='utf-8'))
    assert values['seed'] == 3
    assert len(values['cases']) == 12
    manifest = json.loads((tmp_path / RUN_MANIFEST_FILE).read_text(encoding='utf-8'))
    assert manifest['command'] == 'plan'
    assert manifest['seed'] == 3


def test_plan_without_a_size_is_a_usage_error(tmp_path):
    assert main(['plan', '--out', str(tmp_path / 'plan.json')]) == EXIT_USAGE


def test_plan_with_a_bad_override_is_a_usage_error(tmp_path):
    assert main(['plan', '--count', '12', '--overrides', 'NO_SUCH_KEY=1',
                 '--out', str(tmp_path / 'plan.json')]) == EXIT_USAGE


def test_run_with_a_missing_plan_is_a_usage_error(tmp_path):
    assert main(['run', '--plan', str(tmp_path / 'missing.json'), '--out', str(tmp_path / 'campaign')]) == EXIT_USAGE


def test_split_writes_the_requested_file(campaign_root, tmp_path):
    out = tmp_path / 'splits.json'
    assert main(['split', '--root', str(campaign_root), '--seed', '1', '--out', str(out)]) == EXIT_OK
    splits = SplitSet.from_json(out)
    assert sum(splits.sizes) == 8
    assert (tmp_path / RUN_MANIFEST_FILE).exists()


def test_split_with_bad_fractions_is_a_usage_error(campaign_root, tmp_path):
    assert main(['split', '--root', str(campaign_root), '--fractions', '0.5,0.5',
                 '--out', str(tmp_path / 'splits.json')]) == EXIT_USAGE


def test_filter_adds_a_filtered_column(campaign_root, tmp_path):
    out = tmp_path / 'filtered.csv'
    source = campaign_root / 'sim_00001' / HISTORY_FILE
    assert main(['filter', '--in', str(source), '--channel', 'fx_kN', '--out', str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    original = pd.read_csv(source)
    assert 'fx_kN_cfc60' in frame.columns
    assert len(frame) == len(original)
    np.testing.assert_allclose(frame['fx_kN'], original['fx_kN'])


def test_filter_of_an_unknown_channel_is_a_usage_error(campaign_root, tmp_path):
    source = campaign_root / 'sim_00001' / HISTORY_FILE
    assert main(['filter', '--in', str(source), '--channel', 'ay_g', '--out', str(tmp_path / 'x.csv')]) == EXIT_USAGE


def _metrics_file(path, model, rmse):
    rows = [{'model': model, 'case_id': f'sim_{index:05d}', 'rmse': value, 'mae': value / 2, 'rel_l2_x': 0.0,
             'rel_l2_u': 0.0, 'rmse_at_probe': value, 'rmse_final': value} for index, value in enumerate(rmse)]
    pd.DataFrame(rows).to_csv(path, index=False)
    return path


def test_stats_reports_every_pair(tmp_path):
    first = _metrics_file(tmp_path / 'metrics_a.csv', 'a', [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    second = _metrics_file(tmp_path / 'metrics_b.csv', 'b', [2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    assert main(['stats', '--metrics', str(first), '--against', str(second), '--replicates', '200',
                 '--permutations', '200', '--seed', '0']) == EXIT_OK
    report = json.loads((tmp_path / 'significance.json').read_text(encoding='utf-8'))
    assert {pair['metric'] for pair in report['pairs']} == {'rmse', 'mae'}
    assert (tmp_path / 'significance.txt').exists()


def test_stats_on_different_cases_is_a_usage_error(tmp_path):
    first = _metrics_file(tmp_path / 'metrics_a.csv', 'a', [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    second = _metrics_file(tmp_path / 'metrics_b.csv', 'b', [1.0, 2.0, 3.0, 4.0, 5.0])
    assert main(['stats', '--metrics', str(first), '--against', str(second)]) == EXIT_USAGE


def test_describe_without_a_master_table_is_a_usage_error(tmp_path):
    assert main(['describe', '--root', str(tmp_path)]) == EXIT_USAGE


def test_tabular_scores_the_master_table(campaign_root, tmp_path):
    splits = tmp_path / 'splits.json'
    out = tmp_path / 'tabular.csv'
    assert main(['split', '--root', str(campaign_root), '--seed', '2', '--out', str(splits)]) == EXIT_OK
    assert main(['tabular', '--root', str(campaign_root), '--splits', str(splits), '--k', '3',
                 '--out', str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert not table.empty


def test_filter_without_out_keeps_the_bundle_readable(campaign_root, tmp_path):
    case = tmp_path / 'sim_00001'
    shutil.copytree(campaign_root / 'sim_00001', case)
    assert main(['filter', '--in', str(case / HISTORY_FILE), '--channel', 'fx_kN']) == EXIT_OK
    assert 'fx_kN_cfc60' in pd.read_csv(case / 'history_fx_kN_cfc60.csv').columns
    assert read_bundle(case).case_id == 'sim_00001'


def test_filter_refuses_to_overwrite_a_bundle_history(campaign_root, tmp_path):
    case = tmp_path / 'sim_00001'
    shutil.copytree(campaign_root / 'sim_00001', case)
    history = case / HISTORY_FILE
    assert main(['filter', '--in', str(history), '--channel', 'fx_kN', '--out', str(history)]) == EXIT_USAGE
    read_bundle(case)


#
# run
#
SMALL_RUN = ['--overrides', 'CRASH_BOX_NODES=3',
             '--solver-overrides', 'TERMINATION_TIME_MS=2.0,ANIMATION_INTERVAL_MS=0.5']


def test_run_of_an_empty_plan_reports_no_passing_cases(tmp_path):
    plan = tmp_path / 'plan.json'
    CampaignPlan(CampaignKind.BUMPER, DesignSpace.bumper(1), 42).to_json(plan)
    assert main(['run', '--plan', str(plan), '--out', str(tmp_path / 'campaign')] + SMALL_RUN) == EXIT_EMPTY


def test_rerun_without_overwrite_is_a_collision(tmp_path):
    plan = tmp_path / 'plan.json'
    small_plan(1).to_json(plan)
    root = tmp_path / 'campaign'
    assert main(['run', '--plan', str(plan), '--out', str(root)] + SMALL_RUN) == EXIT_OK
    text = (root / MASTER_FILE).read_text()
    before = read_master(root / MASTER_FILE)
    assert main(['run', '--plan', str(plan), '--out', str(root)] + SMALL_RUN) == EXIT_COLLISION
    assert (root / MASTER_FILE).read_text() == text
    assert main(['run', '--plan', str(plan), '--out', str(root), '--overwrite'] + SMALL_RUN) == EXIT_OK
    pd.testing.assert_frame_equal(read_master(root / MASTER_FILE), before)


@pytest.mark.slow
def test_run_master_table_does_not_depend_on_workers(tmp_path):
    plan = tmp_path / 'plan.json'
    small_plan(4).to_json(plan)
    for workers in ('1', '4'):
        assert main(['run', '--plan', str(plan), '--out', str(tmp_path / workers), '--workers', workers]
                    + SMALL_RUN) == EXIT_OK
    assert (tmp_path / '1' / MASTER_FILE).read_text() == (tmp_path / '4' / MASTER_FILE).read_text()
