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

"""Case bundles, the master table, splits and campaign orchestration."""

import shutil

import numpy as np
import pandas as pd
import pytest

from conftest import small_plan

from crashbench.crashbench_classes import (BumperConfig, BundleExistsError, CorruptBundleError, InvalidConfigError,
                                           Origin)
from crashbench.assembly import DesignVector
from crashbench.datastore import (MASTER_FILE, CaseBuilder, SplitSet, ccf_size, make_splits, master_table,
                                  master_row, read_bundle, read_fields, read_master, run_campaign)
from crashbench.datastore.bundle import FIELDS_FILE, HEADER
from crashbench.datastore.campaign import FAILED_DIR, NUMERICAL_BLOWUP, PROGRESS_FILE
from crashbench.doe import PlanEntry


def test_bundle_round_trip(campaign_root):
    bundle = read_bundle(campaign_root / 'sim_00001')
    trajectory = bundle.trajectory
    assert bundle.passed and bundle.qoi is not None
    assert trajectory.frame_count == 5
    assert np.all(trajectory.displacements[0] == 0.0)
    assert (campaign_root / 'sim_00001' / FIELDS_FILE).stat().st_size == ccf_size(
        trajectory.frame_count, trajectory.node_count, trajectory.element_count)
    assert bundle.design.v == 6.0
    assert bundle.metadata['x_c_mm'] == pytest.approx(-150.0)
    assert len(bundle.histories) == 21


def test_ccf_size_and_header():
    assert HEADER.itemsize == 28
    assert ccf_size(0, 0, 0) == 28
    assert ccf_size(2, 3, 1) == 28 + 2 * (27 + 3) * 8 + 4 * (3 + 2)


def test_corrupt_containers_report_offsets(campaign_root, tmp_path):
    original = (campaign_root / 'sim_00002' / FIELDS_FILE).read_bytes()
    path = tmp_path / FIELDS_FILE

    path.write_bytes(b'XXXX' + original[4:])
    with pytest.raises(CorruptBundleError) as error:
        read_fields(path)
    assert error.value.offset == 0

    path.write_bytes(original[:-4])
    with pytest.raises(CorruptBundleError):
        read_fields(path)

    poisoned = bytearray(original)
    poisoned[HEADER.itemsize + 8:HEADER.itemsize + 16] = np.array([np.nan], dtype='<f8').tobytes()
    path.write_bytes(bytes(poisoned))
    with pytest.raises(CorruptBundleError) as error:
        read_fields(path)
    assert error.value.offset == HEADER.itemsize + 8


def test_master_table_matches_bundles(campaign_root):
    incremental = read_master(campaign_root / MASTER_FILE)
    rebuilt = master_table(campaign_root)
    assert len(rebuilt) == 8
    assert rebuilt['case_id'].tolist() == sorted(rebuilt['case_id'])
    pd.testing.assert_frame_equal(incremental, rebuilt)
    assert rebuilt['t_imp_ms'].equals(rebuilt['t2_ms'] - rebuilt['t1_ms'])
    assert (campaign_root / PROGRESS_FILE).exists()


def test_rerun_refuses_existing_cases(campaign_root, small_config, short_solver):
    with pytest.raises(BundleExistsError):
        run_campaign(small_plan(8), CaseBuilder('bumper', small_config), short_solver, campaign_root)


@pytest.mark.slow
def test_worker_count_does_not_change_results(tmp_path, small_config, short_solver):
    builder = CaseBuilder('bumper', small_config)
    run_campaign(small_plan(3), builder, short_solver, tmp_path / 'serial', workers=1)
    run_campaign(small_plan(3), builder, short_solver, tmp_path / 'parallel', workers=2)
    serial = (tmp_path / 'serial' / MASTER_FILE).read_text()
    assert serial == (tmp_path / 'parallel' / MASTER_FILE).read_text()
    assert len(serial.strip().splitlines()) == 4


def test_blowup_lands_in_failed(tmp_path, small_config, short_solver):
    short_solver.MAX_STEPS = 3
    report = run_campaign(small_plan(1), CaseBuilder('bumper', small_config), short_solver, tmp_path)
    assert report.passed == []
    assert report.failed['sim_00001'][0] == NUMERICAL_BLOWUP
    assert report.reason_counts()[NUMERICAL_BLOWUP] == 1
    assert (tmp_path / FAILED_DIR / 'sim_00001').is_dir()
    assert not (tmp_path / 'sim_00001').exists()
    assert read_master(tmp_path / MASTER_FILE).empty


def test_overwrite_replaces_failed_case(tmp_path, small_config, short_solver):
    builder = CaseBuilder('bumper', small_config)
    failing = short_solver.copy()
    failing.MAX_STEPS = 3
    run_campaign(small_plan(1), builder, failing, tmp_path)
    report = run_campaign(small_plan(1), builder, short_solver, tmp_path, overwrite=True)
    assert report.passed == ['sim_00001']
    assert not (tmp_path / FAILED_DIR / 'sim_00001').exists()
    assert len(read_master(tmp_path / MASTER_FILE)) == 1


def test_builder_rejects_bad_geometry(tmp_path, short_solver):
    config = BumperConfig()
    config.BEAM_NODES = 5
    report = run_campaign(small_plan(1), CaseBuilder('bumper', config), short_solver, tmp_path)
    assert report.failed == {'sim_00001': ['build-error']}


def test_splits_partition_the_cases():
    ids = [f'sim_{index:05d}' for index in range(1, 101)]
    splits = make_splits(ids, (0.7, 0.15, 0.15), seed=42)
    assert splits.sizes == (70, 15, 15)
    assert sorted(splits.train + splits.validation + splits.test) == ids
    assert make_splits(ids, seed=42).to_dict() == splits.to_dict()
    assert make_splits(ids, seed=43).train != splits.train
    assert make_splits(ids[:10], seed=1).sizes == (7, 1, 2)
    assert make_splits(ids, '0.5,0.2,0.1', seed=1).sizes == (50, 20, 10)


def test_split_errors():
    ids = [f'sim_{index:05d}' for index in range(1, 4)]
    with pytest.raises(InvalidConfigError):
        make_splits(ids, (0.7, 0.2, 0.2))
    with pytest.raises(InvalidConfigError):
        make_splits(ids, (0.7, 0.15, 0.15))
    with pytest.raises(InvalidConfigError):
        make_splits(ids, 'a,b,c')


def test_split_file_round_trip(tmp_path, campaign_root):
    splits = make_splits(master_table(campaign_root), (0.5, 0.25, 0.25), seed=0)
    splits.to_json(tmp_path / 'splits.json')
    loaded = SplitSet.from_json(tmp_path / 'splits.json')
    assert loaded.to_dict() == splits.to_dict()


def test_campaign_directory_copy_rebuilds_identically(campaign_root, tmp_path):
    copy = tmp_path / 'copy'
    shutil.copytree(campaign_root, copy)
    pd.testing.assert_frame_equal(master_table(copy), master_table(campaign_root))


def test_vehicle_rows_carry_every_design_variable(small_config):
    entry = PlanEntry('sim_00001', DesignVector(v=36.0, s_front=1.1, s_rail=0.9), Origin.LHS, 2)
    built = CaseBuilder('vehicle', small_config)(entry)
    assert built.inputs['v'] == pytest.approx(10.0)
    assert built.inputs['t_cb'] == pytest.approx(1.1 * small_config.T_CB_MM)
    assert built.inputs['t_rail'] == pytest.approx(0.9 * small_config.T_RAIL_MM)
    qoi = {'f_wall_max': 1.0, 'e_int_max': 2.0, 'eta_ke': 0.5, 'a_max': 3.0, 't1': 1.0, 't2': 2.0, 't_imp': 1.0,
           'w_p_max': 1.5, 'e_kin_0': 4.0, 'qc': {'energy_error_pct': 0.1, 'hourglass_pct': 0.0,
                                                  'added_mass_pct': 0.0, 'final_time_ms': 2.0}}
    manifest = {'case_id': entry.case_id, 'phase': 2, 'qoi': qoi,
                'metadata': {'inputs': built.inputs, 'x_c_mm': None}}
    row = master_row(manifest)
    assert row['t_rail'] == pytest.approx(0.9 * small_config.T_RAIL_MM)
    assert np.isnan(row['d_pole']) and np.isnan(row['y_pole'])


def test_bumper_rows_leave_the_rail_column_empty(campaign_root):
    master = read_master(campaign_root / MASTER_FILE)
    assert master['t_rail'].isna().all()
    assert master['d_pole'].notna().all()
