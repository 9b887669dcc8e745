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

"""The master table of passing cases and the train/validation/test split files."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError
from crashbench.datastore.bundle import MANIFEST_FILE, PASSED, read_manifest


INPUT_COLUMNS = ['v', 't_cb', 't_bb', 'sigma_y_cb', 'sigma_y_bb', 't_rail', 'd_pole', 'y_pole']
QOI_COLUMNS = ['f_wall_max_kN', 'e_int_max_kJ', 'eta_ke_pct', 'a_max_mm_ms2', 't1_ms', 't2_ms', 't_imp_ms',
               'w_p_max_kJ', 'e_kin_0_kJ']
QC_COLUMNS = ['energy_error_pct', 'hourglass_pct', 'added_mass_pct', 'final_time_ms']
MASTER_COLUMNS = ['case_id'] + INPUT_COLUMNS + ['x_c_mm'] + QOI_COLUMNS + QC_COLUMNS + ['phase']
MASTER_FILE = 'master.csv'
SPLITS_FILE = 'splits.json'


def master_row(manifest: dict) -> dict:
    """Master-table row of one passing case manifest. Inputs a campaign kind lacks (pole, rail) stay empty."""
    inputs = manifest['metadata'].get('inputs', {})
    qoi = manifest['qoi']
    qc = qoi['qc']
    row = {'case_id': manifest['case_id']}
    for name in INPUT_COLUMNS:
        row[name] = inputs.get(name, np.nan)
    row['x_c_mm'] = manifest['metadata'].get('x_c_mm', np.nan)
    row.update({
        'f_wall_max_kN': qoi['f_wall_max'], 'e_int_max_kJ': qoi['e_int_max'],
        'eta_ke_pct': round(100.0 * qoi['eta_ke'], 1), 'a_max_mm_ms2': qoi['a_max'], 't1_ms': qoi['t1'],
        't2_ms': qoi['t2'], 't_imp_ms': qoi['t_imp'], 'w_p_max_kJ': qoi['w_p_max'], 'e_kin_0_kJ': qoi['e_kin_0'],
        'energy_error_pct': qc['energy_error_pct'], 'hourglass_pct': qc['hourglass_pct'],
        'added_mass_pct': qc['added_mass_pct'], 'final_time_ms': qc['final_time_ms'], 'phase': manifest['phase'],
    })
    return row


def _frame(rows) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=MASTER_COLUMNS)
    frame = frame.sort_values('case_id', kind='stable').reset_index(drop=True)
    for column in MASTER_COLUMNS[1:]:
        frame[column] = pd.to_numeric(frame[column]).astype(np.float64)
    frame['phase'] = frame['phase'].astype(np.int64)
    return frame


def master_table(root) -> pd.DataFrame:
    """Rebuilds the master table from every passing bundle directly under root, ids ascending."""
    root = Path(root)
    rows = []
    for manifest_path in sorted(root.glob(f'*/{MANIFEST_FILE}')):
        manifest = read_manifest(manifest_path)
        if manifest.get('status') == PASSED:
            rows.append(master_row(manifest))
    return _frame(rows)


def write_master(frame: pd.DataFrame, path):
    frame.to_csv(path, index=False, columns=MASTER_COLUMNS)


def append_master_row(path, row: dict):
    """Appends one row to master.csv, writing the header when the file is new."""
    path = Path(path)
    pd.DataFrame([row], columns=MASTER_COLUMNS).to_csv(path, mode='a', header=not path.exists(), index=False)


def read_master(path) -> pd.DataFrame:
    frame = pd.read_csv(path, float_precision='round_trip', dtype={'case_id': str})
    missing = [column for column in MASTER_COLUMNS if column not in frame.columns]
    if missing:
        raise InvalidConfigError(f'Invalid value for parameter "master". Expected columns "{MASTER_COLUMNS}"; '
                                 f'missing "{missing}"')
    return _frame(frame[MASTER_COLUMNS].to_dict('records'))


#
# Splits
#
@dataclass
class SplitSet:
    """Disjoint train / validation / test case lists."""
    seed: int
    fractions: tuple
    train: list = field(default_factory=list)
    validation: list = field(default_factory=list)
    test: list = field(default_factory=list)

    @property
    def sizes(self) -> tuple:
        return len(self.train), len(self.validation), len(self.test)

    def to_dict(self) -> dict:
        return {'seed': self.seed, 'fractions': list(self.fractions), 'train': self.train,
                'validation': self.validation, 'test': self.test}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + '\n', encoding='utf-8')
        return text

    @classmethod
    def from_json(cls, path):
        with open(Path(path), encoding='utf-8') as json_file:
            values = json.load(json_file)
        return cls(int(values['seed']), tuple(values.get('fractions', ())), list(values['train']),
                   list(values['validation']), list(values['test']))


def parse_fractions(text) -> tuple:
    """Accepts '0.7,0.15,0.15' or a sequence of three numbers."""
    try:
        fractions = tuple(float(item) for item in (text.split(',') if isinstance(text, str) else text))
    except ValueError:
        raise InvalidConfigError(f'Invalid value for parameter "fractions". Expected "a,b,c"; received "{text}"')
    if len(fractions) != 3 or any(value < 0 for value in fractions) or sum(fractions) > 1 + 1e-9:
        raise InvalidConfigError(f'Invalid value for parameter "fractions". Expected "three non-negative values '
                                 f'summing to at most 1"; received "{text}"')
    return fractions


def make_splits(master, fractions=(0.7, 0.15, 0.15), seed: int = 42) -> SplitSet:
    """Deterministic shuffle of the passing case ids, then a contiguous partition.

    When the fractions sum to one the test split takes the remainder, so no case is left out.

    :param master: a master table (or any iterable of case ids).
    :raise InvalidConfigError: when a split with a positive fraction would be empty.
    """
    fractions = parse_fractions(fractions)
    ids = sorted(master['case_id'].tolist() if isinstance(master, pd.DataFrame) else list(master))
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[index] for index in order]
    count = len(shuffled)
    train = int(np.floor(fractions[0] * count + 1e-9))
    validation = int(np.floor(fractions[1] * count + 1e-9))
    if abs(sum(fractions) - 1.0) <= 1e-9:
        test = count - train - validation
    else:
        test = int(np.floor(fractions[2] * count + 1e-9))
    sizes = (train, validation, test)
    if any(size == 0 and fraction > 0 for size, fraction in zip(sizes, fractions)):
        raise InvalidConfigError(f'Invalid value for parameter "cases". Expected "enough cases for non-empty '
                                 f'splits"; received "{count}" for fractions {fractions}')
    return SplitSet(seed, fractions, shuffled[:train], shuffled[train:train + validation],
                    shuffled[train + validation:train + validation + test])
