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

"""Field metrics, the leaderboard, paired significance tests and the tabular benchmark."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from crashbench.crashbench_classes import InvalidConfigError, PairingError, ShapeMismatchError
from crashbench.datastore import SplitSet, make_splits
from crashbench.datastore.tables import INPUT_COLUMNS, QOI_COLUMNS
from crashbench.evalstats import (LEADERBOARD_COLUMNS, bootstrap_ci, case_metrics, exact_wilcoxon, leaderboard,
                                  metrics_frame, paired_tests, probe_frame, regression_metrics, sign_flip_p,
                                  significance_report, tabular_benchmark, wilcoxon_p)


def metric_table(model: str, rmse, mae=None) -> pd.DataFrame:
    rmse = np.asarray(rmse, dtype=np.float64)
    return pd.DataFrame({'model': model, 'case_id': [f'sim_{index:05d}' for index in range(1, rmse.size + 1)],
                         'rmse': rmse, 'mae': rmse if mae is None else mae})


#
# Field metrics
#
def test_case_metrics_example():
    reference = np.array([[3.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    target = np.zeros((2, 2, 3))
    target[..., 0] = 1.0
    metrics = case_metrics(np.zeros_like(target), target, reference)
    assert metrics.rmse == pytest.approx(1.0)
    assert metrics.mae == pytest.approx(1.0)
    assert metrics.rel_l2_u == pytest.approx(1.0)
    assert metrics.rel_l2_x == pytest.approx(0.25)
    assert metrics.rmse_final == pytest.approx(1.0)
    perfect = case_metrics(target, target, reference)
    assert perfect.rmse == 0.0 and perfect.rel_l2_u == 0.0


def test_case_metrics_errors():
    reference = np.zeros((2, 3))
    with pytest.raises(InvalidConfigError):
        case_metrics(np.zeros((1, 2, 3)), np.zeros((1, 2, 3)), reference)
    with pytest.raises(ShapeMismatchError):
        case_metrics(np.zeros((1, 2, 3)), np.ones((2, 2, 3)), reference)


def test_probe_frame():
    times = [0.5, 1.0, 1.5, 2.0]
    assert probe_frame(times) == 1
    assert probe_frame(times, 1.2) == 1
    assert probe_frame(times, 2.0) == 3
    with pytest.raises(InvalidConfigError):
        probe_frame(times, 3.0)


def test_leaderboard_ranks_by_rmse():
    reference = np.zeros((1, 3))
    target = np.ones((2, 1, 3))
    good = [case_metrics(0.9 * target, target, reference), case_metrics(1.1 * target, target, reference)]
    bad = [case_metrics(np.zeros_like(target), target, reference)] * 2
    board = leaderboard([metrics_frame('zero', ['a', 'b'], bad), metrics_frame('model', ['a', 'b'], good)])
    assert board.columns.tolist() == LEADERBOARD_COLUMNS
    assert board['model'].tolist() == ['model', 'zero']
    assert board['rank'].tolist() == [1, 2]
    assert board.loc[1, 'rmse'] == pytest.approx(np.sqrt(3.0))


#
# Significance
#
def test_exact_wilcoxon_small_samples():
    assert exact_wilcoxon([-1.0, -2.0, -3.0, -4.0, -5.0]) == pytest.approx(0.0625)
    differences = np.array([-0.3, 1.2, -2.5, -0.7, -1.9, 0.4, -3.1, -0.2])
    expected = stats.wilcoxon(differences, method='exact').pvalue
    assert exact_wilcoxon(differences) == pytest.approx(expected, rel=1e-9)


def test_wilcoxon_zero_differences_are_undefined():
    assert wilcoxon_p(np.zeros(6)) == (1.0, False)
    p, defined = wilcoxon_p(np.r_[np.zeros(3), [-1.0, -2.0, -3.0, -4.0, -5.0]])
    assert defined and p == pytest.approx(0.0625)
    p, defined = wilcoxon_p(-np.arange(1.0, 31.0))
    assert defined and p < 1e-4


def test_sign_flip_and_bootstrap():
    differences = -np.linspace(1.0, 2.0, 10)
    assert sign_flip_p(differences, 2000, seed=1) < 0.01
    assert sign_flip_p(np.zeros(10)) == 1.0
    mean, lower, upper = bootstrap_ci(differences, 2000, seed=1)
    assert lower <= mean <= upper
    assert mean == pytest.approx(-1.5)
    assert bootstrap_ci([2.0, 2.0, 2.0], 500) == (2.0, 2.0, 2.0)
    with pytest.raises(InvalidConfigError):
        bootstrap_ci([1.0], 500)
    with pytest.raises(InvalidConfigError):
        bootstrap_ci([1.0, 2.0], 10)


def test_paired_tests_outcome():
    rng = np.random.default_rng(0)
    b = rng.uniform(2.0, 3.0, 12)
    a = b - rng.uniform(0.5, 1.0, 12)
    comparison = paired_tests(a, b, permutations=2000, replicates=2000, metric='rmse', names=('model', 'zero'))
    assert comparison.win_rate == 1.0
    assert comparison.ci_upper < 0
    assert comparison.permutation_p < 0.01 and comparison.wilcoxon_p < 0.01
    with pytest.raises(PairingError):
        paired_tests(a, b[:-1])
    with pytest.raises(PairingError):
        paired_tests(a[:4], b[:4])


def test_significance_report_of_identical_models(tmp_path):
    values = np.linspace(1.0, 2.0, 8)
    report = significance_report(metric_table('a', values), [metric_table('b', values)], replicates=500,
                                 permutations=500)
    assert set(report.models) == {'a', 'b'}
    assert [pair.metric for pair in report.pairs] == ['rmse', 'mae']
    for pair in report.pairs:
        assert pair.permutation_p == 1.0 and pair.wilcoxon_p == 1.0
        assert not pair.wilcoxon_defined
        assert pair.mean_difference == 0.0
    assert len(report.table()) == 2
    report.to_json(tmp_path / 'significance.json')
    assert (tmp_path / 'significance.json').read_text().startswith('{')


def test_significance_report_pairs_by_case_id():
    values = np.linspace(1.0, 2.0, 8)
    shuffled = metric_table('b', values + 1.0).iloc[::-1]
    report = significance_report(metric_table('a', values), [shuffled], replicates=500, permutations=500)
    assert report.pairs[0].mean_difference == pytest.approx(-1.0)
    other = metric_table('b', values)
    other.loc[0, 'case_id'] = 'sim_99999'
    with pytest.raises(PairingError):
        significance_report(metric_table('a', values), [other], replicates=500, permutations=500)


#
# Tabular benchmark
#
def test_regression_metrics_example():
    metrics = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert metrics['r2'] == pytest.approx(0.5)
    assert metrics['mae'] == pytest.approx(1.0 / 3.0)
    assert metrics['rmse'] == pytest.approx(np.sqrt(1.0 / 3.0))
    assert metrics['mape_pct'] == pytest.approx(100.0 / 9.0)
    assert np.isnan(regression_metrics([2.0, 2.0], [1.0, 3.0])['r2'])


def test_tabular_benchmark_on_a_linear_table():
    rng = np.random.default_rng(4)
    count = 60
    master = pd.DataFrame({'case_id': [f'sim_{index:05d}' for index in range(1, count + 1)]})
    for column in INPUT_COLUMNS:
        master[column] = rng.uniform(1.0, 2.0, count)
    master[['t_bb', 'sigma_y_cb', 'sigma_y_bb', 't_rail']] = 1.5
    master['d_pole'] = np.nan
    master['y_pole'] = np.nan
    for offset, column in enumerate(QOI_COLUMNS):
        master[column] = 3.0 * master['v'] - 2.0 * master['t_cb'] + offset + 5.0
    splits = make_splits(master, (0.7, 0.15, 0.15), seed=0)
    table = tabular_benchmark(master, splits, targets=['f_wall_max_kN', 'e_int_max_kJ'], alpha=1e-8, k=5)
    assert table['model'].tolist() == ['ridge', 'ridge', 'knn', 'knn']
    ridge = table[table['model'] == 'ridge']
    assert np.all(ridge['r2'] > 0.999999)
    assert np.all(table[table['model'] == 'knn']['r2'] > 0.5)


def test_tabular_benchmark_needs_features():
    master = pd.DataFrame({'case_id': ['a', 'b', 'c']})
    for column in INPUT_COLUMNS + QOI_COLUMNS:
        master[column] = np.nan
    splits = SplitSet(0, (0.4, 0.3, 0.3), ['a'], ['b'], ['c'])
    with pytest.raises(InvalidConfigError):
        tabular_benchmark(master, splits)
