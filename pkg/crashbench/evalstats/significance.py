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

"""Paired significance protocol: bootstrap confidence intervals, win rates, sign-flip permutation tests and
Wilcoxon signed-rank tests over per-case metrics."""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from crashbench.crashbench_classes import InvalidConfigError, PairingError


logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 10000
DEFAULT_PERMUTATIONS = 10000
EXACT_WILCOXON_LIMIT = 20
MIN_PAIRS = 5
COMPARED_METRICS = ('rmse', 'mae')


def bootstrap_ci(values, replicates: int = DEFAULT_REPLICATES, seed: int = 0, level: float = 0.95):
    """Mean and percentile confidence interval of the mean, by resampling with replacement.

    :return: (mean, lower, upper).
    :raise InvalidConfigError: with fewer than two values or fewer than 100 replicates.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size < 2:
        raise InvalidConfigError(f'Invalid value for parameter "values". Expected "at least 2 values"; '
                                 f'received "{values.size}"')
    if replicates < 100:
        raise InvalidConfigError(f'Invalid value for parameter "replicates". Expected "replicates >= 100"; '
                                 f'received "{replicates}"')
    if not 0 < level < 1:
        raise InvalidConfigError(f'Invalid value for parameter "level". Expected "0 < level < 1"; received "{level}"')
    rng = np.random.default_rng(seed)
    mean = float(np.mean(values))
    means = values[rng.integers(0, values.size, size=(replicates, values.size))].mean(axis=1)
    lower, upper = np.percentile(means, [50.0 * (1.0 - level), 50.0 * (1.0 + level)])
    return mean, min(float(lower), mean), max(float(upper), mean)


def _signed_rank_data(differences: np.ndarray) -> (np.ndarray, np.ndarray):
    """Doubled average ranks of |d| (integers) and the positive-sign mask, zeros dropped."""
    nonzero = differences[differences != 0]
    doubled = np.round(2.0 * stats.rankdata(np.abs(nonzero))).astype(np.int64)
    return doubled, nonzero > 0


def exact_wilcoxon(differences) -> float:
    """Two-sided exact signed-rank p-value by counting every sign assignment of the (tie-averaged) ranks."""
    doubled, positive = _signed_rank_data(np.asarray(differences, dtype=np.float64))
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for rank in doubled:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[:counts.size - rank]
        counts = counts + shifted
    distribution = counts / counts.sum()
    observed = int(doubled[positive].sum())
    lower = distribution[:observed + 1].sum()
    upper = distribution[observed:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_p(differences) -> (float, bool):
    """Two-sided Wilcoxon signed-rank p-value with zeros dropped.

    Exact up to 20 non-zero differences, normal approximation with tie-corrected variance above.

    :return: the p-value and whether it is defined (False when every difference is zero; the p-value is then 1).
    """
    differences = np.asarray(differences, dtype=np.float64)
    nonzero = np.count_nonzero(differences)
    if nonzero == 0:
        return 1.0, False
    if nonzero <= EXACT_WILCOXON_LIMIT:
        return exact_wilcoxon(differences), True
    result = stats.wilcoxon(differences, zero_method='wilcox', correction=False, alternative='two-sided',
                            method='approx')
    return float(result.pvalue), True


def sign_flip_p(differences, permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0) -> float:
    """Two-sided sign-flip permutation p-value of the mean difference, (1 + hits) / (1 + draws)."""
    differences = np.asarray(differences, dtype=np.float64)
    if not np.any(differences):
        return 1.0
    rng = np.random.default_rng(seed)
    observed = abs(differences.mean())
    signs = rng.choice(np.array([-1.0, 1.0]), size=(permutations, differences.size))
    flipped = np.abs((signs * differences).mean(axis=1))
    hits = int(np.count_nonzero(flipped >= observed * (1.0 - 1e-12)))
    return (1.0 + hits) / (1.0 + permutations)


@dataclass
class PairedComparison:
    """Outcome of one paired comparison; the difference is the first model minus the second."""
    first: str
    second: str
    metric: str
    n: int
    mean_difference: float
    ci_lower: float
    ci_upper: float
    win_rate: float
    permutation_p: float
    wilcoxon_p: float
    wilcoxon_defined: bool = True


def paired_tests(a, b, permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0,
                 replicates: int = DEFAULT_REPLICATES, level: float = 0.95, metric: str = '', names=('a', 'b')):
    """Paired comparison of two per-case metric vectors in the same case order (lower is better).

    :raise PairingError: when the lengths differ or fewer than 5 pairs are given.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise PairingError(f'Paired samples differ in length: {a.size} vs {b.size}')
    if a.size < MIN_PAIRS:
        raise PairingError(f'At least {MIN_PAIRS} paired cases are required; received {a.size}')
    differences = a - b
    mean, lower, upper = bootstrap_ci(differences, replicates, seed, level)
    p_wilcoxon, defined = wilcoxon_p(differences)
    return PairedComparison(
        first=names[0], second=names[1], metric=metric, n=int(a.size), mean_difference=mean, ci_lower=lower,
        ci_upper=upper, win_rate=float(np.mean(differences < 0)),
        permutation_p=sign_flip_p(differences, permutations, seed), wilcoxon_p=p_wilcoxon, wilcoxon_defined=defined)


@dataclass
class SignificanceReport:
    """Per-model means with bootstrap intervals and every paired comparison."""
    replicates: int
    permutations: int
    seed: int
    models: dict = field(default_factory=dict)
    pairs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {'replicates': self.replicates, 'permutations': self.permutations, 'seed': self.seed,
                'models': self.models, 'pairs': [asdict(pair) for pair in self.pairs]}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + '\n', encoding='utf-8')
        return text

    def table(self) -> pd.DataFrame:
        """Pairs, mean difference with its interval, win rate, permutation p and Wilcoxon p."""
        rows = [{'pair': f'{pair.first} vs {pair.second}', 'metric': pair.metric,
                 'mean_diff': pair.mean_difference, 'ci_lower': pair.ci_lower, 'ci_upper': pair.ci_upper,
                 'win_rate': pair.win_rate, 'permutation_p': pair.permutation_p, 'wilcoxon_p': pair.wilcoxon_p}
                for pair in self.pairs]
        return pd.DataFrame(rows, columns=['pair', 'metric', 'mean_diff', 'ci_lower', 'ci_upper', 'win_rate',
                                           'permutation_p', 'wilcoxon_p'])


def _paired_frames(first: pd.DataFrame, second: pd.DataFrame) -> (pd.DataFrame, pd.DataFrame):
    ids_first, ids_second = set(first['case_id']), set(second['case_id'])
    if ids_first != ids_second:
        missing = sorted(ids_first.symmetric_difference(ids_second))
        raise PairingError(f'Metric files cover different cases: {missing[:5]}{"..." if len(missing) > 5 else ""}')
    if first['case_id'].duplicated().any() or second['case_id'].duplicated().any():
        raise PairingError('Duplicate case ids in a metric file')
    return (first.sort_values('case_id').reset_index(drop=True),
            second.sort_values('case_id').reset_index(drop=True))


def significance_report(reference: pd.DataFrame, others, replicates: int = DEFAULT_REPLICATES,
                        permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0,
                        metrics=COMPARED_METRICS) -> SignificanceReport:
    """Compares one model's per-case metrics against every other model's, pairing rows by case id.

    :param reference: per-case metrics table (``model``, ``case_id`` and metric columns) of the first model.
    :param others: iterable of tables of the comparison models.
    """
    report = SignificanceReport(replicates, permutations, seed)
    frames = [reference] + list(others)
    for frame in frames:
        name = str(frame['model'].iloc[0]) if len(frame) else 'model'
        report.models[name] = {metric: dict(zip(('mean', 'ci_lower', 'ci_upper'),
                                                bootstrap_ci(frame[metric], replicates, seed)))
                               for metric in metrics}
    first_name = str(reference['model'].iloc[0]) if len(reference) else 'model'
    for other in frames[1:]:
        first, second = _paired_frames(reference, other)
        second_name = str(other['model'].iloc[0]) if len(other) else 'model'
        for metric in metrics:
            report.pairs.append(paired_tests(first[metric], second[metric], permutations, seed, replicates,
                                             metric=metric, names=(first_name, second_name)))
    logger.info('Compared %d model(s) over %d case(s)', len(frames), len(reference))
    return report
