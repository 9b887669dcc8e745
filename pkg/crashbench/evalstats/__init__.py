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

"""Per-case field metrics, the paired significance protocol and tabular regression metrics."""

from crashbench.evalstats.metrics import (CaseMetrics, LEADERBOARD_COLUMNS, METRIC_COLUMNS, case_metrics, leaderboard,
                                          metrics_frame, probe_frame)
from crashbench.evalstats.significance import (PairedComparison, SignificanceReport, bootstrap_ci, exact_wilcoxon,
                                               paired_tests, sign_flip_p, significance_report, wilcoxon_p)
from crashbench.evalstats.tabular import regression_metrics, tabular_benchmark

__all__ = ['CaseMetrics', 'LEADERBOARD_COLUMNS', 'METRIC_COLUMNS', 'case_metrics', 'leaderboard', 'metrics_frame',
           'probe_frame', 'PairedComparison', 'SignificanceReport', 'bootstrap_ci', 'exact_wilcoxon', 'paired_tests',
           'sign_flip_p', 'significance_report', 'wilcoxon_p', 'regression_metrics', 'tabular_benchmark']
