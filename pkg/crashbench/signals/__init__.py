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

"""Time histories, CFC filtering, reduced QoIs and the quality screen."""

from crashbench.signals.histories import TimeHistories, HISTORY_COLUMNS
from crashbench.signals.cfc import cfc_filter, cfc60, cfc_coefficients, two_pass_gain
from crashbench.signals.qoi import QoiRecord, QcDiagnostics, extract_qoi, force_window
from crashbench.signals.screen import quality_screen, qc_diagnostics
from crashbench.signals.statistics import describe

__all__ = ['TimeHistories', 'HISTORY_COLUMNS', 'cfc_filter', 'cfc60', 'cfc_coefficients', 'two_pass_gain',
           'QoiRecord', 'QcDiagnostics', 'extract_qoi', 'force_window', 'quality_screen', 'qc_diagnostics',
           'describe']
