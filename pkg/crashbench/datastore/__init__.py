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

"""Case bundles, the master table, split files and campaign orchestration."""

from crashbench.datastore.bundle import (CaseBundle, write_bundle, read_bundle, read_fields, write_fields, ccf_size,
                                         read_manifest, read_history)
from crashbench.datastore.tables import (MASTER_COLUMNS, MASTER_FILE, SPLITS_FILE, SplitSet, master_table, master_row,
                                         write_master, read_master, append_master_row, make_splits, parse_fractions)
from crashbench.datastore.campaign import (BuiltCase, CaseBuilder, CaseOutcome, CampaignReport, run_case,
                                           run_campaign)

__all__ = ['CaseBundle', 'write_bundle', 'read_bundle', 'read_fields', 'write_fields', 'ccf_size', 'read_manifest',
           'read_history', 'MASTER_COLUMNS', 'MASTER_FILE', 'SPLITS_FILE', 'SplitSet', 'master_table', 'master_row',
           'write_master', 'read_master', 'append_master_row', 'make_splits', 'parse_fractions', 'BuiltCase',
           'CaseBuilder', 'CaseOutcome', 'CampaignReport', 'run_case', 'run_campaign']
