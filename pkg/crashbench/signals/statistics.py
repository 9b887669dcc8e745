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

"""Dataset-statistics table of a campaign: min, median and max of every input and response column."""

import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError


def describe(master: pd.DataFrame, columns=None) -> pd.DataFrame:
    """Returns one row per column with its count, minimum, median and maximum.

    :param master: a master table.
    :param columns: columns to summarise; all numeric columns except the case id and the phase by default.
    """
    if columns is None:
        columns = [column for column in master.select_dtypes('number').columns if column not in ('phase',)]
    missing = [column for column in columns if column not in master.columns]
    if missing:
        raise InvalidConfigError(f'Invalid value for parameter "columns". Expected master columns; '
                                 f'received "{missing}"')
    rows = []
    for column in columns:
        values = pd.to_numeric(master[column], errors='coerce').dropna()
        rows.append({'quantity': column, 'count': int(values.size),
                     'min': values.min() if values.size else float('nan'),
                     'median': values.median() if values.size else float('nan'),
                     'max': values.max() if values.size else float('nan')})
    return pd.DataFrame(rows, columns=['quantity', 'count', 'min', 'median', 'max'])
