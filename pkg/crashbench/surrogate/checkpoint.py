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

"""Model checkpoints: magic ``CKP1``, u32 format version, u32 header length, a UTF-8 JSON header (config, seed,
scales, tensor names, shapes and offsets) and the named tensors as little-endian f64."""

import json
from pathlib import Path

import numpy as np

from crashbench.crashbench_classes import CorruptBundleError, CrashSolverConfig
from crashbench.surrogate.crashsolver import CrashSolver, ZeroModel


MAGIC = b'CKP1'
FORMAT_VERSION = 1
ZERO_CHECKPOINT = 'zero'


def save_checkpoint(model: CrashSolver, path, metadata: dict = None) -> Path:
    tensors, offset = [], 0
    for name, tensor in model.parameters.items():
        tensors.append({'name': name, 'shape': list(tensor.shape), 'offset': offset})
        offset += tensor.data.size * 8
    header = json.dumps({'config': model.config.as_dict(), 'seed': model.seed, 'output_scale': model.output_scale,
                         'tau_scale': model.tau_scale, 'tensors': tensors, 'metadata': metadata or {}},
                        sort_keys=True).encode('utf-8')
    path = Path(path)
    with open(path, 'wb') as checkpoint_file:
        checkpoint_file.write(MAGIC)
        checkpoint_file.write(np.array([FORMAT_VERSION, len(header)], dtype='<u4').tobytes())
        checkpoint_file.write(header)
        for tensor in model.parameters.values():
            checkpoint_file.write(tensor.data.astype('<f8').tobytes())
    return path


def read_header(path) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CorruptBundleError(f'{path}: bad checkpoint magic {data[:4]!r}', 0)
    version, length = np.frombuffer(data, dtype='<u4', count=2, offset=4)
    if version != FORMAT_VERSION:
        raise CorruptBundleError(f'{path}: unsupported checkpoint version {int(version)}', 4)
    return json.loads(data[12:12 + int(length)].decode('utf-8'))


def load_checkpoint(path):
    """Loads a CrashSolver, or the zero-displacement baseline for the pseudo-path ``zero``."""
    if str(path) == ZERO_CHECKPOINT:
        return ZeroModel()
    data = Path(path).read_bytes()
    header = read_header(path)
    length = int(np.frombuffer(data, dtype='<u4', count=1, offset=8)[0])
    start = 12 + length
    config = CrashSolverConfig().update_from(header['config'])
    model = CrashSolver(config, header['seed'])
    values = {}
    for entry in header['tensors']:
        count = int(np.prod(entry['shape'], dtype=np.int64))
        offset = start + entry['offset']
        if offset + 8 * count > len(data):
            raise CorruptBundleError(f'{path}: truncated tensor "{entry["name"]}"', offset)
        values[entry['name']] = np.frombuffer(data, dtype='<f8', count=count, offset=offset).reshape(entry['shape'])
    model.load_state(values)
    model.output_scale = float(header['output_scale'])
    model.tau_scale = float(header['tau_scale'])
    return model
