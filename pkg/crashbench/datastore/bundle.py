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

"""Case bundles on disk: ``manifest.json``, ``history.csv`` and the ``fields.ccf`` binary container.

The ``.ccf`` layout (all little-endian) is a 28-byte header (magic ``CCF1``, format version, frame, node and element
counts as u32, then the frame interval as f64), one f64 block per frame holding node coordinates (N x 3),
displacements (N x 3), velocities (N x 3), element stress (E), plastic strain (E) and erosion flags as 0/1 (E), and
finally the u32 id tables of nodes (N), elements (E) and element parts (E)."""

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import BundleExistsError, CorruptBundleError, Origin, enum_from_name
from crashbench.assembly import DesignVector
from crashbench.signals import HISTORY_COLUMNS, QoiRecord, TimeHistories
from crashbench.solver import FieldTrajectory, TerminationReport


logger = logging.getLogger(__name__)

MAGIC = b'CCF1'
FORMAT_VERSION = 1
HEADER = np.dtype([('magic', 'S4'), ('version', '<u4'), ('frames', '<u4'), ('nodes', '<u4'), ('elements', '<u4'),
                   ('dt_anim', '<f8')])
MANIFEST_FILE = 'manifest.json'
HISTORY_FILE = 'history.csv'
FIELDS_FILE = 'fields.ccf'
PASSED = 'passed'
FAILED = 'failed'


@dataclass
class CaseBundle:
    """One simulated case: design, field trajectory, histories, QoIs and metadata."""
    case_id: str
    design: DesignVector
    origin: Origin
    phase: int
    seed: int
    status: str
    trajectory: FieldTrajectory
    histories: TimeHistories
    report: TerminationReport
    qoi: QoiRecord = None
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def manifest(self) -> dict:
        return {
            'case_id': self.case_id,
            'design': self.design.to_dict(),
            'origin': self.origin.name.lower(),
            'phase': self.phase,
            'seeds': {'plan': self.seed},
            'status': self.status,
            'qoi': None if self.qoi is None else self.qoi.to_dict(),
            'termination': self.report.to_dict(),
            'metadata': self.metadata,
        }


#
# fields.ccf
#
def ccf_size(frames: int, nodes: int, elements: int) -> int:
    """Exact byte size of a container with the given counts."""
    return HEADER.itemsize + frames * (9 * nodes + 3 * elements) * 8 + 4 * (nodes + 2 * elements)


def write_fields(trajectory: FieldTrajectory, path):
    header = np.zeros(1, dtype=HEADER)
    header[0] = (MAGIC, FORMAT_VERSION, trajectory.frame_count, trajectory.node_count, trajectory.element_count,
                 trajectory.dt_anim)
    positions = trajectory.positions
    with open(Path(path), 'wb') as ccf_file:
        ccf_file.write(header.tobytes())
        for frame in range(trajectory.frame_count):
            block = np.concatenate([positions[frame].reshape(-1), trajectory.displacements[frame].reshape(-1),
                                    trajectory.velocities[frame].reshape(-1), trajectory.stress[frame],
                                    trajectory.plastic_strain[frame], trajectory.eroded[frame].astype(np.float64)])
            ccf_file.write(block.astype('<f8').tobytes())
        for ids in (trajectory.node_ids, trajectory.element_ids, trajectory.part_ids):
            ccf_file.write(np.asarray(ids).astype('<u4').tobytes())


def read_fields(path) -> FieldTrajectory:
    """Reads and validates a ``.ccf`` container.

    :raise CorruptBundleError: on a bad magic or version, a size mismatch or non-finite values; the error names the
                               byte offset of the first offending item.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER.itemsize:
        raise CorruptBundleError(f'{path}: truncated header', len(data))
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if header['magic'] != MAGIC:
        raise CorruptBundleError(f'{path}: bad magic {bytes(header["magic"])!r}', 0)
    if header['version'] != FORMAT_VERSION:
        raise CorruptBundleError(f'{path}: unsupported format version {int(header["version"])}', 4)
    frames, nodes, elements = int(header['frames']), int(header['nodes']), int(header['elements'])
    expected = ccf_size(frames, nodes, elements)
    if len(data) != expected:
        raise CorruptBundleError(f'{path}: expected {expected} bytes for {frames} frames, {nodes} nodes and '
                                 f'{elements} elements; found {len(data)}', min(len(data), expected))
    if not header['dt_anim'] > 0:
        raise CorruptBundleError(f'{path}: non-positive frame interval {float(header["dt_anim"])}', 20)

    block = 9 * nodes + 3 * elements
    offset = HEADER.itemsize
    values = np.frombuffer(data, dtype='<f8', count=frames * block, offset=offset).reshape(frames, block)
    bad = np.flatnonzero(~np.isfinite(values.reshape(-1)))
    if bad.size:
        raise CorruptBundleError(f'{path}: non-finite value in frame data', offset + 8 * int(bad[0]))
    id_offset = offset + frames * block * 8
    ids = np.frombuffer(data, dtype='<u4', offset=id_offset).astype(np.int64)

    split = np.cumsum([3 * nodes, 3 * nodes, 3 * nodes, elements, elements])
    coordinates, displacements, velocities, stress, plastic, eroded = np.split(values, split, axis=1)
    reference = coordinates[0].reshape(nodes, 3) if frames else np.zeros((nodes, 3))
    return FieldTrajectory(
        times=np.round(np.arange(frames) * float(header['dt_anim']), 12),
        reference=reference,
        displacements=displacements.reshape(frames, nodes, 3).copy(),
        velocities=velocities.reshape(frames, nodes, 3).copy(),
        stress=stress.copy(),
        plastic_strain=plastic.copy(),
        eroded=eroded != 0,
        node_ids=ids[:nodes],
        element_ids=ids[nodes:nodes + elements],
        part_ids=ids[nodes + elements:],
        dt_anim=float(header['dt_anim']),
    )


#
# Whole bundles
#
def write_bundle(bundle: CaseBundle, root_dir, overwrite: bool = False) -> Path:
    """Writes ``<root>/<case_id>/`` with the manifest, the history table and the field container.

    :raise BundleExistsError: when the case directory exists and overwrite is False.
    """
    trajectory = bundle.trajectory
    if trajectory.frame_count and np.any(trajectory.displacements[0] != 0):
        raise CorruptBundleError(f'{bundle.case_id}: frame 0 must be the reference configuration')
    path = Path(root_dir) / bundle.case_id
    if path.exists():
        if not overwrite:
            raise BundleExistsError(f'Case directory "{path}" already exists')
        shutil.rmtree(path)
    path.mkdir(parents=True)
    with open(path / MANIFEST_FILE, 'w', encoding='utf-8') as manifest_file:
        json.dump(bundle.manifest(), manifest_file, indent=2)
        manifest_file.write('\n')
    bundle.histories.to_frame().to_csv(path / HISTORY_FILE, index=False)
    write_fields(trajectory, path / FIELDS_FILE)
    logger.debug('Wrote bundle %s', path)
    return path


def read_history(path) -> TimeHistories:
    frame = pd.read_csv(path, float_precision='round_trip')
    if list(frame.columns) != HISTORY_COLUMNS:
        raise CorruptBundleError(f'{path}: unexpected history header {list(frame.columns)}', 0)
    return TimeHistories.from_frame(frame)


def read_manifest(path) -> dict:
    path = Path(path)
    with open(path / MANIFEST_FILE if path.is_dir() else path, encoding='utf-8') as manifest_file:
        return json.load(manifest_file)


def read_bundle(path) -> CaseBundle:
    """Reads a case directory back into a CaseBundle and checks its invariants."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f'Case directory "{path}" does not exist')
    manifest = read_manifest(path)
    if manifest.get('case_id') != path.name:
        raise CorruptBundleError(f'{path}: manifest case_id "{manifest.get("case_id")}" does not match the directory')
    trajectory = read_fields(path / FIELDS_FILE)
    topology = manifest.get('metadata', {}).get('topology')
    if topology is not None and list(topology['node_ids']) != trajectory.node_ids.tolist():
        raise CorruptBundleError(f'{path}: node ids differ from the manifest topology')
    qoi = manifest.get('qoi')
    return CaseBundle(
        case_id=manifest['case_id'],
        design=DesignVector.from_mapping(manifest['design']),
        origin=enum_from_name(Origin, manifest['origin']),
        phase=int(manifest['phase']),
        seed=int(manifest.get('seeds', {}).get('plan', 0)),
        status=manifest['status'],
        trajectory=trajectory,
        histories=read_history(path / HISTORY_FILE),
        report=TerminationReport.from_dict(manifest['termination']),
        qoi=None if qoi is None else QoiRecord.from_dict(qoi),
        metadata=manifest.get('metadata', {}),
    )
