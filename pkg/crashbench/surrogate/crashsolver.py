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

"""Hierarchical mesh surrogate predicting the displacement sequence of a case from its undeformed mesh.

Pipeline: per-node features, a per-component slicing-attention encoder with weights shared across components,
a global attention mixer over component summaries and learned contact tokens, message passing across component
interfaces and a one-shot temporal decoder that emits every output frame from the final node latents."""

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from crashbench.crashbench_classes import CrashSolverConfig, InvalidConfigError, ShapeMismatchError
from crashbench.surrogate.tensor import Tensor, concat, stack


logger = logging.getLogger(__name__)

SLICE_WEIGHT_FLOOR = 1e-12


@dataclass
class LearningSample:
    """Inputs and target of one case.

    ``parts`` are dense part labels (rows of the embedding table), ``components`` semantic component labels,
    ``thickness`` the per-node gauge in mm and ``design`` the design vector scaled to [0, 1]. The target holds the
    displacements of the output frames only; frame 0 (the undeformed mesh) is the input. ``mask`` optionally
    restricts the loss to a retained node subset."""
    reference: np.ndarray
    edges: np.ndarray
    parts: np.ndarray
    components: np.ndarray
    thickness: np.ndarray
    design: np.ndarray
    target: np.ndarray = None
    mask: np.ndarray = None
    times: np.ndarray = None
    case_id: str = ''

    def __post_init__(self):
        self.reference = np.asarray(self.reference, dtype=np.float64)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.parts = np.asarray(self.parts, dtype=np.int64)
        self.components = np.asarray(self.components, dtype=np.int64)
        self.thickness = np.asarray(self.thickness, dtype=np.float64)
        self.design = np.asarray(self.design, dtype=np.float64)
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=np.float64)

    @property
    def node_count(self) -> int:
        return self.reference.shape[0]

    def permuted(self, order):
        """The same case with its nodes stored in ``order``."""
        order = np.asarray(order)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        return LearningSample(
            reference=self.reference[order], edges=inverse[self.edges], parts=self.parts[order],
            components=self.components[order], thickness=self.thickness[order], design=self.design,
            target=None if self.target is None else self.target[:, order],
            mask=None if self.mask is None else self.mask[order], times=self.times, case_id=self.case_id)


#
# Component labels and the interface graph
#
def component_names(table: dict) -> list:
    return sorted(set(str(name) for name in table.values()))


def component_map(parts, table: dict = None, components: int = 5) -> np.ndarray:
    """Semantic component label of every node.

    :param parts: FE part id of every node.
    :param dict table: part id to component name; names are numbered in sorted order. Part ids missing from the
                       table fall into stable hash buckets over the component count.
    :param int components: number of components C.
    :raise InvalidConfigError: when C < 1 or the table names more than C components.
    """
    if components < 1:
        raise InvalidConfigError(f'Invalid value for parameter "components". Expected "components >= 1"; '
                                 f'received "{components}"')
    table = {} if table is None else {int(part_id): name for part_id, name in table.items()}
    names = component_names(table)
    if len(names) > components:
        raise InvalidConfigError(f'Invalid value for parameter "table". Expected "at most {components} component '
                                 f'names"; received "{names}"')
    index = {name: position for position, name in enumerate(names)}
    labels = [index[str(table[part_id])] if part_id in table else zlib.crc32(str(part_id).encode()) % components
              for part_id in (int(part_id) for part_id in np.asarray(parts).reshape(-1))]
    return np.array(labels, dtype=np.int64)


@dataclass
class InterfaceGraph:
    """Undirected component graph. ``nodes[(a, b)]`` (a < b) lists the endpoints of the mesh edges joining a and b."""
    edges: list = field(default_factory=list)
    nodes: dict = field(default_factory=dict)

    def receivers(self, source: int, target: int, components: np.ndarray) -> np.ndarray:
        """Interface nodes of component ``target`` on its boundary with ``source``."""
        shared = self.nodes[(min(source, target), max(source, target))]
        return shared[components[shared] == target]


def interface_graph(edges, components) -> InterfaceGraph:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    components = np.asarray(components)
    first, second = components[edges[:, 0]], components[edges[:, 1]]
    crossing = first != second
    nodes = {}
    for (a, b), label_a, label_b in zip(edges[crossing], first[crossing], second[crossing]):
        key = (int(min(label_a, label_b)), int(max(label_a, label_b)))
        nodes.setdefault(key, set()).update((int(a), int(b)))
    nodes = {key: np.array(sorted(value), dtype=np.int64) for key, value in sorted(nodes.items())}
    directed = sorted([key for key in nodes] + [(b, a) for a, b in nodes])
    return InterfaceGraph(directed, nodes)


#
# Fixed encodings
#
def positional_encoding(points: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoids of the normalised coordinates: pair j uses axis j mod 3 at frequency 2^(j div 3)."""
    columns = []
    for pair in range(dim // 2):
        angle = np.pi * 2.0 ** (pair // 3) * points[:, pair % 3]
        columns.extend([np.sin(angle), np.cos(angle)])
    return np.column_stack(columns) if columns else np.zeros((points.shape[0], 0))


def time_encoding(frames: int, dim: int) -> np.ndarray:
    """One row per output frame k = 1..n of sinusoids of k/n."""
    times = np.arange(1, frames + 1) / frames
    columns = []
    for pair in range(dim // 2):
        angle = np.pi * 2.0 ** pair * times
        columns.extend([np.sin(angle), np.cos(angle)])
    return np.column_stack(columns)


def normalize_reference(reference: np.ndarray) -> np.ndarray:
    """Per-sample min-max scaling of every axis to [-1, 1]; a flat axis maps to 0."""
    low, high = reference.min(axis=0), reference.max(axis=0)
    span = np.where(high > low, high - low, 1.0)
    scaled = 2.0 * (reference - low) / span - 1.0
    scaled[:, high <= low] = 0.0
    return scaled


#
# The model
#
class CrashSolver:
    """Parameters and forward pass of the hierarchical surrogate."""

    def __init__(self, config: CrashSolverConfig = None, seed: int = None):
        self.config = CrashSolverConfig() if config is None else config
        self.config.validate()
        self.seed = int(self.config.SEED if seed is None else seed)
        self.output_scale = 1.0
        self.tau_scale = 1.0
        self.parameters = self._initialize()
        logger.debug('CrashSolver with %d parameters', self.parameter_count)

    @property
    def feature_dim(self) -> int:
        return 3 + 1 + self.config.POSITIONAL_DIM + self.config.DESIGN_DIM

    @property
    def parameter_count(self) -> int:
        return int(sum(tensor.data.size for tensor in self.parameters.values()))

    def _initialize(self) -> dict:
        config = self.config
        rng = np.random.default_rng(self.seed)
        latent, hidden = config.LATENT_DIM, config.DECODER_HIDDEN
        shapes = {
            'input.weight': (self.feature_dim, latent), 'input.bias': (latent,),
            'part.embedding': (config.PARTS, config.PART_EMBEDDING_DIM),
            'part.weight': (config.PART_EMBEDDING_DIM, latent),
        }
        for layer in range(config.ENCODER_LAYERS):
            shapes[f'encoder.{layer}.slice'] = (latent, config.ENCODER_SLICES)
            for name in ('query', 'key', 'value', 'out'):
                shapes[f'encoder.{layer}.{name}'] = (latent, latent)
        for layer in range(config.GLOBAL_LAYERS):
            for name in ('query', 'key', 'value', 'out', 'mlp1', 'mlp2'):
                shapes[f'global.{layer}.{name}'] = (latent, latent)
            shapes[f'global.{layer}.mlp1_bias'] = (latent,)
        shapes.update({
            'contact.tokens': (config.CONTACT_TOKENS, latent),
            'broadcast.weight': (latent, latent),
            'message.weight': (latent, latent), 'message.bias': (latent,),
            'decoder.latent': (latent, hidden), 'decoder.time': (config.POSITIONAL_DIM, hidden),
            'decoder.bias': (hidden,), 'decoder.out': (hidden, 3), 'decoder.out_bias': (3,),
        })
        parameters = {}
        for name, shape in shapes.items():
            if name.endswith('bias') or (config.ZERO_INIT_DECODER and name == 'decoder.out'):
                values = np.zeros(shape)
            elif name in ('part.embedding', 'contact.tokens'):
                values = 0.1 * rng.standard_normal(shape)
            else:
                values = rng.standard_normal(shape) / np.sqrt(shape[0])
            parameters[name] = Tensor(values, requires_grad=True, name=name)
        return parameters

    def state(self) -> dict:
        return {name: tensor.data.copy() for name, tensor in self.parameters.items()}

    def load_state(self, values: dict):
        for name, tensor in self.parameters.items():
            if values[name].shape != tensor.shape:
                raise ShapeMismatchError('checkpoint', f'{name}: expected {tensor.shape}, found {values[name].shape}')
            tensor.data = np.array(values[name], dtype=np.float64)

    def zero_grad(self):
        for tensor in self.parameters.values():
            tensor.zero_grad()

    def _act(self, tensor: Tensor) -> Tensor:
        return tensor.tanh() if self.config.ACTIVATION == 'tanh' else tensor

    #
    # Stages
    #
    def features(self, sample: LearningSample) -> np.ndarray:
        """Constant node features: normalised coordinates, scaled gauge, positional encoding and the design."""
        config = self.config
        count = sample.node_count
        if sample.reference.ndim != 2 or sample.reference.shape[1] != 3:
            raise ShapeMismatchError('features', f'reference must be N x 3, found {sample.reference.shape}')
        for name in ('parts', 'components', 'thickness'):
            if np.asarray(getattr(sample, name)).shape != (count,):
                raise ShapeMismatchError('features', f'{name} must hold {count} values')
        if np.asarray(sample.design).shape != (config.DESIGN_DIM,):
            raise ShapeMismatchError('features', f'design must hold {config.DESIGN_DIM} values, found '
                                                 f'{np.asarray(sample.design).shape}')
        if count and (sample.parts.min() < 0 or sample.parts.max() >= config.PARTS):
            raise ShapeMismatchError('features', f'part labels must lie in [0, {config.PARTS})')
        if count and (sample.components.min() < 0 or sample.components.max() >= config.COMPONENTS):
            raise ShapeMismatchError('features', f'component labels must lie in [0, {config.COMPONENTS})')
        points = normalize_reference(sample.reference)
        return np.column_stack([points, np.asarray(sample.thickness) / self.tau_scale,
                                positional_encoding(points, config.POSITIONAL_DIM),
                                np.broadcast_to(sample.design, (count, config.DESIGN_DIM))])

    def _encode(self, h: Tensor, masks: list) -> Tensor:
        latent = self.config.LATENT_DIM
        for layer in range(self.config.ENCODER_LAYERS):
            p = {name: self.parameters[f'encoder.{layer}.{name}'] for name in ('slice', 'query', 'key', 'value', 'out')}
            assignment = (h @ p['slice']).softmax(axis=1)
            update = None
            for mask in masks:
                weights = assignment * mask
                totals = weights.sum(axis=0, keepdims=True) + SLICE_WEIGHT_FLOOR
                tokens = (weights.T @ h) / totals.T
                scores = ((tokens @ p['query']) @ (tokens @ p['key']).T) * (1.0 / np.sqrt(latent))
                mixed = self._act((scores.softmax(axis=1) @ (tokens @ p['value'])) @ p['out'])
                part = weights @ mixed
                update = part if update is None else update + part
            h = h + update
        return h

    def _mix(self, summaries: Tensor) -> Tensor:
        config = self.config
        heads, width = config.GLOBAL_HEADS, config.LATENT_DIM // config.GLOBAL_HEADS
        count = summaries.shape[0]
        tokens = concat([summaries, self.parameters['contact.tokens']], axis=0)
        for layer in range(config.GLOBAL_LAYERS):
            p = {name: self.parameters[f'global.{layer}.{name}']
                 for name in ('query', 'key', 'value', 'out', 'mlp1', 'mlp1_bias', 'mlp2')}
            query, key, value = tokens @ p['query'], tokens @ p['key'], tokens @ p['value']
            outputs = []
            for head in range(heads):
                columns = (slice(None), slice(head * width, (head + 1) * width))
                scores = (query[columns] @ key[columns].T) * (1.0 / np.sqrt(width))
                outputs.append(scores.softmax(axis=1) @ value[columns])
            tokens = tokens + self._act(concat(outputs, axis=1) @ p['out'])
            tokens = tokens + self._act(tokens @ p['mlp1'] + p['mlp1_bias']) @ p['mlp2']
        # Contact tokens stay in the global stage
        return tokens[:count]

    def forward(self, sample: LearningSample) -> Tensor:
        """Predicted displacements (n x N x 3, mm) as a Tensor connected to the parameters."""
        config = self.config
        p = self.parameters
        features = self.features(sample)
        h = self._act(Tensor(features) @ p['input.weight'] + p['input.bias']
                      + p['part.embedding'][np.asarray(sample.parts, dtype=np.int64)] @ p['part.weight'])
        if h.shape != (sample.node_count, config.LATENT_DIM):
            raise ShapeMismatchError('encoder', f'node latents have shape {h.shape}')

        if not config.BYPASS_ATTENTION:
            present = np.unique(sample.components)
            indicator = (sample.components[:, None] == present[None, :]).astype(np.float64)
            masks = [indicator[:, [column]] for column in range(present.size)]
            pooling = indicator.T / indicator.sum(axis=0)[:, None]
            h = self._encode(h, masks)

            mixed = self._mix(Tensor(pooling) @ h)
            h = h + self._act(Tensor(indicator) @ (mixed @ p['broadcast.weight']))

            graph = interface_graph(sample.edges, sample.components)
            position = {int(label): index for index, label in enumerate(present)}
            for _ in range(config.MESSAGE_PASSING_ROUNDS):
                if not graph.edges:
                    break
                summaries = Tensor(pooling) @ h
                update = None
                for source, target in graph.edges:
                    receivers = np.zeros((sample.node_count, 1))
                    receivers[graph.receivers(source, target, sample.components)] = 1.0
                    message = self._act(summaries[position[source]:position[source] + 1] @ p['message.weight']
                                        + p['message.bias'])
                    term = Tensor(receivers) * message
                    update = term if update is None else update + term
                h = h + update

        base = h @ p['decoder.latent'] + p['decoder.bias']
        time_rows = time_encoding(config.FRAMES, config.POSITIONAL_DIM)
        frames = []
        for frame in range(config.FRAMES):
            hidden = self._act(base + Tensor(time_rows[frame:frame + 1]) @ p['decoder.time'])
            frames.append(hidden @ p['decoder.out'] + p['decoder.out_bias'])
        output = stack(frames) * self.output_scale
        if output.shape != (config.FRAMES, sample.node_count, 3):
            raise ShapeMismatchError('decoder', f'output has shape {output.shape}')
        return output

    def predict(self, sample: LearningSample) -> np.ndarray:
        return self.forward(sample).data.copy()


class ZeroModel:
    """Predict-zero-displacement baseline: the undeformed mesh at every frame."""
    name = 'zero'

    def __init__(self, frames: int = None):
        self.frames = frames

    def predict(self, sample: LearningSample) -> np.ndarray:
        frames = sample.target.shape[0] if self.frames is None else self.frames
        return np.zeros((frames, sample.node_count, 3))


def loss(prediction, target, mask=None):
    """Mean squared displacement error (mm^2) over frames, nodes and axes; with a node mask, over retained nodes.

    Works on Tensors (for training) and on plain arrays.
    """
    if tuple(prediction.shape) != tuple(np.shape(target)):
        raise ShapeMismatchError('loss', f'prediction {tuple(prediction.shape)} vs target {np.shape(target)}')
    target = np.asarray(target, dtype=np.float64)
    if isinstance(prediction, Tensor):
        difference = prediction - Tensor(target)
        if mask is None:
            return difference.square().mean()
        weights = np.asarray(mask, dtype=np.float64)[None, :, None]
        squared = difference.square() * Tensor(weights)
        return squared.sum() * (1.0 / (target.shape[0] * weights.sum() * 3))
    difference = np.asarray(prediction, dtype=np.float64) - target
    if mask is None:
        return float(np.mean(difference ** 2))
    weights = np.asarray(mask, dtype=np.float64)[None, :, None]
    return float(np.sum(difference ** 2 * weights) / (target.shape[0] * weights.sum() * 3))
