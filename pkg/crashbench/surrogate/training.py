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

"""Adam training with best-validation selection, and a finite-difference gradient check."""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from crashbench.crashbench_classes import InvalidConfigError, TrainSchedule, TrainingDivergedError
from crashbench.surrogate.crashsolver import CrashSolver, LearningSample, loss


logger = logging.getLogger(__name__)

# Gradient mismatch tolerated per entry before the relative error counts
GRAD_ATOL = 1e-8


class Adam:
    """First-order optimiser with per-parameter first and second moment estimates."""

    def __init__(self, parameters: dict, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8):
        self.parameters = parameters
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.first = {name: np.zeros_like(tensor.data) for name, tensor in parameters.items()}
        self.second = {name: np.zeros_like(tensor.data) for name, tensor in parameters.items()}
        self.steps = 0

    def step(self):
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps
        for name, tensor in self.parameters.items():
            if tensor.grad is None:
                continue
            self.first[name] = self.beta1 * self.first[name] + (1.0 - self.beta1) * tensor.grad
            self.second[name] = self.beta2 * self.second[name] + (1.0 - self.beta2) * tensor.grad ** 2
            update = (self.first[name] / correction1) / (np.sqrt(self.second[name] / correction2) + self.epsilon)
            tensor.data = tensor.data - self.learning_rate * update


@dataclass
class TrainingResult:
    """Loss history (one row per epoch) and the epoch whose parameters were kept."""
    history: pd.DataFrame
    best_epoch: int
    steps: int
    states: dict = field(default_factory=dict, repr=False)


def best_epoch(validation_losses) -> int:
    """1-based epoch of the smallest validation loss; the earliest wins ties. 0 when there is none."""
    losses = np.asarray(validation_losses, dtype=np.float64)
    if losses.size == 0 or np.all(np.isnan(losses)):
        return 0
    return int(np.nanargmin(losses)) + 1


def displacement_scale(samples) -> float:
    """Root-mean-square target displacement of a sample set (1 when it is zero)."""
    squares = [np.mean(sample.target ** 2) for sample in samples]
    scale = float(np.sqrt(np.mean(squares))) if squares else 0.0
    return scale if scale > 0 else 1.0


def thickness_scale(samples) -> float:
    values = np.concatenate([sample.thickness for sample in samples]) if samples else np.array([])
    scale = float(np.median(values)) if values.size else 0.0
    return scale if scale > 0 else 1.0


def evaluate(model: CrashSolver, samples) -> float:
    """Mean per-sample loss, NaN for an empty set."""
    if not samples:
        return float('nan')
    return float(np.mean([loss(model.predict(sample), sample.target, sample.mask) for sample in samples]))


def train(model: CrashSolver, samples, validation=(), schedule: TrainSchedule = None,
          fit_scales: bool = True) -> TrainingResult:
    """Trains the model one sample per optimiser step and keeps the best-validation parameters.

    Without validation samples the parameters of the last epoch are kept.

    :param CrashSolver model: the model; its parameters are replaced by the selected snapshot.
    :param samples: training LearningSamples (non-empty, with targets).
    :param validation: validation LearningSamples.
    :param TrainSchedule schedule: epochs, step cap, learning rate and moment decays.
    :param bool fit_scales: set the output and thickness scales from the training samples first.
    :raise TrainingDivergedError: on a non-finite training loss.
    """
    samples, validation = list(samples), list(validation)
    if not samples:
        raise InvalidConfigError('Invalid value for parameter "samples". Expected "a non-empty training set"; '
                                 'received "0 samples"')
    schedule = TrainSchedule() if schedule is None else schedule
    schedule.validate()
    if fit_scales:
        model.output_scale = displacement_scale(samples)
        model.tau_scale = thickness_scale(samples)
    optimizer = Adam(model.parameters, schedule.LEARNING_RATE, schedule.BETA1, schedule.BETA2, schedule.EPSILON)
    rng = np.random.default_rng(schedule.SEED)
    rows, states = [], {0: model.state()}
    last_finite = float('nan')

    for epoch in range(1, schedule.EPOCHS + 1):
        losses = []
        for index in rng.permutation(len(samples)):
            sample = samples[index]
            model.zero_grad()
            value = loss(model.forward(sample), sample.target, sample.mask)
            if not np.isfinite(value.data):
                raise TrainingDivergedError(f'Non-finite training loss at epoch {epoch}, step {optimizer.steps}, '
                                            f'case "{sample.case_id}"; last finite loss {last_finite:.6g}')
            last_finite = float(value.data)
            losses.append(last_finite)
            if schedule.MAX_STEPS >= 0 and optimizer.steps >= schedule.MAX_STEPS:
                continue
            value.backward()
            optimizer.step()
        validation_loss = evaluate(model, validation)
        rows.append({'epoch': epoch, 'train_loss': float(np.mean(losses)), 'validation_loss': validation_loss})
        states[epoch] = model.state()
        logger.debug('Epoch %d: train %.6g, validation %.6g', epoch, rows[-1]['train_loss'], validation_loss)

    history = pd.DataFrame(rows, columns=['epoch', 'train_loss', 'validation_loss'])
    chosen = best_epoch(history['validation_loss']) if validation else schedule.EPOCHS
    model.load_state(states[chosen])
    logger.info('Trained %d epoch(s), %d step(s); keeping epoch %d', schedule.EPOCHS, optimizer.steps, chosen)
    return TrainingResult(history, chosen, optimizer.steps, {chosen: states[chosen]})


def grad_check(model: CrashSolver, sample: LearningSample, eps: float = 1e-6, count: int = 50,
               seed: int = 0, names=None, atol: float = GRAD_ATOL) -> float:
    """Largest relative difference between reverse-mode and central finite-difference gradients of the loss.

    Entries are drawn at random over the parameters in ``names`` (all of them by default), every entry when there
    are fewer than ``count``. Each entry is judged on its own: the part of the difference above ``atol`` is taken
    relative to the larger of its two gradient magnitudes.

    :raise InvalidConfigError: when eps lies outside [1e-7, 1e-3] or a name is not a model parameter.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InvalidConfigError(f'Invalid value for parameter "eps". Expected "1e-7 <= eps <= 1e-3"; '
                                 f'received "{eps}"')
    model.zero_grad()
    loss(model.forward(sample), sample.target, sample.mask).backward()
    names = list(model.parameters) if names is None else list(names)
    unknown = sorted(set(names) - set(model.parameters))
    if unknown:
        raise InvalidConfigError(f'Invalid value for parameter "names". Expected model parameters; '
                                 f'received "{unknown}"')
    entries = [(name, position) for name in names for position in range(model.parameters[name].data.size)]
    rng = np.random.default_rng(seed)
    if len(entries) > count:
        entries = [entries[index] for index in sorted(rng.choice(len(entries), size=count, replace=False))]

    analytic, numeric = [], []
    for name, position in entries:
        tensor = model.parameters[name]
        gradient = np.zeros(tensor.data.size) if tensor.grad is None else tensor.grad.reshape(-1)
        analytic.append(gradient[position])
        flat = tensor.data.reshape(-1)
        original = flat[position]
        flat[position] = original + eps
        upper = loss(model.predict(sample), sample.target, sample.mask)
        flat[position] = original - eps
        lower = loss(model.predict(sample), sample.target, sample.mask)
        flat[position] = original
        numeric.append((upper - lower) / (2.0 * eps))
    analytic, numeric = np.array(analytic), np.array(numeric)
    excess = np.maximum(np.abs(analytic - numeric) - atol, 0.0)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), np.finfo(np.float64).tiny)
    return float(np.max(excess / scale)) if analytic.size else 0.0
