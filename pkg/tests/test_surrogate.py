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

"""Differentiation core, the mesh surrogate, training, baselines and checkpoints."""

import numpy as np
import pytest

from crashbench.crashbench_classes import (CorruptBundleError, CrashSolverConfig, InvalidConfigError,
                                           ShapeMismatchError, TrainSchedule, TrainingDivergedError)
from crashbench.datastore import read_bundle
from crashbench.surrogate import (CrashSolver, LearningSample, Tensor, ZeroModel, best_epoch, component_map,
                                  evaluate, grad_check, interface_graph, knn_predict, load_checkpoint, loss,
                                  ridge_fit, ridge_predict, sample_from_bundle, save_checkpoint, train)
from crashbench.surrogate import training as training_module
from crashbench.surrogate.checkpoint import read_header
from crashbench.surrogate.dataset import frame_indices


def small_model_config(zero_decoder: bool = True) -> CrashSolverConfig:
    config = CrashSolverConfig()
    config.update_from({'LATENT_DIM': 8, 'GLOBAL_HEADS': 2, 'ENCODER_SLICES': 3, 'FRAMES': 3, 'DECODER_HIDDEN': 8,
                        'POSITIONAL_DIM': 4, 'CONTACT_TOKENS': 2, 'COMPONENTS': 3, 'PARTS': 4, 'DESIGN_DIM': 3,
                        'PART_EMBEDDING_DIM': 4, 'ZERO_INIT_DECODER': zero_decoder})
    return config


def chain_sample(seed: int = 0, nodes: int = 12) -> LearningSample:
    """A bent chain of nodes split over three components."""
    rng = np.random.default_rng(seed)
    reference = np.column_stack([np.linspace(0.0, 110.0, nodes), rng.normal(0.0, 5.0, nodes), np.zeros(nodes)])
    edges = np.column_stack([np.arange(nodes - 1), np.arange(1, nodes)])
    components = np.repeat([0, 1, 2], [nodes // 2, nodes // 3, nodes - nodes // 2 - nodes // 3])
    return LearningSample(reference=reference, edges=edges, parts=np.arange(nodes) % 4, components=components,
                          thickness=np.full(nodes, 1.5), design=rng.random(3),
                          target=rng.normal(0.0, 2.0, (3, nodes, 3)), case_id=f'chain_{seed}')


#
# Tensor core
#
def test_tensor_gradients_with_broadcasting():
    x = Tensor(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]), requires_grad=True)
    b = Tensor(np.array([0.5, -1.0, 2.0]), requires_grad=True)
    ((x * x + b) * 2.0).sum().backward()
    assert np.allclose(x.grad, 4.0 * x.data)
    assert np.allclose(b.grad, [4.0, 4.0, 4.0])


def test_tensor_matmul_and_softmax():
    a = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    w = Tensor(np.ones((3, 2)), requires_grad=True)
    (a @ w).sum().backward()
    assert np.allclose(a.grad, np.full((2, 3), 2.0))
    assert np.allclose(w.grad, np.tile(a.data.sum(axis=0)[:, None], (1, 2)))
    assert np.allclose(a.softmax(axis=1).data.sum(axis=1), 1.0)


#
# The model
#
def test_forward_shape_and_zero_start():
    sample = chain_sample()
    model = CrashSolver(small_model_config())
    prediction = model.predict(sample)
    assert prediction.shape == (3, 12, 3)
    assert np.all(prediction == 0.0)
    assert loss(prediction, sample.target) == pytest.approx(float(np.mean(sample.target ** 2)))


def test_node_permutation_equivariance():
    sample = chain_sample(1)
    model = CrashSolver(small_model_config(zero_decoder=False), seed=5)
    order = np.random.default_rng(2).permutation(sample.node_count)
    direct = model.predict(sample)
    permuted = model.predict(sample.permuted(order))
    assert np.max(np.abs(permuted - direct[:, order])) < 1e-9


@pytest.mark.parametrize('bypass', [False, True])
def test_gradients_match_finite_differences(bypass):
    config = small_model_config(zero_decoder=False)
    config.BYPASS_ATTENTION = bypass
    model = CrashSolver(config, seed=3)
    assert grad_check(model, chain_sample(2), count=40) <= 1e-4


def test_grad_check_rejects_bad_step():
    with pytest.raises(InvalidConfigError):
        grad_check(CrashSolver(small_model_config()), chain_sample(), eps=1e-2)


def test_grad_check_flags_a_wrong_small_gradient(monkeypatch):
    sample = chain_sample(2)
    model = CrashSolver(small_model_config(zero_decoder=False), seed=3)
    model.zero_grad()
    loss(model.forward(sample), sample.target).backward()
    token = model.parameters['contact.tokens']
    tilt = max(1e-6, 10.0 * abs(float(token.grad.reshape(-1)[0])))
    assert grad_check(model, sample, names=['contact.tokens'], count=1000) <= 1e-4

    def tilted_loss(prediction, target, mask=None):
        value = loss(prediction, target, mask)
        # Seen by the finite differences only, never by the backward pass
        return value if isinstance(prediction, Tensor) else value + tilt * float(token.data.reshape(-1)[0])

    monkeypatch.setattr(training_module, 'loss', tilted_loss)
    assert grad_check(model, sample, names=['contact.tokens'], count=1000) > 0.5


def test_grad_check_rejects_unknown_parameter():
    with pytest.raises(InvalidConfigError):
        grad_check(CrashSolver(small_model_config()), chain_sample(), names=['decoder.missing'])


def test_shape_errors_name_the_stage():
    model = CrashSolver(small_model_config())
    sample = chain_sample()
    sample.design = np.zeros(5)
    with pytest.raises(ShapeMismatchError):
        model.predict(sample)
    sample = chain_sample()
    sample.parts = np.full(sample.node_count, 4)
    with pytest.raises(ShapeMismatchError):
        model.predict(sample)
    with pytest.raises(ShapeMismatchError):
        loss(np.zeros((2, 12, 3)), chain_sample().target)


def test_masked_loss():
    target = np.zeros((2, 4, 3))
    target[:, 0, :] = 2.0
    mask = np.array([True, False, False, False])
    assert loss(np.zeros_like(target), target, mask) == pytest.approx(4.0)
    assert loss(np.zeros_like(target), target) == pytest.approx(1.0)
    prediction = Tensor(np.zeros_like(target), requires_grad=True)
    assert float(loss(prediction, target, mask).data) == pytest.approx(4.0)


def test_component_labels_and_interfaces():
    labels = component_map([1, 2, 3, 9], {1: 'bumper', 2: 'box', 3: 'box'}, components=3)
    assert labels[:3].tolist() == [1, 0, 0]
    assert 0 <= labels[3] < 3
    assert labels[3] == component_map([9], {1: 'bumper'}, components=3)[0]
    with pytest.raises(InvalidConfigError):
        component_map([1], {1: 'a', 2: 'b', 3: 'c'}, components=2)

    graph = interface_graph([[0, 1], [1, 2], [2, 3]], np.array([0, 0, 1, 1]))
    assert graph.edges == [(0, 1), (1, 0)]
    assert graph.receivers(0, 1, np.array([0, 0, 1, 1])).tolist() == [2]
    assert graph.receivers(1, 0, np.array([0, 0, 1, 1])).tolist() == [1]


#
# Training
#
def test_best_epoch_rules():
    assert best_epoch([3.0, 1.0, 1.0, 2.0]) == 2
    assert best_epoch([]) == 0
    assert best_epoch([np.nan, np.nan]) == 0


def test_training_keeps_best_validation_state():
    schedule = TrainSchedule()
    schedule.EPOCHS = 3
    schedule.LEARNING_RATE = 1e-2
    model = CrashSolver(small_model_config(zero_decoder=False), seed=1)
    result = train(model, [chain_sample(3), chain_sample(4)], [chain_sample(5)], schedule)
    assert result.history['epoch'].tolist() == [1, 2, 3]
    assert 1 <= result.best_epoch <= 3
    kept = result.history['validation_loss'][result.best_epoch - 1]
    assert evaluate(model, [chain_sample(5)]) == pytest.approx(kept)
    assert model.tau_scale == 1.5


def test_step_cap_freezes_parameters():
    schedule = TrainSchedule()
    schedule.EPOCHS = 2
    schedule.MAX_STEPS = 0
    model = CrashSolver(small_model_config(zero_decoder=False), seed=1)
    before = model.state()
    result = train(model, [chain_sample(3)], schedule=schedule, fit_scales=False)
    assert result.steps == 0 and result.best_epoch == 2
    assert all(np.array_equal(before[name], value) for name, value in model.state().items())


def test_non_finite_loss_diverges():
    sample = chain_sample()
    sample.target[0, 0, 0] = np.nan
    schedule = TrainSchedule()
    schedule.EPOCHS = 1
    with pytest.raises(TrainingDivergedError):
        train(CrashSolver(small_model_config()), [sample], schedule=schedule, fit_scales=False)
    with pytest.raises(InvalidConfigError):
        train(CrashSolver(small_model_config()), [], schedule=schedule)


#
# Baselines and checkpoints
#
def test_ridge_recovers_a_linear_law():
    rng = np.random.default_rng(0)
    X = rng.random((30, 2))
    y = 2.0 * X[:, 0] - 3.0 * X[:, 1] + 1.0
    model = ridge_fit(X, y, alpha=0.0)
    assert np.allclose(model.coefficients, [2.0, -3.0])
    assert np.allclose(ridge_predict(model, X), y)
    with pytest.raises(InvalidConfigError):
        ridge_fit(X, y, alpha=-1.0)


def test_knn_inverse_distance_weights():
    X, y = np.array([[0.0], [2.0]]), np.array([0.0, 2.0])
    assert knn_predict(X, y, [[0.5]], k=2)[0] == pytest.approx(0.5)
    assert knn_predict(X, y, [[2.0]], k=2)[0] == pytest.approx(2.0)
    with pytest.raises(InvalidConfigError):
        knn_predict(X, y, [[0.5]], k=3)


def test_checkpoint_round_trip(tmp_path):
    model = CrashSolver(small_model_config(zero_decoder=False), seed=9)
    model.output_scale, model.tau_scale = 2.5, 1.5
    path = save_checkpoint(model, tmp_path / 'model.ckpt', {'epochs': 3})
    loaded = load_checkpoint(path)
    sample = chain_sample()
    assert np.array_equal(loaded.predict(sample), model.predict(sample))
    assert read_header(path)['metadata'] == {'epochs': 3}

    path.write_bytes(b'NOPE' + path.read_bytes()[4:])
    with pytest.raises(CorruptBundleError):
        load_checkpoint(path)


def test_zero_baseline():
    sample = chain_sample()
    model = load_checkpoint('zero')
    assert isinstance(model, ZeroModel)
    assert np.all(model.predict(sample) == 0.0)
    assert model.predict(sample).shape == sample.target.shape


def test_samples_from_bundles(campaign_root):
    bundle = read_bundle(campaign_root / 'sim_00003')
    sample = sample_from_bundle(bundle, frames=3)
    assert frame_indices(5, 3).tolist() == [1, 3, 4]
    assert sample.target.shape == (3, bundle.trajectory.node_count, 3)
    assert np.array_equal(sample.target, bundle.trajectory.displacements[[1, 3, 4]])
    assert np.all((sample.design >= 0.0) & (sample.design <= 1.0))
    assert sample.parts.max() < 8
    config = CrashSolverConfig()
    config.FRAMES = 3
    assert CrashSolver(config).predict(sample).shape == sample.target.shape
    with pytest.raises(ShapeMismatchError):
        sample_from_bundle(bundle, frames=5)
