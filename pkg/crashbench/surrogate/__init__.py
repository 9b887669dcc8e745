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

"""Toy-scale hierarchical mesh surrogate on a small reverse-mode differentiation core, plus tabular baselines."""

from crashbench.surrogate.tensor import Tensor, concat, stack
from crashbench.surrogate.crashsolver import (CrashSolver, InterfaceGraph, LearningSample, ZeroModel, component_map,
                                              interface_graph, loss)
from crashbench.surrogate.training import Adam, TrainingResult, best_epoch, evaluate, grad_check, train
from crashbench.surrogate.baselines import RidgeModel, knn_predict, ridge_fit, ridge_predict
from crashbench.surrogate.checkpoint import ZERO_CHECKPOINT, load_checkpoint, save_checkpoint
from crashbench.surrogate.dataset import load_component_table, load_samples, sample_from_bundle

__all__ = ['Tensor', 'concat', 'stack', 'CrashSolver', 'InterfaceGraph', 'LearningSample', 'ZeroModel',
           'component_map', 'interface_graph', 'loss', 'Adam', 'TrainingResult', 'best_epoch', 'evaluate',
           'grad_check', 'train', 'RidgeModel', 'knn_predict', 'ridge_fit', 'ridge_predict', 'ZERO_CHECKPOINT',
           'load_checkpoint', 'save_checkpoint', 'load_component_table', 'load_samples', 'sample_from_bundle']
