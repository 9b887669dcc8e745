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

"""A minimal reverse-mode differentiation core over 64-bit numpy arrays.

Every operation is a Function subclass with a ``forward`` on raw arrays and a ``backward`` returning one gradient per
parent. Broadcasting is supported; gradients are summed back to the parent's shape."""

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sums a broadcast gradient back to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An array with an optional gradient and the Function that produced it."""

    def __init__(self, data, requires_grad: bool = False, ctx=None, name: str = ''):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad or (ctx is not None and ctx.requires_grad)
        self.grad = None
        self.ctx = ctx
        self.name = name

    def __repr__(self):
        return f'Tensor({self.name or "?"}, shape={self.shape})'

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def T(self):
        return Transpose.apply(self)

    @staticmethod
    def tensor(value):
        return value if isinstance(value, Tensor) else Tensor(value)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    #
    # Operators
    #
    def __neg__(self):
        return Neg.apply(self)

    def __add__(self, other):
        return Add.apply(self, self.tensor(other))

    def __radd__(self, other):
        return Add.apply(self.tensor(other), self)

    def __sub__(self, other):
        return Sub.apply(self, self.tensor(other))

    def __rsub__(self, other):
        return Sub.apply(self.tensor(other), self)

    def __mul__(self, other):
        return Mul.apply(self, self.tensor(other))

    def __rmul__(self, other):
        return Mul.apply(self.tensor(other), self)

    def __truediv__(self, other):
        return Div.apply(self, self.tensor(other))

    def __matmul__(self, other):
        return MatMul.apply(self, self.tensor(other))

    def __getitem__(self, index):
        return GetItem.apply(self, index=index)

    def sum(self, axis=None, keepdims: bool = False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis, keepdims) * (1.0 / count)

    def reshape(self, *shape):
        return Reshape.apply(self, shape=shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)

    def tanh(self):
        return Tanh.apply(self)

    def exp(self):
        return Exp.apply(self)

    def square(self):
        return Mul.apply(self, self)

    def softmax(self, axis: int = -1):
        return Softmax.apply(self, axis=axis)

    #
    # Reverse pass
    #
    def backward(self, grad=None):
        """Accumulates d(self)/d(leaf) into the ``grad`` of every leaf that requires it."""
        order, visited = [], set()

        def visit(node):
            if id(node) in visited:
                return
            visited.add(id(node))
            if node.ctx is not None:
                for parent in node.ctx.parents:
                    visit(parent)
            order.append(node)

        visit(self)
        grads = {id(self): np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node.ctx is None:
                if node.requires_grad:
                    node.grad = node_grad if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node.ctx.parents, node.ctx.backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad


def concat(tensors, axis: int = 0) -> Tensor:
    return Concat.apply(*[Tensor.tensor(tensor) for tensor in tensors], axis=axis)


def stack(tensors) -> Tensor:
    return concat([tensor.reshape((1,) + tensor.shape) for tensor in tensors], axis=0)


#
# Functions
#
class Function:

    def __init__(self, *parents, **kwargs):
        self.parents = parents
        self.requires_grad = any(parent.requires_grad for parent in parents)
        self.kwargs = kwargs

    @classmethod
    def apply(cls, *parents, **kwargs):
        ctx = cls(*parents, **kwargs)
        return Tensor(ctx.forward(*[parent.data for parent in parents]), ctx=ctx)

    def forward(self, *arrays):
        raise NotImplementedError('Forward not implemented')

    def backward(self, grad):
        raise NotImplementedError('Backward not implemented')


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Add(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x + y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, x, y):
        self.shapes = x.shape, y.shape
        return x - y

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return _unbroadcast(grad * self.y, self.x.shape), _unbroadcast(grad * self.x, self.y.shape)


class Div(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x / y

    def backward(self, grad):
        return (_unbroadcast(grad / self.y, self.x.shape),
                _unbroadcast(-grad * self.x / (self.y * self.y), self.y.shape))


class MatMul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x @ y

    def backward(self, grad):
        return grad @ np.swapaxes(self.y, -1, -2), np.swapaxes(self.x, -1, -2) @ grad


class Transpose(Function):
    def forward(self, x):
        return np.swapaxes(x, -1, -2)

    def backward(self, grad):
        return (np.swapaxes(grad, -1, -2),)


class Sum(Function):
    def forward(self, x):
        self.shape = x.shape
        return np.sum(x, axis=self.kwargs['axis'], keepdims=self.kwargs['keepdims'])

    def backward(self, grad):
        axis = self.kwargs['axis']
        if axis is not None and not self.kwargs['keepdims']:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, x):
        self.shape = x.shape
        return x.reshape(self.kwargs['shape'])

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class GetItem(Function):
    """Basic and integer-array indexing; repeated indices accumulate."""

    def forward(self, x):
        self.shape = x.shape
        return x[self.kwargs['index']]

    def backward(self, grad):
        full = np.zeros(self.shape)
        np.add.at(full, self.kwargs['index'], grad)
        return (full,)


class Concat(Function):
    def forward(self, *arrays):
        axis = self.kwargs['axis']
        self.bounds = np.cumsum([array.shape[axis] for array in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.bounds, axis=self.kwargs['axis']))


class Tanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Softmax(Function):
    def forward(self, x):
        axis = self.kwargs['axis']
        shifted = np.exp(x - np.max(x, axis=axis, keepdims=True))
        self.out = shifted / np.sum(shifted, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        axis = self.kwargs['axis']
        return (self.out * (grad - np.sum(grad * self.out, axis=axis, keepdims=True)),)
