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

"""Rigid walls: an infinite plane and a cylindrical pole.

Both geometries share one interface; the concrete strategy is selected when the wall is built, so callers only ever
deal with RigidWall."""

from abc import abstractmethod

import numpy as np

from crashbench.crashbench_classes import InvalidConfigError, WallKind, enum_from_name


class RigidWall:
    """Immovable penalty wall with Coulomb friction.

    Build with ``RigidWall('plane', normal=..., offset=...)`` or
    ``RigidWall('cylinder', center=..., radius=..., axis=...)``. ``penalty`` is a stiffness in kN/mm; None lets the
    solver derive it from the elements touching each node."""

    def __new__(cls, kind, *args, **kwargs):
        kind = enum_from_name(WallKind, kind)
        if kind == WallKind.PLANE:
            return _PlaneWall.__new__(_PlaneWall, kind, *args, **kwargs)
        elif kind == WallKind.CYLINDER:
            return _CylinderWall.__new__(_CylinderWall, kind, *args, **kwargs)

    def __init__(self, kind, friction: float = 0.20, penalty: float = None):
        if self.__class__ != RigidWall and issubclass(self.__class__, RigidWall):
            if friction < 0:
                raise InvalidConfigError(f'Invalid value for parameter "friction". Expected "mu >= 0"; '
                                         f'received "{friction}"')
            if penalty is not None and penalty <= 0:
                raise InvalidConfigError(f'Invalid value for parameter "penalty". Expected "penalty > 0 or None"; '
                                         f'received "{penalty}"')
            self.kind = enum_from_name(WallKind, kind)
            self.friction = float(friction)
            self.penalty = None if penalty is None else float(penalty)
        else:
            raise RuntimeError('Abstract classes cannot be instantiated.')

    @abstractmethod
    def penetration(self, points: np.ndarray) -> (np.ndarray, np.ndarray):
        """Returns the penetration depth g (positive inside the wall) and the outward unit normal for each point."""
        raise NotImplementedError('Penetration not implemented')

    @abstractmethod
    def clearance(self, points: np.ndarray) -> float:
        """Smallest signed distance from the points to the wall surface (negative means initial intersection)."""
        raise NotImplementedError('Clearance not implemented')

    @abstractmethod
    def to_dict(self) -> dict:
        raise NotImplementedError('Serialization not implemented')

    @staticmethod
    def from_dict(values: dict):
        values = dict(values)
        return RigidWall(values.pop('kind'), **values)

    def __eq__(self, other):
        return isinstance(other, RigidWall) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f'RigidWall({self.to_dict()})'


def _unit(vector, name: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(vector)
    if not np.isfinite(norm) or norm == 0:
        raise InvalidConfigError(f'Invalid value for parameter "{name}". Expected "non-zero 3-vector"; '
                                 f'received "{vector.tolist()}"')
    return vector / norm


class _PlaneWall(RigidWall):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_PlaneWall)

    def __init__(self, kind, normal=(1.0, 0.0, 0.0), offset: float = 0.0, friction: float = 0.20,
                 penalty: float = None):
        super().__init__(kind, friction, penalty)
        normal = np.asarray(normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise InvalidConfigError(f'Invalid value for parameter "normal". Expected "|normal| = 1"; '
                                     f'received "{normal.tolist()}"')
        self.normal = normal
        self.offset = float(offset)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset

    def penetration(self, points: np.ndarray) -> (np.ndarray, np.ndarray):
        gap = -self.signed_distance(points)
        normals = np.broadcast_to(self.normal, (gap.shape[0], 3)).copy()
        return gap, normals

    def clearance(self, points: np.ndarray) -> float:
        return float(np.min(self.signed_distance(points)))

    def to_dict(self) -> dict:
        return {'kind': 'plane', 'normal': self.normal.tolist(), 'offset': self.offset,
                'friction': self.friction, 'penalty': self.penalty}


class _CylinderWall(RigidWall):

    def __new__(cls, *args, **kwargs):
        return object.__new__(_CylinderWall)

    def __init__(self, kind, center=(0.0, 0.0, 0.0), radius: float = 50.0, axis=(0.0, 0.0, 1.0),
                 friction: float = 0.20, penalty: float = None):
        super().__init__(kind, friction, penalty)
        if not radius > 0:
            raise InvalidConfigError(f'Invalid value for parameter "radius". Expected "radius > 0"; '
                                     f'received "{radius}"')
        self.center = np.asarray(center, dtype=np.float64).reshape(3)
        self.radius = float(radius)
        self.axis = _unit(axis, 'axis')
        # Used when a point sits on the axis: +X projected off the axis, or any perpendicular if X is the axis
        fallback = np.array([1.0, 0.0, 0.0]) - self.axis[0] * self.axis
        if np.linalg.norm(fallback) < 1e-12:
            fallback = np.array([0.0, 1.0, 0.0]) - self.axis[1] * self.axis
        self._fallback = fallback / np.linalg.norm(fallback)

    @property
    def x_c(self) -> float:
        return float(self.center[0])

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def _radial(self, points: np.ndarray) -> (np.ndarray, np.ndarray):
        relative = np.asarray(points, dtype=np.float64) - self.center
        radial = relative - np.outer(relative @ self.axis, self.axis)
        return radial, np.linalg.norm(radial, axis=1)

    def penetration(self, points: np.ndarray) -> (np.ndarray, np.ndarray):
        radial, distance = self._radial(points)
        normals = np.empty_like(radial)
        on_axis = distance == 0
        normals[~on_axis] = radial[~on_axis] / distance[~on_axis, None]
        normals[on_axis] = self._fallback
        return self.radius - distance, normals

    def clearance(self, points: np.ndarray) -> float:
        _, distance = self._radial(points)
        return float(np.min(distance) - self.radius)

    def to_dict(self) -> dict:
        return {'kind': 'cylinder', 'center': self.center.tolist(), 'radius': self.radius,
                'axis': self.axis.tolist(), 'friction': self.friction, 'penalty': self.penalty}
