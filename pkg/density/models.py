"""
Density grid and KDE parameter models
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import GridError, ParameterDomainError


@dataclass(frozen=True)
class KDEParams:
    """Gaussian kernel bandwidth h = bandwidth * bandwidth_scale"""
    bandwidth: float
    dim: int
    bandwidth_scale: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0 or not self.bandwidth_scale > 0:
            raise ParameterDomainError(f"bandwidth must be positive, got {self.bandwidth} x {self.bandwidth_scale}")

    @property
    def h(self) -> float:
        return self.bandwidth * self.bandwidth_scale


@dataclass(frozen=True)
class DensityGrid:
    """Tensor grid with uniform spacing per axis and one value per node"""
    axes: Tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in axes:
            if a.ndim != 1 or a.size < 2 or not np.all(np.diff(a) > 0):
                raise GridError("grid axes must be increasing with at least two nodes")
        values = np.asarray(self.values, dtype=float)
        if values.shape != tuple(a.size for a in axes):
            raise GridError(f"values shape {values.shape} does not match grid {[a.size for a in axes]}")
        object.__setattr__(self, 'axes', axes)
        object.__setattr__(self, 'values', values)

    @classmethod
    def empty(cls, axes) -> 'DensityGrid':
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        return cls(axes=axes, values=np.zeros(tuple(a.size for a in axes)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def spacings(self) -> Tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.spacings))

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dim), first axis slowest"""
        mesh = np.meshgrid(*self.axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.cell_measure)

    def normalized(self) -> 'DensityGrid':
        mass = self.total_mass()
        if not mass > 0 or not np.isfinite(mass):
            raise GridError(f"cannot normalize a grid with mass {mass}")
        return DensityGrid(axes=self.axes, values=self.values / mass)

    def with_values(self, values: np.ndarray) -> 'DensityGrid':
        return DensityGrid(axes=self.axes, values=values)

    def same_nodes(self, other: 'DensityGrid') -> bool:
        return len(self.axes) == len(other.axes) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )
