"""Sampled continuous functions on [0, 1] and grid utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

MERGE_TOL = 1e-12


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-d array with at least two points")
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("grid must start at 0 and end at 1")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    return grid


def uniform_grid(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least two grid points")
    return np.linspace(0.0, 1.0, n)


def merge_grids(*grids, tol: float = MERGE_TOL) -> np.ndarray:
    """Union of grids; points closer than ``tol`` collapse onto the one from the earliest grid."""
    values = np.concatenate([np.asarray(g, dtype=float).ravel() for g in grids])
    priority = np.concatenate([np.full(np.size(g), i) for i, g in enumerate(grids)])
    order = np.argsort(values, kind="stable")
    values, priority = values[order], priority[order]
    group = np.concatenate([[0], np.cumsum(np.diff(values) > tol)])
    pick = np.lexsort((priority, group))
    first = np.concatenate([[True], np.diff(group[pick]) > 0])
    out = values[pick][first]
    out[0], out[-1] = 0.0, 1.0
    return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a continuous function on an ascending grid covering [0, 1].

    Evaluation is the piecewise-linear interpolant. When ``derivative``
    holds the classical first derivative at the grid points, ``smooth``
    evaluates the cubic Hermite interpolant instead.
    """

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None = None

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = np.asarray(self.values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("values must match the grid")
        object.__setattr__(self, "grid", _frozen(grid))
        object.__setattr__(self, "values", _frozen(values))
        if self.derivative is not None:
            deriv = np.asarray(self.derivative, dtype=float)
            if deriv.shape != grid.shape:
                raise ValueError("derivative must match the grid")
            object.__setattr__(self, "derivative", _frozen(deriv))

    @classmethod
    def from_callable(cls, func, grid, derivative=None) -> "GridFunction":
        grid = check_grid(grid)
        values = np.broadcast_to(np.asarray(func(grid), dtype=float), grid.shape)
        deriv = None
        if derivative is not None:
            deriv = np.broadcast_to(np.asarray(derivative(grid), dtype=float), grid.shape)
        return cls(grid, values, deriv)

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def smooth(self, x):
        if self.derivative is None:
            return self(x)
        x = np.clip(x, 0.0, 1.0)
        out = self._spline()(x)
        # at knots return the stored sample itself, not the polynomial's rounding of it
        idx = np.clip(np.searchsorted(self.grid, x), 0, self.grid.size - 1)
        hit = self.grid[idx] == x
        if np.ndim(out) == 0:
            return self.values[idx] if hit else out
        out[hit] = self.values[idx[hit]]
        return out

    def slope(self, x):
        """First derivative of the Hermite interpolant (chord slope without derivative data)."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.derivative is None:
            idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, self.grid.size - 2)
            return np.diff(self.values)[idx] / np.diff(self.grid)[idx]
        return self._spline()(x, 1)

    def _spline(self):
        spline = self.__dict__.get("_hermite")
        if spline is None:
            spline = CubicHermiteSpline(self.grid, self.values, self.derivative)
            object.__setattr__(self, "_hermite", spline)
        return spline

    def sup_norm(self) -> float:
        """Sup of the piecewise-linear representative, attained at a grid point."""
        return float(np.max(np.abs(self.values)))

    def resample(self, grid, smooth: bool = True) -> "GridFunction":
        grid = check_grid(grid)
        if smooth and self.derivative is not None:
            return GridFunction(grid, self.smooth(grid), self.slope(grid))
        return GridFunction(grid, self(grid))

    def linear(self) -> "GridFunction":
        """The same samples with derivative information dropped."""
        return GridFunction(self.grid, self.values)

    def scaled(self, factor: float) -> "GridFunction":
        deriv = None if self.derivative is None else factor * self.derivative
        return GridFunction(self.grid, factor * self.values, deriv)

    def __repr__(self):
        kind = "hermite" if self.derivative is not None else "linear"
        return f"GridFunction(n={self.grid.size}, {kind}, sup={self.sup_norm():.6g})"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr
