"""scikit-learn style wrappers.

Each row of X holds the samples of one function on ``points`` (default: a
uniform grid with as many points as X has columns, covering [0, 1]).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import _quadrature as quad
from .grid import GridFunction, check_grid, merge_grids
from .measure import from_spec
from .resolvent import _apply, boundary, resolvent_density
from .semigroup import apply_semigroup
from .spectral import eigen_matrix_oracle, eigen_shooting


def _points(points, n_features):
    if points is None:
        return np.linspace(0.0, 1.0, n_features)
    pts = check_grid(points)
    if pts.size != n_features:
        raise ValueError(f"X has {n_features} columns but points has {pts.size} entries")
    return pts


class _FunctionTransformer(TransformerMixin, BaseEstimator):
    def _validate_rows(self, X, reset: bool):
        X = check_array(X, dtype=float)
        if X.shape[1] < 2:
            raise ValueError("each row needs at least two samples")
        if reset:
            self.n_features_in_ = X.shape[1]
            self.points_ = _points(self.points, X.shape[1])
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return X


class ResolventTransformer(_FunctionTransformer):
    """Maps f to u = (lam - Delta_mu)^{-1} f, sampled at the same points."""

    def __init__(self, measure="cantor", lam=1.0, bc="neumann", n=2049, tol=1e-10, points=None):
        self.measure = measure
        self.lam = lam
        self.bc = bc
        self.n = n
        self.tol = tol
        self.points = points

    def fit(self, X, y=None):
        X = self._validate_rows(X, reset=True)
        self.measure_ = from_spec(self.measure)
        self.bc_ = boundary(self.bc)
        grid = merge_grids(self.measure_.adapted_grid(self.n), self.points_)
        self.density_ = resolvent_density(self.measure_, self.lam, self.bc_, grid, tol=self.tol)
        return self

    def transform(self, X):
        check_is_fitted(self, "density_")
        X = self._validate_rows(X, reset=False)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            u = _apply(self.density_, GridFunction(self.points_, row))
            out[i] = u.smooth(self.points_)
        return out


class HeatSemigroupTransformer(_FunctionTransformer):
    """Maps f to T_t f, the heat semigroup at time t."""

    def __init__(self, measure="cantor", t=0.1, bc="neumann", method="eigen", steps=64, n=2049, tol=1e-10, points=None):
        self.measure = measure
        self.t = t
        self.bc = bc
        self.method = method
        self.steps = steps
        self.n = n
        self.tol = tol
        self.points = points

    def fit(self, X, y=None):
        self._validate_rows(X, reset=True)
        self.measure_ = from_spec(self.measure)
        self.bc_ = boundary(self.bc)
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        return self

    def transform(self, X):
        check_is_fitted(self, "measure_")
        X = self._validate_rows(X, reset=False)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            f = GridFunction(self.points_, row)
            u = apply_semigroup(
                self.measure_, self.bc_, self.t, f, method=self.method, steps=self.steps, tol=self.tol, n=self.n
            )
            out[i] = u.smooth(self.points_)
        return out


class KreinFellerSpectrum(_FunctionTransformer):
    """Eigenpairs of -Delta_mu; transform returns L2(mu) coefficients in the eigenbasis."""

    def __init__(self, measure="cantor", bc="dirichlet", n_components=5, method="shooting", atoms=4000, n=2049,
                 points=None):
        self.measure = measure
        self.bc = bc
        self.n_components = n_components
        self.method = method
        self.atoms = atoms
        self.n = n
        self.points = points

    def fit(self, X=None, y=None):
        if X is not None:
            self._validate_rows(X, reset=True)
        self.measure_ = from_spec(self.measure)
        if self.method == "shooting":
            dec = eigen_shooting(self.measure_, self.bc, count=self.n_components, n=self.n)
        elif self.method == "oracle":
            dec = eigen_matrix_oracle(self.measure_, self.bc, atoms=self.atoms, count=self.n_components)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.decomposition_ = dec
        self.eigenvalues_ = dec.eigenvalues.copy()
        self.grid_ = dec.grid
        return self

    def transform(self, X):
        check_is_fitted(self, "decomposition_")
        X = self._validate_rows(X, reset=not hasattr(self, "points_"))
        dec = self.decomposition_
        grid = dec.grid
        cells = quad.cells(self.measure_, grid) if dec.weights is None else None
        phis = dec.values(grid)
        out = np.empty((X.shape[0], dec.count))
        for i, row in enumerate(X):
            f = np.interp(grid, self.points_, row)
            if cells is None:
                out[i] = (phis[:, 1:-1] * dec.weights) @ f[1:-1]
            else:
                fs = quad.sample(GridFunction(grid, f), grid)
                out[i] = [quad.integral(cells, fs * quad.sample(phi, grid)) for phi in dec.eigenfunctions]
        return out

    def inverse_transform(self, C):
        check_is_fitted(self, ["decomposition_", "points_"])
        C = check_array(C, dtype=float)
        return C @ self.decomposition_.values(self.points_)
