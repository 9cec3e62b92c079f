"""Heat kernel and heat semigroup of Delta_mu by eigen-expansion or iterated resolvents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _quadrature as quad
from .errors import ConfigError, InsufficientEigenpairsError
from .grid import GridFunction, check_grid, merge_grids
from .measure import CdfMeasure
from .resolvent import DIRICHLET, _apply, boundary, check_dirichlet, resolvent_density
from .spectral import SpectralDecomposition, eigen_shooting

MAX_MODES = 64
DIRICHLET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HeatKernel:
    measure: CdfMeasure
    bc: str
    t: float
    terms: int
    grid: np.ndarray
    truncation_estimate: float
    eigen: SpectralDecomposition

    @property
    def values(self) -> np.ndarray:
        """p_t on grid x grid."""
        cached = self.__dict__.get("_values")
        if cached is None:
            cached = self.matrix()
            object.__setattr__(self, "_values", cached)
        return cached

    def _weights(self):
        return np.exp(-self.eigen.eigenvalues[: self.terms] * self.t)

    def matrix(self, points=None) -> np.ndarray:
        phi = self.eigen.values(points)[: self.terms]
        return (phi.T * self._weights()) @ phi

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        px = self.eigen.values(x.ravel())[: self.terms]
        py = self.eigen.values(y.ravel())[: self.terms]
        out = np.sum(px * py * self._weights()[:, None], axis=0)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    def row_masses(self) -> np.ndarray:
        """int p_t(x, y) dmu(y) at every grid point x."""
        cells = quad.cells(self.measure, self.grid)
        ints = np.array([quad.integral(cells, quad.sample(phi, self.grid)) for phi in self.eigen.eigenfunctions[: self.terms]])
        return (self.eigen.values()[: self.terms].T * self._weights()) @ ints


def _required_modes(eig: np.ndarray, t: float, target: float) -> int:
    """Extrapolate lambda_k ~ a k^p from the computed tail to the first k with lambda_k >= target."""
    k = np.arange(1, eig.size + 1)
    pos = eig > 0
    tail = np.flatnonzero(pos)[-max(4, pos.sum() // 2):]
    if tail.size < 2:
        return 2 * eig.size
    p, loga = np.polyfit(np.log(k[tail]), np.log(eig[tail]), 1)
    if p <= 0:
        return 2 * eig.size
    return int(math.ceil(math.exp((math.log(target) - loga) / p)))


def _select_modes(m, bc, t, tol, grid, scale, max_modes):
    """Eigenpairs up to the first mode K with exp(-lambda_K t) max|phi_K|^2 scale < tol."""
    count = min(16, max_modes)
    while True:
        dec = eigen_shooting(m, bc, count=count, grid=grid)
        sup = np.abs(dec.values()).max(axis=1)
        bound = np.exp(-dec.eigenvalues * t) * sup**2 * scale
        ok = np.flatnonzero(bound < tol)
        if ok.size:
            K = int(ok[0]) + 1
            return dec, K, float(bound[K - 1])
        if count >= max_modes:
            target = math.log(scale * float(sup[-1]) ** 2 / tol) / t
            need = max(_required_modes(dec.eigenvalues, t, target), max_modes + 1)
            raise InsufficientEigenpairsError(
                f"t={t} needs about {need} eigenpairs for tolerance {tol}, limit is {max_modes}", need
            )
        count = min(2 * count, max_modes)


def heat_kernel(
    m: CdfMeasure, bc, t: float, tol: float = 1e-10, grid=None, n: int = 2049, max_modes: int = MAX_MODES
) -> HeatKernel:
    t = float(t)
    if not t > 0:
        raise ConfigError("t must be positive")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    bc = boundary(bc)
    grid = m.adapted_grid(n) if grid is None else check_grid(grid)
    dec, K, est = _select_modes(m, bc, t, tol, grid, 1.0, max_modes)
    return HeatKernel(m, bc, t, K, grid, est, dec)


# -- semigroup -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Expansion:
    """f in coefficient space: f ~ sum c_k phi_k with Gram-corrected coefficients."""

    eigen: SpectralDecomposition
    terms: int
    coefficients: np.ndarray

    def state(self, t: float) -> GridFunction:
        dec = self.eigen
        w = self.coefficients * np.exp(-dec.eigenvalues[: self.terms] * t)
        funcs = dec.eigenfunctions[: self.terms]
        values = sum(wk * phi.values for wk, phi in zip(w, funcs))
        deriv = sum(wk * phi.derivative for wk, phi in zip(w, funcs))
        if dec.bc == DIRICHLET:
            values = np.array(values)
            values[0] = values[-1] = 0.0
        return GridFunction(dec.grid, values, deriv)


def _working_grid(m, f, grid, n):
    base = m.adapted_grid(n) if grid is None else check_grid(grid)
    if isinstance(f, GridFunction) and f.derivative is None:
        base = merge_grids(base, f.grid)
    return base


def _sup(f, grid) -> float:
    if isinstance(f, GridFunction):
        return f.sup_norm()
    return float(np.max(np.abs(quad.sample(f, grid).values)))


def _expand(m, bc, f, t_min, tol, grid, max_modes) -> _Expansion:
    scale = max(_sup(f, grid), 1e-300)
    dec, K, _ = _select_modes(m, bc, t_min, tol, grid, scale, max_modes)
    cells = quad.cells(m, grid)
    phis = [quad.sample(phi, grid) for phi in dec.eigenfunctions[:K]]
    fs = quad.sample(f, grid)
    rhs = np.array([quad.integral(cells, fs * p) for p in phis])
    # the computed eigenfunctions are orthonormal only up to quadrature error;
    # solving with the Gram matrix makes re-projection of an expansion exact
    gram = quad.gram(cells, phis)
    coef = cho_solve(cho_factor(gram), rhs)
    return _Expansion(dec, K, coef)


def _validate(bc, f, t):
    if t < 0 or not math.isfinite(t):
        raise ConfigError("t must be nonnegative")
    if bc == DIRICHLET:
        check_dirichlet(f, DIRICHLET_TOL)


def _euler(m, bc, f, t, steps, grid, tol):
    lam = steps / t
    dens = resolvent_density(m, lam, bc, grid, tol=tol)
    u = f
    for _ in range(steps):
        u = _apply(dens, u).scaled(lam)
    return u


def _as_gridfunction(f, grid) -> GridFunction:
    if isinstance(f, GridFunction):
        return f
    s = quad.sample(f, grid)
    return GridFunction(grid, s.values)


def apply_semigroup(
    m: CdfMeasure, bc, t: float, f, method: str = "eigen", steps: int = 64, tol: float = 1e-10,
    grid=None, n: int = 2049, max_modes: int = MAX_MODES,
) -> GridFunction:
    """T_t f, by eigen-expansion or by ``steps`` backward-Euler resolvent steps."""
    bc = boundary(bc)
    t = float(t)
    _validate(bc, f, t)
    if t == 0:
        return _as_gridfunction(f, m.adapted_grid(n) if grid is None else check_grid(grid))
    work = _working_grid(m, f, grid, n)
    if method == "eigen":
        return _expand(m, bc, f, t, tol, work, max_modes).state(t)
    if method == "backward_euler":
        if int(steps) < 1:
            raise ConfigError("steps must be at least 1")
        return _euler(m, bc, f, t, int(steps), work, tol)
    raise ConfigError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class HeatSolution:
    measure: CdfMeasure
    bc: str
    times: np.ndarray
    states: list
    initial: GridFunction

    def sup_norms(self) -> np.ndarray:
        return np.array([u.sup_norm() for u in self.states])


def solve_heat(
    m: CdfMeasure, bc, f, times, method: str = "eigen", steps: int = 64, tol: float = 1e-10,
    grid=None, n: int = 2049, max_modes: int = MAX_MODES,
) -> HeatSolution:
    """States at every time, each obtained from the previous one by the semigroup property."""
    bc = boundary(bc)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ConfigError("times must be a 1-d array starting at 0")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly ascending")
    _validate(bc, f, 0.0)
    work = _working_grid(m, f, grid, n)
    initial = _as_gridfunction(f, work)
    if bc == DIRICHLET and (initial.values[0] != 0.0 or initial.values[-1] != 0.0):
        # boundary values already validated to DIRICHLET_TOL; store them as exact zeros
        values = np.array(initial.values)
        values[0] = values[-1] = 0.0
        initial = GridFunction(initial.grid, values, initial.derivative)
    states = [initial]
    if times.size == 1:
        return HeatSolution(m, bc, times, states, initial)
    if method == "eigen":
        # coefficients decay exactly, so stepping t_j -> t_{j+1} is the factor exp(-lambda dt)
        exp = _expand(m, bc, f, float(np.min(np.diff(times))), tol, work, max_modes)
        c = exp.coefficients
        lam = exp.eigen.eigenvalues[: exp.terms]
        for dt in np.diff(times):
            c = c * np.exp(-lam * dt)
            states.append(_Expansion(exp.eigen, exp.terms, c).state(0.0))
    elif method == "backward_euler":
        u = f
        for dt in np.diff(times):
            u = _euler(m, bc, u, float(dt), int(steps), work, tol)
            states.append(u)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return HeatSolution(m, bc, times, states, initial)
