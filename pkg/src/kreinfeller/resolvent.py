"""Resolvent densities and resolvent application for Delta_mu with Neumann or Dirichlet data.

The density factorizes as rho(x, y) = g1(min(x, y)) g2(max(x, y)) / W where
g1 satisfies the boundary condition at 0 and g2 the one at 1:

    Neumann:   g1 = cosh_z,  g2(y) = cosh_z of the reflected measure at 1 - y,
               W = cosh_z'(1)
    Dirichlet: g1 = sinh_z,  g2(y) = sinh_z of the reflected measure at 1 - y,
               W = z sinh_z(1)

with z = sqrt(lambda). For a measure symmetric about 1/2 the reflected
functions coincide with the original ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quadrature as quad
from . import _transfer
from .calculus import SERIES_MAX_ORDER, hyperbolic, tent_average, truncation_order, apply_krein_feller
from .errors import BoundaryError, ConfigError
from .grid import GridFunction, check_grid, merge_grids
from .measure import CdfMeasure

NEUMANN, DIRICHLET = "N", "D"


def boundary(bc) -> str:
    key = str(bc).strip().lower()
    if key in ("n", "neumann"):
        return NEUMANN
    if key in ("d", "dirichlet"):
        return DIRICHLET
    raise ConfigError(f"unknown boundary condition {bc!r}")


@dataclass(frozen=True, eq=False)
class ResolventDensity:
    measure: CdfMeasure
    lam: float
    bc: str
    left: GridFunction  # g1
    right: GridFunction  # g2
    normalizer: float
    method: str

    @property
    def grid(self) -> np.ndarray:
        return self.left.grid

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lo = np.minimum(x, y)
        hi = np.maximum(x, y)
        return self.left.smooth(lo) * self.right.smooth(hi) / self.normalizer

    def matrix(self, points) -> np.ndarray:
        """rho on the product grid points x points."""
        pts = np.asarray(points, dtype=float)
        g1 = self.left.smooth(pts)
        g2 = self.right.smooth(pts)
        upper = np.outer(g1, g2)
        return np.where(pts[:, None] <= pts[None, :], upper, upper.T) / self.normalizer

    def sup_difference(self, other: "ResolventDensity", points, block: int = 512) -> float:
        pts = np.asarray(points, dtype=float)
        a1, a2 = self.left.smooth(pts), self.right.smooth(pts)
        b1, b2 = other.left.smooth(pts), other.right.smooth(pts)
        best = 0.0
        for lo in range(0, pts.size, block):
            sl = slice(lo, lo + block)
            x = pts[sl, None]
            below = x <= pts[None, :]
            r1 = np.where(below, a1[sl, None] * a2[None, :], a2[sl, None] * a1[None, :]) / self.normalizer
            r2 = np.where(below, b1[sl, None] * b2[None, :], b2[sl, None] * b1[None, :]) / other.normalizer
            best = max(best, float(np.max(np.abs(r1 - r2))))
        return best


def _check_lambda(lam):
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ConfigError("lambda must be positive")
    return lam


def _pick_method(lam, tol, method):
    if method == "auto":
        return "series" if truncation_order(math.sqrt(lam), tol) <= SERIES_MAX_ORDER else "transfer"
    if method not in ("series", "transfer"):
        raise ConfigError(f"unknown method {method!r}")
    return method


def resolvent_density(
    m: CdfMeasure, lam: float, bc="N", grid=None, n: int = 2049, tol: float = 1e-10, method: str = "auto"
) -> ResolventDensity:
    lam = _check_lambda(lam)
    bc = boundary(bc)
    grid = m.adapted_grid(n) if grid is None else check_grid(grid)
    z = math.sqrt(lam)
    method = _pick_method(lam, tol, method)
    if method == "series":
        fwd = hyperbolic(m, z, grid, tol, method="series")
        mirror = 1.0 - grid[::-1]
        mirror[0], mirror[-1] = 0.0, 1.0
        bwd = hyperbolic(m.reflected(), z, mirror, tol, method="series")
        if bc == NEUMANN:
            g1, f2 = fwd.cosh, bwd.cosh
            norm = float(fwd.cosh.derivative[-1])
        else:
            g1, f2 = fwd.sinh, bwd.sinh
            norm = z * float(fwd.sinh.values[-1])
        g2 = GridFunction(grid, f2.values[::-1], -f2.derivative[::-1])
    else:
        cells = quad.cells(m, grid)
        cs = _transfer.cell_series(cells.sig, cells.h, cells.mass)
        if bc == NEUMANN:
            a = _transfer.propagate(cs, [lam], 1.0, 0.0)
            b = _transfer.propagate(cs, [lam], 1.0, 0.0, backward=True)
            norm = float(a.dg[-1, 0])
        else:
            a = _transfer.propagate(cs, [lam], 0.0, z)
            b = _transfer.propagate(cs, [lam], 0.0, -z, backward=True)
            norm = z * float(a.g[-1, 0])
        g1 = GridFunction(grid, a.g[:, 0], a.dg[:, 0])
        g2 = GridFunction(grid, b.g[:, 0], b.dg[:, 0])
    return ResolventDensity(m, lam, bc, g1, g2, norm, method)


def _working_grid(m, f, grid, n):
    base = m.adapted_grid(n) if grid is None else check_grid(grid)
    if isinstance(f, GridFunction) and f.derivative is None:
        base = merge_grids(base, f.grid)
    return base


def check_dirichlet(f, tol: float = 1e-12):
    ends = np.array([0.0, 1.0])
    if isinstance(f, GridFunction):
        vals = np.array([f.values[0], f.values[-1]])
    elif np.isscalar(f):
        vals = np.array([float(f)] * 2)
    else:
        vals = np.asarray(f(ends), dtype=float) * np.ones(2)
    if np.any(np.abs(vals) > tol):
        raise BoundaryError(f"Dirichlet data must vanish at 0 and 1, got {vals.tolist()}")


def apply_resolvent(
    m: CdfMeasure, lam: float, bc, f, grid=None, n: int = 2049, tol: float = 1e-10, method: str = "auto"
) -> GridFunction:
    """u(x) = int rho(x, y) f(y) dmu(y), returned with its classical derivative.

    The integral splits at y = x into int_0^x g1 f dmu and int_x^1 g2 f dmu,
    both accumulated cell by cell, so the kink of the kernel on the diagonal
    always falls on a grid point.
    """
    work = _working_grid(m, f, grid, n)
    dens = resolvent_density(m, lam, bc, work, tol=tol, method=method)
    return _apply(dens, f)


def _apply(dens: ResolventDensity, f) -> GridFunction:
    grid = dens.grid
    cells = quad.cells(dens.measure, grid)
    fs = quad.sample(f, grid)
    s1 = quad.sample(dens.left, grid)
    s2 = quad.sample(dens.right, grid)
    lower = quad.cumulative(cells, s1 * fs)
    upper_parts = quad.cell_integrals(cells, s2 * fs)
    upper = np.concatenate([np.cumsum(upper_parts[::-1])[::-1], [0.0]])
    g1, g2 = dens.left, dens.right
    u = (g2.values * lower + g1.values * upper) / dens.normalizer
    du = (g2.derivative * lower + g1.derivative * upper) / dens.normalizer
    if dens.bc == DIRICHLET:
        u[0] = u[-1] = 0.0
    return GridFunction(grid, u, du)


def verify_resolvent(m: CdfMeasure, lam: float, bc, f, u: GridFunction, h: float = 1e-3) -> float:
    """Residual of (lambda - Delta_mu) u = f plus the boundary-condition defect.

    Delta_mu u comes from ``apply_krein_feller``; lambda u - f is averaged
    against the same tent so that both sides see the same mu-weighted
    neighbourhood of each point.
    """
    bc = boundary(bc)
    op = apply_krein_feller(m, u, h)
    x = op.points
    if x.size:
        grid = u.grid
        lhs = lam * tent_average(m, u, x, h, grid) - op.values
        rhs = tent_average(m, f, x, h, grid)
        interior = float(np.max(np.abs(lhs - rhs)))
    else:
        interior = 0.0
    if bc == NEUMANN:
        if u.derivative is not None:
            edge = max(abs(u.derivative[0]), abs(u.derivative[-1]))
        else:
            edge = max(abs(u.slope(0.0)), abs(u.slope(1.0)))
    else:
        edge = max(abs(u.values[0]), abs(u.values[-1]))
    return interior + float(edge)


def resolvent_error_bound(lam: float, bc, cdf_dist: float) -> float:
    """Bound on sup |rho - rho_n| in terms of sup |F - F_n|."""
    lam = _check_lambda(lam)
    if cdf_dist < 0:
        raise ConfigError("cdf distance must be nonnegative")
    if boundary(bc) == NEUMANN:
        return (1.0 / lam + 2.0 * math.exp(lam) + 4.0) * math.exp(2.0 * lam) * cdf_dist
    return (2.0 * math.exp(lam) + 4.0) * lam * math.exp(2.0 * lam) * cdf_dist
