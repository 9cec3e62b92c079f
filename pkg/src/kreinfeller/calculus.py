"""Generalized monomials and the hyperbolic / trigonometric families they generate.

For a measure mu with distribution function F the monomials are

    p_0 = q_0 = 1,
    p_k = int_0^x p_{k-1} dmu  (k odd),   p_k = int_0^x p_{k-1} dt  (k even),
    q_k = int_0^x q_{k-1} dt   (k odd),   q_k = int_0^x q_{k-1} dmu (k even),

and cosh_z = sum z^{2k} p_{2k}, sinh_z = sum z^{2k+1} q_{2k+1} solve
Delta_mu g = z^2 g with Delta_mu = d/dmu d/dx. The alternating sums give
cos_z and sin_z, solutions of Delta_mu g = -z^2 g.

Monomials are iterated integrals of alternating words, so they are
propagated cell by cell from exact cell signatures (Chen's identity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _quadrature as quad
from . import _signature as sig
from . import _transfer
from .errors import ConfigError
from .grid import GridFunction, check_grid, merge_grids
from .measure import CdfMeasure

SERIES_MAX_ORDER = 400


@dataclass(frozen=True, eq=False)
class MonomialTable:
    measure: CdfMeasure
    grid: np.ndarray
    max_order: int
    p: np.ndarray  # (K+1, n)
    q: np.ndarray

    def p_function(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.p[k])

    def q_function(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.q[k])


def _alternating_increments(levels, last: int, depth: int) -> np.ndarray:
    """Column j holds the cell coordinate of the alternating word of length j ending in ``last``."""
    cols = [np.ones(levels[0].shape[0])]
    for j in range(1, depth + 1):
        cols.append(levels[j][:, sig.alternating_word(j, last)])
    return np.stack(cols, axis=1)


def _scaled_monomials(measure, grid, max_order: int, scale: float = 1.0):
    """Rows scale**k * p_k and scale**k * q_k for k <= max_order."""
    levels = measure.cell_signatures(grid)
    depth = len(levels) - 1
    inc = {
        last: _alternating_increments(levels, last, depth) * scale ** np.arange(depth + 1)
        for last in (sig.DX, sig.DMU)
    }
    n = grid.size
    p = np.zeros((max_order + 1, n))
    q = np.zeros((max_order + 1, n))
    p[0] = q[0] = 1.0
    for k in range(1, max_order + 1):
        for table, last in ((p, sig.DMU if k % 2 else sig.DX), (q, sig.DX if k % 2 else sig.DMU)):
            coef = inc[last]
            step = np.zeros(n - 1)
            for j in range(1, min(k, depth) + 1):
                step += coef[:, j] * table[k - j, :-1]
            table[k, 1:] = np.cumsum(step)
        if k > 8 and max(np.abs(p[k]).max(), np.abs(q[k]).max(), np.abs(p[k - 1]).max()) < 1e-300:
            break
    return p, q


def monomial_table(m: CdfMeasure, max_order: int, grid=None, n: int = 2049) -> MonomialTable:
    """Tables of p_0..p_K and q_0..q_K on ``grid`` (default: the adapted grid)."""
    if max_order < 0:
        raise ConfigError("max_order must be nonnegative")
    grid = m.adapted_grid(n) if grid is None else check_grid(grid)
    p, q = _scaled_monomials(m, grid, max_order)
    return MonomialTable(m, grid, max_order, p, q)


def _log_tail(s: float, start: int, tol: float) -> float:
    """log of sum_{k >= start} s**k / k!, summed until terms drop below tol * 1e-3."""
    if s == 0.0:
        return 0.0 if start == 0 else -math.inf
    log_s = math.log(s)
    log_stop = math.log(tol * 1e-3)
    logs = []
    k = start
    while True:
        lt = k * log_s - math.lgamma(k + 1)
        logs.append(lt)
        if k > s and lt < log_stop:
            break
        k += 1
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def _log_tail_bound(z: float, K: int, tol: float) -> float:
    s = z * z
    amp = math.log(max(1.0, abs(z)))
    second = math.log(s) + _log_tail(s, K, tol) if s > 0 else -math.inf
    return amp + max(_log_tail(s, K + 1, tol), second)


def tail_bound(z: float, K: int, tol: float = 1e-16) -> float:
    """Bound on the tails beyond index K of the cosh, sinh and derivative series.

    Uses p_{2k}, q_{2k+1} <= 1/k! and p_{2k-1}, q_{2k} <= 1/(k-1)! on [0, 1].
    """
    value = _log_tail_bound(z, K, tol)
    return math.exp(value) if value < 709 else math.inf


def truncation_order(z: float, tol: float) -> int:
    """Smallest K whose tail bound is below ``tol``."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    if z == 0:
        return 0
    log_tol = math.log(tol)
    s = z * z
    lo, hi = 0, max(8, int(math.e * s) + 8)
    while _log_tail_bound(z, hi, tol) >= log_tol:
        hi *= 2
    # the bound is decreasing in K: bisect for the first K below tol
    while lo < hi:
        mid = (lo + hi) // 2
        if _log_tail_bound(z, mid, tol) < log_tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True, eq=False)
class SeriesEval:
    measure: CdfMeasure
    z: float
    grid: np.ndarray
    truncation_order: int
    tail_bound: float
    method: str
    cosh: GridFunction | None = None
    sinh: GridFunction | None = None
    cos: GridFunction | None = None
    sin: GridFunction | None = None
    dcosh: GridFunction | None = None
    dsinh: GridFunction | None = None
    dcos: GridFunction | None = None
    dsin: GridFunction | None = None
    notes: dict = field(default_factory=dict)


def _series(m, z, grid, K, alternating: bool):
    c = max(1.0, abs(z))
    r = z / c
    p, q = _scaled_monomials(m, grid, 2 * K + 1, scale=c)
    k = np.arange(K + 1)
    sign = (-1.0) ** k if alternating else np.ones(K + 1)
    even = sign * r ** (2 * k)
    odd = sign * r ** (2 * k + 1) * c
    # derivative of the even series: sum_{k>=1} sign_k z^{2k} p_{2k-1} = sum sign r^{2k} c p^_{2k-1}
    even_d = even[1:] * c
    val_even = even @ p[0 : 2 * K + 1 : 2]
    val_odd = odd @ q[1 : 2 * K + 2 : 2] / c
    der_even = even_d @ p[1 : 2 * K : 2] if K >= 1 else np.zeros(grid.size)
    der_odd = odd @ q[0 : 2 * K + 1 : 2]
    magnitude = np.abs(even) @ np.abs(p[0 : 2 * K + 1 : 2])
    return val_even, der_even, val_odd, der_odd, magnitude


def _transfer_pair(m, z, grid, kappa):
    cells = quad.cells(m, grid)
    cs = _transfer.cell_series(cells.sig, cells.h, cells.mass)
    even = _transfer.propagate(cs, [kappa], 1.0, 0.0)
    odd = _transfer.propagate(cs, [kappa], 0.0, z)
    est = float(_transfer.truncation_estimate(cs, [kappa])[0])
    scale = max(1.0, float(np.abs(even.g).max()), float(np.abs(odd.g).max()))
    return even.g[:, 0], even.dg[:, 0], odd.g[:, 0], odd.dg[:, 0], est * scale


def _resolve_grid(m, grid, n):
    return m.adapted_grid(n) if grid is None else check_grid(grid)


def hyperbolic(m: CdfMeasure, z: float, grid=None, tol: float = 1e-10, n: int = 2049, method: str = "auto") -> SeriesEval:
    """cosh_z, sinh_z and their classical derivatives on ``grid``.

    ``method="series"`` sums the monomial series to ``truncation_order(z, tol)``;
    ``"transfer"`` integrates the equation with cell transfer matrices;
    ``"auto"`` picks the series unless it would need more than 400 terms.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    z = float(z)
    grid = _resolve_grid(m, grid, n)
    K = truncation_order(z, tol)
    if method == "auto":
        method = "series" if K <= SERIES_MAX_ORDER else "transfer"
    if method == "series":
        ce, de, so, do, _ = _series(m, z, grid, K, alternating=False)
        bound = tail_bound(z, K, tol)
    elif method == "transfer":
        ce, de, so, do, bound = _transfer_pair(m, z, grid, z * z)
        K = len(m.cell_signatures(grid)) - 1
    else:
        raise ConfigError(f"unknown method {method!r}")
    return SeriesEval(
        m, z, grid, K, bound, method,
        cosh=GridFunction(grid, ce, de), sinh=GridFunction(grid, so, do),
        dcosh=GridFunction(grid, de), dsinh=GridFunction(grid, do),
    )


def trig(m: CdfMeasure, z: float, grid=None, tol: float = 1e-10, n: int = 2049, method: str = "auto") -> SeriesEval:
    """cos_z, sin_z (solutions of Delta_mu g = -z^2 g) and their classical derivatives.

    The alternating series loses about eps * cosh_z(1) to cancellation; with
    ``method="auto"`` the transfer-matrix integrator takes over when that loss
    would exceed ``tol``.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    z = float(z)
    grid = _resolve_grid(m, grid, n)
    K = truncation_order(z, tol)
    use = method
    if method == "auto":
        use = "series" if K <= SERIES_MAX_ORDER else "transfer"
    if use == "series":
        ce, de, so, do, magnitude = _series(m, z, grid, K, alternating=True)
        bound = tail_bound(z, K, tol) + 64 * np.finfo(float).eps * float(magnitude.max())
        if method == "auto" and bound >= tol:
            use = "transfer"
    if use == "transfer":
        ce, de, so, do, bound = _transfer_pair(m, z, grid, -z * z)
        K = len(m.cell_signatures(grid)) - 1
    elif use != "series":
        raise ConfigError(f"unknown method {method!r}")
    return SeriesEval(
        m, z, grid, K, bound, use,
        cos=GridFunction(grid, ce, de), sin=GridFunction(grid, so, do),
        dcos=GridFunction(grid, de), dsin=GridFunction(grid, do),
    )


# ---------------------------------------------------------------------------
# difference-quotient Krein-Feller operator


@dataclass(frozen=True, eq=False)
class OperatorSample:
    """Values of a numerical Delta_mu f at selected interior points."""

    points: np.ndarray
    values: np.ndarray
    excluded: np.ndarray  # points dropped because the mu-mass around them vanishes

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def tent_mass(m: CdfMeasure, x, h: float) -> np.ndarray:
    """int (h - |t - x|)_+ dmu(t), written as a second difference of int_0^x F."""
    x = np.asarray(x, dtype=float)
    return m.cdf_integral(x + h) - 2 * m.cdf_integral(x) + m.cdf_integral(x - h)


def _evaluate(f, x):
    if isinstance(f, GridFunction):
        return f.smooth(x)
    return np.asarray(f(x), dtype=float)


def _stencil_points(m, f, h, points):
    if points is None:
        base = f.grid if isinstance(f, GridFunction) else np.linspace(0.0, 1.0, 1025)
        points = base
    points = np.asarray(points, dtype=float)
    points = points[(points - h >= 0.0) & (points + h <= 1.0)]
    keep = np.ones(points.size, dtype=bool)
    for a, b in m.support_gaps(max(h, 1e-9)):
        keep &= ~((points > a) & (points < b))
    return points, keep


def apply_krein_feller(m: CdfMeasure, f, h: float = 1e-3, points=None) -> OperatorSample:
    """Delta_mu f at interior points by the second difference over the mu-mass of a tent.

    If Delta_mu f is continuous, (f(x+h) - 2 f(x) + f(x-h)) equals the
    integral of (h - |t-x|)_+ Delta_mu f(t) dmu(t), so dividing by the tent's
    mu-mass gives a consistent estimate for any non-atomic mu. Points inside
    resolved gaps or with vanishing tent mass are excluded.
    """
    if h <= 0:
        raise ConfigError("h must be positive")
    pts, keep = _stencil_points(m, f, h, points)
    denom = tent_mass(m, pts, h)
    scale = np.maximum(1.0, np.abs(m.cdf_integral(pts)))
    keep &= denom > 1e3 * np.finfo(float).eps * scale
    x = pts[keep]
    numer = _evaluate(f, x + h) - 2 * _evaluate(f, x) + _evaluate(f, x - h)
    return OperatorSample(x, numer / denom[keep], pts[~keep])


def tent_average(m: CdfMeasure, g, x, h: float, grid=None) -> np.ndarray:
    """mu-average of g against the tent (h - |t - x|)_+ at each point x."""
    x = np.asarray(x, dtype=float)
    base = m.adapted_grid(1025) if grid is None else np.asarray(grid)
    if isinstance(g, GridFunction):
        base = merge_grids(base, g.grid)
    work = merge_grids(base, x, np.clip(x - h, 0, 1), np.clip(x + h, 0, 1))
    cells = quad.cells(m, work)
    gs = quad.sample(g, work)
    ts = quad.sample(lambda t: t, work)
    G0 = np.interp
    c0 = quad.cumulative(cells, gs)
    c1 = quad.cumulative(cells, gs * ts)

    def at(table, y):
        return G0(y, work, table)

    left = (at(c1, x) - at(c1, x - h) - (x - h) * (at(c0, x) - at(c0, x - h))) / h
    right = ((x + h) * (at(c0, x + h) - at(c0, x)) - (at(c1, x + h) - at(c1, x))) / h
    return (left + right) / (tent_mass(m, x, h) / h)
