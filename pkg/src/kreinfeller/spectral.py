"""Eigenvalues and eigenfunctions of -Delta_mu with Neumann or Dirichlet conditions.

Shooting: Dirichlet eigenvalues are z^2 at the positive zeros of z -> sin_z(1),
Neumann eigenvalues are 0 and z^2 at the zeros of z -> cos_z'(1). Both
functions are integrated with cell transfer matrices. A Sturm count (sign
changes of sin_z resp. cos_z' on the grid equal the number of eigenvalues
below z^2) certifies that the scan did not skip a root.

The matrix oracle replaces mu by equal point masses at quantile midpoints,
which turns Delta_mu into a second-difference operator on a mass chain.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import _quadrature as quad
from . import _transfer
from .errors import ConfigError, ConvergenceError, MissedRootError, NumericalError
from .grid import GridFunction, check_grid
from .measure import CdfMeasure
from .resolvent import DIRICHLET, NEUMANN, boundary

SCAN_STEP = 0.1
TRUNCATION_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    measure: CdfMeasure
    bc: str
    eigenvalues: np.ndarray
    eigenfunctions: list
    method: str
    grid: np.ndarray
    weights: np.ndarray | None = None  # point masses, oracle only
    info: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)

    def values(self, points=None) -> np.ndarray:
        """Eigenfunction samples, shape (count, len(points))."""
        if points is None:
            return np.stack([phi.values for phi in self.eigenfunctions])
        return np.stack([phi.smooth(points) for phi in self.eigenfunctions])

    def gram(self) -> np.ndarray:
        if self.weights is not None:
            v = np.stack([phi.values[1:-1] for phi in self.eigenfunctions])
            return (v * self.weights) @ v.T
        cells = quad.cells(self.measure, self.grid)
        return quad.gram(cells, [quad.sample(phi, self.grid) for phi in self.eigenfunctions])


def orthonormality_defect(s: SpectralDecomposition) -> float:
    """max_{j,k} |<phi_j, phi_k>_mu - delta_jk|."""
    g = s.gram()
    return float(np.max(np.abs(g - np.eye(g.shape[0]))))


class Shooter:
    """Transfer-matrix integrator for Delta_mu g = -z^2 g on a fixed grid."""

    def __init__(self, m: CdfMeasure, bc: str, grid: np.ndarray):
        self.measure = m
        self.bc = bc
        self.grid = grid
        self.cells = quad.cells(m, grid)
        self.series = _transfer.cell_series(self.cells.sig, self.cells.h, self.cells.mass)

    def _start(self):
        return (0.0, 1.0) if self.bc == DIRICHLET else (1.0, 0.0)

    def evaluate(self, z, record: bool = False):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        g0, dg0 = self._start()
        return _transfer.propagate(self.series, -z * z, g0, dg0, record=record)

    def target_and_count(self, z):
        tr = self.evaluate(z)
        if self.bc == DIRICHLET:
            return tr.g[-1], tr.zeros_g
        return tr.dg[-1], tr.zeros_dg + 1

    # -- root finding -----------------------------------------------------
    def scan(self, count: int | None = None, below: float | None = None, step: float = SCAN_STEP):
        """Brackets [z_lo, z_hi] for the first eigenvalues (Neumann zero excluded)."""
        if count is None and below is None:
            raise ConfigError("need a count or an upper bound")
        have_zero = self.bc == NEUMANN
        brackets = []
        z_lo = 0.0
        c_lo = 1 if have_zero else 0
        # sign of the target as z -> 0+: sin_z(1) -> 1, cos_z'(1) ~ -z^2
        t_lo = -1.0 if have_zero else 1.0
        block = 256
        while True:
            zs = z_lo + step * np.arange(1, block + 1)
            t, c = self.target_and_count(zs)
            zs_all = np.concatenate([[z_lo], zs])
            c_all = np.concatenate([[c_lo], c])
            t_all = np.concatenate([[t_lo], t])
            self._check_resolution(zs[-1])
            for i in range(block):
                jump = c_all[i + 1] - c_all[i]
                if jump == 0:
                    continue
                if jump < 0:
                    raise MissedRootError(f"Sturm count decreased near z={zs_all[i + 1]:.6g}; grid too coarse")
                a, b = zs_all[i], zs_all[i + 1]
                if jump == 1 and np.sign(t_all[i]) != np.sign(t_all[i + 1]):
                    brackets.append((a, b))
                    continue
                brackets.extend(self._split(a, b, int(c_all[i]), int(jump)))
            z_lo, c_lo, t_lo = zs[-1], int(c[-1]), t[-1]
            total = c_lo
            if count is not None and total >= count:
                break
            if below is not None and z_lo * z_lo >= below:
                break
        brackets.sort()
        expected = c_lo - (1 if have_zero else 0)
        if len(brackets) != expected:
            raise MissedRootError(
                f"Sturm count {expected} disagrees with {len(brackets)} bracketed roots"
            )
        return brackets

    def _check_resolution(self, z: float):
        est = float(_transfer.truncation_estimate(self.series, [z * z])[0])
        if est > TRUNCATION_LIMIT:
            raise ConvergenceError(
                f"grid too coarse for eigenvalues near {z * z:.6g} (transfer truncation estimate {est:.2e})"
            )

    def _split(self, a, b, c_a, jump, depth: int = 0):
        """Resolve a scan interval whose count rose by ``jump`` into single-root brackets."""
        if depth > 12:
            raise MissedRootError(f"could not separate {jump} eigenvalues in z in [{a}, {b}]")
        zs = np.linspace(a, b, 9)
        t, c = self.target_and_count(zs)
        c = c.copy()
        c[0] = c_a
        t = t.copy()
        if zs[0] == 0.0:
            t[0] = -1.0 if self.bc == NEUMANN else 1.0
        out = []
        for i in range(8):
            j = int(c[i + 1] - c[i])
            if j == 0:
                continue
            if j < 0:
                raise MissedRootError(f"Sturm count decreased near z={zs[i + 1]:.6g}; grid too coarse")
            if j == 1 and np.sign(t[i]) != np.sign(t[i + 1]):
                out.append((zs[i], zs[i + 1]))
            else:
                out.extend(self._split(zs[i], zs[i + 1], int(c[i]), j, depth + 1))
        return out

    def refine(self, brackets, tol: float):
        """Illinois iteration on all brackets at once, with periodic bisection."""
        if not brackets:
            return np.zeros(0)
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        f_lo, _ = self.target_and_count(lo)
        f_hi, _ = self.target_and_count(hi)
        f_lo, f_hi = f_lo.copy(), f_hi.copy()
        side = np.zeros(lo.size, dtype=int)
        for it in range(200):
            width = hi - lo
            if np.all(width <= 0.5 * tol * hi):
                break
            denom = f_hi - f_lo
            safe = np.where(denom != 0, denom, 1.0)
            z = hi - f_hi * (hi - lo) / safe
            bad = (denom == 0) | ~(z > lo) | ~(z < hi) | (it % 4 == 3)
            z = np.where(bad, 0.5 * (lo + hi), z)
            f, _ = self.target_and_count(z)
            left = np.sign(f) == np.sign(f_lo)
            # keep the bracket; Illinois halves the stale endpoint value
            lo_new = np.where(left, z, lo)
            hi_new = np.where(left, hi, z)
            f_lo_new = np.where(left, f, np.where(side == -1, 0.5 * f_lo, f_lo))
            f_hi_new = np.where(left, np.where(side == 1, 0.5 * f_hi, f_hi), f)
            side = np.where(left, 1, -1)
            zero = f == 0
            lo_new = np.where(zero, z, lo_new)
            hi_new = np.where(zero, z, hi_new)
            lo, hi, f_lo, f_hi = lo_new, hi_new, f_lo_new, f_hi_new
        else:
            raise ConvergenceError("eigenvalue refinement did not converge")
        return 0.5 * (lo + hi)

    def eigenfunctions(self, z):
        """Normalized eigenfunctions for the given roots (z = 0 gives the Neumann constant)."""
        z = np.asarray(z, dtype=float)
        tr = self.evaluate(z, record=True)
        grid = self.grid
        funcs = []
        for k in range(z.size):
            g, dg = tr.g[:, k], tr.dg[:, k]
            if self.bc == NEUMANN and z[k] == 0.0:
                # mu is a probability measure, so the constant 1 is already normalized
                funcs.append(GridFunction(grid, np.ones_like(g), np.zeros_like(dg)))
                continue
            phi = GridFunction(grid, g, dg)
            norm2 = quad.integral(self.cells, quad.sample(phi, grid) * quad.sample(phi, grid))
            if not norm2 > 0:
                raise NumericalError("eigenfunction with vanishing mu-norm")
            scale = 1.0 / math.sqrt(norm2)
            big = np.flatnonzero(np.abs(g) > 0.1 * np.abs(g).max())
            if g[big[0]] < 0:
                scale = -scale
            if self.bc == DIRICHLET:
                g = g.copy()
                g[0] = g[-1] = 0.0
            funcs.append(GridFunction(grid, g * scale, dg * scale))
        return funcs


_SHOOTERS: OrderedDict = OrderedDict()


def shooter(m: CdfMeasure, bc, grid) -> Shooter:
    bc = boundary(bc)
    grid = check_grid(grid)
    key = (m.key, bc, grid.size, hash(grid.tobytes()))
    hit = _SHOOTERS.get(key)
    if hit is None:
        hit = Shooter(m, bc, grid)
        _SHOOTERS[key] = hit
        if len(_SHOOTERS) > 16:
            _SHOOTERS.popitem(last=False)
    return hit


_ROOTS: OrderedDict = OrderedDict()


def _roots(sh: Shooter, count, below, tol):
    """Cached roots z_k; the Neumann zero mode is prepended."""
    key = (sh.measure.key, sh.bc, sh.grid.size, hash(sh.grid.tobytes()), count, below, tol)
    hit = _ROOTS.get(key)
    if hit is not None:
        return hit
    have_zero = sh.bc == NEUMANN
    need = None if count is None else count - (1 if have_zero else 0)
    if need is not None and need <= 0:
        roots = np.zeros(0)
    else:
        brackets = sh.scan(count=None if need is None else need + (1 if have_zero else 0), below=below)
        if need is not None:
            brackets = brackets[:need]
        roots = sh.refine(brackets, tol)
        if below is not None:
            roots = roots[roots * roots <= below]
    if have_zero:
        roots = np.concatenate([[0.0], roots])
    if count is not None:
        roots = roots[:count]
    _ROOTS[key] = roots
    if len(_ROOTS) > 64:
        _ROOTS.popitem(last=False)
    return roots


def eigen_shooting(
    m: CdfMeasure, bc, count: int | None = None, tol: float = 1e-12, grid=None, n: int = 2049,
    below: float | None = None,
) -> SpectralDecomposition:
    """First ``count`` eigenpairs (or all with eigenvalue <= ``below``) by shooting."""
    if count is not None and count < 1:
        raise ConfigError("count must be at least 1")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    grid = m.adapted_grid(n) if grid is None else check_grid(grid)
    sh = shooter(m, bc, grid)
    roots = _roots(sh, count, below, tol)
    funcs = sh.eigenfunctions(roots)
    return SpectralDecomposition(m, sh.bc, roots * roots, funcs, "shooting", grid)


def _string_inverse(d: np.ndarray, mass: float, bc: str):
    """Exact O(N) application of the inverse string operator.

    With fluxes q_e = (phi_{e+1} - phi_e) / d_e the equation K phi = b reads
    q_{i-1} - q_i = mass * b_i, so phi follows from two cumulative sums. This
    keeps full relative accuracy when some spacings d_e are tiny, where the
    tridiagonal matrix itself has entries of order 1/d_e.
    """
    n = d.size - 1
    if bc == DIRICHLET:
        total = d.sum()

        def solve(b):
            s_full = np.concatenate([[0.0], mass * np.cumsum(b)])
            q = np.dot(d, s_full) / total - s_full
            return np.cumsum(q * d)[:n]

        return solve

    inner = d[1:-1]

    def solve(b):
        b = b - b.mean()
        q = -mass * np.cumsum(b)[:-1]
        phi = np.concatenate([[0.0], np.cumsum(q * inner)])
        return phi - phi.mean()

    return solve


def eigen_matrix_oracle(m: CdfMeasure, bc, atoms: int = 4000, count: int = 5) -> SpectralDecomposition:
    """Stieltjes-string approximation with ``atoms`` equal point masses at quantile midpoints.

    This violates non-atomicity on purpose and serves only as a cross-check.
    The lowest eigenvalues are found by Lanczos iteration on the inverse
    string operator.
    """
    bc = boundary(bc)
    if count < 1 or atoms < 10 * count:
        raise ConfigError("need count >= 1 and atoms >= 10 * count")
    y = np.asarray(m.quantile((np.arange(atoms) + 0.5) / atoms), dtype=float)
    mass = 1.0 / atoms
    d = np.diff(np.concatenate([[0.0], y, [1.0]]))
    if np.any(d <= 0):
        raise NumericalError("quantile nodes are not strictly increasing")
    solve = _string_inverse(d, mass, bc)
    wanted = count - (1 if bc == NEUMANN else 0)
    vals = np.zeros(0)
    vecs = np.zeros((atoms, 0))
    if wanted > 0:
        op = LinearOperator((atoms, atoms), matvec=solve, dtype=float)
        try:
            mu, vecs = eigsh(op, k=wanted, which="LA", tol=1e-14, ncv=min(atoms, max(2 * wanted + 1, 20)))
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos iteration did not converge: {exc}") from exc
        order = np.argsort(-mu)
        mu, vecs = mu[order], vecs[:, order]
        if np.any(mu <= 0):
            raise NumericalError("inverse string operator is not positive")
        vals = 1.0 / mu
    if bc == NEUMANN:
        vals = np.concatenate([[0.0], vals])
        vecs = np.concatenate([np.ones((atoms, 1)), vecs], axis=1)
    grid = np.concatenate([[0.0], y, [1.0]])
    funcs = []
    for k in range(count):
        v = vecs[:, k] / math.sqrt(mass * np.sum(vecs[:, k] ** 2))
        big = np.flatnonzero(np.abs(v) > 0.1 * np.abs(v).max())
        if v[big[0]] < 0:
            v = -v
        ends = (0.0, 0.0) if bc == DIRICHLET else (v[0], v[-1])
        funcs.append(GridFunction(grid, np.concatenate([[ends[0]], v, [ends[1]]])))
    return SpectralDecomposition(
        m, bc, vals, funcs, "matrix_oracle", grid, weights=np.full(atoms, mass), info={"atoms": atoms}
    )
