"""Cell transfer matrices for the equation Delta_mu g = kappa g.

Across a cell the pair (g, g') evolves linearly,

    g(b)  = A g(a) + B g'(a),     g'(b) = C g(a) + D g'(a),

with A, B, C, D power series in kappa whose coefficients are iterated
integrals over the cell of alternating words. Truncating at the signature
depth leaves an error of order (|kappa| h mass)**4 per cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _signature as sig


@dataclass(frozen=True)
class CellSeries:
    a: np.ndarray  # (n_cells, ka) coefficient of kappa**k in A
    b: np.ndarray
    c: np.ndarray  # column k is the coefficient of kappa**(k+1)
    d: np.ndarray
    hm: np.ndarray  # h * mass per cell, for truncation estimates


def cell_series(levels, h, mass) -> CellSeries:
    depth = len(levels) - 1

    def coords(lengths, last):
        cols = []
        for j in lengths:
            if j == 0:
                cols.append(np.ones(levels[0].shape[0]))
            else:
                cols.append(levels[j][:, sig.alternating_word(j, last)])
        return np.stack(cols, axis=1)

    a = coords([2 * k for k in range(depth // 2 + 1)], sig.DX)
    b = coords([2 * k + 1 for k in range((depth - 1) // 2 + 1)], sig.DX)
    c = coords([2 * k - 1 for k in range(1, (depth + 1) // 2 + 1)], sig.DMU)
    d = coords([2 * k for k in range(depth // 2 + 1)], sig.DMU)
    return CellSeries(a, b, c, d, h * mass)


def _horner(coef, kappa):
    out = np.zeros((coef.shape[0], kappa.size))
    for k in range(coef.shape[1] - 1, -1, -1):
        out = out * kappa[None, :] + coef[:, k : k + 1]
    return out


def matrices(cs: CellSeries, kappa):
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    A = _horner(cs.a, kappa)
    B = _horner(cs.b, kappa)
    C = _horner(cs.c, kappa) * kappa[None, :]
    D = _horner(cs.d, kappa)
    return A, B, C, D


def truncation_estimate(cs: CellSeries, kappa) -> np.ndarray:
    kappa = np.atleast_1d(np.abs(np.asarray(kappa, dtype=float)))
    return np.sum((kappa[None, :] * cs.hm[:, None]) ** 4, axis=0) / 576.0


@dataclass
class Trajectory:
    g: np.ndarray  # (n_points, n_kappa)
    dg: np.ndarray
    zeros_g: np.ndarray  # sign changes of g at grid points after the start
    zeros_dg: np.ndarray


def propagate(cs: CellSeries, kappa, g0, dg0, backward: bool = False, record: bool = True, chunk: int = 256):
    """Integrate from x=0 (or from x=1 when ``backward``) for every kappa."""
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    g0 = np.broadcast_to(np.asarray(g0, dtype=float), kappa.shape)
    dg0 = np.broadcast_to(np.asarray(dg0, dtype=float), kappa.shape)
    n_cells = cs.a.shape[0]
    parts = []
    for lo in range(0, kappa.size, chunk):
        sl = slice(lo, lo + chunk)
        parts.append(_propagate_chunk(cs, kappa[sl], g0[sl], dg0[sl], backward, record, n_cells))
    if len(parts) == 1:
        return parts[0]
    return Trajectory(
        *(np.concatenate([getattr(p, f) for p in parts], axis=-1) for f in ("g", "dg", "zeros_g", "zeros_dg"))
    )


def _propagate_chunk(cs, kappa, g0, dg0, backward, record, n_cells):
    A, B, C, D = matrices(cs, kappa)
    g = g0.copy()
    dg = dg0.copy()
    m = kappa.size
    if record:
        G = np.empty((n_cells + 1, m))
        DG = np.empty((n_cells + 1, m))
    zeros_g = np.zeros(m, dtype=np.int64)
    zeros_dg = np.zeros(m, dtype=np.int64)
    sign_g = np.sign(g)
    sign_dg = np.sign(dg)
    order = range(n_cells - 1, -1, -1) if backward else range(n_cells)
    pos = n_cells if backward else 0
    if record:
        G[pos], DG[pos] = g, dg
    for i in order:
        if backward:
            g, dg = D[i] * g - B[i] * dg, A[i] * dg - C[i] * g
            pos = i
        else:
            g, dg = A[i] * g + B[i] * dg, C[i] * g + D[i] * dg
            pos = i + 1
        if record:
            G[pos], DG[pos] = g, dg
        s = np.sign(g)
        flip = (s != 0) & (sign_g != 0) & (s != sign_g)
        zeros_g += flip
        sign_g = np.where(s != 0, s, sign_g)
        s = np.sign(dg)
        flip = (s != 0) & (sign_dg != 0) & (s != sign_dg)
        zeros_dg += flip
        sign_dg = np.where(s != 0, s, sign_dg)
    if not record:
        G = g[None, :]
        DG = dg[None, :]
    return Trajectory(G, DG, zeros_g, zeros_dg)
