"""Non-atomic probability measures on [0, 1] given through their distribution functions.

Every measure decomposes [0, 1] into *pieces*: intervals on which the
distribution function is affine (Lebesgue pieces, gaps) or an affine copy of
the self-similar Cantor function. Iterated integrals of the path
t -> (t, F(t)) over any interval are then available exactly, which is what
the rest of the package builds on.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _signature as sig
from .errors import ConfigError, ConvergenceError, DomainError
from .grid import MERGE_TOL, GridFunction, check_grid, merge_grids

SIG_DEPTH = 7
EPS = np.finfo(float).eps
SHORT_INTERVAL = 1e-9


@dataclass(frozen=True)
class Pieces:
    """Decomposition of [0, 1]; ``density`` is NaN on self-similar pieces."""

    knots: np.ndarray
    density: np.ndarray
    mass: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.knots)

    @property
    def self_similar(self) -> np.ndarray:
        return np.isnan(self.density)


class CdfMeasure:
    """Base class. Subclasses provide ``_cdf``, ``_cdf_integral`` and ``pieces``."""

    tolerance: float = 1e-12

    kind: str = "abstract"

    # -- evaluation -------------------------------------------------------
    def cdf(self, x):
        arr = _domain(x, "x")
        out = self._cdf(np.atleast_1d(arr))
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(arr))

    def cdf_integral(self, x):
        """Phi(x) = integral of F over [0, x]."""
        arr = _domain(x, "x")
        out = self._cdf_integral(np.atleast_1d(arr))
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(arr))

    def quantile(self, p):
        """inf{x : F(x) >= p}, by bisection."""
        arr = _domain(p, "p")
        flat = np.atleast_1d(arr).astype(float)
        lo = np.zeros_like(flat)
        hi = np.ones_like(flat)
        for _ in range(200):
            if np.all(hi - lo <= 4 * EPS):
                break
            mid = 0.5 * (lo + hi)
            above = self._cdf(mid) >= flat
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        hi = np.where(flat <= 0.0, 0.0, hi)
        return float(hi[0]) if np.ndim(p) == 0 else hi.reshape(np.shape(arr))

    # -- structure --------------------------------------------------------
    def pieces(self, level: int = 0) -> Pieces:
        raise NotImplementedError

    def default_level(self, n: int) -> int:
        return 0

    def signature_level(self, grid: np.ndarray) -> int:
        return 0

    def adapted_grid(self, n: int = 2049) -> np.ndarray:
        """Grid containing every piece boundary at the resolution of ``n``.

        Pieces carrying positive Lebesgue density are subdivided to spacing
        at most 1/(n-1); gaps and self-similar pieces are kept whole.
        """
        if n < 2:
            raise ConfigError("grid size must be at least 2")
        pcs = self.pieces(self.default_level(n))
        spacing = 1.0 / (n - 1)
        parts = []
        for a, b, dens in zip(pcs.knots[:-1], pcs.knots[1:], pcs.density):
            m = 1
            if dens > 0 and b - a > spacing * (1 + 1e-9):
                m = int(math.ceil((b - a) / spacing - 1e-9))
            parts.append(np.linspace(a, b, m + 1)[:-1])
        parts.append([1.0])
        return np.concatenate(parts)

    def support_gaps(self, resolution: float) -> list[tuple[float, float]]:
        """Maximal open intervals of width >= resolution carrying no mass."""
        if resolution <= 0:
            raise ConfigError("resolution must be positive")
        pcs = self.pieces(self._gap_level(resolution))
        empty = (pcs.mass <= self.tolerance) & ~pcs.self_similar
        gaps: list[tuple[float, float]] = []
        start = None
        for i, is_gap in enumerate(empty):
            if is_gap and start is None:
                start = pcs.knots[i]
            if not is_gap and start is not None:
                gaps.append((float(start), float(pcs.knots[i])))
                start = None
        if start is not None:
            gaps.append((float(start), 1.0))
        return [(a, b) for a, b in gaps if b - a >= resolution * (1 - 1e-12)]

    def _gap_level(self, resolution: float) -> int:
        return 0

    # -- iterated integrals ----------------------------------------------
    def cell_signatures(self, grid, depth: int = SIG_DEPTH, level: int | None = None):
        """Signatures of t -> (t, F(t)) over the consecutive cells of ``grid``."""
        grid = np.asarray(grid, dtype=float)
        if level is None:
            level = self.signature_level(grid)
        key = (self.key, depth, level, grid.size, hash(grid.tobytes()))
        hit = _SIG_CACHE.get(key)
        if hit is not None:
            _SIG_CACHE.move_to_end(key)
            return hit
        out = self._cell_signatures(grid, depth, level)
        _SIG_CACHE[key] = out
        if len(_SIG_CACHE) > 48:
            _SIG_CACHE.popitem(last=False)
        return out

    def _cell_signatures(self, grid, depth, level):
        pcs = self.pieces(level)
        inner = pcs.knots[1:-1]
        pos = np.searchsorted(grid, inner)
        near = np.zeros(inner.size, dtype=bool)
        for shift in (0, -1):
            j = np.clip(pos + shift, 0, grid.size - 1)
            near |= np.abs(grid[j] - inner) <= 1e-14
        points = np.union1d(grid, inner[~near])
        a, b = points[:-1], points[1:]
        mid = 0.5 * (a + b)
        piece = np.clip(np.searchsorted(pcs.knots, mid) - 1, 0, pcs.density.size - 1)
        subs = self._piece_signatures(pcs, piece, a, b, depth)
        owner = np.clip(np.searchsorted(grid, mid) - 1, 0, grid.size - 2)
        return _fold(subs, owner, grid.size - 1)

    def _piece_signatures(self, pcs, piece, a, b, depth):
        n = a.size
        h = b - a
        dens = pcs.density[piece]
        lin = ~np.isnan(dens)
        out = sig.identity(n, depth)
        if lin.any():
            part = sig.linear(h[lin], dens[lin] * h[lin], depth)
            for j in range(1, depth + 1):
                out[j][lin] = part[j]
        if (~lin).any():
            idx = np.flatnonzero(~lin)
            p = piece[idx]
            x0 = pcs.knots[p]
            sx = pcs.widths[p]
            smu = pcs.mass[p]
            part = self._self_similar_signatures(
                (a[idx] - x0) / sx, (b[idx] - x0) / sx, sx, smu, depth
            )
            for j in range(1, depth + 1):
                out[j][idx] = part[j]
        return out

    def _self_similar_signatures(self, ua, ub, sx, smu, depth):
        raise NotImplementedError

    # -- identity ---------------------------------------------------------
    def to_spec(self) -> dict:
        raise NotImplementedError

    @property
    def key(self) -> str:
        return json.dumps(self.to_spec(), sort_keys=True)

    def reflected(self) -> "CdfMeasure":
        """Image measure under x -> 1 - x."""
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, CdfMeasure) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()})"


_SIG_CACHE: OrderedDict = OrderedDict()


def _domain(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _fold(subs, owner, n_cells):
    """Chen-multiply consecutive sub-cell signatures sharing an owner cell."""
    counts = np.bincount(owner, minlength=n_cells)
    if np.all(counts == 1):
        return subs
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    acc = sig.take(subs, starts)
    for r in range(1, int(counts.max())):
        rows = np.flatnonzero(counts > r)
        merged = sig.chen(sig.take(acc, rows), sig.take(subs, starts[rows] + r))
        for j in range(1, len(acc)):
            acc[j][rows] = merged[j]
    return acc


# ---------------------------------------------------------------------------
# piecewise-linear distribution functions


class PiecewiseLinearMeasure(CdfMeasure):
    """F linear between knots; covers Lebesgue, level-n Cantor approximants and tables."""

    def _knots(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _cdf(self, x):
        xs, fs = self._knots()
        return np.interp(x, xs, fs)

    def _cdf_integral(self, x):
        xs, fs = self._knots()
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (fs[1:] + fs[:-1]) * np.diff(xs))])
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        slope = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i])
        dx = x - xs[i]
        return cum[i] + fs[i] * dx + 0.5 * slope * dx * dx

    def quantile(self, p):
        arr = _domain(p, "p")
        flat = np.atleast_1d(arr).astype(float)
        xs, fs = self._knots()
        i = np.clip(np.searchsorted(fs, flat, side="left"), 1, xs.size - 1)
        rise = fs[i] - fs[i - 1]
        frac = np.where(rise > 0, (flat - fs[i - 1]) / np.where(rise > 0, rise, 1.0), 0.0)
        out = xs[i - 1] + frac * (xs[i] - xs[i - 1])
        out = np.where(flat <= 0.0, 0.0, out)
        return float(out[0]) if np.ndim(p) == 0 else out.reshape(np.shape(arr))

    def pieces(self, level: int = 0) -> Pieces:
        xs, fs = self._knots()
        mass = np.diff(fs)
        return Pieces(xs, mass / np.diff(xs), mass)


@dataclass(frozen=True, eq=False, repr=False)
class Lebesgue(PiecewiseLinearMeasure):
    kind = "lebesgue"

    def _knots(self):
        return _UNIT, _UNIT

    def quantile(self, p):
        arr = _domain(p, "p")
        return float(arr) if np.ndim(p) == 0 else arr.copy()

    def to_spec(self):
        return {"type": "lebesgue"}

    def reflected(self):
        return self


_UNIT = np.array([0.0, 1.0])


def _check_weights(weights) -> tuple[float, float]:
    try:
        w1, w2 = (float(w) for w in weights)
    except (TypeError, ValueError) as exc:
        raise ConfigError("weights must be a pair of numbers") from exc
    if not (0 < w1 < 1 and 0 < w2 < 1) or abs(w1 + w2 - 1) > 1e-12:
        raise ConfigError(f"weights must lie in (0, 1) and sum to 1, got {weights}")
    return w1, 1.0 - w1


def _ternary_cells(level: int, w1: float):
    """Left endpoints (as integers over 3**level) and masses of the level-n IFS intervals."""
    k = np.zeros(1, dtype=np.int64)
    mass = np.ones(1)
    for _ in range(level):
        k = np.concatenate([3 * k, 3 * k + 2])
        mass = np.concatenate([mass * w1, mass * (1 - w1)])
        order = np.argsort(k, kind="stable")
        k, mass = k[order], mass[order]
    return k, mass


def _interleave(level: int, w1: float):
    """Knots and per-piece masses alternating IFS interval / gap."""
    k, mass = _ternary_cells(level, w1)
    scale = 3.0**level
    knots = np.empty(2 * k.size)
    knots[0::2] = k / scale
    knots[1::2] = (k + 1) / scale
    pmass = np.zeros(2 * k.size - 1)
    pmass[0::2] = mass
    return knots, pmass


@dataclass(frozen=True, eq=False, repr=False)
class CantorApprox(PiecewiseLinearMeasure):
    """Level-n approximant: uniform mass on each level-n ternary interval."""

    weights: tuple[float, float] = (0.5, 0.5)
    level: int = 1
    kind = "cantor_approx"

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        if int(self.level) != self.level or self.level < 0 or self.level > 14:
            raise ConfigError("cantor_approx level must be an integer in [0, 14]")
        object.__setattr__(self, "level", int(self.level))

    def _knots(self):
        cached = self.__dict__.get("_kn")
        if cached is None:
            knots, pmass = _interleave(self.level, self.weights[0])
            fs = np.concatenate([[0.0], np.cumsum(pmass)])
            fs[-1] = 1.0
            cached = (knots, fs)
            object.__setattr__(self, "_kn", cached)
        return cached

    def _gap_level(self, resolution):
        return self.level

    def to_spec(self):
        return {"type": "cantor_approx", "weights": list(self.weights), "level": self.level}

    def reflected(self):
        return CantorApprox((self.weights[1], self.weights[0]), self.level)


@dataclass(frozen=True, eq=False, repr=False)
class Tabulated(PiecewiseLinearMeasure):
    """Distribution function interpolated linearly through samples (x_i, F_i)."""

    samples: tuple = field(default=((0.0, 0.0), (1.0, 1.0)))
    kind = "tabulated"

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ConfigError("samples must be a list of [x, F] pairs")
        xs, fs = arr[:, 0], arr[:, 1]
        if xs[0] != 0 or xs[-1] != 1 or fs[0] != 0 or fs[-1] != 1:
            raise ConfigError("samples must start at (0, 0) and end at (1, 1)")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("sample abscissae must be strictly increasing")
        if np.any(np.diff(fs) < 0):
            raise ConfigError("sampled distribution function must be nondecreasing")
        if fs[1] <= 0 or fs[-2] >= 1:
            raise ConfigError("0 and 1 must belong to the support")
        object.__setattr__(self, "samples", tuple(map(tuple, arr.tolist())))

    def _knots(self):
        arr = np.asarray(self.samples)
        return arr[:, 0], arr[:, 1]

    def to_spec(self):
        return {"type": "tabulated", "samples": [list(s) for s in self.samples]}

    def reflected(self):
        arr = np.asarray(self.samples)[::-1]
        return Tabulated(tuple(zip((1.0 - arr[:, 0]).tolist(), (1.0 - arr[:, 1]).tolist())))


# ---------------------------------------------------------------------------
# self-similar Cantor measure


@dataclass(frozen=True, eq=False, repr=False)
class Cantor(CdfMeasure):
    """Invariant measure of the maps x/3 and 2/3 + x/3 with weights (w1, w2)."""

    weights: tuple[float, float] = (0.5, 0.5)
    eval_depth: int | None = None
    tolerance: float = 1e-12
    kind = "cantor"

    def __post_init__(self):
        w1, w2 = _check_weights(self.weights)
        object.__setattr__(self, "weights", (w1, w2))
        if self.eval_depth is None:
            depth = int(math.ceil(math.log(1e-14) / math.log(max(w1, w2))))
            object.__setattr__(self, "eval_depth", max(depth, 24))
        elif self.eval_depth < 1:
            raise ConfigError("eval_depth must be positive")

    def _cdf(self, x):
        return cantor_prefix(x, self.weights[0], 1, self.eval_depth)[1][:, 1]

    def quantile(self, p):
        """Inverse digit recursion: p <= w1 picks ternary digit 0, else digit 2."""
        arr = _domain(p, "p")
        q = np.atleast_1d(arr).astype(float).copy()
        w1, w2 = self.weights
        x = np.zeros_like(q)
        scale = 1.0
        for _ in range(40):
            scale /= 3.0
            # ties go left: p on a plateau must map to the gap's left end
            low = q <= w1 + 1e-12
            x = np.where(low, x, x + 2.0 * scale)
            q = np.where(low, q / w1, (q - w1) / w2)
            q = np.clip(q, 0.0, 1.0)
        # the exact quantile is rarely a double and F can rise by ~1e-6 per ulp;
        # step up to the first double with F(x) >= p so the inf convention holds
        target = np.atleast_1d(arr).astype(float)
        for _ in range(64):
            short = self._cdf(x) < target
            if not short.any():
                break
            x = np.where(short, np.minimum(np.nextafter(x, 2.0), 1.0), x)
        return float(x[0]) if np.ndim(p) == 0 else x.reshape(np.shape(arr))

    def _cdf_integral(self, x):
        return cantor_prefix(x, self.weights[0], 2, self.eval_depth)[2][:, 2]

    def pieces(self, level: int = 0) -> Pieces:
        knots, pmass = _interleave(level, self.weights[0])
        density = np.zeros(pmass.size)
        density[0::2] = np.nan
        return Pieces(knots, density, pmass)

    def default_level(self, n):
        return max(1, int(math.floor(math.log2(n - 1))) - 1)

    def signature_level(self, grid):
        width = float(np.median(np.diff(grid)))
        level = int(math.ceil(math.log(1.0 / width) / math.log(3.0) - 1e-9))
        return min(max(level, 0), 20)

    def _gap_level(self, resolution):
        return int(math.ceil(math.log(1.0 / resolution) / math.log(3.0))) + 1

    def _self_similar_signatures(self, ua, ub, sx, smu, depth):
        w1 = self.weights[0]
        # endpoints within a few ulps of the piece boundary count as the boundary
        ua = np.where(np.abs(ua) * sx <= 1e-14, 0.0, ua)
        ub = np.where(np.abs(ub - 1) * sx <= 1e-14, 1.0, ub)
        full = (ua == 0.0) & (ub == 1.0)
        out = sig.identity(ua.size, depth)
        template = sig.cantor_signature(w1, depth)
        if full.any():
            part = sig.scale(list(template), sx[full], smu[full])
            for j in range(1, depth + 1):
                out[j][full] = part[j]
        rest = np.flatnonzero(~full)
        if rest.size:
            ua_r = np.clip(ua[rest], 0.0, 1.0)
            ub_r = np.clip(ub[rest], 0.0, 1.0)
            left = cantor_prefix(ua_r, w1, depth, self.eval_depth)
            right = cantor_prefix(ub_r, w1, depth, self.eval_depth)
            part = sig.scale(sig.chen(sig.inverse(left), right), sx[rest], smu[rest])
            for j in range(1, depth + 1):
                out[j][rest] = part[j]
        return out

    def to_spec(self):
        return {"type": "cantor", "weights": list(self.weights)}

    def reflected(self):
        return Cantor((self.weights[1], self.weights[0]), self.eval_depth, self.tolerance)


def _snap_ternary(u, max_level: int = 22):
    """Exact representation k / 3**L for points within a few ulps of a ternary rational."""
    k = np.full(u.shape, -1, dtype=np.int64)
    lev = np.full(u.shape, -1, dtype=np.int64)
    for L in range(max_level + 1):
        scale = 3.0**L
        r = np.rint(u * scale)
        ok = (lev < 0) & (np.abs(u - r / scale) <= 4 * EPS)
        k[ok] = r[ok].astype(np.int64)
        lev[ok] = L
    return k, lev


def cantor_prefix(u, w1: float, depth: int, max_digits: int):
    """Signature of the standard Cantor path over [0, u] by ternary digit recursion.

    Ternary rationals with denominator up to 3**22 follow their exact digit
    string; other points are expanded exactly from their binary fraction
    num/den with integer arithmetic, since iterating u -> 3u - d in floating
    point triples the rounding error with every digit.
    """
    u = np.asarray(u, dtype=float).ravel()
    n = u.size
    w2 = 1.0 - w1
    third = 1.0 / 3.0
    full = list(sig.cantor_signature(w1, depth))
    left_full = sig.scale(full, third, w1)
    step_two = sig.chen(left_full, sig.linear([third], [0.0], depth))
    out = sig.identity(n, depth)
    sx = np.ones(n)
    smu = np.ones(n)
    k, lev = _snap_ternary(u)
    snapped = lev >= 0
    num = np.zeros(n, dtype=object)
    den = np.ones(n, dtype=object)
    for i in np.flatnonzero(~snapped):
        num[i], den[i] = float(u[i]).as_integer_ratio()
    active = np.ones(n, dtype=bool)

    def attach(rows, seg):
        merged = sig.chen(sig.take(out, rows), sig.scale(seg, sx[rows], smu[rows]))
        for j in range(1, depth + 1):
            out[j][rows] = merged[j]

    for _ in range(max(max_digits, 23)):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        digit = np.zeros(idx.size, dtype=np.int64)
        rest = np.zeros(idx.size)
        at_zero = np.zeros(idx.size, dtype=bool)
        at_one = np.zeros(idx.size, dtype=bool)

        s = snapped[idx]
        if s.any():
            si = idx[s]
            power = 3 ** lev[si]
            kk = k[si]
            at_zero[s] = kk == 0
            at_one[s] = kk == power
            sub = np.maximum(power // 3, 1)
            d = np.minimum(kk // sub, 2)
            r = kk - d * sub
            digit[s] = d
            rest[s] = r / power.astype(float)
            k[si] = np.where(at_zero[s] | at_one[s], kk, r)
            lev[si] = np.maximum(lev[si] - 1, 0)
        f = ~s
        if f.any():
            fi = idx[f]
            nf, df = num[fi], den[fi]
            at_zero[f] = nf <= 0
            at_one[f] = nf >= df
            d = np.minimum(np.maximum((3 * nf) // df, 0), 2)
            digit[f] = d.astype(np.int64)
            rest[f] = ((3 * nf - df) / (3 * df)).astype(float)
            num[fi] = 3 * nf - d * df

        done = at_zero | at_one
        if at_one.any():
            attach(idx[at_one], full)
        one = ~done & (digit == 1)
        if one.any():
            rows = idx[one]
            attach(rows, sig.chen(left_full, sig.linear(rest[one], np.zeros(rows.size), depth)))
        two = ~done & (digit == 2)
        if two.any():
            rows = idx[two]
            attach(rows, step_two)
            sx[rows] *= third
            smu[rows] *= w2
        zero = ~done & (digit == 0)
        sx[idx[zero]] *= third
        smu[idx[zero]] *= w1
        active[idx[done | one]] = False

    idx = np.flatnonzero(active)
    if idx.size:
        # remaining mass below max(w)**max_digits: approximate by a straight segment
        x = np.array([float(a / b) for a, b in zip(num[idx], den[idx])]) if idx.size else None
        x = np.where(snapped[idx], k[idx] / np.maximum(3.0 ** lev[idx], 1.0), x)
        attach(idx, sig.linear(x, x, depth))
    return out


# ---------------------------------------------------------------------------
# mixtures with Lebesgue measure


@dataclass(frozen=True, eq=False, repr=False)
class Mixture(CdfMeasure):
    """(mu + eps * Lebesgue) / (1 + eps)."""

    base: CdfMeasure = field(default_factory=Lebesgue)
    epsilon: float = 0.1
    kind = "mixture"

    def __post_init__(self):
        if not isinstance(self.base, CdfMeasure):
            raise ConfigError("mixture base must be a measure")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError("mixture epsilon must be positive")
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def tolerance(self):
        return self.base.tolerance

    def _cdf(self, x):
        return (self.base._cdf(x) + self.epsilon * x) / (1 + self.epsilon)

    def _cdf_integral(self, x):
        return (self.base._cdf_integral(x) + 0.5 * self.epsilon * x * x) / (1 + self.epsilon)

    def pieces(self, level: int = 0) -> Pieces:
        base = self.base.pieces(level)
        e = self.epsilon
        return Pieces(base.knots, (base.density + e) / (1 + e), (base.mass + e * base.widths) / (1 + e))

    def default_level(self, n):
        return self.base.default_level(n)

    def signature_level(self, grid):
        return self.base.signature_level(grid)

    def support_gaps(self, resolution):
        if resolution <= 0:
            raise ConfigError("resolution must be positive")
        return []

    def _cell_signatures(self, grid, depth, level):
        e = self.epsilon
        mix = np.array([[1.0, 0.0], [e / (1 + e), 1.0 / (1 + e)]])
        return sig.transform(self.base.cell_signatures(grid, depth, level), mix)

    def to_spec(self):
        return {"type": "mixture", "epsilon": self.epsilon, "base": self.base.to_spec()}

    def reflected(self):
        return Mixture(self.base.reflected(), self.epsilon)


# ---------------------------------------------------------------------------
# construction from structured specs


def from_spec(spec) -> CdfMeasure:
    """Build a measure from ``{"type": ..., "weights": ..., "level": ..., ...}``."""
    if isinstance(spec, CdfMeasure):
        return spec
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError:
            spec = {"type": spec}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"measure spec needs a 'type' field: {spec!r}")
    kind = spec["type"]
    try:
        if kind == "lebesgue":
            return Lebesgue()
        if kind == "cantor":
            return Cantor(tuple(spec.get("weights", (0.5, 0.5))))
        if kind == "cantor_approx":
            return CantorApprox(tuple(spec.get("weights", (0.5, 0.5))), spec.get("level", 1))
        if kind == "mixture":
            return Mixture(from_spec(spec.get("base", {"type": "cantor"})), float(spec["epsilon"]))
        if kind == "tabulated":
            return Tabulated(tuple(map(tuple, spec["samples"])))
    except KeyError as exc:
        raise ConfigError(f"measure spec of type {kind!r} is missing {exc}") from exc
    raise ConfigError(f"unknown measure type {kind!r}")


def cdf(m: CdfMeasure, x):
    return m.cdf(x)


def quantile(m: CdfMeasure, p):
    return m.quantile(p)


def support_gaps(m: CdfMeasure, resolution: float):
    return m.support_gaps(resolution)


def _probes(m: CdfMeasure, size: int) -> np.ndarray:
    pc = m.pieces(m.default_level(size))
    left, width = pc.knots[:-1], np.diff(pc.knots)
    keep = (pc.mass > 0) & (width > 0)
    rel = np.arange(1, 27) / 27.0
    pts = (left[keep, None] + width[keep, None] * rel[None, :]).ravel()
    return np.unique(np.clip(np.concatenate([[0.0, 1.0], pts]), 0.0, 1.0))


def cdf_distance(m1: CdfMeasure, m2: CdfMeasure, n: int = 4097) -> float:
    """sup |F1 - F2| over grids holding the resolved piece boundaries of both measures.

    Every charged piece is also probed at the interior ternary points k/27,
    since two measures often agree on all knots and differ only inside cells.
    Two resolutions are evaluated and the larger value is returned.
    """
    if m1 == m2:
        return 0.0
    best = 0.0
    for size in (n, 2 * n - 1):
        grid = merge_grids(m1.adapted_grid(size), m2.adapted_grid(size), _probes(m1, size), _probes(m2, size))
        best = max(best, float(np.max(np.abs(m1.cdf(grid) - m2.cdf(grid)))))
    return best


def integrate(m: CdfMeasure, f, a: float = 0.0, b: float = 1.0, tol: float = 1e-10, n: int = 257) -> float:
    """Lebesgue-Stieltjes integral of f over [a, b].

    A GridFunction is integrated exactly as its interpolant (cubic Hermite
    when it carries derivatives, piecewise linear otherwise). Callables are
    sampled on adapted grids that double until two results agree to ``tol``.
    """
    from . import _quadrature as quad

    _domain([a, b], "integration bounds")
    if a > b:
        raise DomainError("need a <= b")
    if a == b:
        return 0.0
    if b - a < SHORT_INTERVAL:
        return _one_point(m, f, a, b)
    if isinstance(f, GridFunction):
        grid = merge_grids(f.grid, [a, b])
        return _integrate_on(m, quad, f, grid, a, b)
    previous = None
    size = n
    while size <= 2**16 + 1:
        grid = merge_grids(m.adapted_grid(size), [a, b])
        value = _integrate_on(m, quad, f, grid, a, b)
        if previous is not None and abs(value - previous) < tol:
            return value
        previous = value
        size = 2 * size - 1
    raise ConvergenceError(f"Stieltjes quadrature did not reach tolerance {tol}")


def _integrate_on(m, quad, f, grid, a, b):
    grid = check_grid(grid)
    cells = quad.cells(m, grid)
    parts = quad.cell_integrals(cells, quad.sample(f, grid))
    # merging may have snapped a or b onto a neighbour within MERGE_TOL
    lo = min(np.searchsorted(grid, a - MERGE_TOL), grid.size - 1)
    hi = min(np.searchsorted(grid, b - MERGE_TOL), grid.size - 1)
    total = float(np.sum(parts[lo:hi]))
    return total + _one_point(m, f, a, grid[lo]) + _one_point(m, f, grid[hi], b)


def _one_point(m, f, a, b) -> float:
    """f(midpoint) * mu((a, b]), signed; for intervals below grid resolution."""
    if a == b:
        return 0.0
    mid = np.array([0.5 * (a + b)])
    sample = f if np.isscalar(f) else f(mid)
    value = float(np.broadcast_to(np.asarray(sample, dtype=float), (1,))[0])
    return value * float(m.cdf(b) - m.cdf(a))


def lebesgue() -> Lebesgue:
    return Lebesgue()


def cantor(w1: float = 0.5, w2: float | None = None) -> Cantor:
    return Cantor((w1, 1 - w1 if w2 is None else w2))


def cantor_approx(level: int, weights=(0.5, 0.5)) -> CantorApprox:
    return CantorApprox(tuple(weights), level)


def mixture(base: CdfMeasure, epsilon: float) -> Mixture:
    return Mixture(base, epsilon)


def tabulated(samples) -> Tabulated:
    return Tabulated(tuple(map(tuple, samples)))


Integrand = Callable[[np.ndarray], np.ndarray]
