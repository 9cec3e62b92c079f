"""Approximating measure families and the convergence experiments built on them.

A family holds a limit measure and approximants whose supports contain the
support of the limit. Functions on the limit are carried over by the
embedding: take the representative that is linear across every gap of the
limit and read it on the approximant's grid. Each experiment compares an
object computed for the limit with the same object computed for every
approximant, measured in the sup norm over a grid that holds the knots of
both measures.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import measure as ms
from .errors import ConfigError, ConvergenceError, InvariantViolation, SupportInclusionError
from .grid import GridFunction, merge_grids
from .measure import CdfMeasure
from .resolvent import DIRICHLET, apply_resolvent, boundary, check_dirichlet, resolvent_density, resolvent_error_bound
from .semigroup import solve_heat

CSV_HEADER = ("label", "cdf_dist", "error_sup", "theory_bound", "runtime_s")
BOUND_SLACK = 1e-6


# -- right-hand sides ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Rhs:
    """A named continuous function on [0, 1] with its derivative."""

    descriptor: str
    func: object
    deriv: object

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape).copy()

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.deriv(x), dtype=float), x.shape).copy()

    def on(self, grid) -> GridFunction:
        return GridFunction(grid, self(grid), self.derivative(grid))

    def __repr__(self):
        return f"Rhs({self.descriptor!r})"


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _tabulated_rhs(descriptor: str, path: str) -> Rhs:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples from {path!r}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigError("tabulated right-hand side needs two columns x,f")
    x, y = data[:, 0], data[:, 1]
    if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
        raise ConfigError("tabulated x must ascend strictly from 0 to 1")
    slopes = np.diff(y) / np.diff(x)

    def deriv(t):
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 2)
        return slopes[i]

    return Rhs(descriptor, lambda t: np.interp(t, x, y), deriv)


def parse_rhs(descriptor) -> Rhs:
    """Parse const(c), x, x(1-x), sin(k*pi*x), hat(a,b,c) or @samples.csv."""
    if isinstance(descriptor, Rhs):
        return descriptor
    text = str(descriptor).strip()
    flat = text.replace(" ", "").replace("π", "pi").lower()
    if flat.startswith("@"):
        return _tabulated_rhs(text, text[1:].strip())
    if re.fullmatch(_NUM, flat):
        flat = f"const({flat})"
    m = re.fullmatch(rf"const\(({_NUM})\)", flat)
    if m:
        c = float(m.group(1))
        return Rhs(text, lambda x: np.full_like(x, c), lambda x: np.zeros_like(x))
    if flat == "x":
        return Rhs(text, lambda x: x, lambda x: np.ones_like(x))
    if flat in ("x(1-x)", "x*(1-x)"):
        return Rhs(text, lambda x: x * (1 - x), lambda x: 1 - 2 * x)
    m = re.fullmatch(rf"sin\((?:({_NUM})\*?)?pi\*?x\)", flat)
    if m:
        k = float(m.group(1)) if m.group(1) else 1.0
        w = k * math.pi
        return Rhs(text, lambda x: np.sin(w * x), lambda x: w * np.cos(w * x))
    m = re.fullmatch(rf"hat\(({_NUM}),({_NUM}),({_NUM})\)", flat)
    if m:
        a, b, c = (float(g) for g in m.groups())
        if not 0.0 <= a < b < c <= 1.0:
            raise ConfigError("hat(a,b,c) needs 0 <= a < b < c <= 1")

        def hat(x):
            return np.clip(np.minimum((x - a) / (b - a), (c - x) / (c - b)), 0.0, None)

        def dhat(x):
            return np.where((x > a) & (x < b), 1 / (b - a), np.where((x >= b) & (x < c), -1 / (c - b), 0.0))

        return Rhs(text, hat, dhat)
    raise ConfigError(f"unknown right-hand side {text!r}")


# -- families --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    limit: CdfMeasure
    approximants: list
    kind: str
    labels: list
    spec: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.approximants)

    def distances(self) -> list[float]:
        return [ms.cdf_distance(self.limit, a) for a in self.approximants]


def _load_spec(spec):
    if isinstance(spec, dict):
        return dict(spec)
    if isinstance(spec, Path) or (isinstance(spec, str) and not spec.lstrip().startswith("{")):
        path = Path(spec)
        if not path.is_file():
            raise ConfigError(f"family spec file {str(spec)!r} not found")
        spec = path.read_text()
    try:
        out = json.loads(spec)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"family spec is not valid JSON: {exc}") from exc
    if not isinstance(out, dict):
        raise ConfigError("family spec must be a JSON object")
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def build_family(spec, check: bool = True) -> MeasureFamily:
    """Family from a dict, a JSON string or a JSON file.

    ``{"kind": "cantor_levels", "weights": [w1, w2], "levels": [1, ..., 6]}``
    ``{"kind": "epsilon_mixture", "limit": <measure spec>, "epsilons": [...]}``
    ``{"kind": "composed", "weights": [...], "levels": [...], "epsilons": [...]}``

    Composed families pair levels and epsilons position by position.
    """
    spec = _load_spec(spec)
    kind = spec.get("kind")
    try:
        if kind == "cantor_levels":
            weights = tuple(spec.get("weights", (0.5, 0.5)))
            levels = [int(n) for n in spec.get("levels", range(1, 7))]
            if any(n < 0 for n in levels):
                raise ConfigError("levels must be nonnegative")
            limit = ms.Cantor(weights)
            approx = [ms.CantorApprox(weights, n) for n in levels]
            labels = [f"n={n}" for n in levels]
        elif kind == "epsilon_mixture":
            limit = ms.from_spec(spec.get("limit", {"type": "cantor"}))
            eps = [float(e) for e in spec.get("epsilons", (0.5, 0.1, 0.02))]
            approx = [ms.Mixture(limit, e) for e in eps]
            labels = [f"eps={_fmt(e)}" for e in eps]
        elif kind == "composed":
            weights = tuple(spec.get("weights", (0.5, 0.5)))
            levels = [int(n) for n in spec.get("levels", range(0, 6))]
            eps = [float(e) for e in spec.get("epsilons", (1.0, 0.5, 0.2, 0.1, 0.05, 0.02))]
            if len(levels) != len(eps):
                raise ConfigError("composed families need as many epsilons as levels")
            limit = ms.Cantor(weights)
            approx = [ms.Mixture(ms.CantorApprox(weights, n), e) for n, e in zip(levels, eps)]
            labels = [f"n={n};eps={_fmt(e)}" for n, e in zip(levels, eps)]
        else:
            raise ConfigError(f"unknown family kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid family spec: {exc}") from exc
    if not approx:
        raise ConfigError("family has no approximants")
    fam = MeasureFamily(limit, approx, kind, labels, spec)
    if check:
        for a in approx:
            check_support_inclusion(limit, a)
    return fam


# -- embedding -------------------------------------------------------------


def _gap_resolution(m: CdfMeasure, n: int) -> float:
    return 0.5 * float(np.min(np.diff(m.adapted_grid(n))))


def _gaps(m: CdfMeasure, resolution: float) -> np.ndarray:
    g = m.support_gaps(resolution)
    return np.array(g, dtype=float).reshape(-1, 2)


def check_support_inclusion(source: CdfMeasure, target: CdfMeasure, resolution: float | None = None, n: int = 2049):
    """Every gap of ``target`` must lie inside a gap of ``source``."""
    if source == target:
        return
    if resolution is None:
        resolution = min(_gap_resolution(source, n), _gap_resolution(target, n))
    outer = _gaps(source, resolution)
    tol = 1e-12
    for a, b in _gaps(target, resolution):
        i = np.searchsorted(outer[:, 0], a + tol, side="right") - 1
        if i < 0 or outer[i, 1] < b - tol:
            raise SupportInclusionError(
                f"gap ({a:.6g}, {b:.6g}) of the target carries mass for the source measure"
            )


def canonical(f: GridFunction, m: CdfMeasure, points, gaps=None, n: int = 2049) -> np.ndarray:
    """Values at ``points`` of the representative of f that is linear on every gap of m."""
    pts = np.asarray(points, dtype=float)
    if gaps is None:
        gaps = _gaps(m, _gap_resolution(m, n))
    out = np.asarray(f.smooth(pts), dtype=float)
    if gaps.size:
        i = np.searchsorted(gaps[:, 0], pts, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, None)
        a, b = gaps[ic, 0], gaps[ic, 1]
        inside = ok & (pts > a) & (pts < b)
        if inside.any():
            fa, fb = f.smooth(a[inside]), f.smooth(b[inside])
            s = (pts[inside] - a[inside]) / (b[inside] - a[inside])
            out[inside] = fa + s * (fb - fa)
    return out


def embed(f: GridFunction, source: CdfMeasure, target: CdfMeasure, n: int = 2049) -> GridFunction:
    """Carry f from ``source`` to ``target`` by linear interpolation across the gaps of ``source``.

    The result lives on the target's adapted grid merged with f's grid and
    the gap endpoints of ``source``.
    """
    if source == target:
        return f
    check_support_inclusion(source, target, n=n)
    gaps = _gaps(source, _gap_resolution(source, n))
    grid = merge_grids(target.adapted_grid(n), f.grid, gaps.ravel() if gaps.size else [0.0, 1.0])
    return GridFunction(grid, canonical(f, source, grid, gaps, n))


def shared_grid(m1: CdfMeasure, m2: CdfMeasure, n: int = 2049) -> np.ndarray:
    parts = [m1.adapted_grid(n), m2.adapted_grid(n)]
    for m in (m1, m2):
        g = _gaps(m, _gap_resolution(m, n))
        if g.size:
            parts.append(g.ravel())
    return merge_grids(*parts)


def _sup_error(u: GridFunction, limit: CdfMeasure, u_n: GridFunction, grid) -> float:
    return float(np.max(np.abs(canonical(u, limit, grid) - u_n.smooth(grid))))


# -- reports ---------------------------------------------------------------


@dataclass
class Row:
    label: str
    cdf_dist: float
    error_sup: float
    theory_bound: float | None = None
    runtime_s: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "label": self.label,
            "cdf_dist": self.cdf_dist,
            "error_sup": self.error_sup,
            "theory_bound": self.theory_bound,
            "runtime_s": self.runtime_s,
        }
        out.update(self.extra)
        return out


@dataclass
class ExperimentReport:
    experiment: str
    bc: str
    parameters: dict
    rows: list
    found: str | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) if hasattr(r, name) else r.extra[name] for r in self.rows], dtype=float)

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([
                r.label,
                repr(float(r.cdf_dist)),
                repr(float(r.error_sup)),
                "" if r.theory_bound is None else repr(float(r.theory_bound)),
                repr(float(r.runtime_s)) if timing and r.runtime_s is not None else "",
            ])
        return buf.getvalue()

    def to_json(self, timing: bool = False) -> str:
        rows = []
        for r in self.rows:
            d = r.as_dict()
            if not timing:
                d.pop("runtime_s")
            rows.append(d)
        doc = {
            "experiment": self.experiment,
            "bc": "neumann" if self.bc == "N" else "dirichlet",
            "parameters": self.parameters,
            "rows": rows,
        }
        if self.found is not None:
            doc["found"] = self.found
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _prepare(family: MeasureFamily, bc, f, n):
    bc = boundary(bc)
    rhs = parse_rhs(f)
    if bc == DIRICHLET:
        check_dirichlet(rhs)
    return bc, rhs, rhs.on(family.limit.adapted_grid(n))


def _resolvent_rows(family, lam, bc, g, n, tol, densities: bool):
    bc, rhs, g_lim = _prepare(family, bc, g, n)
    lam = float(lam)
    u = apply_resolvent(family.limit, lam, bc, g_lim, n=n, tol=tol)
    dens = resolvent_density(family.limit, lam, bc, n=n, tol=tol) if densities else None
    rows = []
    for label, approx in zip(family.labels, family.approximants):
        start = time.perf_counter()
        d = ms.cdf_distance(family.limit, approx)
        g_n = embed(g_lim, family.limit, approx, n)
        u_n = apply_resolvent(approx, lam, bc, g_n, grid=g_n.grid, tol=tol)
        grid = shared_grid(family.limit, approx, n)
        err = _sup_error(u, family.limit, u_n, grid)
        row = Row(label, d, err)
        if densities:
            dens_n = resolvent_density(approx, lam, bc, n=n, tol=tol)
            row.extra["density_sup"] = dens.sup_difference(dens_n, grid)
            row.theory_bound = resolvent_error_bound(lam, bc, d)
        row.runtime_s = time.perf_counter() - start
        rows.append(row)
    return bc, rhs, rows


def _check_bounds(rows):
    for r in rows:
        if r.theory_bound is not None and r.extra.get("density_sup", 0.0) > r.theory_bound + BOUND_SLACK:
            raise InvariantViolation(
                f"{r.label}: density difference {r.extra['density_sup']:.6g} exceeds bound {r.theory_bound:.6g}"
            )


def resolvent_convergence(
    family: MeasureFamily, lam: float = 1.0, bc="N", f="x", n: int = 2049, tol: float = 1e-10, check: bool = True
) -> ExperimentReport:
    """Rows hold sup |embed(R f) - R_n embed(f)|, the density difference and its bound."""
    bc, rhs, rows = _resolvent_rows(family, lam, bc, f, n, tol, densities=True)
    if check:
        _check_bounds(rows)
    params = {"lambda": float(lam), "rhs": rhs.descriptor, "family": family.spec}
    return ExperimentReport("resolvent", bc, params, rows)


def graph_norm_convergence(
    family: MeasureFamily, lam: float = 1.0, bc="D", g="sin(pi x)", n: int = 2049, tol: float = 1e-10
) -> ExperimentReport:
    """f = R g and f_n = R_n embed(g); the graph-norm error is lam times the sup error of f."""
    lam = float(lam)
    bc, rhs, rows = _resolvent_rows(family, lam, bc, g, n, tol, densities=False)
    for r in rows:
        r.extra["function_error"] = r.error_sup
        r.error_sup = lam * r.error_sup
    params = {"lambda": lam, "rhs": rhs.descriptor, "family": family.spec}
    return ExperimentReport("graph_norm", bc, params, rows)


def _times(times) -> np.ndarray:
    t = np.asarray([float(s) for s in times], dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ConfigError("times must be nonnegative and strictly ascending")
    if t[0] != 0.0:
        t = np.concatenate([[0.0], t])
    return t


def semigroup_convergence(
    family: MeasureFamily, times=(0.0, 0.05, 0.1, 0.5), bc="N", f="x(1-x)", n: int = 2049,
    tol: float = 1e-10, cross_check: bool = False, stop_below: float | None = None,
) -> ExperimentReport:
    """Rows hold max over the time grid of sup |embed(T_t f) - T_{t,n} embed(f)|.

    With ``stop_below`` the rows end at the first approximant whose error
    drops below it; ``report.found`` then names that approximant.
    """
    bc, rhs, f_lim = _prepare(family, bc, f, n)
    t = _times(times)
    sol = solve_heat(family.limit, bc, f_lim, t, tol=tol, n=n)
    rows = []
    found = None
    for label, approx in zip(family.labels, family.approximants):
        start = time.perf_counter()
        d = ms.cdf_distance(family.limit, approx)
        f_n = embed(f_lim, family.limit, approx, n)
        sol_n = solve_heat(approx, bc, f_n, t, tol=tol, grid=f_n.grid)
        grid = shared_grid(family.limit, approx, n)
        per_t = [_sup_error(u, family.limit, u_n, grid) for u, u_n in zip(sol.states, sol_n.states)]
        row = Row(label, d, max(per_t), extra={"per_time": per_t})
        if cross_check:
            be = solve_heat(approx, bc, f_n, t, method="backward_euler", tol=tol, grid=f_n.grid)
            row.extra["backward_euler_gap"] = max(
                float(np.max(np.abs(a.smooth(grid) - b.smooth(grid)))) for a, b in zip(sol_n.states, be.states)
            )
        row.runtime_s = time.perf_counter() - start
        rows.append(row)
        if stop_below is not None and row.error_sup < stop_below:
            found = label
            break
    params = {"times": [float(s) for s in t], "rhs": rhs.descriptor, "family": family.spec}
    if stop_below is not None:
        params["delta"] = float(stop_below)
    return ExperimentReport("semigroup", bc, params, rows, found)


def composed_search(
    family: MeasureFamily, t: float = 0.1, delta: float = 0.05, bc="D", f="sin(pi x)", n: int = 2049,
    tol: float = 1e-10,
) -> ExperimentReport:
    """Walk the family until sup |u(t) - u_n(t)| < delta; the last row is the pair found."""
    if not delta > 0 or not t > 0:
        raise ConfigError("need t > 0 and delta > 0")
    rep = semigroup_convergence(family, (0.0, t), bc, f, n, tol, stop_below=delta)
    if rep.found is None:
        raise ConvergenceError(f"no member of the family reaches error below {delta} at t={t}")
    return rep


def write_report(report: ExperimentReport, path, fmt: str = "csv", timing: bool = False) -> Path:
    path = Path(path)
    text = report.to_csv(timing) if fmt == "csv" else report.to_json(timing)
    path.write_text(text)
    return path
