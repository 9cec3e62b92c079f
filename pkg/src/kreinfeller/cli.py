"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import measure as ms
from .calculus import hyperbolic, monomial_table, trig
from .errors import ConfigError, InvariantViolation, KreinFellerError, NumericalError
from .resolvent import apply_resolvent, boundary, verify_resolvent
from .semigroup import solve_heat
from .spectral import eigen_matrix_oracle, eigen_shooting

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _common(p):
    p.add_argument("--config", help="JSON file with option defaults")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--grid", type=int, default=2049, help="grid size (default 2049)")
    p.add_argument("--tol", type=float, default=1e-10, help="tolerance (default 1e-10)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg", action="store_true", help="also write line plots")


def _measure_arg(p):
    p.add_argument("--measure", default="cantor", help="measure name or JSON spec (default cantor)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kreinfeller", description="Krein-Feller operators for measures on [0, 1].")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.commands = sub.choices

    p = sub.add_parser("measure", help="sample the distribution function")
    _common(p)
    _measure_arg(p)

    p = sub.add_parser("monomials", help="tabulate the generalized monomials p_k, q_k")
    _common(p)
    _measure_arg(p)
    p.add_argument("--order", type=int, default=6)

    p = sub.add_parser("hyperbolic", help="generalized hyperbolic or trigonometric functions")
    _common(p)
    _measure_arg(p)
    p.add_argument("--z", type=float, default=1.0)
    p.add_argument("--kind", choices=("hyperbolic", "trig"), default="hyperbolic")

    p = sub.add_parser("spectrum", help="eigenvalues and eigenfunctions")
    _common(p)
    _measure_arg(p)
    p.add_argument("--bc", default="dirichlet")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--method", choices=("shooting", "oracle"), default="shooting")
    p.add_argument("--atoms", type=int, default=4000)

    p = sub.add_parser("resolvent", help="solve (lambda - Delta_mu) u = f")
    _common(p)
    _measure_arg(p)
    p.add_argument("--bc", default="neumann")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--rhs", default="x")

    p = sub.add_parser("heat", help="solve the heat equation on a time grid")
    _common(p)
    _measure_arg(p)
    p.add_argument("--bc", default="dirichlet")
    p.add_argument("--rhs", default="sin(pi x)")
    p.add_argument("--times", default="0,0.05,0.1,0.5")
    p.add_argument("--method", choices=("eigen", "backward_euler"), default="eigen")
    p.add_argument("--steps", type=int, default=64)

    p = sub.add_parser("converge", help="run a convergence experiment over a measure family")
    _common(p)
    p.add_argument("--experiment", choices=("resolvent", "graph", "semigroup"), default="resolvent")
    p.add_argument("--bc", default="neumann")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--times", default="0,0.05,0.1,0.5")
    p.add_argument("--family", default='{"kind": "cantor_levels"}', help="family spec file or JSON")
    p.add_argument("--rhs", default="x")
    p.add_argument("--delta", type=float, help="stop at the first member with error below delta")
    p.add_argument("--cross-check", action="store_true", help="add a backward-Euler column (semigroup)")
    p.add_argument("--timing", action="store_true", help="fill the runtime_s column")
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        path = Path(args.config)
        try:
            cfg = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if isinstance(cfg.get("family"), dict):
            cfg["family"] = json.dumps(cfg["family"], sort_keys=True)
        if isinstance(cfg.get("times"), list):
            cfg["times"] = ",".join(repr(float(t)) for t in cfg["times"])
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        sub = parser.commands[args.command]
        unknown = set(cfg) - {a.dest for a in sub._actions} - {"config"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# -- output ----------------------------------------------------------------


def _table(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_table(header, columns, meta) -> str:
    doc = dict(meta)
    doc["columns"] = {
        h: [v if isinstance(v, str) else int(v) if isinstance(v, (int, np.integer)) else float(v) for v in col]
        for h, col in zip(header, columns)
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, name, header, columns, meta=None, plot=None):
    meta = meta or {}
    text = _table(header, columns) if args.format == "csv" else _json_table(header, columns, meta)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{args.format}").write_text(text)
    else:
        sys.stdout.write(text)
    if args.svg and plot is not None:
        _plot(args, name, *plot)


def _plot(args, name, x, series, labels, xlabel="x"):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for y, lab in zip(series, labels):
        ax.plot(x, y, label=lab, lw=1)
    ax.set_xlabel(xlabel)
    if len(labels) <= 10:
        ax.legend(fontsize=7)
    fig.tight_layout()
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    fig.savefig(out / f"{name}.svg", format="svg", metadata={"Date": None})
    plt.close(fig)


# -- commands --------------------------------------------------------------


def _cmd_measure(args):
    m = ms.from_spec(args.measure)
    x = np.linspace(0.0, 1.0, args.grid)
    F = m.cdf(x)
    _emit(args, "measure", ("x", "cdf"), (x, F), {"measure": m.to_spec()}, (x, [F], ["F"]))


def _cmd_monomials(args):
    m = ms.from_spec(args.measure)
    if args.order < 0:
        raise ConfigError("order must be nonnegative")
    tab = monomial_table(m, args.order, n=args.grid)
    header = ["x"] + [f"p{k}" for k in range(args.order + 1)] + [f"q{k}" for k in range(args.order + 1)]
    cols = [tab.grid, *tab.p, *tab.q]
    _emit(args, "monomials", header, cols, {"measure": m.to_spec()}, (tab.grid, list(tab.p), header[1 : args.order + 2]))


def _cmd_hyperbolic(args):
    m = ms.from_spec(args.measure)
    if args.kind == "hyperbolic":
        ev = hyperbolic(m, args.z, tol=args.tol, n=args.grid)
        names = ("cosh", "sinh", "dcosh", "dsinh")
    else:
        ev = trig(m, args.z, tol=args.tol, n=args.grid)
        names = ("cos", "sin", "dcos", "dsin")
    funcs = [getattr(ev, nm) for nm in names]
    cols = [ev.grid] + [f.values for f in funcs]
    meta = {"measure": m.to_spec(), "z": args.z, "truncation_order": ev.truncation_order,
            "tail_bound": ev.tail_bound, "method": ev.method}
    _emit(args, args.kind, ("x",) + names, cols, meta, (ev.grid, cols[1:3], names[:2]))


def _cmd_spectrum(args):
    m = ms.from_spec(args.measure)
    bc = boundary(args.bc)
    if args.method == "shooting":
        dec = eigen_shooting(m, bc, count=args.count, n=args.grid)
    else:
        dec = eigen_matrix_oracle(m, bc, atoms=args.atoms, count=args.count)
    k = np.arange(1, dec.count + 1)
    _emit(args, "spectrum", ("k", "eigenvalue"), (k, dec.eigenvalues), {"measure": m.to_spec(), "bc": bc, "method": dec.method})
    if args.out:
        vals = dec.values()
        _emit_quiet(args, "eigenfunctions", ["x"] + [f"phi{j}" for j in k], [dec.grid, *vals])
        if args.svg:
            _plot(args, "eigenfunctions", dec.grid, list(vals), [f"phi{j}" for j in k])


def _emit_quiet(args, name, header, columns):
    out = Path(args.out)
    text = _table(header, columns) if args.format == "csv" else _json_table(header, columns, {})
    (out / f"{name}.{args.format}").write_text(text)


def _cmd_resolvent(args):
    m = ms.from_spec(args.measure)
    bc = boundary(args.bc)
    rhs = ex.parse_rhs(args.rhs)
    f = rhs.on(m.adapted_grid(args.grid))
    u = apply_resolvent(m, args.lam, bc, f, n=args.grid, tol=args.tol)
    residual = verify_resolvent(m, args.lam, bc, f, u)
    meta = {"measure": m.to_spec(), "lambda": args.lam, "bc": bc, "rhs": rhs.descriptor, "residual": residual}
    _emit(args, "resolvent", ("x", "u", "du"), (u.grid, u.values, u.derivative), meta, (u.grid, [u.values], ["u"]))
    print(f"residual {residual:.3e}", file=sys.stderr)


def _cmd_heat(args):
    m = ms.from_spec(args.measure)
    bc = boundary(args.bc)
    rhs = ex.parse_rhs(args.rhs)
    times = ex._times(_floats(args.times))
    f = rhs.on(m.adapted_grid(args.grid))
    sol = solve_heat(m, bc, f, times, method=args.method, steps=args.steps, tol=args.tol, n=args.grid)
    grid = sol.states[-1].grid
    cols = [grid] + [s.smooth(grid) for s in sol.states]
    header = ["x"] + [f"t={t!r}" for t in map(float, times)]
    meta = {"measure": m.to_spec(), "bc": bc, "rhs": rhs.descriptor, "times": [float(t) for t in times]}
    _emit(args, "heat", header, cols, meta, (grid, cols[1:], header[1:]))


def _cmd_converge(args):
    fam = ex.build_family(args.family)
    if args.experiment == "resolvent":
        rep = ex.resolvent_convergence(fam, args.lam, args.bc, args.rhs, n=args.grid, tol=args.tol)
    elif args.experiment == "graph":
        rep = ex.graph_norm_convergence(fam, args.lam, args.bc, args.rhs, n=args.grid, tol=args.tol)
    elif args.delta is not None:
        times = _floats(args.times)
        rep = ex.composed_search(fam, max(times), args.delta, args.bc, args.rhs, n=args.grid, tol=args.tol)
    else:
        rep = ex.semigroup_convergence(
            fam, _floats(args.times), args.bc, args.rhs, n=args.grid, tol=args.tol, cross_check=args.cross_check
        )
    text = rep.to_csv(args.timing) if args.format == "csv" else rep.to_json(args.timing)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"converge_{rep.experiment}.{args.format}").write_text(text)
    else:
        sys.stdout.write(text)
    if rep.found is not None:
        print(f"found {rep.found}", file=sys.stderr)
    if args.svg:
        d = rep.column("cdf_dist")
        _plot(args, f"converge_{rep.experiment}", d, [rep.column("error_sup")], ["error_sup"], xlabel="cdf_dist")


COMMANDS = {
    "measure": _cmd_measure,
    "monomials": _cmd_monomials,
    "hyperbolic": _cmd_hyperbolic,
    "spectrum": _cmd_spectrum,
    "resolvent": _cmd_resolvent,
    "heat": _cmd_heat,
    "converge": _cmd_converge,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KreinFellerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
