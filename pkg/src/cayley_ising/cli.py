"""Command-line front end: solvers, free-energy tables, census and oracle checks.

Every command prints one table: CSV with a header row and floats at 15
significant digits, or JSON with a top-level ``"schema": "v1"``.  Ranges use
``start:stop:step``; the start is included and the stop excluded, with
``round((stop - start) / step)`` points so floating round-off cannot add or
drop a row.

Exit codes: 0 success, 1 solver or verification failure, 2 usage, 3 capacity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import census as census_mod
from . import oracle as oracle_mod
from . import thermo as th
from .errors import CapacityError, CompatibilityError, ConvergenceError, DomainError
from .fields import (
    ConstantField,
    SolverConfig,
    Thermo,
    art_field,
    bg_field,
    find_alpha_cr,
    h_star,
    periodic_field,
    solve_periodic,
    solve_ti,
    solve_weakly_periodic,
    ti_field,
    zachary_field,
    zachary_sequence,
)
from .tree import TreeGeometry

SCHEMA = "v1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

LIMIT_FAMILIES = ("zachary", "art", "bg", "periodic")
FREE_ENERGY_FAMILIES = th.CURVE_FAMILIES + LIMIT_FAMILIES
ORACLE_FAMILIES = ("zero", "ti-star", "periodic", "constant")

DEFAULTS = {
    "J": 1.0,
    "j": 1,
    "n": 8,
    "n_max": 16,
    "tol": 1e-12,
    "max_iter": 10_000,
    "grid_cells": 2048,
    "format": "csv",
    "t0": 0.5,
    "turns": "0",
    "k0": 2,
    "inner": "ti-star",
    "h": 1.0,
    "branch": 1,
}


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


class Table:
    def __init__(self, columns, rows=None, meta=None, name=""):
        self.columns = list(columns)
        self.rows = rows if rows is not None else []
        self.meta = meta or {}
        self.name = name

    def add(self, **row):
        self.rows.append(row)


# --- parsing helpers --------------------------------------------------------

def parse_range(text) -> list[float]:
    """``start:stop:step`` or a single number, or a comma-separated list."""
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    if ":" not in text:
        return [float(x) for x in text.split(",") if x.strip()]
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise UsageError("range step must be positive")
    count = max(0, round((stop - start) / step))
    values = [float(round(start + i * step, 12)) for i in range(count)]
    if not values:
        raise UsageError(f"range {text!r} is empty")
    return values


def parse_int_list(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x + 0.0:#.15g}"
    if hasattr(x, "__float__") and not isinstance(x, str):
        return fmt(float(x))
    return str(x)


def _json_value(x):
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float) or hasattr(x, "__float__"):
        v = float(x)
        if not math.isfinite(v):
            return None
        return float(f"{v:.15g}")
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    return str(x)


def render(table: Table, form: str) -> str:
    if form == "json":
        doc = {
            "schema": SCHEMA,
            "name": table.name,
            "columns": table.columns,
            "rows": [{c: _json_value(r.get(c)) for c in table.columns} for r in table.rows],
            "meta": _json_value(table.meta),
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for r in table.rows:
        writer.writerow([fmt(r.get(c)) for c in table.columns])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(opts, *names):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _cfg(opts) -> SolverConfig:
    return SolverConfig(tol=float(opts["tol"]), max_iter=int(opts["max_iter"]),
                        grid_cells=int(opts["grid_cells"]))


def _temperatures(opts) -> list[Thermo]:
    """Thermodynamic points from ``--beta`` or ``--alpha`` (exactly one)."""
    J = float(opts["J"])
    if (opts.get("beta") is None) == (opts.get("alpha") is None):
        raise UsageError("give exactly one of --beta and --alpha")
    if opts.get("beta") is not None:
        return [Thermo(J, b) for b in parse_range(opts["beta"])]
    return [Thermo.from_alpha(a, J) for a in parse_range(opts["alpha"])]


def _thermo_cols(t: Thermo) -> dict:
    return {"beta": t.beta, "theta": t.theta, "alpha": t.alpha}


# --- commands ---------------------------------------------------------------

def cmd_ti_solve(opts) -> Table:
    _require(opts, "k")
    k, cfg = int(opts["k"]), _cfg(opts)
    table = Table(["beta", "theta", "alpha", "h", "residual"], name="ti-solve")
    for t in _temperatures(opts):
        rep = solve_ti(k, t, cfg)
        for r in rep.roots:
            table.add(**_thermo_cols(t), h=float(r), residual=rep.residual_sup)
    return table


def cmd_periodic_solve(opts) -> Table:
    _require(opts, "k")
    k, cfg = int(opts["k"]), _cfg(opts)
    table = Table(["beta", "theta", "alpha", "u", "v", "kind"], name="periodic-solve")
    for t in _temperatures(opts):
        for u, v in solve_periodic(k, t, cfg).roots:
            kind = "translation-invariant" if abs(u - v) < 1e-9 else "alternating"
            table.add(**_thermo_cols(t), u=float(u), v=float(v), kind=kind)
    return table


def cmd_wp_solve(opts) -> Table:
    _require(opts, "k")
    k, j, cfg = int(opts["k"]), int(opts["j"]), _cfg(opts)
    A = tuple(range(1, j + 1))
    table = Table(["beta", "theta", "alpha", "h1", "h2", "h3", "h4", "invariant", "states"],
                  name="wp-solve")
    ok = True
    for t in _temperatures(opts):
        rep = solve_weakly_periodic(k, A, t, cfg)
        inv = rep.extra.get("invariant", [])
        states = rep.extra.get("classified_states")
        ok &= rep.extra.get("consistent", True)
        for s in rep.roots:
            on_inv = any(abs(s[0] - a) < 1e-6 and abs(s[1] - b) < 1e-6 and abs(s[2] + b) < 1e-6
                         and abs(s[3] + a) < 1e-6 for a, b in inv)
            table.add(**_thermo_cols(t), h1=s[0], h2=s[1], h3=s[2], h4=s[3],
                      invariant=on_inv, states=states)
    table.meta["consistent"] = ok
    if not ok:
        raise VerificationFailure("solution count disagrees with the classification")
    return table


def cmd_alpha_cr(opts) -> Table:
    a = find_alpha_cr(tol=min(float(opts["tol"]), 1e-10))
    beta = -math.log(a) / 2
    table = Table(["alpha_cr", "beta_cr", "theta_cr"], name="alpha-cr")
    table.add(alpha_cr=a, beta_cr=beta, theta_cr=math.tanh(beta))
    return table


def cmd_zachary(opts) -> Table:
    _require(opts, "k", "beta")
    k, n = int(opts["k"]), int(opts["n"])
    t = Thermo(float(opts["J"]), float(opts["beta"]))
    seq = zachary_sequence(float(opts["t0"]), k, t, n, _cfg(opts))
    geom = TreeGeometry(k)
    field = zachary_field(float(opts["t0"]), k, t, n)
    lim = th.free_energy_limit(field, geom, t, n_max=n, tol=0.0)
    table = Table(["n", "t_n", "F_n"], name="zachary",
                  meta={"F_TI_zero": th.free_energy_ti(t, 0.0)})
    for m, tn in enumerate(seq):
        table.add(n=m, t_n=tn, F_n=lim.partials[m] if m < len(lim.partials) else None)
    return table


def cmd_bg(opts) -> Table:
    _require(opts, "k", "beta")
    k, n, cfg = int(opts["k"]), int(opts["n"]), _cfg(opts)
    t = Thermo(float(opts["J"]), float(opts["beta"]))
    turns = parse_int_list(opts["turns"])
    field = bg_field(turns, k, t, n, cfg)
    geom = TreeGeometry(k, half=True)
    lim = th.free_energy_limit(field, geom, t, n_max=n, tol=0.0)
    table = Table(["n", "path_value", "F_n"], name="bg",
                  meta={"h_star": field.h_star, "F_TI_star": th.free_energy_ti(t, field.h_star)})
    for m, v in enumerate(field.path_values):
        table.add(n=m, path_value=v, F_n=lim.partials[m])
    return table


def _art(opts, t: Thermo):
    k0, k = int(opts["k0"]), int(opts["k"])
    if opts["inner"] == "ti-star":
        inner = ti_field(h_star(k0, t, _cfg(opts)), k0, t)
    elif opts["inner"] == "zachary":
        inner = zachary_field(float(opts["t0"]), k0, t, int(opts["n_max"]))
    else:
        raise UsageError(f"unknown inner field {opts['inner']!r}")
    return art_field(inner, k0, k)


def cmd_art(opts) -> Table:
    _require(opts, "k", "beta")
    t = Thermo(float(opts["J"]), float(opts["beta"]))
    field = _art(opts, t)
    lim = th.free_energy_limit(field, TreeGeometry(int(opts["k"])), t,
                               n_max=int(opts["n_max"]), tol=0.0)
    table = Table(["n", "F_n"], name="art",
                  meta={"F_TI_zero": th.free_energy_ti(t, 0.0), "extrapolated": lim.extrapolated})
    for m, v in enumerate(lim.partials):
        table.add(n=m, F_n=v)
    return table


def _limit_point(opts, family: str, t: Thermo):
    k, cfg = int(opts["k"]), _cfg(opts)
    n_max = int(opts["n_max"])
    if family == "zachary":
        field, geom = zachary_field(float(opts["t0"]), k, t, n_max), TreeGeometry(k)
    elif family == "art":
        field, geom = _art(opts, t), TreeGeometry(k)
    elif family == "bg":
        field, geom = bg_field(parse_int_list(opts["turns"]), k, t, n_max, cfg), TreeGeometry(k, half=True)
    else:
        roots = [r for r in solve_periodic(k, t, cfg).roots if abs(r[0] - r[1]) > 1e-9]
        if not roots:
            return None, "no-periodic-solution"
        u, v = max(roots)
        field, geom = periodic_field(u, v, k, t), TreeGeometry(k)
    lim = th.free_energy_limit(field, geom, t, n_max=n_max, tol=1e-9)
    return lim.extrapolated, "ok" if lim.converged else "extrapolated"


def cmd_free_energy(opts) -> Table:
    _require(opts, "k", "family")
    family = opts["family"]
    if family not in FREE_ENERGY_FAMILIES:
        raise UsageError(f"--family must be one of {', '.join(FREE_ENERGY_FAMILIES)}")
    table = Table(["beta", "theta", "alpha", "F", "S", "domain_flag"], name="free-energy")
    if family in th.CURVE_FAMILIES:
        param = "beta" if opts.get("beta") is not None else "alpha"
        _temperatures(opts)
        spec = th.CurveSpec(family, int(opts["k"]), float(opts["J"]),
                            parse_range(opts[param]), param, int(opts["branch"]), _cfg(opts))
        for p in th.emit_curve(spec):
            table.add(beta=p.beta, theta=p.theta, alpha=p.alpha, F=p.F, S=p.S, domain_flag=p.flag)
        return table
    for t in _temperatures(opts):
        try:
            F, flag = _limit_point(opts, family, t)
        except DomainError:
            F, flag = None, "domain"
        table.add(**_thermo_cols(t), F=F, S=None, domain_flag=flag)
    return table


def cmd_entropy(opts) -> Table:
    _require(opts, "k", "family")
    family = opts["family"]
    if family not in ("ti-zero", "ti-star", "k2-closed"):
        raise UsageError("--family must be ti-zero, ti-star or k2-closed")
    k, J = int(opts["k"]), float(opts["J"])
    table = Table(["beta", "theta", "alpha", "S", "S_fd", "domain_flag"], name="entropy")
    spec_for = lambda grid: th.CurveSpec(family, k, J, grid, "beta", 1, _cfg(opts))  # noqa: E731
    for t in _temperatures(opts):
        p = th.curve_point(spec_for([t.beta]), t.beta)
        s_fd = None
        if p.flag == "ok":
            def F(b):
                q = th.curve_point(spec_for([b]), b)
                if q.F is None:
                    raise DomainError("finite-difference stencil leaves the domain")
                return q.F
            try:
                s_fd = th.entropy_fd(F, t.beta)
            except DomainError:
                s_fd = None
        table.add(**_thermo_cols(t), S=p.S, S_fd=s_fd, domain_flag=p.flag)
    return table


def _curves_fig1(opts, k: int) -> Table:
    grid = parse_range(opts.get("beta") or "0.2:2.0:0.01")
    J = float(opts["J"])
    table = Table(["beta", "theta", "F_ti_zero", "F_ti_star", "domain_flag"], name=f"figure1-k{k}",
                  meta={"k": k, "theta_c": 1 / k})
    zero = th.emit_curve(th.CurveSpec("ti-zero", k, J, grid))
    star = th.emit_curve(th.CurveSpec("ti-star", k, J, grid, cfg=_cfg(opts)))
    for z, s in zip(zero, star):
        table.add(beta=z.beta, theta=z.theta, F_ti_zero=z.F, F_ti_star=s.F, domain_flag=s.flag)
    return table


def _curves_fig4(opts, k: int) -> Table:
    if k != 4:
        raise UsageError("figure 4 is defined for k = 4")
    grid = parse_range(opts.get("alpha") or "0.01:0.16:0.001")
    J = float(opts["J"])
    curves = {
        name: th.emit_curve(th.CurveSpec(fam, k, J, grid, "alpha", branch, _cfg(opts)))
        for name, fam, branch in (("F_ti_zero", "ti-zero", 1), ("F_ti_star", "ti-star", 1),
                                  ("F_wp_1", "wp", 1), ("F_wp_2", "wp", 2))
    }
    table = Table(["alpha", "beta", "F_ti_zero", "F_ti_star", "F_wp_1", "F_wp_2", "domain_flag"],
                  name="figure4-k4")
    for i, a in enumerate(grid):
        row = {name: pts[i].F for name, pts in curves.items()}
        table.add(alpha=a, beta=curves["F_ti_zero"][i].beta, domain_flag=curves["F_wp_1"][i].flag, **row)
    return table


def cmd_curves(opts) -> list[Table]:
    _require(opts, "figure")
    ks = parse_int_list(opts.get("k") or ("4,5,6" if str(opts["figure"]) == "1" else "4"))
    builder = {"1": _curves_fig1, "4": _curves_fig4}.get(str(opts["figure"]))
    if builder is None:
        raise UsageError("--figure must be 1 or 4")
    return [builder(opts, k) for k in ks]


def cmd_census(opts) -> Table:
    _require(opts, "k")
    k, j, n = int(opts["k"]), int(opts["j"]), int(opts["n"])
    rows = census_mod.census_table(k, j, n)
    table = Table(list(rows[0].keys()) if rows else ["n"], rows, name="census")
    verify = opts.get("verify")
    if verify:
        rec = [r.as_tuple() for r in census_mod.census_recurrence(k, j, n)]
        problems = []
        if verify in ("traversal", "all"):
            trav = [r.as_tuple() for r in census_mod.census_traversal(k, j, n)]
            if trav != rec:
                problems.append("traversal differs from recurrence")
        if verify in ("closed-form", "all") and j <= k:
            for m, r in enumerate(rec, start=1):
                cf = census_mod.census_closed_form(k, j, m)
                if any(abs(a - b) > 1e-8 * max(1, b) for a, b in zip(cf, r)):
                    problems.append(f"closed form differs at n={m}")
                    break
        table.meta["verified"] = verify
        if problems:
            raise VerificationFailure("; ".join(problems))
    return table


def _oracle_field(opts, t: Thermo, k: int):
    fam = opts.get("family") or "ti-star"
    if fam == "zero":
        return ConstantField(0.0)
    if fam == "ti-star":
        return ti_field(h_star(k, t, _cfg(opts)), k, t)
    if fam == "periodic":
        sols = [s for s in solve_periodic(k, t, _cfg(opts)).roots if abs(s[0] - s[1]) > 1e-9]
        if not sols:
            raise DomainError("no alternating periodic solution at this temperature")
        return periodic_field(*max(sols), k, t)
    if fam == "constant":
        return ConstantField(float(opts["h"]))
    raise UsageError(f"--family must be one of {', '.join(ORACLE_FAMILIES)}")


def cmd_oracle(opts) -> Table:
    _require(opts, "k", "n", "beta")
    k, n = int(opts["k"]), int(opts["n"])
    t = Thermo(float(opts["J"]), float(opts["beta"]))
    geom = TreeGeometry(k)
    field = _oracle_field(opts, t, k)
    if opts.get("marginalization"):
        dev = oracle_mod.marginalization_check(geom, n, t, field)
        table = Table(["k", "n", "beta", "family", "deviation"], name="oracle-marginalization")
        table.add(k=k, n=n, beta=t.beta, family=opts.get("family") or "ti-star", deviation=dev)
        return table
    brute = oracle_mod.brute_force_Z(geom, n, t, field)
    prod = oracle_mod.product_Z(geom, n, t, field)
    gap = abs(math.expm1(brute.log_value - prod.log_value))
    table = Table(["k", "n", "beta", "family", "log_Z_brute", "log_Z_product", "relative_gap"],
                  name="oracle")
    table.add(k=k, n=n, beta=t.beta, family=opts.get("family") or "ti-star",
              log_Z_brute=brute.log_value, log_Z_product=prod.log_value, relative_gap=gap)
    if gap > 1e-10:
        raise VerificationFailure(f"relative gap {gap:.3g} exceeds 1e-10")
    return table


COMMANDS = {
    "ti-solve": (cmd_ti_solve, "roots of h = k f(h, theta)"),
    "periodic-solve": (cmd_periodic_solve, "period-two fields (u, v) on even/odd levels"),
    "wp-solve": (cmd_wp_solve, "weakly periodic fields (h1..h4) for A = {1..j}"),
    "alpha-cr": (cmd_alpha_cr, "critical alpha for weakly periodic fields at k = 4"),
    "zachary": (cmd_zachary, "level-dependent Zachary sequence and partial free energies"),
    "bg": (cmd_bg, "path field on the half tree and partial free energies"),
    "art": (cmd_art, "field embedded from a lower-order tree and partial free energies"),
    "free-energy": (cmd_free_energy, "free energy over a temperature grid"),
    "entropy": (cmd_entropy, "entropy with a finite-difference cross-check"),
    "curves": (cmd_curves, "figure data tables (1: TI branches, 4: weakly periodic)"),
    "census": (cmd_census, "edge-colour census per level"),
    "oracle": (cmd_oracle, "exact partition-function checks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cayley-ising", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--k", help="tree order (comma list for curves)")
        p.add_argument("--j", type=int, help="|A|, size of the generator subset")
        p.add_argument("--J", type=float, help="coupling constant (default 1)")
        p.add_argument("--beta", help="inverse temperature: value, list or start:stop:step")
        p.add_argument("--alpha", help="exp(-2 beta J): value, list or start:stop:step")
        p.add_argument("--family", help="boundary-field family tag")
        p.add_argument("--n", type=int, help="depth")
        p.add_argument("--n-max", type=int, dest="n_max", help="largest depth for limits")
        p.add_argument("--t0", type=float, help="initial Zachary value")
        p.add_argument("--turns", help="path turn indices for bg, comma separated")
        p.add_argument("--k0", type=int, help="order of the embedded tree for art")
        p.add_argument("--inner", help="embedded field for art: ti-star or zachary")
        p.add_argument("--h", type=float, help="field value for the constant oracle family")
        p.add_argument("--branch", type=int, help="weakly periodic branch (1 = larger xi)")
        p.add_argument("--figure", help="figure number for curves (1 or 4)")
        p.add_argument("--verify", choices=["traversal", "closed-form", "all"])
        p.add_argument("--marginalization", action="store_true", default=None)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--grid-cells", type=int, dest="grid_cells")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (written atomically)")
        p.add_argument("--config", help="JSON file with option defaults; flags win")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    if opts["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return opts


def _outputs(tables: list[Table], out: str | None, form: str) -> list[tuple[Path | None, str]]:
    if out is None:
        return [(None, "".join(render(t, form) for t in tables))]
    path = Path(out)
    if len(tables) == 1:
        return [(path, render(tables[0], form))]
    return [(path.with_name(f"{path.stem}_{t.name}{path.suffix}"), render(t, form)) for t in tables]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        func = COMMANDS[args.command][0]
        result = func(opts)
        tables = result if isinstance(result, list) else [result]
        for path, text in _outputs(tables, opts.get("out"), opts["format"]):
            if path is None:
                sys.stdout.write(text)
            else:
                write_atomic(path, text)
        return EXIT_OK
    except (UsageError, DomainError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConvergenceError, CompatibilityError, VerificationFailure, ArithmeticError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
