"""Command-line front end: batch suites with machine-readable reports.

Subcommands drive the estimate checks, the commutator decomposition, the
energy audit, and the exponent calculus.  Exit codes: 0 all checks passed,
1 a check failed, 2 usage or configuration error.  JSON is the canonical
output; ``--emit-csv`` adds delimited rows and renders a figure next to them.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .grid_field import HalfSpaceGrid
from .synth import GeneratorSpec, generate
from . import lemma_lab, commutator, energy_audit, exponents, report

USAGE_ERROR = 2
CHECK_FAILED = 1


class ConfigError(ValueError):
    pass


def _parse_eps(text: str, h: float) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.endswith("h"):
            out.append(float(tok[:-1]) * h)
        else:
            out.append(float(tok))
    if not out:
        raise ConfigError("empty eps list")
    return out


def _load_field(args, grid):
    if args.field:
        try:
            spec = GeneratorSpec.from_json(open(args.field).read())
        except (OSError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"cannot read field spec {args.field}: {exc}")
    else:
        spec = GeneratorSpec(kind=args.kind, seed=args.seed, alpha=args.alpha)
    return generate(spec, grid), spec


def _grid(args) -> HalfSpaceGrid:
    n = args.grid
    return HalfSpaceGrid(n, n, n, args.h if args.h else 1.0 / (n - 1))


def _common(p: argparse.ArgumentParser, kind_default: str) -> None:
    p.add_argument("--grid", type=int, default=32, help="nodes per direction")
    p.add_argument("--h", type=float, default=None,
                   help="grid spacing (default 1/(grid-1))")
    p.add_argument("--eps", type=str, default="2h,4h",
                   help="comma list of radii; suffix h scales by the spacing")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--field", type=str, default=None,
                   help="generator spec JSON path")
    p.add_argument("--kind", type=str, default=kind_default,
                   choices=["shear", "curl", "power", "weierstrass"])
    p.add_argument("--out", type=str, default=None, help="JSON report path")
    p.add_argument("--emit-csv", type=str, default=None,
                   help="CSV path; a PNG figure is rendered alongside")


def cmd_lemmas(args) -> int:
    grid = _grid(args)
    eps_list = _parse_eps(args.eps, grid.h)
    field, spec = _load_field(args, grid)
    tol = args.tol
    verdicts = [
        lemma_lab.check_mollify_error(field, args.alpha, eps_list, tol),
        lemma_lab.check_mollify_gradient(field, args.alpha, eps_list, tol),
        lemma_lab.check_translation_holder(
            field, args.alpha, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], tol),
        lemma_lab.check_smoother_error(field, args.alpha, eps_list, tol),
        lemma_lab.check_smoother_gradient(field, args.alpha, eps_list, tol),
        lemma_lab.check_test_field_admissibility(field, min(eps_list), tol),
    ]
    from .synth import shear_field

    smooth = shear_field(np.sin(np.pi * grid.x3() / grid.l3) ** 2, grid)
    verdicts += lemma_lab.check_smoother_properties(
        field, eps_list, r_list=[2.0], tol=tol, rate_field=smooth)
    rows = [v.to_dict() for v in verdicts]
    payload = report.report_header(_config(args, spec))
    payload["verdicts"] = rows
    _emit(args, payload, rows, figure="verdicts")
    for v in verdicts:
        print(f"[{'PASS' if v.passed else 'FAIL'}]"
              f"{' [vacuous]' if v.vacuous else ''} {v.lemma}: "
              f"measured {v.constant_measured:.6g} vs "
              f"allowed {v.constant_theoretical * (1 + tol):.6g}")
    return 0 if all(v.passed for v in verdicts) else CHECK_FAILED


def cmd_commutator(args) -> int:
    grid = _grid(args)
    eps_list = sorted(_parse_eps(args.eps, grid.h), reverse=True)
    field, spec = _load_field(args, grid)
    rows, ok = [], True
    for eps in eps_list:
        row = commutator.j_report(field, eps, args.alpha)
        scale = max(abs(row["lhs_pairing"]), 1e-300)
        row["identity_ok"] = row["residual"] <= 1e-12
        row["sum_ok"] = abs(row["sum"] - row["lhs_pairing"]) <= 1e-10 * scale
        ok = ok and row["identity_ok"] and row["sum_ok"]
        rows.append(row)
        print(f"[{'PASS' if row['identity_ok'] and row['sum_ok'] else 'FAIL'}] "
              f"eps={eps:.6g}: residual {row['residual']:.3e}, "
              f"sum {row['sum']:.6g}")
    payload = report.report_header(_config(args, spec))
    payload["rows"] = rows
    _emit(args, payload, rows, figure="jterms")
    return 0 if ok else CHECK_FAILED


def cmd_energy(args) -> int:
    if args.nu is None:
        raise ConfigError("--nu is required for the energy audit")
    grid = _grid(args)
    eps_list = _parse_eps(args.eps, grid.h)
    times = np.linspace(0.0, args.t_end, args.snapshots)
    if args.series == "shear":
        series = energy_audit.exact_stokes_shear(1.0, 1, args.nu, grid, times)
    elif args.series == "zero":
        zero = generate(GeneratorSpec(kind="shear", amplitude=0.0), grid)
        series = energy_audit.TimeSeries(grid, times, tuple(zero for _ in times))
    else:
        base = generate(GeneratorSpec(kind=args.series, seed=args.seed,
                                      alpha=args.alpha), grid)
        decay = [float(np.exp(-0.5 * t)) for t in times]
        snaps = tuple(
            energy_audit.vector_from_arrays(
                grid, *(d * c.values for c in base.components))
            for d in decay
        )
        series = energy_audit.TimeSeries(grid, times, snaps)
    if args.beta is not None and args.q is not None:
        rep = energy_audit.convergence_study(series, args.nu, eps_list,
                                             alpha=args.alpha, beta=args.beta,
                                             q=args.q)
    else:
        rep = energy_audit.convergence_study(series, args.nu, eps_list)
    rows = [r.to_dict() for r in rep.rows]
    ok = True
    for r in rep.rows:
        scale = max(abs(r.term_dt), abs(r.term_visc), abs(r.term_conv), 1e-300)
        split_ok = abs(r.i1 + r.i2 - r.term_dt) <= 1e-10 * scale
        ok = ok and split_ok
        print(f"[{'PASS' if split_ok else 'FAIL'}] eps={r.epsilon:.6g}: "
              f"residual {r.residual:.3e}, i1+i2-term_dt "
              f"{r.i1 + r.i2 - r.term_dt:.3e}")
    print(f"energy equality residual: {rep.limit['equality_residual']:.6e}")
    payload = report.report_header(_config(args, None))
    payload["report"] = rep.to_dict()
    _emit(args, payload, rows, figure="energy")
    return 0 if ok else CHECK_FAILED


def cmd_exponents(args) -> int:
    bundle = exponents.make_bundle(args.alpha, args.beta, q=args.q, r=args.r)
    text = bundle.to_json()
    print(text)
    if args.out:
        report.write_json(args.out, json.loads(text))
    return 0


def _config(args, spec) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    if spec is not None:
        cfg["generator"] = json.loads(spec.to_json())
    return cfg


def _emit(args, payload: dict, rows: list[dict], figure: str) -> None:
    if args.out:
        report.write_json(args.out, payload)
    if args.emit_csv:
        flat = []
        for row in rows:
            flat.append({
                k: (json.dumps(v) if isinstance(v, (list, tuple, dict)) else v)
                for k, v in row.items()
            })
        report.write_csv(args.emit_csv, flat)
        fig = report.figure_path(args.emit_csv)
        if figure == "energy":
            eps = [abs(r["epsilon"]) for r in rows]
            series = {
                key: (eps, [abs(r[key]) for r in rows])
                for key in ("residual", "i2", "term_conv")
            }
            report.render_rate_figure(fig, series, "smoothed balance vs radius")
        elif figure == "jterms":
            eps = [r["epsilon"] for r in rows]
            series = {
                key: (eps, [abs(r[key]) for r in rows])
                for key in ("j1", "j2", "j3", "sum")
            }
            report.render_rate_figure(fig, series, "advection terms vs radius")
        else:
            report.render_verdict_figure(fig, rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mollify-lab",
        description="wall-respecting mollification laboratory",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("lemmas", help="run the smoothing-estimate checks")
    _common(pl, "power")
    pl.set_defaults(func=cmd_lemmas)

    pc = sub.add_parser("commutator", help="advection-term decomposition checks")
    _common(pc, "curl")
    pc.set_defaults(func=cmd_commutator)

    pe = sub.add_parser("energy", help="smoothed energy-balance audit")
    _common(pe, "shear")
    pe.add_argument("--nu", type=float, default=None, help="viscosity")
    pe.add_argument("--beta", type=float, default=None,
                    help="time exponent for the mismatch bound")
    pe.add_argument("--q", type=float, default=None,
                    help="pairing exponent for the mismatch bound")
    pe.add_argument("--series", type=str, default="shear",
                    choices=["shear", "zero", "curl", "weierstrass"])
    pe.add_argument("--snapshots", type=int, default=9)
    pe.add_argument("--t-end", type=float, default=1.0)
    pe.set_defaults(func=cmd_energy)

    px = sub.add_parser("exponents", help="print an exponent bundle as JSON")
    px.add_argument("--alpha", type=float, required=True)
    px.add_argument("--beta", type=float, required=True)
    px.add_argument("--q", type=float, default=None)
    px.add_argument("--r", type=float, default=None)
    px.add_argument("--out", type=str, default=None)
    px.set_defaults(func=cmd_exponents)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, exponents.ExponentRangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
