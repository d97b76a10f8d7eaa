"""Command line front end: ``esoval <subcommand> ...``.

Every subcommand writes CSV to stdout (or ``--out``); ``--json`` switches
to a JSON document instead.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analysis, matrand, params, simulation
from .exceptions import EsoError
from .fdm import FdGrid
from .fft import SpectralGrid
from .pricing import METHODS, price, surface


def _values(text: str) -> list[float]:
    """'1,2,5' or 'start:stop:num' (inclusive linspace)."""
    if ":" in text:
        a, b, n = text.split(":")
        return list(np.linspace(float(a), float(b), int(n)))
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(rows: list[dict], args, meta: dict | None = None) -> None:
    if args.json:
        doc = {"rows": rows}
        if meta:
            doc.update(meta)
        text = json.dumps(doc, indent=2, default=float) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            fields = list(rows[0])
            for r in rows[1:]:
                fields += [k for k in r if k not in fields]
            w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver_opts(args) -> dict:
    fd = FdGrid(S_star=args.s_star, dS=args.ds, dt=args.dt_fdm, boundary=args.boundary)
    sg = SpectralGrid(n=args.nx, x_min=args.x_min, x_max=args.x_max, dt=args.dt_fft)
    return dict(spectral_grid=sg, fd_grid=fd, kappa=args.kappa, kappa_tilde=args.kappa_tilde,
                n_paths=args.paths, workers=args.workers)


def cmd_price(args) -> int:
    inp = params.load(args.params)
    if args.surface:
        opts = _solver_opts(args)
        surf = surface(args.method, inp.market, inp.grant, inp.policy,
                       spectral_grid=opts["spectral_grid"], fd_grid=opts["fd_grid"])
        K = inp.market.K
        # the spectral grid is only trusted well inside the domain
        lo, hi = (K * math.exp(-2), K * math.exp(2)) if args.method == "fft" else (0.0, math.inf)
        rows = [dict(zip(("m", "t", "s", "value"), r)) for r in surf.rows(lo, hi)]
        summary = {"cost_at_S0": {m: surf.at(inp.market.S0, m) for m in range(1, surf.M + 1)}}
        if args.json:
            _emit([], args, summary)
        else:
            _emit(rows, args)
        return 0
    res = price(args.method, inp.market, inp.grant, inp.policy, seed=args.seed, **_solver_opts(args))
    _emit([res.as_dict()], args)
    return 0


def cmd_table(args) -> int:
    methods = [m for m in args.methods.split(",") if m]
    report = analysis.reproduce_table(args.id, methods, n_paths=args.paths, seed=args.seed,
                                      workers=args.workers, mc_all=args.mc_all)
    _emit(list(report.records()), args, {"table": args.id, "passed": report.passed})
    if args.check and not report.passed:
        print(f"table {args.id}: tolerance check failed", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    inp = params.load(args.params)
    values = _values(args.values)
    if args.mr_error:
        if args.kind not in ("lambda", "beta"):
            raise SystemExit("--mr-error supports --kind lambda or beta")
        rows = [
            dict(zip(("sweep_value", "mr_price", "fft_price", "abs_error"), r))
            for r in matrand.mr_error_curve(inp.market, inp.grant, inp.policy, args.kind, values,
                                            kappa=args.kappa)
        ]
    else:
        if args.kind == "beta":
            raise SystemExit("--kind beta is only available with --mr-error")
        opts = _solver_opts(args)
        rows = analysis.sweep(args.kind, values, inp.market, inp.grant, inp.policy, args.method,
                              implied=args.implied, avg_time_paths=args.avg_time_paths,
                              seed=args.seed, **opts)
    _emit(rows, args)
    return 0


def cmd_implied(args) -> int:
    inp = params.load(args.params)
    if args.cost is not None:
        per_unit = args.cost
    else:
        per_unit = price(args.method, inp.market, inp.grant, inp.policy, seed=args.seed,
                         **_solver_opts(args)).value / inp.grant.M
    r = analysis.implied_maturity(per_unit, inp.market)
    _emit([{"per_unit_cost": per_unit, "T_tilde": r.T_tilde, "residual": r.residual,
            "converged": r.converged, "multiple_roots": r.multiple_roots}], args)
    return 0


def cmd_simulate(args) -> int:
    inp = params.load(args.params)
    if args.mode == "paths":
        rows = []
        for i, p in enumerate(simulation.simulate_paths(inp.market, inp.grant, inp.policy,
                                                        args.paths, args.seed)):
            if p.pre_vest_forfeit:
                rows.append({"path": i, "event": "forfeit", "time": p.settlement_time,
                             "quantity": 0, "stock": math.nan})
                continue
            for (t, d), s in zip(p.exercise_events, p.stock_at_events):
                rows.append({"path": i, "event": "exercise", "time": t, "quantity": d, "stock": s})
            if p.remaining_at_settlement:
                rows.append({"path": i, "event": "settlement", "time": p.settlement_time,
                             "quantity": p.remaining_at_settlement, "stock": p.stock_at_settlement})
        _emit(rows, args)
        return 0
    taus = simulation.exercise_times(inp.market, inp.grant, inp.policy, args.paths, args.seed,
                                     args.workers)
    rng = (0.0, inp.market.T)
    rows = [dict(zip(("bin_left", "bin_right", "count"), r))
            for r in simulation.histogram_rows(taus, args.bins, rng)]
    meta = {"mean": float(taus.mean()) if taus.size else None, "n": int(taus.size)}
    _emit(rows, args, meta)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="esoval", description="Multi-unit employee stock option costs")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_params=True):
        if needs_params:
            sp.add_argument("params", help="JSON parameter file")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--paths", type=int, default=100_000, help="Monte Carlo paths")
        sp.add_argument("--workers", type=int, default=1)

    def solver(sp):
        sp.add_argument("--s-star", type=float, default=30.0, help="FDM far-field stock level")
        sp.add_argument("--ds", type=float, default=0.1, help="FDM stock step")
        sp.add_argument("--dt-fdm", type=float, default=0.1, help="FDM time step")
        sp.add_argument("--boundary", choices=("auto", "dirichlet", "neumann"), default="auto")
        sp.add_argument("--nx", type=int, default=4096, help="FFT grid size (power of two)")
        sp.add_argument("--x-min", type=float, default=-10.0)
        sp.add_argument("--x-max", type=float, default=10.0)
        sp.add_argument("--dt-fft", type=float, default=0.01, help="FFT time step")
        sp.add_argument("--kappa", type=float, default=None, help="MR: 1/expected remaining maturity")
        sp.add_argument("--kappa-tilde", type=float, default=None, help="MR: 1/expected vesting time")

    sp = sub.add_parser("price", help="grant cost at S0")
    common(sp)
    solver(sp)
    sp.add_argument("--method", choices=METHODS, default="fft")
    sp.add_argument("--surface", action="store_true",
                    help="fft/fdm: emit the time-0 surface (m, t, s, value); with --json, cost at S0 per m")
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("table", help="recompute a benchmark table")
    common(sp, needs_params=False)
    sp.add_argument("--id", type=int, choices=(1, 2), required=True)
    sp.add_argument("--methods", default="fft,fdm", help="comma list from fft,fdm,mc")
    sp.add_argument("--mc-all", action="store_true", help="Monte Carlo on every cell")
    sp.add_argument("--check", action="store_true", help="exit 1 if any tolerance fails")
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("sweep", help="cost series over lambda, grant size or S0")
    common(sp)
    solver(sp)
    sp.add_argument("--kind", choices=analysis.SWEEP_KINDS + ("beta",), required=True)
    sp.add_argument("--values", required=True, help="'a,b,c' or 'start:stop:num'")
    sp.add_argument("--method", choices=METHODS, default="fft")
    sp.add_argument("--implied", action="store_true", help="add implied maturity column")
    sp.add_argument("--avg-time-paths", type=int, default=0,
                    help="add simulated mean weighted exercise time")
    sp.add_argument("--mr-error", action="store_true",
                    help="MR vs FFT error curve (kind lambda or beta)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("implied-maturity", help="Black-Scholes maturity matching the per-unit cost")
    common(sp)
    solver(sp)
    sp.add_argument("--method", choices=METHODS, default="fft")
    sp.add_argument("--cost", type=float, default=None, help="per-unit cost; skips pricing")
    sp.set_defaults(func=cmd_implied)

    sp = sub.add_parser("simulate", help="exercise-time histogram or raw path events")
    common(sp)
    sp.set_defaults(paths=10_000)
    sp.add_argument("--mode", choices=("histogram", "paths"), default="histogram")
    sp.add_argument("--bins", type=int, default=50)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EsoError, OSError, KeyError) as exc:
        print(f"esoval: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
