"""Command-line front end.

Subcommands: ``params``, ``equilibria``, ``lyapunov``, ``fault``, ``roa``.
Each prints a JSON report (or the clearing-time table for ``fault --table1``) and,
with ``--out DIR``, writes CSV/JSON artifacts there.

Exit codes: 0 success, 2 usage/parameters, 3 no SEP, 4 scenario,
5 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import export
from .equilibria import equilibria_in_range, h_critical, jacobian, sep
from .errors import (GssError, NoSEPError, NumericalError, ParameterError,
                     ScenarioError)
from .lyapunov import assess, lyapunov_context, v, v_dot
from .model import (PhysicalParams, derive_dimless, load_params, params_from_dict,
                    time_scale)
from .roa import DEFAULT_RESOLUTION, DEFAULT_WINDOW, TABLE1_FCTS, fig4_bundle
from .sim import FaultScenario, Outcome, run_fault_scenario

EXIT_OK, EXIT_USAGE = 0, 2

_FLAG_KEYS = {"u_g": "u_g_pu", "scr": "scr", "x_g": "x_g_pu", "r_g": "r_g_pu",
              "i_sd": "i_sd_pu", "i_sq": "i_sq_pu", "k_pn": "k_pn", "k_in": "k_in",
              "f_g": "f_g_hz"}


def _params(args) -> PhysicalParams:
    inline = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items()
              if getattr(args, flag) is not None}
    if args.config and inline:
        raise ParameterError("give either --config or inline parameter flags, not both")
    if args.config:
        try:
            return load_params(args.config)
        except OSError as exc:
            raise ParameterError(f"cannot read config: {exc}") from exc
    return params_from_dict(inline)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, report: dict, name: str) -> None:
    text = export.dumps(report, args.precision)
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / name).write_text(text)


def cmd_params(args) -> int:
    p = _params(args)
    dp = derive_dimless(p)
    report = {"m": dp.m, "gamma": dp.gamma, "h": dp.h, "gamma_h": dp.gamma_h,
              "h_c": dp.h_c if abs(dp.m) <= 1 else None,
              "sigma": time_scale(p), "sep_exists": dp.has_sep,
              "sep": [dp.delta_s, 0.0] if dp.has_sep else None}
    if abs(dp.m) > 1:
        report["message"] = f"no equilibrium (|m| = {export.fmt(abs(dp.m))} > 1)"
    elif not dp.has_sep:
        report["message"] = (f"no stable equilibrium (h = {export.fmt(dp.h)} "
                             f">= h_c = {export.fmt(h_critical(dp))})"
                             if abs(dp.m) < 1 else "degenerate equilibrium (|m| = 1)")
    else:
        report["message"] = f"SEP ({export.fmt(dp.delta_s)}, 0)"
    _emit(args, report, "params.json")
    return EXIT_OK


def cmd_equilibria(args) -> int:
    dp = derive_dimless(_params(args))
    lo, hi = args.window[0], args.window[1]
    eps = equilibria_in_range(dp, lo, hi)
    report = {"range": [lo, hi],
              "equilibria": [{"delta": e.delta, "x": e.x, "kind": e.kind,
                              "eigenvalues": list(e.eigenvalues)} for e in eps]}
    _emit(args, report, "equilibria.json")
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    dp = derive_dimless(_params(args))
    try:
        sep(dp)
    except NoSEPError as exc:
        sys.stderr.write(export.dumps({"error": str(exc), "failed_clause": exc.clause,
                                       "m": dp.m, "h": dp.h,
                                       "h_c": dp.h_c if abs(dp.m) <= 1 else None}))
        return exc.exit_code
    ctx = lyapunov_context(dp)
    report = {"v0": ctx.v0, "dissipative": list(ctx.dissipative),
              "tangent": list(ctx.tangent), "v_cr": ctx.v_cr,
              "window": list(ctx.window), "diagnostics": list(ctx.diagnostics)}
    if args.eval:
        rows = []
        for d, x in args.eval:
            verdict = assess(ctx, (d, x))
            rows.append({"delta": d, "x": x, "v": float(v(ctx, (d, x))),
                         "v_dot": float(v_dot(ctx, (d, x))),
                         "verdict": verdict.label, "in_window": verdict.in_window})
        report["evaluations"] = rows
    _emit(args, report, "lyapunov.json")
    return EXIT_OK


def _lf_label(result, table: bool) -> str:
    if result.verdict_lf.stable:
        return "Stable"
    return "Unstable*" if table else "NotGuaranteed"


def _eac_label(result) -> str:
    return "Stable" if result.verdict_eac.stable else "Unstable"


def render_table1(results, precision: str = "6") -> str:
    v_cr = export.fmt(results[0].ctx.v_cr, precision) if results else "nan"
    head = f"{'FCT/ms':<8}{'V(delta,x) (V_cr=' + v_cr + ')':<28}{'Prop. LF':<12}{'EAC/EF':<10}Real ROA"
    lines = [head]
    for r in results:
        lines.append(f"{export.fmt(r.scenario.fct * 1e3, precision):<8}"
                     f"{export.fmt(r.v_at_clearing, precision):<28}"
                     f"{_lf_label(r, True):<12}{_eac_label(r):<10}{r.verdict_sim.value}")
    lines.append("* Prop. LF 'Unstable' means NotGuaranteed: the criterion is "
                 "sufficient only.")
    return "\n".join(lines) + "\n"


def _fault_rows(results) -> list[dict]:
    return [{"fct_ms": r.scenario.fct * 1e3, "v_at_clearing": r.v_at_clearing,
             "clearing_state_dimless": list(r.clearing_state_dimless),
             "clearing_state_physical": list(r.clearing_state),
             "verdict_lf": _lf_label(r, False), "verdict_eac": _eac_label(r),
             "verdict_sim": r.verdict_sim.value} for r in results]


def cmd_fault(args) -> int:
    p = _params(args)
    if args.table1:
        fcts_ms = [f * 1e3 for f in TABLE1_FCTS]
    elif args.sweep:
        start, stop, step = args.sweep
        if step <= 0 or stop < start:
            raise ParameterError("--sweep needs START <= STOP and STEP > 0")
        n = int(math.floor((stop - start) / step + 1e-9))
        fcts_ms = [start + k * step for k in range(n + 1)]
    elif args.fct:
        fcts_ms = list(args.fct)
    else:
        raise ParameterError("give --fct, --sweep or --table1")
    horizon = 2.0 if args.t_end is None else args.t_end
    try:
        results = [run_fault_scenario(p, FaultScenario(
            fct=f / 1e3, fault_u_g_pu=args.fault_u, pre_u_g_pu=p.u_g_pu,
            post_u_g_pu=p.u_g_pu, t_end=f / 1e3 + horizon)) for f in fcts_ms]
    except (ScenarioError, NumericalError):
        raise
    except GssError as exc:
        raise ScenarioError(str(exc)) from exc

    labels = [r.verdict_sim for r in results]
    unstable = [i for i, o in enumerate(labels) if o is Outcome.UNSTABLE]
    report = {"fault_u_g_pu": args.fault_u, "rows": _fault_rows(results),
              "v_cr": results[0].ctx.v_cr if results else None}
    if len(results) > 1:
        first = unstable[0] if unstable else None
        report["ground_truth_prefix"] = all(o is Outcome.UNSTABLE for o in labels[first:]) \
            if first is not None else True
        report["first_unstable_fct_ms"] = fcts_ms[first] if first is not None else None
        report["last_stable_fct_ms"] = (fcts_ms[first - 1] if first else None) \
            if first is not None else fcts_ms[-1]

    out = _out_dir(args)
    if out is not None:
        for r in results:
            (out / f"trajectory_{r.scenario.key}.csv").write_text(
                export.trajectory_csv(r.trajectory, args.precision))
        (out / "fault_report.json").write_text(export.dumps(report, args.precision))
    if args.table1:
        table = render_table1(results, args.precision)
        sys.stdout.write(table)
        if out is not None:
            (out / "table1.txt").write_text(table)
    else:
        sys.stdout.write(export.dumps(report, args.precision))
    return EXIT_OK


def _bundle_dict(res, window, stride: int = 10) -> dict:
    ctx = res.ctx
    trajs = {}
    for key, tr in res.trajectories.items():
        idx = np.unique(np.append(np.arange(0, len(tr), stride), len(tr) - 1))
        trajs[key] = {"t": tr.t[idx], "delta": tr.y[idx, 0], "x": tr.y[idx, 1],
                      "events": [[t, lab] for t, lab in tr.events]}
    return {
        "schema": 1,
        "window": list(window),
        "dimless": {"m": ctx.dp.m, "gamma": ctx.dp.gamma, "h": ctx.dp.h},
        "sep": [ctx.delta_s, 0.0],
        "v_cr": ctx.v_cr,
        "criterion_window": list(ctx.window),
        "dissipative": list(ctx.dissipative),
        "tangent": list(ctx.tangent),
        "eac_level": res.baseline.level,
        "eac_form": res.baseline.form,
        "boundaries": {b.label: b.points for b in res.boundaries},
        "areas": {b.label: b.area for b in res.boundaries},
        "trajectories": trajs,
        "scenarios": _fault_rows(res.scenarios),
        "containment": {label: {"violations": [list(s) for s in c.violations],
                                "n_violations": len(c.violations),
                                "n_inside": c.n_inside,
                                "n_inconclusive_inside": c.n_inconclusive_inside,
                                "fraction_contained": c.fraction_contained}
                        for label, c in res.containment.items()},
    }


def cmd_roa(args) -> int:
    p = _params(args)
    window = tuple(args.window)
    sep(derive_dimless(p))
    fcts = [] if args.no_trajectories else [f / 1e3 for f in (args.fct or
                                                           [f * 1e3 for f in TABLE1_FCTS])]
    res = fig4_bundle(p, window, args.resolution, fcts, oracle=not args.no_oracle,
                      baseline_form=args.baseline)
    bundle = _bundle_dict(res, window)
    summary = {"v_cr": bundle["v_cr"], "eac_level": bundle["eac_level"],
               "areas": bundle["areas"],
               "containment": {k: {kk: vv for kk, vv in c.items() if kk != "violations"}
                               for k, c in bundle["containment"].items()}}
    out = _out_dir(args)
    if out is not None:
        (out / "boundaries.csv").write_text(export.boundaries_csv(res.boundaries,
                                                                  args.precision))
        if res.grid is not None:
            (out / "grid.csv").write_text(export.grid_csv(res.grid, args.precision))
        for key, tr in res.trajectories.items():
            (out / f"trajectory_{key}_dimless.csv").write_text(
                export.trajectory_csv(tr, args.precision))
        (out / "fig4_bundle.json").write_text(export.dumps(bundle, args.precision))
    sys.stdout.write(export.dumps(summary, args.precision))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="parameter JSON document")
    for flag, key in _FLAG_KEYS.items():
        common.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=float,
                            help=f"inline parameter {key}")
    common.add_argument("--out", help="output directory for artifacts")
    common.add_argument("--window", type=float, nargs=4, default=list(DEFAULT_WINDOW),
                        metavar=("DLO", "DHI", "XLO", "XHI"))
    common.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    common.add_argument("--precision", choices=["6", "full"], default="6")

    parser = argparse.ArgumentParser(prog="pllgss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("params", parents=[common]).set_defaults(func=cmd_params)
    sub.add_parser("equilibria", parents=[common]).set_defaults(func=cmd_equilibria)
    lp = sub.add_parser("lyapunov", parents=[common])
    lp.add_argument("--eval", type=float, nargs=2, action="append",
                    metavar=("DELTA", "X"))
    lp.set_defaults(func=cmd_lyapunov)
    fp = sub.add_parser("fault", parents=[common])
    fp.add_argument("--fct", type=float, nargs="+", help="clearing times in ms")
    fp.add_argument("--sweep", type=float, nargs=3, metavar=("START", "STOP", "STEP"),
                    help="clearing-time grid in ms")
    fp.add_argument("--table1", action="store_true")
    fp.add_argument("--fault-u", type=float, default=0.2, help="fault voltage (pu)")
    fp.add_argument("--t-end", type=float, default=None,
                    help="post-fault horizon in seconds (default 2)")
    fp.set_defaults(func=cmd_fault)
    rp = sub.add_parser("roa", parents=[common])
    rp.add_argument("--no-oracle", action="store_true")
    rp.add_argument("--no-trajectories", action="store_true")
    rp.add_argument("--fct", type=float, nargs="+", help="trajectory clearing times, ms")
    rp.add_argument("--baseline", choices=["swing", "pendulum"], default="swing")
    rp.set_defaults(func=cmd_roa)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.resolution < 2:
        parser.error("--resolution must be >= 2")
    try:
        return args.func(args)
    except GssError as exc:
        diag = getattr(exc, "diagnostics", None)
        payload = {"error": str(exc), "type": type(exc).__name__}
        if diag:
            payload["diagnostics"] = diag
        sys.stderr.write(export.dumps(payload))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
