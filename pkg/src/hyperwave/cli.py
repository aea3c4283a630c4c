"""``hyperwave`` command line.

Exit codes: 0 success, 2 configuration or file error, 3 solver failure,
4 a verification gate failed.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, FieldFormatError, SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GATE = 4

SUITES = ("taylor", "adjoint", "lipschitz", "gronwall", "acceptance", "all")


def _load(args):
    from .config import load_config

    return load_config(args.config)


def _direction(cfg):
    N = len(cfg["dictionary"])
    return np.asarray(cfg.get("direction", np.eye(N)[0]), dtype=float)


def cmd_forward(args):
    from .forward import solve_forward
    from .io import emit_report, save_field

    cfg = _load(args)
    setup = cfg.setup()
    u, rep = solve_forward(setup)
    save_field(args.out, u, setup.grid)
    summary = {"cfl": rep.cfl, "M": rep.M, "wall_time": rep.wall_time,
               "energy_initial": float(rep.energy[0]), "energy_final": float(rep.energy[-1])}
    if args.report:
        emit_report(args.report, summary, {"energy": [
            {"step": k, "kinetic": a, "strain": b} for k, (a, b) in enumerate(zip(rep.kinetic, rep.strain))]})
    print(json.dumps(summary))
    return EXIT_OK


def cmd_derivative(args):
    from .forward import solve_forward
    from .io import save_field
    from .sensitivity import solve_frechet, v_norm

    cfg = _load(args)
    setup = cfg.setup()
    u, _ = solve_forward(setup)
    v = solve_frechet(setup, setup.alpha, _direction(cfg), u)
    save_field(args.out, v, setup.grid)
    print(json.dumps({"norm": v_norm(v, setup.grid)}))
    return EXIT_OK


def _adjoint_weight(cfg, grid):
    from .io import load_field

    spec = cfg["adjoint_weight"]
    if "file" in spec:
        return load_field(spec["file"], grid)[0]
    if spec.get("preset") == "random":
        return cfg.rng().standard_normal(grid.field_shape)
    t = grid.times.reshape((-1,) + (1,) * (grid.d + 1))
    x = grid.nodes()[None]
    return np.broadcast_to(np.sin(2 * np.pi * x) * np.cos(3 * t), grid.field_shape).copy()


def cmd_adjoint(args):
    from .adjoint import apply_adjoint
    from .forward import solve_forward

    cfg = _load(args)
    setup = cfg.setup()
    u, _ = solve_forward(setup)
    w = _adjoint_weight(cfg, setup.grid)
    g = apply_adjoint(setup, setup.alpha, u, w, method=args.method)
    print(json.dumps({"gradient": g.tolist(), "method": args.method}))
    return EXIT_OK


def cmd_invert(args):
    from .forward import solve_forward
    from .inversion import IterateTrace, add_noise, invert
    from .io import emit_report, load_field

    cfg = _load(args)
    setup = cfg.setup()
    grid = setup.grid
    noise = cfg["inversion"]["noise"]
    data_file = args.data or cfg.get("data", {}).get("file")
    if data_file:
        u_meas, _ = load_field(data_file, grid)
        delta = noise
    else:
        u_true, _ = solve_forward(setup)
        u_meas, delta = add_noise(u_true, noise, grid, cfg.rng()) if noise > 0 else (u_true, 0.0)
    alpha0 = cfg.get("alpha0", np.ones(len(setup.dictionary)))
    trace = None
    if args.resume:
        try:
            trace = IterateTrace.from_dict(json.loads(Path(args.resume).read_text()))
        except (OSError, ValueError, TypeError) as err:
            raise ConfigError([f"{args.resume}: cannot resume: {err}"])
    alpha, trace = invert(u_meas, alpha0, setup, cfg.inversion(delta), trace)
    out = Path(args.report)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.json").write_text(json.dumps(trace.to_dict()) + "\n")
    summary = {"alpha": alpha.tolist(), "status": trace.status, "noise_level": delta,
               "iterations": max(len(trace) - 1, 0)}
    if not data_file:
        truth = np.asarray(cfg["alpha"])
        summary["relative_error"] = float(np.abs(alpha - truth).max() / np.abs(truth).max())
    emit_report(out, summary, trace=trace, plots=args.plots)
    if args.out:
        Path(args.out).write_text(json.dumps({**summary, "trace": trace.to_dict()}) + "\n")
    print(json.dumps(summary))
    return EXIT_SOLVER if trace.status == "solver_failure" else EXIT_OK


def _verify_config(cfg, suites, report_dir, plots):
    from . import verification as V
    setup = cfg.setup()
    alpha = setup.alpha
    h = _direction(cfg)
    vcfg = cfg["verify"]
    summary, tables, ok = {}, {}, True
    if "taylor" in suites:
        slope, tab = V.taylor_order_test(setup, alpha, h, vcfg["s_list"])
        tables["taylor"] = tab
        summary["taylor_slope"] = slope
        if setup.dictionary.is_quadratic:
            summary["taylor_max_relative"] = max(r["relative"] for r in tab)
        else:
            ok &= slope >= 1.4
    if "adjoint" in suites:
        mism = V.adjoint_certificate(setup, alpha, vcfg["trials"], seed=cfg["seed"])
        summary["adjoint_mismatch"] = mism
        ok &= mism <= 1e-10
    if "lipschitz" in suites:
        tab, spreads = V.lipschitz_alpha_test(setup, alpha, [h], vcfg["eps_list"])
        tables["lipschitz"] = tab
        summary["lipschitz_spread"] = spreads[0]
        summary["dim_condition"] = all(r["dim_condition"] for r in tab)
        if summary["dim_condition"]:
            ok &= spreads[0] <= (2.0 if setup.dictionary.is_quadratic else 5.0)
    if "gronwall" in suites:
        res = V.gronwall_consistency(setup, alpha, h)
        tables["gronwall"] = [{"t": t, "psi": p, "envelope": e}
                              for t, p, e in zip(setup.grid.times, res["psi"], res["envelope"])]
        summary.update({"gronwall_b": res["b"], "gronwall_k": res["k"], "gronwall_holds": res["holds"]})
    summary["passed"] = bool(ok)
    return summary, tables, ok


def cmd_verify(args):
    from .io import emit_report

    suites = {args.suite} if args.suite != "all" else {"taylor", "adjoint", "lipschitz", "gronwall"}
    summary, tables, ok = {}, {}, True
    if args.suite == "acceptance" or (args.suite == "all" and not args.config):
        from .acceptance import run_acceptance

        results = run_acceptance()
        summary["criteria"] = [r.to_dict() for r in results]
        for r in results:
            for name, rows in r.tables.items():
                if isinstance(rows, list):
                    tables[f"c{r.number}_{name}"] = rows
        ok = all(r.passed for r in results)
        suites = set()
    if suites:
        if not args.config:
            raise ConfigError([f"--suite {args.suite} needs --config"])
        s2, t2, ok2 = _verify_config(_load(args), suites, args.report, args.plots)
        summary.update(s2)
        tables.update(t2)
        ok &= ok2
    if args.report:
        emit_report(args.report, summary, tables, plots=args.plots)
    print(json.dumps({k: v for k, v in summary.items() if k != "criteria"}, default=float))
    return EXIT_OK if ok else EXIT_GATE


def build_parser():
    p = argparse.ArgumentParser(prog="hyperwave", description="Hyperelastic wave forward, derivative, adjoint and inversion tools.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="solve the forward problem and write the field")
    f.add_argument("--config", required=True)
    f.add_argument("--out", required=True, help="output field file")
    f.add_argument("--report", help="report directory")
    f.set_defaults(func=cmd_forward)

    d = sub.add_parser("derivative", help="write T'(alpha) h for the configured direction")
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_derivative)

    a = sub.add_parser("adjoint", help="print T'(alpha)^* w")
    a.add_argument("--config", required=True)
    a.add_argument("--method", choices=("discrete", "continuous"), default="discrete")
    a.set_defaults(func=cmd_adjoint)

    i = sub.add_parser("invert", help="run projected Landweber")
    i.add_argument("--config", required=True)
    i.add_argument("--data", help="measured field; overrides the config (noise is then the absolute level)")
    i.add_argument("--out", help="result JSON with final alpha, trace and stopping reason")
    i.add_argument("--report", default="report")
    i.add_argument("--resume", help="trace.json from an earlier run")
    i.add_argument("--plots", action="store_true")
    i.set_defaults(func=cmd_invert)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--config")
    v.add_argument("--report")
    v.add_argument("--plots", action="store_true")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        for e in err.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FieldFormatError as err:
        print(f"field error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
