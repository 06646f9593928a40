"""Command-line front end for the solver library and experiments.

Subcommands: weights (CQ weight tables), ode (scalar Volterra oracle),
convergence (manufactured-solution refinement studies), damping (center
trace demo), constants (positivity-constant table), solve (single run),
acceptance (the numbered criteria, optionally asserted).

All numeric output uses 17 significant digits.  A flat `key = value`
config file can preset any flag of the chosen subcommand; command-line
flags override it.  Every run that writes files also writes a config
echo next to them.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from fracwave.cq import CQScheme, bdf2_weights
from fracwave.fraccalc import FracParams
from fracwave.harness import (
    build_case,
    constants_csv,
    damping_demo_csv,
    run_constants_figure,
    run_convergence,
    run_damping_demo,
)
from fracwave.oracle import VolterraProblem, asymptotic_check, solve_volterra
from fracwave.solver import SeparableSource, SimConfig, run

F = "%.17g"


def _echo_lines(args: argparse.Namespace) -> list[str]:
    skip = {"func", "config"}
    return [
        f"{key} = {value}"
        for key, value in sorted(vars(args).items())
        if key not in skip
    ]


def _write_echo(outdir: Path, args: argparse.Namespace) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "config_echo.txt"
    path.write_text("\n".join(_echo_lines(args)) + "\n")


def _print_echo(args: argparse.Namespace) -> None:
    for line in _echo_lines(args):
        print(f"# {line}")


def cmd_weights(args) -> int:
    omega = bdf2_weights(args.gamma, args.kappa, args.n)
    in_domain = -1.0 < args.gamma < 1.0 and args.gamma != 0.0
    scheme = CQScheme.build(args.gamma, args.kappa, args.n) if in_domain else None
    _print_echo(args)
    header = "n,t_n,omega_n" + (",w0_n,w1_n" if scheme else "")
    print(header)
    for n in range(args.n + 1):
        row = [str(n), F % (n * args.kappa), F % omega[n]]
        if scheme:
            row += [F % scheme.w0[n], F % scheme.w1[n]]
        print(",".join(row))
    return 0


def cmd_ode(args) -> int:
    frac = FracParams(gamma=args.gamma, alpha0=args.alpha0)
    forcing = None
    if args.cos_forcing is not None:
        w = args.cos_forcing
        forcing = lambda t: math.cos(w * t)
    problem = VolterraProblem(gamma=args.gamma, a_gamma=frac.a_gamma,
                              lam=args.lam, u0=args.u0, v0=args.v0, f=forcing)
    solution = solve_volterra(problem, args.T, args.m)
    _print_echo(args)
    print(f"v0 = {F % solution.v[0]}")
    print(f"u(T) = {F % solution.u[-1]}")
    if args.fit:
        exponent = asymptotic_check(problem, args.T, args.m)
        print(f"startup_exponent = {F % exponent}")
    if args.outdir:
        outdir = Path(args.outdir)
        _write_echo(outdir, args)
        solution.write_csv(outdir / "ode.csv")
        print(f"wrote {outdir / 'ode.csv'}")
    return 0


def cmd_convergence(args) -> int:
    case = build_case(args.case, FracParams(gamma=args.gamma, alpha0=args.alpha0))
    if args.coupling is not None:
        case.coupling = args.coupling
    report = run_convergence(case, corrected=args.corrected, levels=args.levels,
                             kappa0=args.kappa0, T=args.T)
    _print_echo(args)
    print("level,h,kappa,error_energy,error_l2max")
    for lev, row in enumerate(report.levels):
        print(",".join([str(lev)] + [F % v for v in row]))
    print(report.summary())
    if args.outdir:
        outdir = Path(args.outdir)
        _write_echo(outdir, args)
        path = outdir / f"convergence_{args.case}.csv"
        report.write_csv(path)
        print(f"wrote {path}")
    return 0


def cmd_damping(args) -> int:
    gammas = tuple(float(g) for g in args.gammas.split(","))
    times, traces, energies = run_damping_demo(
        gammas=gammas, n_per_side=args.n, T=args.T)
    _print_echo(args)
    for label, e in energies.items():
        print(f"gamma={label}: E_final/E_1 = {F % (e[-1] / e[0])}")
    if args.outdir:
        outdir = Path(args.outdir)
        _write_echo(outdir, args)
        path = outdir / "damping_trace.csv"
        damping_demo_csv(path, times, traces)
        print(f"wrote {path}")
    return 0


def cmd_constants(args) -> int:
    table = run_constants_figure(args.grid)
    _print_echo(args)
    print("gamma,C1,C2")
    for g, c1, c2 in table:
        print(",".join(F % v for v in (g, c1, c2)))
    if args.outdir:
        outdir = Path(args.outdir)
        _write_echo(outdir, args)
        path = outdir / "constants.csv"
        constants_csv(path, table)
        print(f"wrote {path}")
    return 0


def cmd_solve(args) -> int:
    from fracwave.fem import assemble, build_mesh
    from fracwave.harness import error_norm_energy, error_norm_l2max

    case = build_case(args.case, FracParams(gamma=args.gamma, alpha0=args.alpha0))
    n = round((1.0 if case.dimension == 1 else 2.0) / (case.coupling * args.kappa))
    mesh = build_mesh(case.dimension, case.domain, n)
    system = assemble(mesh)
    config = SimConfig(
        fem=system, T=args.T, kappa=args.kappa, frac=case.frac,
        corrected=args.corrected,
        f=SeparableSource(spatial=case.spatial, temporal=case.source_temporal),
        u0=case.spatial.scaled(case.exact(0.0)),
        v0=case.spatial.scaled(case.exact_d1(0.0)),
    )
    traj = run(config)
    _print_echo(args)
    print(f"h = {F % mesh.h}")
    print(f"steps = {config.n_steps}")
    print(f"error_energy = {F % error_norm_energy(traj, case, system, args.kappa)}")
    print(f"error_l2max = {F % error_norm_l2max(traj, case, system, args.kappa)}")
    if args.outdir:
        outdir = Path(args.outdir)
        _write_echo(outdir, args)
        traj.energy_csv(outdir / "energy.csv", args.kappa)
        np.savetxt(outdir / "final_state.csv",
                   np.column_stack([mesh.nodes[mesh.interior], traj.us[-1]]),
                   delimiter=",", fmt=F)
        print(f"wrote {outdir / 'energy.csv'} and {outdir / 'final_state.csv'}")
    return 0


def cmd_acceptance(args) -> int:
    from fracwave.acceptance import run_all

    indices = None
    if args.criteria:
        indices = [int(tok) for tok in args.criteria.split(",")]
        bad = [i for i in indices if not 1 <= i <= 10]
        if bad:
            raise ValueError(f"criteria indices must be in 1..10, got {bad}")
    results = run_all(indices)
    for result in results:
        print(result.line())
    failed = [r.index for r in results if not r.passed]
    if failed and args.assert_:
        print(f"FAILED criteria: {','.join(map(str, failed))}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracwave",
        description="Experiments for a weakly damped fractional wave equation.",
    )
    parser.add_argument("--config", help="flat key = value file presetting "
                        "the chosen subcommand's flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="CQ weight and correction tables")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--n", type=int, default=16)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("ode", help="scalar Volterra oracle solve")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=4.0)
    p.add_argument("--u0", type=float, default=1.0)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--cos-forcing", type=float, default=None,
                   help="frequency w for f(t) = cos(w t)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--m", type=int, default=1024, help="number of steps")
    p.add_argument("--fit", action="store_true",
                   help="fit the startup exponent of u''")
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("convergence", help="manufactured refinement study")
    p.add_argument("--case", required=True,
                   choices=["smooth1d", "smooth2d", "nonsmooth1d"])
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--corrected", action="store_true")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--coupling", type=float, default=None,
                   help="h = coupling * kappa (default: 6 in 1D, 10 in 2D)")
    p.add_argument("--kappa0", type=float, default=None,
                   help="coarsest step (default 1/64 in 1D, 1/40 in 2D)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("damping", help="center-trace damping demo")
    p.add_argument("--gammas", default="0.25,0.75,-0.25,-0.75",
                   help="comma-separated fractional orders")
    p.add_argument("--n", type=int, default=32, help="cells per side (even)")
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_damping)

    p = sub.add_parser("constants", help="positivity constant table")
    p.add_argument("--grid", type=int, default=99)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("solve", help="single manufactured run with snapshot")
    p.add_argument("--case", required=True,
                   choices=["smooth1d", "smooth2d", "nonsmooth1d"])
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--corrected", action="store_true")
    p.add_argument("--kappa", type=float, default=1.0 / 128)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("acceptance", help="numbered acceptance criteria")
    p.add_argument("--criteria", default=None,
                   help="comma-separated subset, e.g. 1,4,8")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit nonzero if any selected criterion fails")
    p.set_defaults(func=cmd_acceptance)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Expand `--config file` into leading flags of the subcommand.

    Keys use the flag spelling without dashes (e.g. `kappa0 = 0.01`).
    Flags given explicitly on the command line take precedence because
    argparse applies later occurrences last.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ValueError("--config requires a file path")
    path = Path(argv[at + 1])
    rest = argv[:at] + argv[at + 2:]
    if not rest:
        raise ValueError("--config requires a subcommand")
    command = rest[0]
    inserted = []
    known = _subcommand_flags(parser, command)
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected `key = value`")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag not in known:
            raise ValueError(
                f"{path}:{lineno}: unknown key {key!r}; valid keys: "
                + ", ".join(sorted(k.lstrip('-') for k in known))
            )
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                inserted.append(flag)
        else:
            inserted.extend([flag, value])
    return [command] + inserted + rest[1:]


def _subcommand_flags(parser: argparse.ArgumentParser, command: str) -> set[str]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            if command in action.choices:
                return {
                    s for a in action.choices[command]._actions
                    for s in a.option_strings
                    if s not in ("-h", "--help")
                }
            raise ValueError(f"unknown subcommand {command!r}")
    raise RuntimeError("no subcommands registered")


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
