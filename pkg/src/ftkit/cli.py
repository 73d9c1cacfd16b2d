"""Command-line entry point: ``ftkit simulate|certify|differentiate|table``.

Every subcommand takes ``--config FILE``, a JSON object whose keys are the
subcommand's flag names (dashes or underscores). Flags given on the command
line override the file.

Exit codes: 0 ok, 2 usage, 3 numerical blow-up, 4 infeasible design,
5 failed table checks.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bench import DEFAULT_TOLERANCE, emit_report, run_paper_tables
from .errors import MarginUndefinedError, NotHurwitzError, NumericalError, ValidationError
from .laws import DEFAULT_GAMMA, DifferentiatorConfig, GainScheme, binomial_gains, fixed_time_margin, mu_margin
from .numkit import certify, companion_from_gains
from .sim import ConvergenceCriterion, Signal, SimConfig, simulate_closed_loop, simulate_differentiator
from .svg import write_state_plots

EXIT_OK, EXIT_USAGE, EXIT_BLOWUP, EXIT_INFEASIBLE, EXIT_FAILED = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _number(text: str) -> float:
    """Float that also accepts fractions such as ``10/11``."""
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [_number(v) for v in text.split(",") if v.strip()]
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_sim_flags(p: argparse.ArgumentParser, tmax_default, tmax_help: str) -> None:
    p.add_argument("--step", type=_number, default=1e-4, help="integration step h (s)")
    p.add_argument("--method", choices=["rk4", "euler"], default="rk4", help="fixed-step scheme")
    p.add_argument("--tmax", type=_number, default=tmax_default, help=tmax_help)
    p.add_argument("--stride", type=int, default=10, help="record every N-th step")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="ftkit", description=__doc__.splitlines()[0], formatter_class=fmt)
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    p = subs.add_parser("simulate", help="closed-loop integrator chain", formatter_class=fmt)
    p.add_argument("--n", type=int, required=True, help="chain length")
    p.add_argument("--x0", type=_number, required=True, help="initial value of every coordinate")
    p.add_argument("--gamma", type=_number, default=DEFAULT_GAMMA, help="top exponent gamma_n (e.g. 10/11)")
    p.add_argument("--mu", type=_number, default=1.0, help="pole location -mu for binomial gains")
    _add_sim_flags(p, None, "horizon (s); default 300 for n<=3, else 600")
    p.add_argument("--eps", type=_number, default=1e-6, help="max-norm convergence threshold")
    p.add_argument("--dwell", type=_number, default=1.0, help="time the state must stay below eps (s)")
    p.add_argument("--out", type=Path, default=None, help="trajectory CSV path")
    p.add_argument("--plot", type=Path, default=None, help="directory for per-state SVG plots")
    table["simulate"] = p

    p = subs.add_parser("certify", help="Lyapunov certificate and margins", formatter_class=fmt)
    p.add_argument("--n", type=int, default=None, help="dimension (2 unless --k says otherwise)")
    p.add_argument("--mu", type=_number, default=None, help="binomial gains with all poles at -mu (default 1)")
    p.add_argument("--k", type=_floats, default=None, help="explicit gains k1,...,kn")
    p.add_argument("--q-scale", type=_number, default=1.0, help="Q = c * identity")
    table["certify"] = p

    p = subs.add_parser("differentiate", help="run the differentiator on a test signal", formatter_class=fmt)
    p.add_argument("--signal", required=True, help="poly:c0,c1,... | sin:amp,omega[,phase] | const:c")
    p.add_argument("--n", type=int, default=2, help="differentiator order")
    p.add_argument("--variant", choices=["basic", "modified", "smooth"], default="basic", help="form")
    p.add_argument("--lambda", dest="lam", type=_number, default=None,
                   help="discontinuous gain (required for modified/smooth)")
    p.add_argument("--alpha", type=_number, default=None, help="alpha seed (0.9; 0.7 for smooth)")
    p.add_argument("--beta", type=_number, default=1.1, help="beta seed")
    p.add_argument("--k", type=_floats, default=None, help="gains k (default binomial, observer order)")
    p.add_argument("--kappa", type=_floats, default=None, help="gains kappa (default equal to k)")
    p.add_argument("--z0", type=_floats, default=None, help="initial state (default zeros)")
    _add_sim_flags(p, 30.0, "horizon (s)")
    p.add_argument("--window", type=_number, default=5.0, help="trailing error window (s)")
    p.add_argument("--out", type=Path, default=None, help="trajectory CSV path")
    p.add_argument("--plot", type=Path, default=None, help="directory for per-state SVG plots")
    table["differentiate"] = p

    p = subs.add_parser("table", help="regenerate the convergence-time tables", formatter_class=fmt)
    p.add_argument("--format", choices=["csv", "md", "json"], default="csv", help="report format")
    p.add_argument("--tolerance", type=_number, default=DEFAULT_TOLERANCE,
                   help="relative closeness tolerance vs the reference simulated times")
    p.add_argument("--jobs", type=int, default=1, help="rows simulated in parallel")
    _add_sim_flags(p, None, "horizon (s); default 300 for n<=3, else 600")
    p.add_argument("--eps", type=_number, default=1e-6, help="max-norm convergence threshold")
    p.add_argument("--eps-base", type=_number, default=None, help="use eps = EPS_BASE**n instead of --eps")
    p.add_argument("--dwell", type=_number, default=1.0, help="time the state must stay below eps (s)")
    p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    table["table"] = p

    for sp in table.values():
        sp.add_argument("--config", type=Path, default=None, help="JSON file with flag values")
    return parser, table


def _load_config(path: Path, sub: argparse.ArgumentParser) -> dict:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    aliases = {"lambda": "lam"}
    out = {}
    for key, value in doc.items():
        dest = aliases.get(key, key.replace("-", "_"))
        if dest not in known:
            raise UsageError(f"unknown config key {key!r}")
        action = known[dest]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        elif isinstance(value, list) and action.type is _floats:
            value = [float(v) for v in value]
        elif action.type is Path and value is not None:
            value = Path(value)
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        out[dest] = value
        action.required = False
    return out


def _sim_config(args, t_max) -> SimConfig:
    return SimConfig(step_h=args.step, method=args.method, t_max=t_max, record_stride=args.stride)


def cmd_simulate(args, out) -> int:
    cfg = _sim_config(args, args.tmax)
    crit = ConvergenceCriterion(args.eps, args.dwell)
    traj, rep = simulate_closed_loop(args.n, args.x0, args.gamma, GainScheme(mu=args.mu, n=args.n), cfg, crit)
    if args.out:
        traj.write_csv(args.out)
    if args.plot:
        write_state_plots(traj, args.plot)
    if rep.converged:
        print(f"t_conv={rep.t_conv:.6f}", file=out)
    else:
        print("not converged", file=out)
    print(f"final_norm={rep.final_norm:.6e}", file=out)
    return EXIT_OK


def cmd_certify(args, out) -> int:
    if args.k is not None and args.mu is not None:
        raise UsageError("give either --mu or --k, not both")
    if args.k is not None:
        gains = np.array(args.k)
        if args.n is not None and args.n != gains.size:
            raise UsageError(f"--n {args.n} does not match {gains.size} gains")
        mu = None
    else:
        mu = 1.0 if args.mu is None else args.mu
        gains = binomial_gains(args.n or 2, mu)
    if args.q_scale <= 0:
        raise UsageError("--q-scale must be positive")
    a = companion_from_gains(gains)
    cert = certify(a, args.q_scale * np.eye(a.shape[0]))
    doc = {"gains": gains.tolist(), **cert.to_dict()}
    if mu is not None:
        doc["mu"] = mu
        doc["mu_margin"] = mu_margin(mu, cert)
    if gains.size == 2:
        try:
            doc["fixed_time_margin"] = fixed_time_margin(gains[0], gains[1], cert)
        except MarginUndefinedError as exc:
            doc["fixed_time_margin"] = None
            doc["fixed_time_margin_error"] = str(exc)
    json.dump(doc, out, indent=2)
    out.write("\n")
    return EXIT_OK


def cmd_differentiate(args, out) -> int:
    signal = Signal.parse(args.signal)
    lam = args.lam if args.lam is not None else 0.0
    if args.variant != "basic" and args.lam is None:
        raise UsageError(f"--lambda is required for the {args.variant} variant")
    base = DifferentiatorConfig.default(args.n, args.variant, lam, alpha_seed=args.alpha, beta_seed=args.beta)
    k = tuple(args.k) if args.k is not None else base.k
    kappa = tuple(args.kappa) if args.kappa is not None else k
    dcfg = DifferentiatorConfig(n=args.n, k=k, kappa=kappa, lam=lam, alpha_seed=base.alpha_seed,
                                beta_seed=args.beta, variant=args.variant)
    z0 = np.zeros(dcfg.dim) if args.z0 is None else np.array(args.z0)
    traj, errors = simulate_differentiator(signal, z0, dcfg, _sim_config(args, args.tmax), args.window)
    if args.out:
        traj.write_csv(args.out)
    if args.plot:
        write_state_plots(traj, args.plot)
    for i, e in enumerate(errors):
        print(f"z{i + 1} error vs y^({i}): {e:.6e}", file=out)
    return EXIT_OK


def cmd_table(args, out) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    bundle = run_paper_tables(_sim_config(args, args.tmax), ConvergenceCriterion(args.eps, args.dwell),
                              tolerance=args.tolerance, jobs=args.jobs, eps_base=args.eps_base)
    text = emit_report(bundle, args.format)
    if args.out:
        args.out.write_text(text)
    else:
        out.write(text)
    return EXIT_OK if bundle.all_passed else EXIT_FAILED


COMMANDS = {"simulate": cmd_simulate, "certify": cmd_certify, "differentiate": cmd_differentiate,
            "table": cmd_table}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", type=Path, default=None)
    try:
        known, _ = pre.parse_known_args(argv)
        if known.config is not None and known.command in subs:
            sub = subs[known.command]
            sub.set_defaults(**_load_config(known.config, sub))
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except NotHurwitzError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ValidationError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
