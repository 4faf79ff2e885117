"""Command-line front end.

Machine output goes to ``--out FILE`` (and a short summary to stdout); with
no ``--out`` the machine output itself is written to stdout.  Exit codes: 0
success, 1 a test or check failed, 2 usage error or rejected parameters.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import chaos, checks, estimators, flows, perturb, sticky_exact
from .streams import THREADS_ENV, resolve_threads

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

LATTICE_MODELS = ("zm-toy", "coal-lattice", "split-lattice", "sticky-lattice", "arratia-lattice", "sticky-kernel")
DEFAULT_EPS_GRID = "0.000244140625,0.00048828125,0.0009765625,0.001953125,0.00390625"  # 2^-12 .. 2^-8


class UsageError(Exception):
    """Bad parameters caught before any module runs."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _common(p, seed_required: bool, formats=("csv", "json"), default_format="json"):
    p.add_argument("--out", help="write machine-readable output to this file")
    p.add_argument("--format", choices=formats, default=default_format)
    p.add_argument("--threads", type=_positive_int, help=f"worker threads (fallback: ${THREADS_ENV}, then 1)")
    if seed_required:
        p.add_argument("--seed", type=_seed, required=True, help="64-bit seed (required)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flownoise", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="sample a flow and its n-point motion", allow_abbrev=False)
    p.add_argument("--model", choices=sorted(flows.MODELS), required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--starts", help="comma-separated start points (default: model origin)")
    p.add_argument("--replicas", type=_positive_int, default=1)
    p.add_argument("--m", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--eps", type=float)
    _common(p, True, default_format="csv")

    p = sub.add_parser("sensitivity", help="correlation under the rho-coupling", allow_abbrev=False)
    p.add_argument("--model", choices=("zm-toy", "arratia-lattice"), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--rho-grid", type=_float_list, required=True)
    p.add_argument("--replicas", type=_positive_int, required=True)
    p.add_argument("--k", type=int, default=1, help="character index (zm-toy)")
    p.add_argument("--x", type=int, default=0, help="tagged start site (arratia-lattice sign functional)")
    _common(p, True, default_format="csv")

    p = sub.add_parser("spectral", help="exact spectral measure of a toy functional", allow_abbrev=False)
    p.add_argument("--model", choices=("zm-toy",), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--k", type=int, default=1)
    _common(p, False)

    p = sub.add_parser("sticky-verify", help="exact sticky-kernel algebra", allow_abbrev=False)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--m-max", type=int, default=5)
    p.add_argument("--n-max", type=_positive_int, default=4)
    p.add_argument("--mc-replicas", type=int, default=0, help="also compare simulated occupancy with mu_n")
    p.add_argument("--mc-steps", type=_positive_int, default=100)
    p.add_argument("--seed", type=_seed, help="required with --mc-replicas")
    _common(p, False, formats=("json",))

    p = sub.add_parser("blacknoise", help="variance scan of the Arratia lattice functional", allow_abbrev=False)
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--eps-grid", type=_float_list, default=_float_list(DEFAULT_EPS_GRID))
    p.add_argument("--replicas", type=_positive_int, default=4000)
    p.add_argument("--phi", choices=("distance", "sine"), default="distance")
    p.add_argument("--no-control", action="store_true", help="skip the classical translation control")
    _common(p, True, formats=("json",))

    p = sub.add_parser("check", help="run every exact invariant suite", allow_abbrev=False)
    p.add_argument("--quick", action="store_true", help="fewer random semigroup instances")
    _common(p, False, formats=("json",))
    return parser


# --- output helpers -------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _emit(args, text: str, summary: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(summary)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)


# --- subcommands ------------------------------------------------------------------


def _model_params(args) -> dict:
    raw = {k: getattr(args, k) for k in ("m", "lam", "dt", "eps") if getattr(args, k, None) is not None}
    try:
        return flows.check_params(args.model, raw)
    except ValueError as exc:
        raise UsageError(f"--model {args.model}: {exc}") from None


def _starts(args, params):
    model = flows.MODELS[args.model]
    if args.starts is None:
        pts = [1] if args.model == "split-lattice" else [0]
    else:
        conv = int if args.model in LATTICE_MODELS else float
        try:
            pts = [conv(v) for v in args.starts.split(",")]
        except ValueError:
            raise UsageError(f"--starts: cannot parse {args.starts!r}") from None
    for x in pts:
        if not model.contains(params, x):
            raise UsageError(f"--starts: {x!r} is outside the state space of {args.model}")
    return pts


def cmd_simulate(args) -> int:
    params = _model_params(args)
    starts = _starts(args, params)
    children = np.random.SeedSequence(args.seed).spawn(args.replicas)
    runs = []
    for child in children:
        gen = np.random.default_rng(child)
        flow = flows.build_flow(args.model, params, args.steps, gen)
        runs.append(flows.n_point_motion(flow, starts, rng=gen))
    if args.format == "csv":
        buf = io.StringIO()
        flows.write_trajectories_csv(buf, runs)
        text = buf.getvalue()
    else:
        text = _dump_json(
            {
                "model": args.model,
                "params": params,
                "steps": args.steps,
                "seed": args.seed,
                "replicas": [
                    [{"start": tr.start, "positions": list(tr.positions)} for tr in trajs] for trajs in runs
                ],
            }
        )
    _emit(args, text, f"simulated {args.replicas} replica(s) of {args.model} for {args.steps} steps")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    params = _model_params(args)
    if any(not 0.0 <= r <= 1.0 for r in args.rho_grid):
        raise UsageError("--rho-grid values must lie in [0, 1]")
    if args.replicas < perturb.MIN_REPLICAS:
        raise UsageError(f"--replicas must be at least {perturb.MIN_REPLICAS}")
    if args.model == "zm-toy":
        functional = perturb.zm_character(params["m"], args.k)
    else:
        if not 0 <= args.x < params["m"]:
            raise UsageError("--x must be a site of Z_m")
        functional = perturb.arratia_sign(args.x)
    curve = perturb.sensitivity_curve(
        functional, args.model, params, args.steps, args.rho_grid, args.replicas, args.seed, threads=args.threads
    )
    if args.format == "csv":
        buf = io.StringIO()
        perturb.write_sensitivity_csv(buf, curve)
        text = buf.getvalue()
    else:
        text = _dump_json(
            {
                "model": args.model,
                "params": params,
                "steps": args.steps,
                "seed": args.seed,
                "functional": functional.name,
                "rows": [
                    {"rho": r, "estimate": e.value, "std_error": e.std_error, "replicas": e.replicas} for r, e in curve
                ],
            }
        )
    lines = [f"{'rho':>8} {'estimate':>12} {'std_error':>10}" + ("   exact" if args.model == "zm-toy" else "")]
    for r, e in curve:
        line = f"{r:8.4f} {e.value:12.6f} {e.std_error:10.2e}"
        if args.model == "zm-toy":
            c2 = math.cos(math.pi * args.k / params["m"]) ** 2
            line += f" {r * (c2 + r * (1 - c2)) ** args.steps:8.6f}"
        lines.append(line)
    _emit(args, text, "\n".join(lines))
    return EXIT_OK


def cmd_spectral(args) -> int:
    if args.m < 2:
        raise UsageError("--m must be at least 2")
    try:
        f = chaos.zm_toy_character(args.m, args.steps, args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mu = chaos.spectral_measure(f)
    incl = [mu.inclusion_probability(t) for t in range(mu.n_factors)]
    if args.format == "json":
        obj = mu.to_json_obj()
        obj["inclusion_probability"] = incl
        text = _dump_json(obj)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["subset", "weight"])
        for mask, weight in sorted(mu.weights.items()):
            w.writerow([" ".join(mu.labels[t] for t in chaos.subset_members(mask)), repr(weight)])
        text = buf.getvalue()
    summary = "inclusion probability per factor: " + ", ".join(
        f"{lab}={p:.6f}" for lab, p in zip(mu.labels, incl)
    )
    _emit(args, text, summary)
    return EXIT_OK


def cmd_sticky_verify(args) -> int:
    if not 0 < args.eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    if args.m_max < 3:
        raise UsageError("--m-max must be at least 3")
    if args.mc_replicas and args.seed is None:
        raise UsageError("--seed is required with --mc-replicas")
    try:
        sticky_exact.configurations(args.m_max, args.n_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    beta = checks.beta_identity(eps_values=(args.eps,))
    balance = checks.sticky_balance(args.m_max, args.n_max, args.eps)
    out = {"eps": args.eps, "beta_identity": beta.to_json_obj(), "detailed_balance": balance.detail["reports"]}
    ok = beta.passed and balance.passed
    if args.mc_replicas:
        tv = sticky_exact.empirical_tv(4, 3, args.eps, args.mc_steps, args.mc_replicas, args.seed)
        out["monte_carlo"] = {"m": 4, "n": 3, "steps": args.mc_steps, "replicas": args.mc_replicas, "tv": tv}
        ok = ok and tv <= 0.02
    out["verdict"] = "pass" if ok else "fail"
    worst = max(r["max_violation"] for r in out["detailed_balance"])
    _emit(
        args,
        _dump_json(out),
        f"beta identity max rel err {beta.detail['max_relative_error']:.2e}; "
        f"worst channel violation {worst:.2e}; verdict {out['verdict']}",
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_blacknoise(args) -> int:
    if args.m < 4 or args.m % 2:
        raise UsageError("--m must be an even integer >= 4")
    for e in args.eps_grid:
        k = e * args.m * args.m
        if k < 1 or abs(k - round(k)) > 1e-9:
            raise UsageError(f"--eps-grid: {e} is not a whole number of lattice steps 1/m^2")
    phi = estimators.distance_to_point(args.m) if args.phi == "distance" else estimators.sine_phi(args.m)
    scan = estimators.blacknoise_variance_scan(
        args.eps_grid, args.replicas, args.seed, m=args.m, phi=phi, threads=args.threads
    )
    control = None
    if not args.no_control:
        control = estimators.blacknoise_variance_scan(
            args.eps_grid, args.replicas, args.seed, m=args.m, phi=phi, model="translation", threads=args.threads
        )
    report = estimators.blacknoise_report(scan, control)
    report.params.update({"m": args.m, "replicas": args.replicas, "seed": args.seed, "phi": args.phi})
    lines = [f"{'eps':>12} {'var/eps':>12} {'se':>10}"]
    for e, r, s in zip(scan.scales, scan.ratios, scan.ratio_std_errors):
        lines.append(f"{e:12.6g} {r:12.6g} {s:10.2e}")
    lines.append(f"trend p-value {scan.trend_p_value:.3g}; verdict {report.verdict}")
    _emit(args, _dump_json(report.to_json_obj()), "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_check(args) -> int:
    results = checks.run_all(quick=args.quick)
    ok = all(r.passed for r in results)
    summary = "\n".join(f"{'PASS' if r.passed else 'FAIL'}  {r.name}" for r in results)
    if args.out:
        _emit(args, _dump_json({"passed": ok, "checks": [r.to_json_obj() for r in results]}), summary)
    else:
        print(summary)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate,
    "sensitivity": cmd_sensitivity,
    "spectral": cmd_spectral,
    "sticky-verify": cmd_sticky_verify,
    "blacknoise": cmd_blacknoise,
    "check": cmd_check,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is None:
            resolve_threads(None)  # validate the environment fallback early
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"flownoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
