"""Command-line front end: ``rankhire <command> [options]``.

Exit codes: 0 success or all checks passed, 1 a verification failed,
2 usage or input error.  Every output embeds the resolved configuration
(minus ``threads``/``out``, which never change results).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import limit_laws as LL
from .dsl import parse_strategy, strategy_to_json
from .errors import RankHireError
from .experiments import EXPERIMENTS, ExperimentSpec, report_bundle, run_experiment
from .profile import derive_profile
from .simulator import (
    SCHEMA_VERSION,
    brute_force_distribution,
    sample_N_fast_batch,
    simulate_direct,
    simulate_summary,
)

NON_RESULT_KEYS = {"threads", "out", "config", "command", "func"}


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NON_RESULT_KEYS and v is not None}


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_simulate(args):
    strategy = parse_strategy(args.strategy)
    header = {"command": "simulate", "config": _config(args)}
    if args.mode == "trace":
        trace = simulate_direct(strategy, args.n, args.seed)
        if args.format == "json":
            return _emit(_json({**header, **trace.summary()}), args.out)
        return _emit(trace.to_csv(header), args.out)
    if args.mode == "summary":
        b = simulate_summary(strategy, args.n, args.reps, args.seed, args.threads)
        cols = {"M_n": b.M, "L_n": b.L, "P_n": b.P}
    else:
        N = sample_N_fast_batch(strategy, args.m, args.reps, args.seed, args.threads)
        cols = {f"N_{args.m}": N[:, -1]}
    if args.format == "json":
        return _emit(_json({**header, "schema_version": SCHEMA_VERSION,
                            **{k: v.tolist() for k, v in cols.items()}}), args.out)
    lines = ["# " + json.dumps({**header, "schema_version": SCHEMA_VERSION}, sort_keys=True),
             ",".join(["replicate", *cols])]
    for i in range(len(next(iter(cols.values())))):
        lines.append(",".join([str(i)] + [repr(v[i].item()) for v in cols.values()]))
    _emit("\n".join(lines) + "\n", args.out)


def cmd_moments(args):
    strategy = parse_strategy(args.strategy)
    if args.method == "periodic":
        period = strategy.period
        if period is None:
            raise RankHireError(f"{strategy} is not linear-periodic")
        nu, q = period
        base = tuple(int(v) for v in strategy.ranks(q)[1:])
        if strategy.ranks(3 * q)[1:].tolist() != [base[(m - 1) % q] + ((m - 1) // q) * nu
                                                  for m in range(1, 3 * q + 1)]:
            raise RankHireError(f"{strategy} is only eventually periodic; use --method product")
        res = LL.MomentResult(LL.moment_W_periodic(nu, q, base, args.s), 0.0, None, "closed-form")
    else:
        res = LL.moment_W_product(strategy, None, args.s, args.tol)
    doc = {"schema_version": SCHEMA_VERSION, "config": _config(args), "strategy": strategy.to_dsl(),
           "s": args.s, **res._asdict()}
    _emit(_json(doc), args.out)


def cmd_normalize(args):
    strategy = parse_strategy(args.strategy)
    doc = {"schema_version": SCHEMA_VERSION, "config": _config(args), "strategy": strategy.to_dsl()}
    if args.n is not None:
        norm = LL.clt_normalizer(strategy, args.n)
        doc.update(mu=norm.mu, gamma=norm.gamma)
    if args.m is not None:
        prof = derive_profile(strategy, args.m)
        doc.update(
            m=args.m,
            centre=float(prof.y[args.m] + np.log(prof.r[args.m])),
            scale=float(np.sqrt(prof.sigma2_hat[args.m])),
        )
    _emit(_json(doc), args.out)


def _spec_from(args, name):
    params = json.loads(args.params) if args.params else {}
    return ExperimentSpec(name, seed=args.seed, strategy=args.strategy, n=args.n, m=args.m,
                          reps=args.reps, level=args.level, threshold=args.threshold, params=params)


def cmd_verify(args):
    report = run_experiment(_spec_from(args, args.experiment), threads=args.threads)
    doc = {"config": _config(args), **report.to_dict()}
    _emit(_json(doc), args.out)
    print(f"{report.name}: {'PASS' if report.passed else 'FAIL'}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_oracle(args):
    strategy = parse_strategy(args.strategy)
    dist = brute_force_distribution(strategy, args.n)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _config(args),
        "strategy": strategy_to_json(strategy),
        "M": {str(k): str(v) for k, v in dist.M.items()},
        "L": {str(k): str(v) for k, v in dist.L.items()},
    }
    _emit(_json(doc), args.out)


def cmd_report(args):
    reports = []
    if args.inputs is not None:
        from .experiments import TestReport

        for path in args.inputs:
            with open(path) as fh:
                d = json.load(fh)
            reports.append(TestReport(d["name"], d["kind"], d["passed"], d["statistics"],
                                      d["targets"], d["spec"], d.get("samples", {}), d.get("notes", "")))
    else:
        if args.seed is None:
            raise RankHireError("report needs --seed when it runs experiments")
        names = args.experiments.split(",") if args.experiments else list(EXPERIMENTS)
        for name in names:
            spec = ExperimentSpec(name, seed=args.seed)
            reports.append(run_experiment(spec, threads=args.threads))
    doc, table, code = report_bundle(reports)
    doc["config"] = _config(args)
    _emit(_json(doc), args.out)
    print(table, file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankhire", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file whose keys mirror the command-line flags")
    sub = p.add_subparsers(dest="command", required=True)
    p.subcommands = sub.choices

    def common(sp, strategy=True):
        if strategy:
            sp.add_argument("--strategy", required=False, help="strategy DSL, e.g. median or best-of:3")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")

    sp = sub.add_parser("simulate", help="simulate traces or replicate summaries")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--mode", choices=["trace", "summary", "fast-N"], default="trace")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("moments", help="moments E W^s of the limit law")
    common(sp)
    sp.add_argument("--s", type=float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--method", choices=["product", "periodic"], default="product")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("normalize", help="normalising constants for small-r strategies")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("verify", help="run one verification experiment")
    common(sp)
    sp.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--level", type=float)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--params", help="JSON object overriding experiment parameters")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("oracle", help="exact law of M_n by enumerating permutations")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("report", help="run experiments (or read reports) and bundle verdicts")
    common(sp, strategy=False)
    sp.add_argument("--experiments", help="comma-separated names (default: all)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--inputs", nargs="*", help="existing report JSON files to bundle")
    sp.set_defaults(func=cmd_report)
    return p


REQUIRED = {
    "simulate": ("strategy", "seed"),
    "moments": ("strategy",),
    "normalize": ("strategy",),
    "verify": ("experiment", "seed"),
    "oracle": ("strategy", "n"),
}


def main(argv=None) -> int:
    try:
        return _main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2


def _main(argv):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config: {exc}")
        explicit = parser.parse_args(argv)
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if not hasattr(args, key):
                parser.error(f"unknown config key {key!r}")
            default = parser.subcommands[args.command].get_default(key)
            if getattr(explicit, key) == default:
                setattr(args, key, value)
    missing = [k for k in REQUIRED.get(args.command, ()) if getattr(args, k, None) is None]
    if args.command == "simulate":
        if args.mode in ("trace", "summary") and args.n is None:
            missing.append("n")
        if args.mode in ("summary", "fast-N") and args.reps is None:
            missing.append("reps")
        if args.mode == "fast-N" and args.m is None:
            missing.append("m")
    if args.command == "normalize" and args.n is None and args.m is None:
        missing.append("n or m")
    if missing:
        parser.error("missing required option(s): " + ", ".join("--" + k for k in missing))
    try:
        if getattr(args, "strategy", None):
            parse_strategy(args.strategy)
        code = args.func(args)
    except (RankHireError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if code is None else code


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
