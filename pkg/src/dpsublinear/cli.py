"""Command-line entry point: ``dpsublinear {gen,avgdeg,matching,vc,audit,bench}``.

Exit status is 0 on success, 1 on bad input (flags, files, parameters) and
2 on an internal failure, which includes an audit whose bound is violated.
JSON goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import warnings

import numpy as np

from . import __version__
from .avgdeg import estimate_average_degree, make_params
from .bench import ESTIMATORS, WORKERS_ENV, BenchConfig, bench, default_workers, summarize
from .graph import FAMILIES, Graph, GraphError, OracleHandle, generate, load_edge_list, save_edge_list, format_edge_list
from .matching import estimate_matching_size, estimate_matching_size_dp, estimate_vc_size, estimate_vc_size_dp
from .noise import NoiseSource, parse_seed

SUITES = ("greedy-cgs", "matched-set", "stages", "privacy", "alpha", "doctor")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _eps(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid eps {text!r}") from None


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _graph_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("graph source (a file or a generator)")
    g.add_argument("--graph", help="edge-list file")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float, help="edge probability for gnp")
    g.add_argument("--d", type=int, help="degree for d_regular")
    g.add_argument("--graph-seed", type=_seed, default=0, help="generator seed (default 0)")


def _common(p: argparse.ArgumentParser, eps_default=None) -> None:
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--eps", type=_eps, default=eps_default)
    p.add_argument("--seed", type=_seed, default=0, help="decimal or 0x-hex (default 0)")
    p.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    p.add_argument("--no-timing", action="store_true", help="report wall_time_ms as null")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpsublinear", description="Private sublinear-time graph estimators.")
    parser.add_argument("--version", action="version",
                        version=f"dpsublinear {__version__} (python {platform.python_version()}, "
                                f"numpy {np.__version__})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a synthetic graph as an edge list")
    gen.add_argument("--family", choices=FAMILIES, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float)
    gen.add_argument("--d", type=int)
    gen.add_argument("--seed", type=_seed, default=0)
    gen.add_argument("--out", help="output file (stdout when omitted)")
    gen.add_argument("--json", action="store_true")

    avg = sub.add_parser("avgdeg", help="average degree (edge-private)")
    _graph_args(avg)
    _common(avg, eps_default=1.0)
    avg.add_argument("--beta", type=float, help="bucket ratio (default rho/8)")

    for name in ("matching", "vc"):
        sp = sub.add_parser(name, help=f"{'maximum matching' if name == 'matching' else 'minimum vertex cover'} size")
        _graph_args(sp)
        _common(sp)

    aud = sub.add_parser("audit", help="sensitivity and privacy audits on small instances")
    aud.add_argument("--suite", choices=SUITES, required=True)
    aud.add_argument("--max-n", type=int)
    aud.add_argument("--samples", type=int)
    aud.add_argument("--seed", type=_seed, default=0)
    aud.add_argument("--rho", type=float)
    aud.add_argument("--eps", type=_eps)
    aud.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="repeated trials against exact reference values")
    b.add_argument("--estimator", choices=ESTIMATORS, default="avgdeg")
    _graph_args(b)
    _common(b, eps_default=1.0)
    b.add_argument("--beta", type=float)
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    return parser


def _load_graph(args) -> Graph:
    if args.graph and args.family:
        raise InputError("give either --graph or --family, not both")
    if args.graph:
        return load_edge_list(args.graph)
    if args.family:
        if args.n is None:
            raise InputError("--family needs --n")
        return generate(args.family, args.n, p=args.p, d=args.d, seed=args.graph_seed)
    raise InputError("a graph is required: --graph FILE or --family NAME --n N")


def _emit(obj, as_json: bool, human: str) -> None:
    if as_json:
        sys.stdout.write(json.dumps(obj, sort_keys=False) + "\n")
    else:
        sys.stdout.write(human + "\n")


def _cmd_gen(args) -> int:
    g = generate(args.family, args.n, p=args.p, d=args.d, seed=args.seed)
    if args.out:
        save_edge_list(g, args.out)
    elif not args.json:
        sys.stdout.write(format_edge_list(g))
        return 0
    info = {"family": args.family, "n": g.n, "m": g.m, "average_degree": g.average_degree(),
            "seed": args.seed, "out": args.out}
    _emit(info, args.json, f"wrote {args.family} graph n={g.n} m={g.m} to {args.out}")
    return 0


def _cmd_avgdeg(args) -> int:
    g = _load_graph(args)
    p = make_params(g.n, args.rho, args.beta, args.eps)
    for msg in p.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = estimate_average_degree(OracleHandle(g), p, NoiseSource(args.seed))
    if args.no_timing:
        rep.wall_time_ms = None
    _emit(rep.to_json_dict(), args.json,
          f"average degree ~ {rep.estimate:.6g} ({rep.branch}; |S|={p.sample_size}, "
          f"{rep.degree_queries} degree + {rep.neighbor_queries} neighbor queries, seed {args.seed})")
    return 0


def _cmd_size(args) -> int:
    g = _load_graph(args)
    h, src = OracleHandle(g), NoiseSource(args.seed)
    private = args.eps is not None and not math.isinf(args.eps)
    if args.command == "matching":
        est = estimate_matching_size_dp(h, args.rho, args.eps, src) if private else estimate_matching_size(h, args.rho, src)
        what = "maximum matching"
    else:
        est = estimate_vc_size_dp(h, args.rho, args.eps, src) if private else estimate_vc_size(h, args.rho, src)
        what = "minimum vertex cover"
    if args.no_timing:
        est.wall_time_ms = None
    _emit(est.to_json_dict(), args.json,
          f"{what} size ~ {est.clamped:.6g} (shifted {est.shifted:.6g}, s={est.s}, "
          f"{est.queries['total']} queries, seed {args.seed})")
    return 0


def _cmd_audit(args) -> int:
    from . import audit
    suite, seed = args.suite, args.seed
    if suite in ("greedy-cgs", "matched-set"):
        fn = audit.audit_greedy_matching_cgs if suite == "greedy-cgs" else audit.audit_matched_set_difference
        reports = [fn(args.max_n or 5, args.samples or 200, seed)]
    elif suite == "stages":
        reports = audit.audit_stage_sensitivities(args.max_n or 6, args.samples or 1000, seed,
                                                  rho=args.rho or 0.25, eps=args.eps or 1.0)
    elif suite == "privacy":
        reports = [audit.audit_laplace_privacy(samples=args.samples or 1_000_000, seed=seed),
                   audit.audit_matching_privacy(n=args.max_n or 50, rho=args.rho or 0.3,
                                                eps=args.eps or 1.0, samples=args.samples or 100_000,
                                                seed=seed)]
    elif suite == "alpha":
        reports = [audit.alpha_fidelity(n=args.max_n or 200, reps=args.samples or 10_000, seed=seed)]
    else:
        reports = [audit.doctor_example()]
    rows = [r if isinstance(r, dict) else r.to_json_dict() for r in reports]
    ok = all(row.get("pass", row.get("status") != "fail") for row in rows)
    if args.json:
        sys.stdout.write(json.dumps(rows) + "\n")
    else:
        for row in rows:
            sys.stdout.write(" ".join(f"{k}={v}" for k, v in row.items() if k != "witness") + "\n")
    return 0 if ok else 2


def _cmd_bench(args) -> int:
    g = _load_graph(args)
    cfg = BenchConfig(args.estimator, args.rho, args.eps, args.beta, args.trials, args.seed,
                      args.family, timing=not args.no_timing)
    workers = args.workers if args.workers is not None else default_workers()
    records = bench(g, cfg, workers)
    s = summarize(records)
    line = (f"{args.estimator}: {s['passed']}/{s['judged']} within tolerance, "
            f"mean |error| {s['mean_abs_error']}, mean queries {s['mean_queries']:.1f}")
    if args.json:
        sys.stdout.write(json.dumps([r.to_json_dict() for r in records]) + "\n")
        print(line, file=sys.stderr)
    else:
        for r in records:
            sys.stdout.write(f"trial {r.trial}: estimate {r.estimate:.6g} reference {r.reference} "
                             f"within {r.within} queries {r.degree_queries + r.neighbor_queries}\n")
        sys.stdout.write(line + "\n")
    return 0


COMMANDS = {"gen": _cmd_gen, "avgdeg": _cmd_avgdeg, "matching": _cmd_size, "vc": _cmd_size,
            "audit": _cmd_audit, "bench": _cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (InputError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
