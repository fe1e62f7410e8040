"""Repeated-trial benchmarks with per-trial derived seeds.

Trial k of a run with root seed r uses seed ``splitmix64((r + k) mod 2^64)``,
so serial and parallel runs agree record for record.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .avgdeg import estimate_average_degree, make_params
from .graph import Graph, OracleHandle
from .matching import estimate_matching_and_vc, estimate_matching_size_dp, estimate_vc_size_dp
from .noise import MASK64, NoiseSource, splitmix64

WORKERS_ENV = "DPSUBLINEAR_WORKERS"
ESTIMATORS = ("avgdeg", "matching", "vc")


def trial_seed(root: int, trial: int) -> int:
    return splitmix64((root + trial) & MASK64)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def reference_value(estimator: str, family: str, g: Graph) -> float | None:
    """Exact target value when it is known for the graph family."""
    n = g.n
    if estimator == "avgdeg":
        return g.average_degree()
    if estimator == "matching":
        return {"perfect_matching": n / 2, "star": 1.0 if n > 1 else 0.0, "path": float(n // 2),
                "complete": float(n // 2), "empty": 0.0}.get(family)
    if estimator == "vc":
        return {"perfect_matching": n / 2, "star": 1.0 if n > 1 else 0.0, "path": float(n // 2),
                "complete": float(max(n - 1, 0)), "empty": 0.0}.get(family)
    raise ValueError(f"unknown estimator {estimator!r}")


def within_tolerance(estimator: str, value: float, ref: float, n: int, rho: float) -> bool:
    if estimator == "avgdeg":
        return abs(value - ref) <= rho * ref
    if estimator == "matching":
        return ref / 2 - 2 * rho * n <= value <= ref
    return ref <= value <= 2 * ref + 2 * rho * n


@dataclass
class BenchRecord:
    trial: int
    seed: int
    estimator: str
    estimate: float
    raw: float
    reference: float | None
    abs_error: float | None
    rel_error: float | None
    within: bool | None
    degree_queries: int
    neighbor_queries: int
    wall_time_ms: float | None
    branch: str | None = None

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchConfig:
    estimator: str
    rho: float
    eps: float
    beta: float | None = None
    trials: int = 1
    seed: int = 0
    family: str | None = None
    timing: bool = True


_GRAPH: Graph | None = None


def _init_worker(g: Graph) -> None:
    global _GRAPH
    _GRAPH = g


def run_trial(g: Graph, cfg: BenchConfig, trial: int, ref: float | None) -> BenchRecord:
    seed = trial_seed(cfg.seed, trial)
    h = OracleHandle(g)
    src = NoiseSource(seed)
    start = time.perf_counter()
    branch = None
    if cfg.estimator == "avgdeg":
        p = make_params(g.n, cfg.rho, cfg.beta, cfg.eps)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = estimate_average_degree(h, p, src)
        value, raw, branch = rep.estimate, rep.raw_estimate, rep.branch
    else:
        eps = None if math.isinf(cfg.eps) else cfg.eps
        if eps is None:
            mm, vc = estimate_matching_and_vc(h, cfg.rho, None, src)
            est = mm if cfg.estimator == "matching" else vc
        elif cfg.estimator == "matching":
            est = estimate_matching_size_dp(h, cfg.rho, eps, src)
        else:
            est = estimate_vc_size_dp(h, cfg.rho, eps, src)
        value, raw = est.shifted, est.raw
    elapsed = (time.perf_counter() - start) * 1000.0 if cfg.timing else None
    err = rel = within = None
    if ref is not None:
        err = abs(value - ref)
        rel = err / ref if ref > 0 else None
        within = within_tolerance(cfg.estimator, value, ref, g.n, cfg.rho)
    return BenchRecord(trial, seed, cfg.estimator, value, raw, ref, err, rel, within,
                       h.degree_queries, h.neighbor_queries, elapsed, branch)


def _worker_trial(args) -> BenchRecord:
    cfg, trial, ref = args
    return run_trial(_GRAPH, cfg, trial, ref)


def bench(g: Graph, cfg: BenchConfig, workers: int | None = None) -> list[BenchRecord]:
    if cfg.trials < 1:
        raise ValueError(f"trials must be at least 1 (got {cfg.trials})")
    if cfg.estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {cfg.estimator!r}")
    ref = reference_value(cfg.estimator, cfg.family, g) if cfg.family or cfg.estimator == "avgdeg" else None
    workers = default_workers() if workers is None else workers
    if workers <= 1 or cfg.trials == 1:
        return [run_trial(g, cfg, k, ref) for k in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(g,)) as pool:
        return list(pool.map(_worker_trial, [(cfg, k, ref) for k in range(cfg.trials)]))


def summarize(records: list[BenchRecord]) -> dict:
    judged = [r for r in records if r.within is not None]
    errs = [r.abs_error for r in judged]
    return {
        "trials": len(records),
        "passed": sum(1 for r in judged if r.within),
        "judged": len(judged),
        "pass_rate": (sum(1 for r in judged if r.within) / len(judged)) if judged else None,
        "mean_abs_error": (sum(errs) / len(errs)) if errs else None,
        "mean_queries": sum(r.degree_queries + r.neighbor_queries for r in records) / len(records),
    }
