"""Edge-private (1 + rho)-approximation of the average degree in the query model.

The estimator runs in four stages, each drawing from its own child noise
stream:

1. ``noisy_degree_sample``: a uniform vertex sample S and lazily noised
   degrees ``deg(v) + Lap(6/eps)``.
2. ``bucketize``: geometric buckets on the noisy degrees, the merged
   low-degree bucket S1 and the set I of big buckets.
3. ``noisy_big_small_edge_count``: for each big bucket, the noisy fraction
   of sampled vertices whose random neighbor lands in a small bucket.
4. ``noisy_avg_degree``: the final estimate, with an extra clamped-degree
   term when S1 is big.

Passing ``eps=math.inf`` zeroes every noise scale and leaves the sampling
randomness in place (the non-private baseline).
"""

from __future__ import annotations

import math
import time
import warnings as _warnings
from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .graph import OracleHandle
from .noise import NoiseSource, sample_without_replacement

SMALL_S1 = "small-S1"
BIG_S1 = "big-S1"


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class AvgDegreeParams:
    n: int
    rho: float
    beta: float
    eps: float
    t: int
    sample_size: int
    T: float
    M: float
    K: int
    raw_sample_size: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def private(self) -> bool:
        return not math.isinf(self.eps)

    @property
    def degree_noise_scale(self) -> float:
        return 6.0 / self.eps if self.private else 0.0

    @property
    def count_noise_scale(self) -> float:
        return 6.0 / self.eps if self.private else 0.0

    @property
    def degree_cap(self) -> float:
        return 6.0 * self.M * (3.0 + self.beta + 1.0 / self.beta)

    @property
    def s1_noise_scale(self) -> float:
        return 36.0 * self.M * (3.0 + self.beta + 1.0 / self.beta) / self.eps if self.private else 0.0

    @property
    def s1_cutoff(self) -> float:
        return (1.0 + self.beta) ** (self.K - 1)

    @property
    def big_threshold(self) -> float:
        return 1.2 * self.T * self.sample_size

    @property
    def s1_threshold(self) -> float:
        return 1.2 * self.T * math.sqrt(self.sample_size) * self.sample_size

    @cached_property
    def _bounds(self) -> list[float]:
        return [(1.0 + self.beta) ** i for i in range(self.t + 1)]

    def bucket_index(self, x: float) -> int:
        """Index i with ``(1+beta)^(i-1) < x <= (1+beta)^i``, clamped to ``[1, t]``."""
        i = bisect_left(self._bounds, x)
        return 1 if i < 1 else (self.t if i > self.t else i)


def make_params(n: int, rho: float, beta: float | None = None, eps: float = 1.0,
                sample_size: int | None = None) -> AvgDegreeParams:
    """Validate inputs and derive t, |S|, T, M and K.

    ``sample_size`` overrides the formula for |S| (experiments only).
    """
    problems = []
    if n < 2:
        problems.append(f"n must be at least 2 (got {n})")
    if not 0 < rho <= 0.25:
        problems.append(f"rho must lie in (0, 1/4] (got {rho})")
    if beta is None:
        beta = rho / 8
    if not 0 < beta <= rho / 8 + 1e-15:
        problems.append(f"beta must lie in (0, rho/8] (got beta={beta}, rho/8={rho / 8})")
    if not eps > 0:
        problems.append(f"eps must be positive or inf (got {eps})")
    if problems:
        raise ParameterError("; ".join(problems))

    notes: list[str] = []
    if rho == 0.25:
        notes.append("rho = 1/4 is the boundary of the accuracy guarantee (which needs rho < 1/4)")
    ln_n = math.log(n)
    t = max(1, math.ceil(math.log(n) / math.log1p(beta)))
    eps_factor = 1.0 if math.isinf(eps) else 1.0 + 1.0 / eps
    raw = t * (ln_n ** 2 / rho ** 2) * math.sqrt(n / rho) * eps_factor
    if sample_size is None:
        size = min(n, max(1, math.ceil(raw)))
        if raw > n:
            notes.append(f"sample size formula gives {raw:.4g} > n; clamped to n={n}")
    else:
        if not 1 <= sample_size <= n:
            raise ParameterError(f"sample_size must lie in [1, n] (got {sample_size})")
        size = int(sample_size)
        notes.append(f"sample size overridden to {size} (formula gives {raw:.4g})")
    eps_ratio = 1.0 if math.isinf(eps) else eps / (1.0 + eps)
    T = 0.5 * math.sqrt(rho / n) * eps_ratio / t
    M = (1.0 / 3.0) * math.sqrt(rho / (n * math.sqrt(ln_n))) * size / t
    K_raw = math.ceil(math.log(6.0 * M / beta) / math.log1p(beta)) + 2
    K = max(2, K_raw)
    if K != K_raw:
        notes.append(f"merged-bucket cutoff K={K_raw} raised to 2")
    if not math.isinf(eps) and 1.0 / eps >= ln_n ** 0.25:
        notes.append("1/eps is not small against log(n)^(1/4); the accuracy guarantee may not apply")
    return AvgDegreeParams(n=n, rho=rho, beta=beta, eps=eps, t=t, sample_size=size, T=T, M=M,
                           K=K, raw_sample_size=raw, warnings=tuple(notes))


class NoisyDegreeTable:
    """Sample S plus lazily drawn, memoized noisy degrees.

    A vertex's degree query and noise draw happen on first access and are
    reused by every later stage. ``noise`` pins the per-vertex noise vector
    (audits); otherwise draws come from ``src`` keyed by vertex id.
    """

    def __init__(self, h: OracleHandle, params: AvgDegreeParams, sample: np.ndarray,
                 src: NoiseSource | None = None, noise: Mapping[int, float] | np.ndarray | None = None):
        self.h = h
        self.params = params
        self.sample = [int(v) for v in sample]
        self._src = src
        self._noise = noise
        self._scale = params.degree_noise_scale
        self._deg: dict[int, int] = {}
        self._noisy: dict[int, float] = {}

    def degree(self, v: int) -> int:
        d = self._deg.get(v)
        if d is None:
            d = self._deg[v] = self.h.degree(v)
        return d

    def noisy_degree(self, v: int) -> float:
        x = self._noisy.get(v)
        if x is None:
            if self._noise is not None:
                y = float(self._noise[v])
            elif self._scale == 0:
                y = 0.0
            else:
                y = self._src.keyed_laplace(v, self._scale)
            x = self._noisy[v] = self.degree(v) + y
        return x

    def prefetch(self, vertices) -> None:
        """Materialize noisy degrees for ``vertices`` in one batch.

        Draws the same values that lazy access would; each vertex still costs
        exactly one degree query.
        """
        todo = [v for v in vertices if v not in self._noisy]
        if not todo:
            return
        degs = np.array([self.degree(v) for v in todo], dtype=np.float64)
        if self._noise is not None:
            ys = np.array([float(self._noise[v]) for v in todo])
        elif self._scale == 0:
            ys = np.zeros(len(todo))
        else:
            ys = self._src.keyed_laplace_many(np.array(todo, dtype=np.uint64), self._scale)
        self._noisy.update(zip(todo, (degs + ys).tolist()))

    @property
    def accessed(self) -> dict[int, float]:
        return dict(self._noisy)


def noisy_degree_sample(h: OracleHandle, p: AvgDegreeParams, src: NoiseSource) -> NoisyDegreeTable:
    sample = sample_without_replacement(src.child("sample"), p.n, p.sample_size)
    return NoisyDegreeTable(h, p, sample, src.child("degree-noise"))


@dataclass
class BucketPartition:
    buckets: dict[int, list[int]]
    merged: list[int]
    big: frozenset[int]
    s1_is_big: bool
    K: int

    def sizes(self) -> dict[int, int]:
        return {i: len(vs) for i, vs in self.buckets.items()}

    def counts_as_small(self, index: int) -> bool:
        """Whether a neighbor in bucket ``index`` counts as a big-small crossing."""
        if index in self.big:
            return False
        return index > self.K if self.s1_is_big else True


def bucketize(tbl: NoisyDegreeTable, p: AvgDegreeParams) -> BucketPartition:
    buckets: dict[int, list[int]] = {}
    merged: list[int] = []
    cutoff = p.s1_cutoff
    tbl.prefetch(tbl.sample)
    for v in tbl.sample:
        x = tbl.noisy_degree(v)
        buckets.setdefault(p.bucket_index(x), []).append(v)
        if x <= cutoff:
            merged.append(v)
    threshold = p.big_threshold
    big = frozenset(i for i, vs in buckets.items() if i > p.K and len(vs) >= threshold)
    s1_is_big = not len(merged) < p.s1_threshold
    return BucketPartition(buckets=buckets, merged=merged, big=big, s1_is_big=s1_is_big, K=p.K)


@dataclass
class BigSmallCounts:
    W: dict[int, float] = field(default_factory=dict)
    alpha: dict[int, float] = field(default_factory=dict)
    Z: dict[int, float] = field(default_factory=dict)
    hits: dict[int, int] = field(default_factory=dict)


def _random_neighbor_hit(h: OracleHandle, tbl: NoisyDegreeTable, part: BucketPartition,
                         p: AvgDegreeParams, coins: NoiseSource, v: int) -> int:
    d = tbl.degree(v)
    if d == 0:
        return 0
    j = int(coins.keyed_uniform(v) * d) + 1
    r = h.neighbor(v, j)
    return 1 if part.counts_as_small(p.bucket_index(tbl.noisy_degree(r))) else 0


def noisy_big_small_edge_count(h: OracleHandle, part: BucketPartition, tbl: NoisyDegreeTable,
                               p: AvgDegreeParams, src: NoiseSource) -> BigSmallCounts:
    coins = src.child("neighbor-coins")
    noise = src.child("count-noise")
    scale = p.count_noise_scale
    out = BigSmallCounts()
    for i in sorted(part.big):
        members = part.buckets[i]
        hits = sum(_random_neighbor_hit(h, tbl, part, p, coins, v) for v in members)
        z = noise.keyed_laplace(i, scale)
        out.hits[i] = hits
        out.Z[i] = z
        out.W[i] = hits + z
        out.alpha[i] = out.W[i] / len(members)
    return out


def big_bucket_sum(part: BucketPartition, counts: BigSmallCounts, p: AvgDegreeParams) -> float:
    return sum(len(part.buckets[i]) * (1.0 + counts.alpha[i]) * (1.0 + p.beta) ** i
               for i in sorted(part.big))


def clamped_s1_sum(h: OracleHandle, part: BucketPartition, tbl: NoisyDegreeTable,
                   p: AvgDegreeParams, coins: NoiseSource) -> float:
    """Sum over v in S1 of ``(1 + X(v)) * min(deg(v), cap)``."""
    cap = p.degree_cap
    total = 0.0
    for v in part.merged:
        d = tbl.degree(v)
        if d == 0:
            continue
        x = _random_neighbor_hit(h, tbl, part, p, coins, v)
        total += (1 + x) * min(d, cap)
    return total


@dataclass
class AvgDegreeOutput:
    value: float
    branch: str
    s1_sum: float | None = None
    s1_noise: float | None = None


def noisy_avg_degree(part: BucketPartition, counts: BigSmallCounts, tbl: NoisyDegreeTable,
                     h: OracleHandle, p: AvgDegreeParams, src: NoiseSource) -> AvgDegreeOutput:
    total = big_bucket_sum(part, counts, p)
    size = len(tbl.sample)
    if not part.s1_is_big:
        return AvgDegreeOutput(total / size, SMALL_S1)
    s1_sum = clamped_s1_sum(h, part, tbl, p, src.child("s1-coins"))
    scale = p.s1_noise_scale
    z = src.child("s1-noise").keyed_laplace(0, scale)
    return AvgDegreeOutput((total + z + s1_sum) / size, BIG_S1, s1_sum=s1_sum, s1_noise=z)


@dataclass
class EstimateReport:
    estimate: float
    branch: str
    params: AvgDegreeParams
    seed: int
    degree_queries: int
    neighbor_queries: int
    wall_time_ms: float | None
    raw_estimate: float = 0.0

    def to_json_dict(self) -> dict:
        p = self.params
        return {
            "estimate": self.estimate,
            "branch": self.branch,
            "n": p.n,
            "rho": p.rho,
            "beta": p.beta,
            "eps": "inf" if math.isinf(p.eps) else p.eps,
            "t": p.t,
            "sample_size": p.sample_size,
            "T": p.T,
            "M": p.M,
            "K": p.K,
            "degree_queries": self.degree_queries,
            "neighbor_queries": self.neighbor_queries,
            "wall_time_ms": self.wall_time_ms,
            "seed": self.seed,
            "warnings": list(p.warnings),
        }


def estimate_average_degree(h: OracleHandle, p: AvgDegreeParams, src: NoiseSource) -> EstimateReport:
    """Run all four stages; eps-edge-DP when ``p.eps`` is finite."""
    if p.n != h.n:
        raise ParameterError(f"parameters are for n={p.n} but the graph has n={h.n}")
    for msg in p.warnings:
        _warnings.warn(msg, stacklevel=2)
    start = time.perf_counter()
    deg0, nbr0 = h.degree_queries, h.neighbor_queries
    tbl = noisy_degree_sample(h, p, src.child("noisy-degree"))
    part = bucketize(tbl, p)
    counts = noisy_big_small_edge_count(h, part, tbl, p, src.child("big-small"))
    out = noisy_avg_degree(part, counts, tbl, h, p, src.child("avg-degree"))
    elapsed = (time.perf_counter() - start) * 1000.0
    return EstimateReport(
        estimate=max(0.0, out.value),
        branch=out.branch,
        params=p,
        seed=src.seed,
        degree_queries=h.degree_queries - deg0,
        neighbor_queries=h.neighbor_queries - nbr0,
        wall_time_ms=elapsed,
        raw_estimate=out.value,
    )

