"""Brute-force checks of sensitivity and privacy claims on small instances.

Sensitivity checks are upper-bound witnesses: each one fixes an explicit
coupling of the randomness on two neighboring inputs (identity, or aligned
records) and reports the largest output gap it finds. Privacy checks
histogram the outputs of a mechanism on two neighboring inputs and report
the largest log-ratio over well-populated bins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .avgdeg import (AvgDegreeParams, BucketPartition, NoisyDegreeTable, _random_neighbor_hit,
                     bucketize, clamped_s1_sum, estimate_average_degree, make_params,
                     noisy_big_small_edge_count)
from .graph import Graph, NeighborPair, OracleHandle, gnp, path
from .matching import matching_noise_scale, sample_count, vc_noise_scale
from .noise import NoiseSource

EXHAUSTIVE_MAX_N = 7


@dataclass
class SensitivityReport:
    claim: str
    bound: float
    observed_max: float
    coupling: str
    witness: dict | None = None
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.observed_max <= self.bound + 1e-9

    def to_json_dict(self) -> dict:
        return {"claim": self.claim, "bound": self.bound, "observed_max": self.observed_max,
                "coupling": self.coupling, "checked": self.checked, "pass": self.passed,
                "witness": self.witness}


# --------------------------------------------------------------------------
# greedy matching over every graph on n vertices at once
# --------------------------------------------------------------------------

def _pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def greedy_sizes_all_graphs(n: int, order: Sequence[int]) -> np.ndarray:
    """Greedy matching size of every graph on n vertices under one ranking.

    Graph ``g`` (an int in ``[0, 2^C(n,2))``) holds pair k iff bit k is set;
    ``order`` lists pair indices by increasing rank.
    """
    pairs = _pairs(n)
    g = np.arange(1 << len(pairs), dtype=np.int64)
    matched = np.zeros(g.shape, dtype=np.int64)  # bitmask of matched vertices
    size = np.zeros(g.shape, dtype=np.int64)
    for k in order:
        a, b = pairs[k]
        ends = (1 << a) | (1 << b)
        take = ((g >> k) & 1).astype(bool) & ((matched & ends) == 0)
        matched[take] |= ends
        size += take
    return size


def _ranking_orders(n: int, samples: int, src: NoiseSource) -> list[list[int]]:
    c = n * (n - 1) // 2
    if c <= 5 and math.factorial(c) <= samples:
        return [list(p) for p in itertools.permutations(range(c))]
    return [src.permutation(c).tolist() for _ in range(samples)]


def _max_neighbor_gap(n: int, size: np.ndarray, kinds: Sequence[str]):
    """Largest |size(G) - size(G')| over neighbor pairs; returns (gap, G, G')."""
    c = n * (n - 1) // 2
    g = np.arange(1 << c, dtype=np.int64)
    best = (-1, 0, 0)
    if "edge" in kinds:
        for k in range(c):
            d = np.abs(size - size[g ^ (1 << k)])
            j = int(np.argmax(d))
            if d[j] > best[0]:
                best = (int(d[j]), j, j ^ (1 << k))
    if "node" in kinds:
        pairs = _pairs(n)
        for v in range(n):
            inc = [k for k, (a, b) in enumerate(pairs) if v in (a, b)]
            mask = sum(1 << k for k in inc)
            base = g & ~mask
            lo, hi = size.copy(), size.copy()
            lo_at, hi_at = g.copy(), g.copy()
            for r in range(1, len(inc) + 1):
                for sub in itertools.combinations(inc, r):
                    alt = base | sum(1 << k for k in sub)
                    s = size[alt]
                    lt, gt = s < lo, s > hi
                    lo[lt], lo_at[lt] = s[lt], alt[lt]
                    hi[gt], hi_at[gt] = s[gt], alt[gt]
            d = hi - lo
            j = int(np.argmax(d))
            if d[j] > best[0]:
                best = (int(d[j]), int(lo_at[j]), int(hi_at[j]))
    return best


def _sweep(max_n: int, ranking_samples: int, seed: int, kinds: Sequence[str], scale: int,
           claim: str, bound: float) -> SensitivityReport:
    if max_n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive sweeps support max_n <= {EXHAUSTIVE_MAX_N} (got {max_n})")
    src = NoiseSource(seed)
    worst, witness, checked = -1, None, 0
    for n in range(2, max_n + 1):
        for order in _ranking_orders(n, ranking_samples, src.child(n)):
            size = greedy_sizes_all_graphs(n, order)
            gap, a, b = _max_neighbor_gap(n, size, kinds)
            checked += 1
            if gap * scale > worst:
                pairs = _pairs(n)
                worst = gap * scale
                witness = {"n": n, "base": [list(pairs[k]) for k in range(len(pairs)) if a >> k & 1],
                           "variant": [list(pairs[k]) for k in range(len(pairs)) if b >> k & 1],
                           "ranking": [list(pairs[k]) for k in order]}
    return SensitivityReport(claim, bound, float(worst), "identity", witness, checked)


def audit_greedy_matching_cgs(max_n: int = 5, ranking_samples: int = 200, seed: int = 0,
                              kinds: Sequence[str] = ("edge", "node")) -> SensitivityReport:
    """Max |M1| - |M2| over all neighboring graphs on up to ``max_n`` vertices."""
    return _sweep(max_n, ranking_samples, seed, kinds, 1, "greedy-matching-size", 1.0)


def audit_matched_set_difference(max_n: int = 5, ranking_samples: int = 200, seed: int = 0,
                                 kinds: Sequence[str] = ("edge", "node")) -> SensitivityReport:
    """Same sweep, measuring the matched-vertex count (twice the matching size)."""
    return _sweep(max_n, ranking_samples, seed, kinds, 2, "matched-set-size", 2.0)


def matching_size_difference(pair: NeighborPair, ranking_seed: int) -> int:
    """|M1| - |M2| for one neighbor pair under a shared ranking."""
    from .matching import EdgeRanking, greedy_matching
    pi = EdgeRanking(ranking_seed)
    return abs(len(greedy_matching(pair.base, pi)) - len(greedy_matching(pair.variant, pi)))


def matched_set_difference(pair: NeighborPair, ranking_seed: int) -> int:
    return 2 * matching_size_difference(pair, ranking_seed)


# --------------------------------------------------------------------------
# per-stage sensitivities of the average-degree estimator
# --------------------------------------------------------------------------

@dataclass
class StageDeltas:
    degree_l1: int
    bucket_hits: int
    s1_sum: float


def _pinned_table(g: Graph, p: AvgDegreeParams, sample: Sequence[int], noisy: np.ndarray):
    h = OracleHandle(g)
    pinned = noisy - g.degrees()
    return h, NoisyDegreeTable(h, p, np.asarray(sample), noise=pinned)


def stage_deltas(g1: Graph, g2: Graph, p: AvgDegreeParams, sample: Sequence[int],
                 noisy: np.ndarray, coins: NoiseSource) -> StageDeltas:
    """Output gaps of the three stage functions on one pair.

    The noisy degrees are held fixed across the pair (they are the released
    output of the first stage) and neighbor coins are shared per vertex.
    """
    h1, t1 = _pinned_table(g1, p, sample, noisy)
    h2, t2 = _pinned_table(g2, p, sample, noisy)
    part = bucketize(t1, p)
    worst = 0
    for members in part.buckets.values():
        x1 = sum(_random_neighbor_hit(h1, t1, part, p, coins, v) for v in members)
        x2 = sum(_random_neighbor_hit(h2, t2, part, p, coins, v) for v in members)
        worst = max(worst, abs(x1 - x2))
    s1 = abs(clamped_s1_sum(h1, part, t1, p, coins) - clamped_s1_sum(h2, part, t2, p, coins))
    l1 = int(np.abs(g1.degrees() - g2.degrees()).sum())
    return StageDeltas(l1, worst, s1)


def audit_stage_sensitivities(max_n: int = 6, instances: int = 1000, seed: int = 0,
                              rho: float = 0.25, beta: float | None = None, eps: float = 1.0,
                              sample_size: int | None = None) -> list[SensitivityReport]:
    """Random edge-neighboring instances on ``max_n`` vertices with coupled coins."""
    p = make_params(max_n, rho, beta, eps, sample_size)
    src = NoiseSource(seed)
    scale = p.degree_noise_scale
    bounds = {"noisy-degree": 2.0, "big-small-count": 2.0, "s1-clamped-sum": 2.0 * p.degree_cap}
    reports = {k: SensitivityReport(k, b, 0.0, "fixed noisy degrees, shared neighbor coins")
               for k, b in bounds.items()}
    for k in range(instances):
        rs = src.child(k)
        g1 = gnp(max_n, float(rs.uniform()), seed=rs.child("graph").seed)
        u, v = sorted(rs.child("edge").sample_without_replacement(max_n, 2).tolist())
        g2 = g1.with_edge_toggled(u, v)
        sample = rs.child("sample").sample_without_replacement(max_n, p.sample_size).tolist()
        noise = rs.child("noise").laplace(scale, max_n) if scale > 0 else np.zeros(max_n)
        noisy = g1.degrees() + noise
        d = stage_deltas(g1, g2, p, sample, noisy, rs.child("coins"))
        for key, val in (("noisy-degree", d.degree_l1), ("big-small-count", d.bucket_hits),
                         ("s1-clamped-sum", d.s1_sum)):
            r = reports[key]
            r.checked += 1
            if val > r.observed_max or r.witness is None:
                r.observed_max = float(val)
                r.witness = {"instance": k, "base": g1.edges().tolist(), "toggled": [u, v],
                             "sample": sample, "noisy_degrees": noisy.tolist()}
    return list(reports.values())


# --------------------------------------------------------------------------
# empirical privacy loss
# --------------------------------------------------------------------------

@dataclass
class PrivacyAuditReport:
    mechanism: str
    eps_claimed: float
    eps_hat: float | None
    bins: int
    samples: int
    slack: float
    floor: float
    bin_width: float
    status: str  # "pass" | "fail" | "inconclusive"
    worst_bin: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json_dict(self) -> dict:
        return {"mechanism": self.mechanism, "eps_claimed": self.eps_claimed, "eps_hat": self.eps_hat,
                "bins": self.bins, "samples": self.samples, "slack": self.slack, "floor": self.floor,
                "bin_width": self.bin_width, "status": self.status, "worst_bin": self.worst_bin}


def default_floor(slack: float, z: float = 4.0) -> float:
    """Per-bin count at which a z-sigma log-ratio fluctuation stays under ``slack``.

    The log of a count c has standard deviation about ``1/sqrt(c)``, so a ratio
    of two such counts has about ``sqrt(2/c)``.
    """
    return max(50.0, math.ceil(2.0 * (z / slack) ** 2))


def empirical_eps(x1: np.ndarray, x2: np.ndarray, bin_width: float, floor: float):
    """(eps_hat, qualifying bins, worst bin left edge) from two sample sets."""
    lo = min(x1.min(), x2.min())
    hi = max(x1.max(), x2.max())
    start = math.floor(lo / bin_width) * bin_width
    nb = max(1, int(math.ceil((hi - start) / bin_width)) + 1)
    edges = start + bin_width * np.arange(nb + 1)
    c1, _ = np.histogram(x1, edges)
    c2, _ = np.histogram(x2, edges)
    # rescale to equal sample sizes before comparing
    e1 = c1 * (len(x2) / len(x1))
    ok = (e1 >= floor) & (c2 >= floor)
    if not ok.any():
        return None, 0, None
    ratio = np.abs(np.log(e1[ok] / c2[ok]))
    j = int(np.argmax(ratio))
    return float(ratio[j]), int(ok.sum()), float(edges[:-1][ok][j])


Sampler = Callable[[object, int, NoiseSource], np.ndarray]


def laplace_counting_sampler(cgs: float, eps: float) -> Sampler:
    def draw(value, size, src):
        return float(value) + src.laplace(cgs / eps, size)
    return draw


def _greedy_matched_batch(g: Graph, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Matched-vertex indicators (reps x n) of the greedy matching under fresh rankings."""
    edges = g.edges()
    matched = np.zeros((reps, g.n), dtype=bool)
    if len(edges) == 0:
        return matched
    order = np.argsort(rng.random((reps, len(edges))), axis=1)
    rows = np.arange(reps)
    for k in range(len(edges)):
        e = order[:, k]
        a, b = edges[e, 0], edges[e, 1]
        take = ~matched[rows, a] & ~matched[rows, b]
        matched[rows[take], a[take]] = True
        matched[rows[take], b[take]] = True
    return matched


def census_hits_batch(g: Graph, rho: float, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Sampled matched-vertex counts for ``reps`` independent runs.

    Uses the offline greedy matching in place of the local oracle; the two
    agree on every (graph, ranking).
    """
    matched = _greedy_matched_batch(g, reps, rng)
    s = sample_count(g.n, rho)
    if s == g.n:
        return matched.sum(axis=1)
    pick = np.argsort(rng.random((reps, g.n)), axis=1)[:, :s]
    return np.take_along_axis(matched, pick, axis=1).sum(axis=1)


def dp_matching_sampler(rho: float, eps: float) -> Sampler:
    def draw(g, size, src):
        n = g.n
        s = sample_count(n, rho)
        hits = census_hits_batch(g, rho, size, np.random.default_rng(src.child("batch").seed))
        raw = n / (2 * s) * hits - rho * n / 2
        return raw + src.child("noise").laplace(matching_noise_scale(n, rho, eps), size)
    return draw


def dp_vc_sampler(rho: float, eps: float) -> Sampler:
    def draw(g, size, src):
        n = g.n
        s = sample_count(n, rho)
        hits = census_hits_batch(g, rho, size, np.random.default_rng(src.child("batch").seed))
        raw = n / s * hits + rho * n / 4
        return raw + src.child("noise").laplace(vc_noise_scale(n, rho, eps), size)
    return draw


def dp_avgdeg_sampler(rho: float, eps: float, beta: float | None = None) -> Sampler:
    import warnings

    def draw(g, size, src):
        p = make_params(g.n, rho, beta, eps)
        out = np.empty(size)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for k in range(size):
                out[k] = estimate_average_degree(OracleHandle(g), p, src.child(k)).raw_estimate
        return out
    return draw


def audit_privacy(mechanism: str, sampler: Sampler, inputs: tuple, eps_claimed: float,
                  samples: int = 100_000, bin_width: float = 0.1, floor: float | None = None,
                  slack: float = 0.05, seed: int = 0) -> PrivacyAuditReport:
    """Histogram audit of ``sampler`` on two neighboring inputs."""
    if floor is None:
        floor = default_floor(slack)
    src = NoiseSource(seed)
    x1 = np.asarray(sampler(inputs[0], samples, src.child("first")), dtype=np.float64)
    x2 = np.asarray(sampler(inputs[1], samples, src.child("second")), dtype=np.float64)
    eps_hat, bins, where = empirical_eps(x1, x2, bin_width, floor)
    if eps_hat is None:
        status = "inconclusive"
    else:
        status = "pass" if eps_hat <= eps_claimed + slack else "fail"
    return PrivacyAuditReport(mechanism, eps_claimed, eps_hat, bins, samples, slack, floor,
                              bin_width, status, where)


def audit_laplace_privacy(cgs: float = 1.0, eps: float = 0.5, samples: int = 1_000_000,
                          bin_width: float = 0.1, slack: float = 0.05, seed: int = 0,
                          inputs: tuple = (0.0, 1.0)) -> PrivacyAuditReport:
    return audit_privacy("laplace", laplace_counting_sampler(cgs, eps), inputs, eps,
                         samples, bin_width, None, slack, seed)


def audit_matching_privacy(n: int = 50, rho: float = 0.3, eps: float = 1.0, samples: int = 100_000,
                           bin_width: float = 0.1, slack: float = 0.15, seed: int = 0,
                           removed: tuple[int, int] | None = None) -> PrivacyAuditReport:
    """DP matching estimate on path(n) against path(n) minus one edge (middle by default)."""
    g = path(n)
    u = n // 2 - 1 if removed is None else removed[0]
    e = (u, u + 1) if removed is None else removed
    return audit_privacy("dp-matching", dp_matching_sampler(rho, eps), (g, g.with_edge_toggled(*e)),
                         eps, samples, bin_width, None, slack, seed)


# --------------------------------------------------------------------------
# exact alpha per bucket
# --------------------------------------------------------------------------

@dataclass
class TrueAlpha:
    alpha: dict[int, Fraction] = field(default_factory=dict)
    edges: dict[int, int] = field(default_factory=dict)  # |E_i|
    crossing: dict[int, int] = field(default_factory=dict)  # |E'_i|

    def as_floats(self) -> dict[int, float]:
        return {i: float(a) for i, a in self.alpha.items()}


def true_alpha(g: Graph, noisy: np.ndarray, part: BucketPartition, p: AvgDegreeParams,
               buckets: Sequence[int] | None = None) -> TrueAlpha:
    """Exact ``|E'_i| / |E_i|`` over ordered adjacent pairs leaving noisy bucket i.

    Buckets are taken over all vertices by noisy degree; the small-bucket
    test is the one the partition uses for crossings. Empty buckets, or
    buckets whose vertices are all isolated, are left out.
    """
    idx = np.array([p.bucket_index(float(x)) for x in noisy])
    small = np.array([part.counts_as_small(int(i)) for i in idx])
    wanted = sorted(part.big) if buckets is None else list(buckets)
    out = TrueAlpha()
    for i in wanted:
        members = np.flatnonzero(idx == i)
        e_i = cross = 0
        for v in members.tolist():
            nb = g.neighbors(v)
            e_i += len(nb)
            cross += int(small[nb].sum())
        if e_i:
            out.alpha[i] = Fraction(cross, e_i)
            out.edges[i] = e_i
            out.crossing[i] = cross
    return out


def fixed_noise_partition(g: Graph, p: AvgDegreeParams, noise: np.ndarray,
                          min_big: int | None = None):
    """Full-sample table and partition under a pinned noise vector.

    ``min_big`` replaces the big-bucket threshold with an absolute
    occupancy count.
    """
    h = OracleHandle(g)
    tbl = NoisyDegreeTable(h, p, np.arange(g.n), noise=noise)
    part = bucketize(tbl, p)
    if min_big is not None:
        big = frozenset(i for i, vs in part.buckets.items() if i > p.K and len(vs) >= min_big)
        part = replace(part, big=big)
    return h, tbl, part


def monte_carlo_alpha(g: Graph, p: AvgDegreeParams, noise: np.ndarray, part: BucketPartition,
                      reps: int, seed: int = 0) -> dict[int, float]:
    """Mean of the noise-free big-small fraction over ``reps`` runs of fresh neighbor coins."""
    base = replace(p, eps=math.inf)
    src = NoiseSource(seed)
    acc = {i: 0.0 for i in part.big}
    for k in range(reps):
        h = OracleHandle(g)
        tbl = NoisyDegreeTable(h, base, np.arange(g.n), noise=noise)
        counts = noisy_big_small_edge_count(h, part, tbl, base, src.child(k))
        for i, a in counts.alpha.items():
            acc[i] += a
    return {i: a / reps for i, a in acc.items()}


def alpha_fidelity(n: int = 200, edge_p: float = 0.05, reps: int = 10_000, seed: int = 0,
                   rho: float = 0.25, noise_eps: float = 60.0, min_big: int = 10,
                   tolerance: float = 0.05) -> dict:
    """Monte-Carlo big-small fractions against exact enumeration on gnp(n, edge_p).

    The noise vector is drawn once at scale ``6/noise_eps`` and then pinned.
    A small scale keeps each bucket to vertices of one true degree, where the
    per-vertex mean the estimator targets equals the edge-weighted fraction.
    Buckets count as big from ``min_big`` members on; the occupancy threshold
    of the estimator marks every nonempty bucket big at this size, which makes
    every fraction zero.
    """
    src = NoiseSource(seed)
    g = gnp(n, edge_p, seed=src.child("graph").seed)
    p = make_params(n, rho, eps=noise_eps)
    noise = src.child("noise").laplace(p.degree_noise_scale, n)
    _, _, part = fixed_noise_partition(g, p, noise, min_big=min_big)
    exact = true_alpha(g, g.degrees() + noise, part, p)
    mc = monte_carlo_alpha(g, p, noise, part, reps, seed=src.child("coins").seed)
    rows = [{"bucket": i, "size": len(part.buckets[i]), "true_alpha": float(exact.alpha[i]),
             "monte_carlo": mc[i], "abs_diff": abs(mc[i] - float(exact.alpha[i]))}
            for i in sorted(exact.alpha)]
    worst = max((r["abs_diff"] for r in rows), default=0.0)
    return {"claim": "alpha-fidelity", "reps": reps, "tolerance": tolerance, "buckets": rows,
            "max_abs_diff": worst, "pass": bool(rows) and worst <= tolerance}


# --------------------------------------------------------------------------
# the doctor-counting example
# --------------------------------------------------------------------------

DOCTOR_D1 = (("Al", "Doctor"), ("Ben", "Mechanic"), ("Cal", "Doctor"))
DOCTOR_D2 = (("Ben", "Mechanic"), ("Cal", "Doctor"), ("Dan", "Professor"))


def _count_doctors(records, coins) -> int:
    return sum(1 for (_, job), c in zip(records, coins) if c == "I" and job == "Doctor")


def aligned_coupling(d1, d2) -> list[int]:
    """Map each position of d2 to the position in d1 holding the same record.

    The one unmatched record on each side is paired with the other.
    """
    pos = {r: i for i, r in enumerate(d1)}
    perm = [pos.get(r, -1) for r in d2]
    free = [i for i in range(len(d1)) if i not in perm]
    return [free.pop() if i < 0 else i for i in perm]


def coupled_gap(d1, d2, coupling: Sequence[int] | None = None) -> tuple[int, str]:
    """Max over coin strings of the output gap under a coupling of d2's coins to d1's."""
    worst, at = -1, ""
    for coins in itertools.product("IE", repeat=len(d1)):
        c2 = coins if coupling is None else tuple(coins[j] for j in coupling)
        gap = abs(_count_doctors(d1, coins) - _count_doctors(d2, c2))
        if gap > worst:
            worst, at = gap, "".join(coins)
    return worst, at


def doctor_example() -> dict:
    identity_at_iei = abs(_count_doctors(DOCTOR_D1, "IEI") - _count_doctors(DOCTOR_D2, "IEI"))
    identity_max, _ = coupled_gap(DOCTOR_D1, DOCTOR_D2)
    aligned_max, _ = coupled_gap(DOCTOR_D1, DOCTOR_D2, aligned_coupling(DOCTOR_D1, DOCTOR_D2))
    return {"identity_at_IEI": identity_at_iei, "identity_max": identity_max,
            "aligned_max": aligned_max, "pass": identity_at_iei == 2 and aligned_max <= 1}

