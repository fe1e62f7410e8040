"""Local maximal-matching / vertex-cover oracles and the sampling estimators built on them.

A random ranking of vertex pairs fixes a greedy maximal matching M_pi. The
matching oracle decides whether one edge is in M_pi by resolving only
lower-ranked incident edges; the vertex-cover oracle asks whether a vertex
is matched. Sampling vertices and counting matched ones estimates the
maximum matching and minimum vertex cover sizes; Laplace noise calibrated
to the estimator's coupled sensitivity makes them node-private.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .graph import Graph, GraphError, OracleHandle
from .noise import NoiseSource, sample_without_replacement

Edge = tuple[int, int]
Rank = tuple[int, int, int]


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class EdgeRanking:
    """Lazy injective ranking over all vertex pairs.

    A pair's rank is ``(64-bit key, u, v)``; the key is a keyed draw from
    the seed and the trailing pair breaks ties lexicographically.
    """

    def __init__(self, seed: int):
        self.src = NoiseSource(seed)
        self.seed = self.src.seed
        self._memo: dict[Edge, Rank] = {}

    def rank(self, u: int, v: int) -> Rank:
        e = _edge(u, v)
        r = self._memo.get(e)
        if r is None:
            r = self._memo[e] = (self.src.keyed_bits((e[0] << 32) | e[1]), e[0], e[1])
        return r

    def __len__(self) -> int:
        return len(self._memo)


class OracleCache:
    """Per-run memo of oracle verdicts and of rank-sorted incident edges."""

    def __init__(self):
        self.memo: dict[Edge, bool] = {}
        self.vc_memo: dict[int, bool] = {}
        self.incident: dict[int, list[tuple[Rank, Edge]]] = {}

    def clear(self) -> None:
        self.memo.clear()
        self.vc_memo.clear()
        self.incident.clear()


def _incident(h: OracleHandle, v: int, pi: EdgeRanking, cache: OracleCache) -> list[tuple[Rank, Edge]]:
    lst = cache.incident.get(v)
    if lst is None:
        lst = []
        for u in h.all_neighbors(v):
            e = _edge(v, u)
            lst.append((pi.rank(*e), e))
        lst.sort()
        cache.incident[v] = lst
    return lst


def matching_oracle(h: OracleHandle, e: Edge, pi: EdgeRanking, cache: OracleCache) -> bool:
    """True iff ``e`` belongs to the greedy maximal matching induced by ``pi``.

    Lower-ranked incident edges are resolved depth-first with an explicit
    stack; ranks strictly decrease along the stack, so it cannot cycle.
    """
    e = _edge(*e)
    hit = cache.memo.get(e)
    if hit is not None:
        return hit
    memo = cache.memo
    # frame: [edge, rank, incident(u), pos_u, incident(v), pos_v]
    stack = [_frame(h, e, pi, cache)]
    if not any(x[1] == e for x in min(stack[0][2], stack[0][4], key=len)):
        raise GraphError(f"{e} is not an edge of the graph")
    while stack:
        fr = stack[-1]
        edge, rank, lu, iu, lv, iv = fr
        verdict = None
        pending = None
        while True:
            # next lowest-ranked incident edge other than `edge` itself
            while iu < len(lu) and lu[iu][1] == edge:
                iu += 1
            while iv < len(lv) and lv[iv][1] == edge:
                iv += 1
            cu = lu[iu] if iu < len(lu) else None
            cv = lv[iv] if iv < len(lv) else None
            if cu is not None and (cv is None or cu[0] < cv[0]):
                cand, iu = cu, iu + 1
            elif cv is not None:
                cand, iv = cv, iv + 1
            else:
                verdict = True
                break
            if cand[0] >= rank:
                verdict = True
                break
            known = memo.get(cand[1])
            if known is None:
                pending = cand[1]
                # revisit this candidate once it is resolved
                if cand is cu:
                    iu -= 1
                else:
                    iv -= 1
                break
            if known:
                verdict = False
                break
        fr[3], fr[5] = iu, iv
        if pending is not None:
            stack.append(_frame(h, pending, pi, cache))
        else:
            memo[edge] = verdict
            stack.pop()
    return memo[e]


def _frame(h: OracleHandle, e: Edge, pi: EdgeRanking, cache: OracleCache) -> list:
    return [e, pi.rank(*e), _incident(h, e[0], pi, cache), 0, _incident(h, e[1], pi, cache), 0]


def vertex_cover_oracle(h: OracleHandle, v: int, pi: EdgeRanking, cache: OracleCache) -> bool:
    """True iff ``v`` is matched in M_pi (equivalently, in the greedy vertex cover)."""
    hit = cache.vc_memo.get(v)
    if hit is not None:
        return hit
    result = False
    for _, e in _incident(h, v, pi, cache):
        if matching_oracle(h, e, pi, cache):
            result = True
            break
    cache.vc_memo[v] = result
    return result


def greedy_matching(g: Graph, pi: EdgeRanking) -> set[Edge]:
    """Offline greedy maximal matching: scan edges by increasing rank."""
    edges = [(pi.rank(int(a), int(b)), (int(a), int(b))) for a, b in g.edges()]
    edges.sort()
    matched: set[int] = set()
    out: set[Edge] = set()
    for _, (a, b) in edges:
        if a not in matched and b not in matched:
            matched.add(a)
            matched.add(b)
            out.add((a, b))
    return out


def matched_vertices(matching: set[Edge]) -> set[int]:
    return {x for e in matching for x in e}


# --------------------------------------------------------------------------
# sampling estimators
# --------------------------------------------------------------------------

def sample_count(n: int, rho: float) -> int:
    """``ceil(16 * 24 * ln(n) / rho^2)`` clamped to n."""
    return min(n, math.ceil(16 * 24 * math.log(n) / rho ** 2))


def matching_noise_scale_closed_form(n: int, rho: float, eps: float) -> float:
    return n * rho ** 2 / (16 * 24 * eps * math.log(n))


def vc_noise_scale_closed_form(n: int, rho: float, eps: float) -> float:
    return n * rho ** 2 / (8 * 24 * eps * math.log(n))


def matching_noise_scale(n: int, rho: float, eps: float) -> float:
    """Laplace scale for the private matching estimate.

    The estimate moves by at most ``n/s`` between neighboring graphs. With
    the unclamped sample count this is the closed form; once s is clamped
    to n, ``n/s`` exceeds it and governs.
    """
    return max(matching_noise_scale_closed_form(n, rho, eps), n / (sample_count(n, rho) * eps))


def vc_noise_scale(n: int, rho: float, eps: float) -> float:
    return max(vc_noise_scale_closed_form(n, rho, eps), 2 * n / (sample_count(n, rho) * eps))


def _validate(n: int, rho: float, eps: float | None) -> None:
    if n < 2:
        raise ValueError(f"need at least 2 vertices (got {n})")
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1) (got {rho})")
    if eps is not None and not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be finite and positive (got {eps})")


@dataclass
class SizeEstimate:
    kind: str  # "matching" | "vc"
    raw: float
    noisy: float
    shifted: float
    clamped: float
    s: int
    n: int
    rho: float
    eps: float | None
    noise_scale: float
    matched_in_sample: int
    degree_queries: int
    neighbor_queries: int
    seed: int
    wall_time_ms: float | None = None

    @property
    def queries(self) -> dict[str, int]:
        return {"degree": self.degree_queries, "neighbor": self.neighbor_queries,
                "total": self.degree_queries + self.neighbor_queries}

    def to_json_dict(self) -> dict:
        return {
            "raw": self.raw,
            "noisy": self.noisy,
            "shifted": self.shifted,
            "clamped": self.clamped,
            "s": self.s,
            "noise_scale": self.noise_scale,
            "queries": self.queries,
            "seed": self.seed,
            "wall_time_ms": self.wall_time_ms,
        }


MatchingEstimate = SizeEstimate
VCEstimate = SizeEstimate


@dataclass
class _Census:
    s: int
    hits: int
    degree_queries: int
    neighbor_queries: int
    elapsed_ms: float
    seed: int
    cache: OracleCache = field(repr=False)


def _census(h: OracleHandle, rho: float, src: NoiseSource) -> _Census:
    start = time.perf_counter()
    d0, q0 = h.degree_queries, h.neighbor_queries
    s = sample_count(h.n, rho)
    pi = EdgeRanking(src.child("ranking").seed)
    cache = OracleCache()
    sample = sample_without_replacement(src.child("sample"), h.n, s)
    hits = sum(1 for v in sample.tolist() if vertex_cover_oracle(h, v, pi, cache))
    return _Census(s, hits, h.degree_queries - d0, h.neighbor_queries - q0,
                   (time.perf_counter() - start) * 1000.0, src.seed, cache)


def _matching_from(c: _Census, n: int, rho: float, eps: float | None, src: NoiseSource) -> SizeEstimate:
    raw = n / (2 * c.s) * c.hits - rho * n / 2
    scale = 0.0
    noisy = raw
    if eps is not None:
        scale = matching_noise_scale(n, rho, eps)
        noisy = raw + src.child("matching-noise").laplace(scale)
    shifted = noisy - rho * n / 2
    return SizeEstimate("matching", raw, noisy, shifted, min(max(shifted, 0.0), n / 2), c.s, n, rho,
                        eps, scale, c.hits, c.degree_queries, c.neighbor_queries, c.seed, c.elapsed_ms)


def _vc_from(c: _Census, n: int, rho: float, eps: float | None, src: NoiseSource) -> SizeEstimate:
    raw = n / c.s * c.hits + rho * n / 4
    scale = 0.0
    noisy = raw
    if eps is not None:
        scale = vc_noise_scale(n, rho, eps)
        noisy = raw + src.child("vc-noise").laplace(scale)
    shifted = noisy + rho * n / 2
    return SizeEstimate("vc", raw, noisy, shifted, min(max(shifted, 0.0), float(n)), c.s, n, rho,
                        eps, scale, c.hits, c.degree_queries, c.neighbor_queries, c.seed, c.elapsed_ms)


def estimate_matching_size(h: OracleHandle, rho: float, src: NoiseSource) -> SizeEstimate:
    """Non-private estimate ``n/(2s) * #matched sampled vertices - rho*n/2``."""
    _validate(h.n, rho, None)
    return _matching_from(_census(h, rho, src), h.n, rho, None, src)


def estimate_matching_size_dp(h: OracleHandle, rho: float, eps: float, src: NoiseSource) -> SizeEstimate:
    _validate(h.n, rho, eps)
    return _matching_from(_census(h, rho, src), h.n, rho, eps, src)


def estimate_vc_size(h: OracleHandle, rho: float, src: NoiseSource) -> SizeEstimate:
    """Non-private estimate ``n/s * #matched sampled vertices + rho*n/4``."""
    _validate(h.n, rho, None)
    return _vc_from(_census(h, rho, src), h.n, rho, None, src)


def estimate_vc_size_dp(h: OracleHandle, rho: float, eps: float, src: NoiseSource) -> SizeEstimate:
    _validate(h.n, rho, eps)
    return _vc_from(_census(h, rho, src), h.n, rho, eps, src)


def estimate_matching_and_vc(h: OracleHandle, rho: float, eps: float | None,
                             src: NoiseSource) -> tuple[SizeEstimate, SizeEstimate]:
    """Both estimates from one ranking, one sample and one oracle cache."""
    _validate(h.n, rho, eps)
    c = _census(h, rho, src)
    return _matching_from(c, h.n, rho, eps, src), _vc_from(c, h.n, rho, eps, src)
