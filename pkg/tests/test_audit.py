import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from dpsublinear import audit
from dpsublinear.avgdeg import bucketize, make_params, NoisyDegreeTable
from dpsublinear.graph import (Graph, NeighborPair, OracleHandle, complete, empty, enumerate_neighbors,
                               gnp, path, star)
from dpsublinear.matching import estimate_matching_size, greedy_matching, sample_count
from dpsublinear.noise import NoiseSource

from test_avgdeg import toy_params
from test_matching import FixedRanking


# greedy-matching sweeps -----------------------------------------------------------

def test_path3_plus_chord_all_rankings():
    a, b = path(3), Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    for order in itertools.permutations([(0, 1), (1, 2), (0, 2)]):
        pi = FixedRanking(order)
        assert abs(len(greedy_matching(a, pi)) - len(greedy_matching(b, pi))) <= 1


def test_empty_vs_one_edge_gap_is_one():
    pair = NeighborPair(empty(4), Graph.from_edges(4, [(1, 3)]), "edge", (1, 3))
    assert all(audit.matching_size_difference(pair, s) == 1 for s in range(20))


def test_all_graphs_n4_edge_neighbors():
    r = audit.audit_greedy_matching_cgs(max_n=4, ranking_samples=100, seed=1, kinds=("edge",))
    assert r.observed_max == 1 and r.passed


def test_vectorized_sizes_agree_with_greedy():
    n = 5
    pairs = list(itertools.combinations(range(n), 2))
    src = NoiseSource(2)
    for _ in range(5):
        order = src.permutation(len(pairs)).tolist()
        sizes = audit.greedy_sizes_all_graphs(n, order)
        pi = FixedRanking([pairs[k] for k in order])
        for mask in src.integers(0, 1 << len(pairs), size=40).tolist():
            g = Graph.from_edges(n, [pairs[k] for k in range(len(pairs)) if mask >> k & 1])
            assert sizes[mask] == len(greedy_matching(g, pi))


def test_matched_set_cases():
    pair = NeighborPair(empty(2), Graph.from_edges(2, [(0, 1)]), "edge", (0, 1))
    assert audit.matched_set_difference(pair, 0) == 2
    same = NeighborPair(path(4), path(4), "edge", (0, 1))
    assert audit.matched_set_difference(same, 5) == 0
    r = audit.audit_matched_set_difference(max_n=5, ranking_samples=50, seed=2, kinds=("node",))
    assert r.observed_max <= 2 and r.passed


def test_node_sweep_matches_pairwise_enumeration():
    # brute force over NeighborPair objects for n=4 and a few rankings
    r = audit.audit_greedy_matching_cgs(max_n=4, ranking_samples=10, seed=3, kinds=("node",))
    worst = 0
    for seed in range(10):
        for mask in range(0, 64, 7):
            pairs = list(itertools.combinations(range(4), 2))
            g = Graph.from_edges(4, [pairs[k] for k in range(6) if mask >> k & 1])
            for p in enumerate_neighbors(g, "node"):
                worst = max(worst, audit.matching_size_difference(p, seed))
    assert worst == r.observed_max == 1


def test_sweep_rejects_large_n():
    with pytest.raises(ValueError):
        audit.audit_greedy_matching_cgs(max_n=9)


# stage sensitivities -------------------------------------------------------------------

def _stage_setup(n=6, sample_size=None):
    p = make_params(n, 0.25, eps=1.0, sample_size=sample_size)
    g1 = gnp(n, 0.5, seed=4)
    noisy = g1.degrees() + NoiseSource(1).laplace(p.degree_noise_scale, n)
    return p, g1, noisy


def test_toggle_changes_degree_vector_by_two():
    p, g1, noisy = _stage_setup()
    for u, v in itertools.combinations(range(6), 2):
        d = audit.stage_deltas(g1, g1.with_edge_toggled(u, v), p, range(6), noisy, NoiseSource(2))
        assert d.degree_l1 == 2


def test_unsampled_endpoints_leave_counts_unchanged():
    p, g1, noisy = _stage_setup(n=8, sample_size=3)
    for u, v in itertools.combinations(range(3, 8), 2):
        d = audit.stage_deltas(g1, g1.with_edge_toggled(u, v), p, [0, 1, 2], noisy, NoiseSource(3))
        assert d.bucket_hits == 0 and d.s1_sum == 0


def test_stage_audit_small_run():
    reps = audit.audit_stage_sensitivities(max_n=6, instances=100, seed=5)
    assert [r.claim for r in reps] == ["noisy-degree", "big-small-count", "s1-clamped-sum"]
    assert all(r.passed and r.checked == 100 for r in reps)
    assert reps[0].observed_max == 2


# privacy ------------------------------------------------------------------------------

def test_identical_inputs_eps_near_zero():
    r = audit.audit_laplace_privacy(inputs=(3.0, 3.0), samples=1_000_000, seed=1)
    assert r.status == "pass" and r.eps_hat < 0.05


def test_too_few_samples_is_inconclusive():
    r = audit.audit_laplace_privacy(samples=1000, seed=1)
    assert r.status == "inconclusive" and r.eps_hat is None


def test_detects_underscaled_noise():
    # noise calibrated for eps=0.5 but the inputs differ by 4: true loss is 2
    r = audit.audit_privacy("laplace", audit.laplace_counting_sampler(1.0, 0.5), (0.0, 4.0), 0.5,
                            samples=1_000_000, floor=2000, slack=0.05, seed=2)
    assert r.status == "fail" and r.eps_hat > 1.5


def test_eps_hat_tightens_with_samples():
    gaps = []
    for n in (10 ** 4, 10 ** 5, 10 ** 6):
        r = audit.audit_privacy("laplace", audit.laplace_counting_sampler(1.0, 0.5), (0.0, 1.0), 0.5,
                                samples=n, floor=n / 100, slack=0.05, seed=7)
        gaps.append(abs(r.eps_hat - 0.5))
    assert gaps[2] <= gaps[0] and gaps[2] < 0.03


def test_census_batch_matches_estimator():
    g = gnp(40, 0.1, seed=6)
    rho = 0.9
    s = sample_count(40, rho)
    batch = audit.census_hits_batch(g, rho, 4000, np.random.default_rng(0))
    real = [estimate_matching_size(OracleHandle(g), rho, NoiseSource(k)).matched_in_sample for k in range(1500)]
    se = math.sqrt(batch.var() / 4000 + np.var(real) / 1500)
    assert abs(batch.mean() - np.mean(real)) <= 4 * se
    assert s == 40


def test_vc_and_avgdeg_samplers_run():
    g = path(12)
    r = audit.audit_privacy("dp-vc", audit.dp_vc_sampler(0.3, 1.0), (g, g.with_edge_toggled(5, 6)), 1.0,
                            samples=20_000, slack=0.3, seed=1)
    assert r.status in ("pass", "inconclusive")
    x = audit.dp_avgdeg_sampler(0.25, 1.0)(g, 50, NoiseSource(0))
    assert x.shape == (50,) and np.isfinite(x).all()


# alpha --------------------------------------------------------------------------------

def test_true_alpha_single_bucket_zero():
    n = 30
    g = complete(n)
    p = make_params(n, 0.25, eps=math.inf)
    noise = np.zeros(n)
    _, _, part = audit.fixed_noise_partition(g, p, noise)
    ta = audit.true_alpha(g, g.degrees() + noise, part, p)
    assert list(ta.alpha.values()) == [Fraction(0)]


def test_true_alpha_star_leaves_one():
    n = 50
    p = toy_params(n)
    noise = np.full(n, 4.0)
    noise[0] = 0.0
    g = star(n)
    h = OracleHandle(g)
    part = bucketize(NoisyDegreeTable(h, p, np.arange(n), noise=noise), p)
    ta = audit.true_alpha(g, g.degrees() + noise, part, p)
    assert ta.alpha == {3: Fraction(1)} and ta.edges[3] == 49


def test_true_alpha_exact_rationals_in_unit_interval():
    g = gnp(120, 0.08, seed=2)
    p = make_params(120, 0.25, eps=60.0)
    noise = NoiseSource(3).laplace(p.degree_noise_scale, 120)
    _, _, part = audit.fixed_noise_partition(g, p, noise, min_big=6)
    ta = audit.true_alpha(g, g.degrees() + noise, part, p)
    assert ta.alpha
    for i, a in ta.alpha.items():
        assert isinstance(a, Fraction) and 0 <= a <= 1
        assert a == Fraction(ta.crossing[i], ta.edges[i])


def test_monte_carlo_error_shrinks_like_root_trials():
    g = gnp(120, 0.08, seed=2)
    p = make_params(120, 0.25, eps=60.0)
    noise = NoiseSource(3).laplace(p.degree_noise_scale, 120)
    _, _, part = audit.fixed_noise_partition(g, p, noise, min_big=6)
    i = max(part.big, key=lambda j: len(part.buckets[j]))
    spread = []
    for reps in (10, 160):
        means = [audit.monte_carlo_alpha(g, p, noise, part, reps, seed=s)[i] for s in range(12)]
        spread.append(np.std(means))
    # 16x the trials should cut the spread by about 4
    assert 2.0 <= spread[0] / spread[1] <= 8.0


# doctor ------------------------------------------------------------------------------

def test_doctor_example():
    out = audit.doctor_example()
    assert out == {"identity_at_IEI": 2, "identity_max": 2, "aligned_max": 1, "pass": True}


def test_equal_datasets_zero_gap():
    d = audit.DOCTOR_D1
    assert audit.coupled_gap(d, d)[0] == 0


def test_report_json_shape():
    r = audit.SensitivityReport("x", 1.0, 1.0, "identity", None, 3)
    assert r.to_json_dict()["pass"] is True
    assert audit.SensitivityReport("x", 1.0, 2.0, "identity").passed is False
