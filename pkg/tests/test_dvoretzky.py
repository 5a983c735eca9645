import math

import numpy as np
import pytest

from concentra import dvoretzky as dvo
from concentra.bodies import Lp, euclidean
from concentra.samplers import RngStream


def test_embed_euclidean(rng):
    n, k, eps = 64, 4, 0.3
    hits = 0
    for i in range(6):
        r = dvo.embed(euclidean(n), k, eps, 5_000, rng.child(i), probe_count=5_000, net_probes=5_000)
        hits += r.net_event
        assert r.sampled_distortion >= 1
        assert r.certificate_holds
        # singular values of a Gaussian n x k matrix: distortion at most about 1 + 4 sqrt(k/n)
        assert r.sampled_distortion <= 1 + 4 * math.sqrt(k / n) + 0.05
    assert hits >= 3


def test_embed_k1_has_no_distortion(rng):
    r = dvo.embed(Lp(16, 1.0), 1, 0.2, 5_000, rng, probe_count=1000, net_probes=1000)
    assert r.sampled_distortion == pytest.approx(1.0, abs=1e-12)


def test_embed_argument_checks(rng):
    with pytest.raises(ValueError):
        dvo.embed(euclidean(8), 2, 0.4, 1000, rng)
    with pytest.raises(ValueError):
        dvo.embed(euclidean(8), 13, 0.2, 1000, rng)


def test_linf_embedding_rate(rng):
    # union-bound arithmetic with the estimated beta predicts a success rate above 1/2
    res = dvo.end_to_end(Lp(1024, math.inf), 0.3, seeds=60, beta_N=20_000, N_mean=4_000, probe_count=2_000, rng=rng)
    assert res["k"] >= 1
    assert res["rate"] >= 0.5
    assert res["certificate_violations"] == 0


def test_variance_method_dimension():
    k, raw = dvo.variance_method_dimension(1e-6, 0.3)
    assert k == int(math.floor(raw)) and raw > 1
    assert dvo.variance_method_dimension(0.5, 0.3)[0] == 1


def test_spherical_probability_examples(rng):
    r = dvo.spherical_probability(euclidean(32), 3, 0.2, 50, None, rng)
    assert r.successes == 50
    r = dvo.spherical_probability(Lp(64, 1.0), 2, 0.5, 100, None, rng)
    assert r.p_hat >= 0.9
    lo, hi = r.interval
    assert lo <= r.p_hat <= hi


def test_spherical_probability_monotone_in_k(rng):
    X = Lp(256, math.inf)
    res = [dvo.spherical_probability(X, k, 0.3, 60, None, rng.spawn()) for k in (2, 4, 8)]
    for a, b in zip(res, res[1:]):
        assert b.interval[0] <= a.interval[1]


def test_spherical_probability_checks(rng):
    with pytest.raises(ValueError):
        dvo.spherical_probability(euclidean(8), 2, 0.3, 10, None, rng)
    with pytest.raises(ValueError):
        dvo.spherical_probability(euclidean(8), 2, 0.3, 50, 100, rng)


def test_early_exit_keeps_verdict(rng):
    X = Lp(32, math.inf)
    full = [dvo.section_ratio(X, 3, 30_000, RngStream(4, i)) for i in range(20)]
    cut = [dvo.section_ratio(X, 3, 30_000, RngStream(4, i), stop_at=1.2) for i in range(20)]
    assert [f < 1.2 for f in full] == [c < 1.2 for c in cut]


def test_k_eps_euclidean_is_kmax(rng):
    r = dvo.estimate_k_eps(euclidean(40), 0.2, "half", 50, rng)
    assert r["k_hat"] == dvo.K_MAX


def test_k_eps_monotone_in_eps():
    X = Lp(64, math.inf)
    ks = [dvo.estimate_k_eps(X, e, "half", 50, RngStream(11))["k_hat"] for e in (0.2, 0.4, 0.8)]
    assert ks == sorted(ks)


def test_k_eps_grows_with_n():
    small = dvo.estimate_k_eps(Lp(64, math.inf), 0.5, "half", 50, RngStream(12))["k_hat"]
    large = dvo.estimate_k_eps(Lp(1024, math.inf), 0.5, "half", 50, RngStream(12))["k_hat"]
    assert large >= small


def test_k_eps_exp_threshold_is_stricter():
    X = Lp(128, 1.0)
    half = dvo.estimate_k_eps(X, 0.5, "half", 60, RngStream(13))["k_hat"]
    strict = dvo.estimate_k_eps(X, 0.5, "exp_k", 60, RngStream(13))["k_hat"]
    assert strict <= half
    with pytest.raises(ValueError):
        dvo.estimate_k_eps(X, 0.5, "sometimes", 60, RngStream(13))


def test_gaussian_image_has_norm_law(rng):
    assert dvo.rotation_invariance_check(Lp(32, 1.0), 4, 100_000, rng)["pass"]
