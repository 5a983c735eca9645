import math

import numpy as np
import pytest

from concentra import grassmann as gr
from concentra.bodies import Lp, euclidean
from concentra.linalg import Subspace
from concentra.samplers import RngStream, haar_grassmann, sphere_points

W_B1_4 = 0.779122561454528388  # mean of |theta|_inf over S^3, mpmath quadrature


def coordinate_subspace(n, k):
    return Subspace(np.eye(n)[:k])


def test_euclidean_width_and_section(rng):
    F = haar_grassmann(20, 5, rng)
    X = euclidean(20)
    assert gr.projected_width(X, F, 2000, rng).value == pytest.approx(1.0, abs=1e-12)
    assert gr.section_mean(X, F, 2000, rng).value == pytest.approx(1.0, abs=1e-12)
    assert gr.projected_inradius(X, F, 2000, rng).value == pytest.approx(1.0, abs=1e-12)


def test_coordinate_projection_of_cross_polytope(rng):
    est = gr.projected_width(Lp(40, 1.0), coordinate_subspace(40, 4), 400_000, rng)
    assert abs(est.value - W_B1_4) <= 3 * est.standard_error


def test_support_restricts_to_subspace(rng):
    # h_{P_F A}(theta) = h_A(theta) for theta in F: compare against the support of the projected vertices
    n, k = 12, 3
    A = Lp(n, 1.0)
    F = haar_grassmann(n, k, rng)
    theta = sphere_points(k, 10_000, rng)
    verts = np.concatenate([np.eye(n), -np.eye(n)]) @ F.basis.T  # vertices of P_F B_1 in F-coordinates
    direct = np.max(theta @ verts.T, axis=1)
    assert np.max(np.abs(A.support(F.embed(theta)) - direct)) < 1e-12


def _average_over_subspaces(f, n, k, count, N, rng):
    vals = []
    for i in range(count):
        s = rng.child(i)
        F = haar_grassmann(n, k, s)
        vals.append(float(f(F.embed(sphere_points(k, N, s))).mean()))
    v = np.array(vals)
    return v.mean(), v.std(ddof=1) / math.sqrt(count)


def test_width_averaging_identity(rng):
    A = Lp(32, 1.0)
    mean, se = _average_over_subspaces(A.support, 32, 4, 200, 2000, rng)
    ref = gr.sphere_stats(A.support, 32, 400_000, rng.spawn())
    assert abs(mean - ref.mean) <= 3 * math.hypot(se, ref.se_mean)


def test_section_averaging_identity(rng):
    X = Lp(64, math.inf)
    mean, se = _average_over_subspaces(X.gauge, 64, 3, 200, 2000, rng)
    ref = gr.sphere_stats(X.gauge, 64, 400_000, rng.spawn())
    assert abs(mean - ref.mean) <= 3 * math.hypot(se, ref.se_mean)


def test_inradius_of_planar_cross_polytope_projection(rng):
    r = gr.projected_inradius(Lp(10, 1.0), coordinate_subspace(10, 2), 5000, rng)
    assert r.upper_bound
    assert r.value == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_inradius_below_width(rng):
    A = Lp(32, 1.0)
    for i in range(5):
        F = haar_grassmann(32, 3, rng.child(i))
        w = gr.projected_width(A, F, 20_000, rng.child(100 + i))
        r = gr.projected_inradius(A, F, 5000, rng.child(200 + i))
        assert r.value <= w.value + 3 * w.standard_error
        assert gr.projected_circumradius(A, F, 5000, rng.child(300 + i)) >= w.value - 3 * w.standard_error


def test_concentration_euclidean_is_degenerate(rng):
    t = gr.concentration_experiment(euclidean(16), "width", 4, 100, 500, rng)
    assert np.allclose(t.ratios, 1.0, atol=1e-12)
    assert t.std == pytest.approx(0.0, abs=1e-12)


def test_concentration_table_rows(rng):
    t = gr.concentration_experiment(Lp(64, 1.0), "section", 4, 200, 2000, rng)
    assert np.all(t.ratios > 0)
    p = [r["p_hat"] for r in t.rows]
    assert all(a >= b for a, b in zip(p, p[1:]))
    assert all(r["t"] >= 2 * math.sqrt(4 / 64) for r in t.rows)
    dev = np.abs(t.ratios - 1)
    assert np.mean(dev > 3 * t.std) <= 0.05


def test_concentration_arguments(rng):
    with pytest.raises(ValueError):
        gr.concentration_experiment(Lp(8, 1.0), "section", 2, 50, 100, rng)
    with pytest.raises(ValueError):
        gr.concentration_experiment(Lp(8, 1.0), "volume", 2, 100, 100, rng)


def test_section_std_decreases_with_k(rng):
    X = Lp(64, 1.0)
    a = gr.concentration_experiment(X, "section", 2, 150, 2000, rng.spawn())
    b = gr.concentration_experiment(X, "section", 8, 150, 2000, rng.spawn())
    assert b.std < a.std


def test_negative_log_tail_is_monotone(rng):
    # -log tail against t^2 k stays nondecreasing along the table
    t = gr.concentration_experiment(Lp(64, 1.0), "width", 2, 400, 1000, rng)
    pts = sorted((r["t2k"], r["neg_log_tail"]) for r in t.rows)
    vals = [v for _, v in pts]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("scale", [1.0, 2.0])
def test_sandwich_scaled_orthonormal(scale, rng):
    F = haar_grassmann(16, 3, rng)
    res = gr.polar_sandwich_check(Lp(16, 1.0), scale * F.basis, 50_000, rng)
    assert res["pass"]
    assert res["w_TA"] == pytest.approx(scale * res["w_PFA"], rel=1e-10)


def test_sandwich_diagonal(rng):
    T = np.array([[3.0, 0, 0, 0], [0, 1.0, 0, 0]])
    res = gr.polar_sandwich_check(Lp(4, 1.0), T, 100_000, rng)
    assert res["pass"]
    assert res["s_min"] * res["w_PFA"] < res["w_TA"] < res["s_max"] * res["w_PFA"]


def test_lipschitz_envelopes(rng):
    res = gr.lipschitz_probe(Lp(32, 1.0), 4, 100, 2000, rng)
    assert res["pass"]
    assert math.isfinite(res["max_ratio_inf"]) and math.isfinite(res["max_ratio_hs"])
    flat = gr.lipschitz_probe(euclidean(16), 2, 20, 500, rng)
    assert flat["max_ratio_inf"] < 1e-12


@pytest.mark.parametrize("n,dot,target", [(2, 0.0, 1.0), (8, 0.6, 0.16), (16, -0.3, 2 / 16 * 0.91)])
def test_sphere_identity(n, dot, target, rng):
    u, v = gr.unit_pair(n, dot)
    res = gr.sphere_identity_check(u, v, 200_000, rng)
    assert res["target"] == pytest.approx(target, rel=1e-12)
    assert res["pass"]


def test_sphere_identity_equal_vectors(rng):
    u, _ = gr.unit_pair(5, 1.0)
    res = gr.sphere_identity_check(u, u, 1000, rng)
    assert res["estimate"] == 0.0 and res["pass"]


def test_isotropic_design_is_exact(rng):
    U = gr.isotropic_design(4, 5, rng)
    assert U.shape == (20, 4)
    assert np.allclose(U.T @ U / len(U), np.eye(4) / 4, atol=1e-12)


@pytest.mark.parametrize("p,k", [(1.0, 2), (1.0, 4), (math.inf, 2), (math.inf, 4)])
def test_width_variance_bounds(p, k, rng):
    res = gr.gaussian_width_variance_check(Lp(16, p), k, 4000, rng, blocks=4)
    assert res["pass"]
    assert abs(res["mean_w"] - res["mean_h"]) < 0.05 * res["mean_h"]


def test_width_variance_k1_is_norm_variance(rng):
    res = gr.gaussian_width_variance_check(euclidean(8), 1, 20_000, rng)
    assert res["pass"]
    assert res["var_w"] == pytest.approx(res["var_h"], rel=0.1)


def test_inclusion_rates_euclidean(rng):
    res = gr.one_sided_inclusion_rates(euclidean(16), 0.05, 3, 3, 20, rng, probe_count=2000)
    assert res["rate_upper"] == 1.0 and res["rate_lower"] == 1.0


def test_inclusion_lower_rate_decreases_with_dimension(rng):
    A = Lp(64, 1.0)
    rates = [gr.one_sided_inclusion_rates(A, 0.3, 1, k, 25, RngStream(3), probe_count=2000)["rate_lower"]
             for k in (2, 6, 16)]
    assert rates[0] >= rates[1] >= rates[2]


def test_spherical_implication(rng):
    res = gr.spherical_implication_check(Lp(64, 1.0), 2, 0.3, 60, 5000, rng)
    assert res["pass"]


def test_small_ball_profile_shape(rng):
    # P(w <= eps w(A)) grows with eps, and faster for larger k
    rows = gr.width_small_ball_profile(Lp(32, 1.0), [1, 2], [0.85, 0.9, 0.95], 300, 1000, rng)
    for r in rows:
        assert r["p_hat"] == sorted(r["p_hat"])
        assert r["slope"] > 0
    assert rows[1]["slope"] > rows[0]["slope"]


def test_section_std_sqrt_k_scaling_for_ellipsoid(rng):
    # an ellipsoidal gauge has a quadratic spherical-harmonic part, so std ~ 1/sqrt(k)
    from concentra.bodies import LinearImage
    X = LinearImage(np.diag(np.linspace(1, 3, 64)), euclidean(64))
    a = gr.concentration_experiment(X, "section", 4, 200, 5000, rng.spawn())
    b = gr.concentration_experiment(X, "section", 16, 200, 5000, rng.spawn())
    assert 0.3 <= b.std / a.std <= 0.8


def test_section_std_of_symmetric_norm_scales_like_one_over_k(rng):
    # sign and permutation invariance removes the quadratic part of the l_1 gauge on the sphere
    X = Lp(64, 1.0)
    a = gr.concentration_experiment(X, "section", 4, 200, 5000, rng.spawn())
    b = gr.concentration_experiment(X, "section", 16, 200, 5000, rng.spawn())
    assert 0.15 <= b.std / a.std <= 0.3
