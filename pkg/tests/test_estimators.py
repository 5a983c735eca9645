import math

import numpy as np
import pytest
from scipy import integrate

from concentra import estimators as est
from concentra.bodies import AbsPlusLinf, AbsPlusLq, Lp, euclidean
from concentra.errors import DegenerateDistribution, HeavyTail, UnsupportedBody
from concentra.samplers import Measure, RngStream

# frozen oracle values (30-digit mpmath evaluations)
BETA_L2 = {1: 0.57079632679489661923, 16: 0.031722514090205126065, 64: 0.0078427769155998473799}
CUBE_DENSITY_16 = 0.84986643242599189740  # n 2^{1/n} phi(m) at n = 16
M1_LINF2 = 0.90031631615710606956  # 2 sqrt(2) / pi
K_L1_64 = 41.063208910228495336  # n (M/b)^2 with M = n sqrt(2/pi) / E|Z|_2, b = sqrt(n)


def gauss(n):
    return Measure("gaussian", n)


def test_scalar_stats_examples(rng):
    n = 6
    s = est.scalar_stats(gauss(n), lambda z: z[:, 0], 200_000, rng)
    assert abs(s.mean) <= 3 * s.se_mean and abs(s.variance - 1) <= 0.02
    s = est.scalar_stats(gauss(n), lambda z: np.sum(z * z, axis=1), 200_000, rng)
    assert abs(s.mean - n) <= 3 * s.se_mean
    s = est.scalar_stats(gauss(n), lambda z: np.abs(z).sum(axis=1), 200_000, rng)
    assert abs(s.mean - n * math.sqrt(2 / math.pi)) <= 3 * s.se_mean


def test_scalar_stats_rejects_small_n(rng):
    with pytest.raises(ValueError):
        est.scalar_stats(gauss(2), lambda z: z[:, 0], 50, rng)


def test_sampling_independent_of_threads():
    a = est.scalar_stats(gauss(64), lambda z: z.sum(axis=1), 50_000, RngStream(1), threads=1).values
    b = est.scalar_stats(gauss(64), lambda z: z.sum(axis=1), 50_000, RngStream(1), threads=4).values
    assert np.array_equal(a, b)


def test_beta_closed_forms(rng):
    for n, exact in BETA_L2.items():
        assert math.isclose(est.beta_euclidean(n), exact, rel_tol=1e-12)
    b = est.beta(euclidean(16), gauss(16), 400_000, rng)
    assert abs(b.value - BETA_L2[16]) <= 3 * b.standard_error
    b = est.beta(Lp(2, math.inf), Measure("uniform-cube", 2), 400_000, rng)
    assert abs(b.value - 0.125) <= 3 * b.standard_error


def test_dvoretzky_number(rng):
    k = est.dvoretzky_number(euclidean(20), 1000, rng)
    assert math.isclose(k.value, 20, rel_tol=1e-12)
    k = est.dvoretzky_number(Lp(64, 1.0), 200_000, rng)
    assert 0.3 <= k.value / 64 <= 0.8
    assert abs(k.value - K_L1_64) <= 3 * k.standard_error + 1e-9


def test_theta_cube_density(rng):
    f, m = est.gaussian_cube_density_at_median(16)
    assert math.isclose(f, CUBE_DENSITY_16, rel_tol=1e-12)
    s = est.norm_stats(Lp(16, math.inf), gauss(16), 1_000_000, rng)
    fh, mh, _ = est.density_at_median(s)
    assert abs(fh / f - 1) < 0.10
    th = est.theta_from_stats(s)
    b = est.beta_estimate(s)
    assert th.value >= 0.8 * (1 / 16) / math.sqrt(b.value)


def test_theta_degenerate():
    from concentra.stats import SampleStats

    with pytest.raises(DegenerateDistribution):
        est.density_at_median(SampleStats(np.ones(1000)))


def test_sphere_moment(rng):
    assert math.isclose(est.sphere_moment(euclidean(5), 3.0, 1000, rng).value, 1.0, rel_tol=1e-12)
    M1 = est.sphere_moment(Lp(2, math.inf), 1.0, 200_000, rng)
    quad = integrate.quad(lambda t: max(abs(math.cos(t)), abs(math.sin(t))), 0, 2 * math.pi, limit=200)[0] / (2 * math.pi)
    assert math.isclose(quad, M1_LINF2, rel_tol=1e-10)
    assert abs(M1.value - M1_LINF2) <= 3 * M1.standard_error
    M2 = est.sphere_moment(Lp(2, math.inf), 2.0, 200_000, RngStream(1))
    M1b = est.sphere_moment(Lp(2, math.inf), 1.0, 200_000, RngStream(1))
    assert M2.value >= M1b.value
    with pytest.raises(HeavyTail):
        est.sphere_moment(Lp(4, 1.0), -3.0, 1000, rng)


def test_width_moment_and_polar_identity(rng):
    assert math.isclose(est.width_moment(euclidean(6), -2.0, 1000, rng).value, 1.0, rel_tol=1e-12)
    A = Lp(8, 1.0)
    for q in (1.0, 2.0, -2.0):
        assert est.polar_identity_check(A, q, 200_000, rng)["pass"]


def test_l2_moment_closed_form():
    # E|Z|_2^2 = n
    assert math.isclose(est.gaussian_l2_moment(7, 2.0) ** 2, 7.0, rel_tol=1e-12)
    assert math.isclose(est.gaussian_l2_moment(5, 1.0), est.gaussian_norm_mean_l2(5), rel_tol=1e-12)


def test_negative_moment_ratio(rng):
    for q in (1.0, 2.0, 4.0):
        r = est.negative_moment_ratio(Lp(32, 1.0), q, 100_000, rng)
        assert r["pass"] and r["ratio"] >= 1 - 1e-3
        assert math.isfinite(r["implied_C"])


def test_body_moment(rng):
    n = 5
    J = est.body_moment_J(euclidean(n), 1.0, 200_000, rng)
    assert abs(J.value - n / (n + 1)) <= 3 * J.standard_error
    J2 = est.body_moment_J(Lp(2, 1.0), 2.0, 200_000, rng)
    quad = integrate.dblquad(lambda y, x: x * x + y * y, 0, 1, 0, lambda x: 1 - x)[0] * 4 / 2
    assert math.isclose(quad, 1 / 3, rel_tol=1e-10)
    assert abs(J2.value**2 - quad) <= 3 * 2 * J2.value * J2.standard_error
    cube = Lp(3, math.inf)
    for q in (1.0, 2.0, 6.0):
        assert est.body_moment_J(cube, q, 100_000, rng).value >= est.lower_J_bound(cube, q)
    with pytest.raises(UnsupportedBody):
        est.body_moment_J(AbsPlusLinf(4), 1.0, 1000, rng)


def test_a_constant():
    assert math.isclose(est.a_constant(1, 2), math.sqrt(6), rel_tol=1e-12)
    for n in (1, 2, 5, 20):
        qs = np.linspace(1, 4 * n, 40)
        vals = [est.a_constant(n, q) for q in qs]
        assert all(v > 1 for v in vals)
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        for q in qs[qs >= n]:
            assert est.a_constant_exponent(n, q) >= 0


def test_vrad_identity():
    for p in (1.0, 2.0, 4.0, -0.5, 8.0):
        assert est.vrad_identity_check(euclidean(2), p)["residual"] < 1e-10
        assert math.isclose(est.vrad_identity_check(euclidean(2), p)["rhs"], 2 / (2 + p), rel_tol=1e-12)
    for K in (Lp(2, 1.0), Lp(2, math.inf), Lp(2, 3.0)):
        for p in (1.0, 2.0, 4.0):
            assert est.vrad_identity_check(K, p)["residual"] < 1e-6
    with pytest.raises(ValueError):
        est.vrad_identity_check(euclidean(2), -1.5)


def test_polar_factorization_and_beta_identity(rng):
    # E|Z|^p = E|Z|_2^p * M_p^p and (1+beta_gauss) = (1+beta_l2)(1+beta_sphere)
    n = 16
    for X in (Lp(n, 1.0), Lp(n, math.inf), AbsPlusLq(n, 5.0)):
        for p in (1.0, 2.0):
            g = est.scalar_stats(gauss(n), lambda z: X.gauge(z) ** p, 200_000, rng)
            s = est.sphere_stats(lambda t: X.gauge(t) ** p, n, 200_000, rng)
            c = est.gaussian_l2_moment(n, p) ** p
            assert abs(g.mean - c * s.mean) <= 3 * math.hypot(g.se_mean, c * s.se_mean)
    for X in (Lp(n, 1.0), Lp(n, math.inf)):
        bg = est.beta(X, gauss(n), 400_000, rng)
        bs = est.beta(X, Measure("sphere", n), 400_000, rng)
        lhs = 1 + bg.value
        rhs = (1 + est.beta_euclidean(n)) * (1 + bs.value)
        assert abs(lhs - rhs) <= 3 * math.hypot(bg.standard_error, (1 + est.beta_euclidean(n)) * bs.standard_error)


@pytest.mark.parametrize("n", [64, 256])
def test_beta_lower_and_variance_bounds(n, rng):
    from concentra.bodies import circumradius

    for X in (Lp(n, 1.0), euclidean(n), Lp(n, math.inf), AbsPlusLinf(n), AbsPlusLq(n, 5.0)):
        s = est.norm_stats(X, gauss(n), 100_000, rng)
        b = est.beta_estimate(s)
        assert b.value + 3 * b.standard_error >= est.beta_euclidean(n)
        bX = circumradius(X).circumradius_b
        assert s.variance <= bX**2 * (1 + 3 * math.sqrt(2 / s.count))
        k = est.dvoretzky_number(X, 50_000, rng).value
        assert math.log(1 / b.value) <= 20 * k and k <= 20 / b.value
