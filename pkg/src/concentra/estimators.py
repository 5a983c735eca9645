"""Monte Carlo and quadrature estimates of the scalar parameters of a norm."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate, special

from .bodies import Lp, NormedSpace, circumradius
from .errors import (
    DegenerateDistribution,
    DimensionMismatch,
    HeavyTail,
    QuadratureFail,
    UnsupportedBody,
)
from .parallel import map_blocks
from .samplers import Measure, RngStream, as_stream
from .stats import ParamEstimate, SampleStats, beta_estimate

THETA_BANDWIDTH = 1.8
THETA_BATCHES = 20


def scalar_stats(m: Measure, f: Callable, N: int, rng, threads: int | None = None) -> SampleStats:
    """Sample f(Z) for N draws Z ~ m; f maps an (rows, n) batch to (rows,)."""
    N = int(N)
    if N < 100:
        raise ValueError("need N >= 100 samples")
    rng = as_stream(rng)
    vals = map_blocks(lambda s, size: f(m.sample(s, size)), N, m.dim, rng, threads)
    return SampleStats(vals)


def _match(X: NormedSpace, m: Measure) -> None:
    if X.dim != m.dim:
        raise DimensionMismatch(f"space has dimension {X.dim}, measure {m.dim}")


def norm_stats(X: NormedSpace, m: Measure, N: int, rng, threads=None) -> SampleStats:
    _match(X, m)
    return scalar_stats(m, X.gauge, N, rng, threads)


def beta(X: NormedSpace, m: Measure, N: int, rng, threads=None) -> ParamEstimate:
    return beta_estimate(norm_stats(X, m, N, rng, threads))


def gaussian_norm_mean_l2(n: int) -> float:
    """E|Z|_2 for a standard Gaussian vector in R^n."""
    return math.sqrt(2.0) * math.exp(special.gammaln((n + 1) / 2) - special.gammaln(n / 2))


def beta_euclidean(n: int) -> float:
    """Exact beta of the Euclidean norm under the Gaussian measure: n/c_n^2 - 1."""
    c = gaussian_norm_mean_l2(n)
    return n / (c * c) - 1.0


def gaussian_l2_moment(n: int, q: float) -> float:
    """(E|Z|_2^q)^{1/q} = (2^{q/2} Gamma((n+q)/2)/Gamma(n/2))^{1/q}, q > -n."""
    if q <= -n:
        raise HeavyTail(f"E|Z|^q diverges for q={q} <= -n")
    logm = 0.5 * q * math.log(2.0) + special.gammaln((n + q) / 2) - special.gammaln(n / 2)
    return math.exp(logm / q)


def sphere_stats(f: Callable, n: int, N: int, rng, threads=None) -> SampleStats:
    return scalar_stats(Measure("sphere", n), f, N, rng, threads)


def dvoretzky_number(X: NormedSpace, N: int, rng, threads=None) -> ParamEstimate:
    """k(X) = n (M/b)^2 with M the spherical mean of the gauge."""
    s = sphere_stats(X.gauge, X.dim, N, rng, threads)
    b = circumradius(X).circumradius_b
    n = X.dim
    k = n * (s.mean / b) ** 2
    se = 2 * n * s.mean * s.se_mean / b**2
    return ParamEstimate(k, se, s.count, "monte-carlo/sphere")


def density_at_median(s: SampleStats) -> tuple[float, float, float]:
    """(f_hat(m), m, h): symmetric ECDF difference quotient around the median."""
    m = s.median
    sd = s.std
    if sd < 1e-12 * abs(s.mean):
        raise DegenerateDistribution("sample standard deviation is numerically zero")
    h = THETA_BANDWIDTH * sd * s.count ** (-0.2)
    lo, hi = s.cdf([m - h, m + h])
    return float((hi - lo) / (2 * h)), m, h


def _theta_of(values: np.ndarray) -> float:
    f, m, _ = density_at_median(SampleStats(values))
    return m * f


def theta_from_stats(s: SampleStats) -> ParamEstimate:
    if s.count < THETA_BATCHES * 100:
        raise ValueError("too few samples for the batched standard error")
    value = _theta_of(s.values)
    batches = np.array_split(s.values, THETA_BATCHES)
    reps = np.array([_theta_of(b) for b in batches])
    se = float(reps.std(ddof=1) / math.sqrt(THETA_BATCHES))
    return ParamEstimate(value, se, s.count, "ecdf-difference/batched")


def theta(X: NormedSpace, m: Measure, N: int, rng, threads=None) -> ParamEstimate:
    """theta = m * f(m): median of the norm times its density at the median."""
    if N < 100_000:
        raise ValueError("theta needs N >= 1e5")
    return theta_from_stats(norm_stats(X, m, N, rng, threads))


def gaussian_cube_density_at_median(n: int) -> tuple[float, float]:
    """Exact (f(m), m) for |Z|_inf, Z standard Gaussian in R^n."""
    from scipy.stats import norm

    m = float(norm.ppf((1 + 2 ** (-1.0 / n)) / 2))
    return n * 2 ** (1.0 / n) * float(norm.pdf(m)), m


def _power_mean(s: SampleStats, q: float, method: str) -> ParamEstimate:
    mean = s.mean
    val = mean ** (1.0 / q)
    se = val / abs(q) * s.se_mean / mean
    return ParamEstimate(val, se, s.count, method)


def _moment_gate(q: float, n: int) -> None:
    if q == 0:
        raise ValueError("q = 0 is not a moment order")
    if q <= -n + 1:
        raise HeavyTail(f"q={q} <= -n+1: Monte Carlo variance is infinite")


def sphere_moment(X: NormedSpace, q: float, N: int, rng, threads=None) -> ParamEstimate:
    """M_q = (mean over S^{n-1} of |theta|^q)^{1/q}."""
    _moment_gate(q, X.dim)
    s = sphere_stats(lambda t: X.gauge(t) ** q, X.dim, N, rng, threads)
    return _power_mean(s, q, "monte-carlo/sphere")


def width_moment(A: NormedSpace, q: float, N: int, rng, threads=None) -> ParamEstimate:
    """w_q(A) = (mean over S^{n-1} of h_A^q)^{1/q}; q = 1 is the mean width."""
    _moment_gate(q, A.dim)
    A.support(np.ones(A.dim))  # raises UnsupportedDual early
    s = sphere_stats(lambda t: A.support(t) ** q, A.dim, N, rng, threads)
    return _power_mean(s, q, "monte-carlo/sphere")


def gaussian_support_moment(A: NormedSpace, q: float, N: int, rng, threads=None) -> ParamEstimate:
    """(E h_A(Z)^q)^{1/q} under the standard Gaussian."""
    _moment_gate(q, A.dim)
    s = scalar_stats(Measure("gaussian", A.dim), lambda z: A.support(z) ** q, N, rng, threads)
    return _power_mean(s, q, "monte-carlo/gaussian")


def polar_identity_check(A: NormedSpace, q: float, N: int, rng, threads=None) -> dict:
    """Compare (E h_A(Z)^q)^{1/q} with w_q(A) (E|Z|_2^q)^{1/q}."""
    rng = as_stream(rng)
    lhs = gaussian_support_moment(A, q, N, rng, threads)
    w = width_moment(A, q, N, rng, threads)
    c = gaussian_l2_moment(A.dim, q)
    rhs, rhs_se = w.value * c, w.standard_error * c
    se = math.hypot(lhs.standard_error, rhs_se)
    return {
        "q": q,
        "gaussian_side": lhs.value,
        "sphere_side": rhs,
        "se": se,
        "pass": abs(lhs.value - rhs) <= 3 * se,
    }


def negative_moment_ratio(A: NormedSpace, q: float, N: int, rng, threads=None) -> dict:
    """w(A)/w_{-q}(A) with the implied constant C of exp(C max(sqrt(b*), q b*)).

    b* is beta of h_A under the Gaussian measure.
    """
    rng = as_stream(rng)
    w1 = width_moment(A, 1.0, N, rng, threads)
    wq = width_moment(A, -q, N, rng, threads)
    bstar = beta(_Support(A), Measure("gaussian", A.dim), N, rng, threads)
    ratio = w1.value / wq.value
    scale = max(math.sqrt(bstar.value), q * bstar.value)
    return {
        "q": q,
        "w": w1.value,
        "w_neg": wq.value,
        "ratio": ratio,
        "beta_star": bstar.value,
        "implied_C": math.log(ratio) / scale if scale > 0 else math.nan,
        # Holder: w_{-q} <= w_1 up to Monte Carlo error
        "pass": ratio + 3 * (w1.standard_error / wq.value + ratio * wq.standard_error / wq.value) >= 1.0,
    }


class _Support(NormedSpace):
    """h_A viewed as a norm in its own right (the dual space)."""

    def __init__(self, A: NormedSpace):
        self.A = A
        self.dim = A.dim
        self.label = f"dual[{A.label}]"

    def gauge(self, x):
        return self.A.support(x)


def dual_space(A: NormedSpace) -> NormedSpace:
    return _Support(A)


def body_measure(K: NormedSpace) -> Measure:
    if isinstance(K, Lp):
        return Measure("uniform-ball", K.dim, K.p)
    raise UnsupportedBody(f"no uniform sampler for {K.label}")


def body_moment_J(K: NormedSpace, q: float, N: int, rng, threads=None) -> ParamEstimate:
    """J_q(K) = (mean of |x|_2^q over the uniform measure on K)^{1/q}."""
    if q == 0:
        raise ValueError("q = 0 is not a moment order")
    m = body_measure(K)
    s = scalar_stats(m, lambda x: np.linalg.norm(x, axis=-1) ** q, N, rng, threads)
    return _power_mean(s, q, "monte-carlo/uniform-body")


def a_constant(n: int, q: float) -> float:
    """a_{n,q} defined by a^{-q} = (q/2) B(q, n+1)."""
    if not q > 0:
        raise ValueError("a_{n,q} needs q > 0")
    log_inv = math.log(q / 2) + special.betaln(q, n + 1)
    return math.exp(-log_inv / q)


def a_constant_exponent(n: int, q: float) -> float:
    """c with a_{n,q} = exp(c (n/q) log(eq/n)), for q >= n."""
    if q < n:
        raise ValueError("the growth form applies for q >= n")
    return math.log(a_constant(n, q)) / ((n / q) * math.log(math.e * q / n))


def lower_J_bound(K: NormedSpace, q: float) -> float:
    """a_{n,q}^{-1} R(K), a lower bound for J_q(K)."""
    return circumradius(K).support_R / a_constant(K.dim, q)


# -- deterministic two-dimensional route --------------------------------------

_ANGLE_PIECES = 8


def _lp2_area(p: float) -> float:
    if math.isinf(p):
        return 4.0
    return 4 * math.exp(2 * special.gammaln(1 + 1 / p) - special.gammaln(1 + 2 / p))


def _angular_integral(g: Callable, nodes: int) -> float:
    """(1/2pi) int_0^{2pi} g(theta) dtheta with Gauss-Legendre on 8 arcs of pi/4.

    Arc ends sit on the kinks of the l_1 and l_inf unit circles.
    """
    x, w = np.polynomial.legendre.leggauss(max(1, nodes // _ANGLE_PIECES))
    total = 0.0
    for j in range(_ANGLE_PIECES):
        a, b = j * np.pi / 4, (j + 1) * np.pi / 4
        th = 0.5 * (b - a) * x + 0.5 * (a + b)
        u = np.stack([np.cos(th), np.sin(th)], axis=-1)
        total += float(np.sum(0.5 * (b - a) * w * g(u)))
    return total / (2 * np.pi)


def vrad_identity_check(K: NormedSpace, p: float, nodes: int = 10_000) -> dict:
    """Relative residual of vrad(K)^2 J_p^p(K) = 2/(2+p) M_{-(2+p)}^{-(2+p)}(K).

    The left side integrates |x|^p over K in Cartesian coordinates; the right
    side is an angular quadrature of the gauge, so the two share no code.
    """
    if K.dim != 2:
        raise DimensionMismatch("the quadrature route is two-dimensional")
    if not isinstance(K, Lp):
        raise UnsupportedBody("quadrature needs an l_p unit disc")
    if not (-1 < p <= 8) or p == 0:
        raise ValueError("need p in (-1, 8], p != 0")
    bp = K.p

    def ymax(x):
        return 1.0 if math.isinf(bp) else (1.0 - x**bp) ** (1.0 / bp)

    quarter, err = integrate.dblquad(
        lambda y, x: (x * x + y * y) ** (p / 2), 0.0, 1.0, 0.0, ymax, epsabs=1e-14, epsrel=1e-13
    )
    if not np.isfinite(quarter) or err > 1e-9 * abs(quarter):
        raise QuadratureFail(f"Cartesian quadrature error {err:.2g}")
    area = _lp2_area(bp)
    vrad2 = area / np.pi
    J_pp = 4 * quarter / area
    lhs = vrad2 * J_pp
    mneg = _angular_integral(lambda u: K.gauge(u) ** (-(2 + p)), nodes)
    rhs = 2.0 / (2.0 + p) * mneg
    if not (np.isfinite(lhs) and np.isfinite(rhs)) or rhs == 0:
        raise QuadratureFail("non-finite quadrature result")
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / abs(rhs)}
