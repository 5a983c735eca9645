"""Small deviation, small ball and tail inequalities for norms of log-concave vectors.

Each check returns rows of plain dicts.  An inequality ``p <= bound`` passes
when the lower Clopper-Pearson limit of the estimate does not exceed the
bound; limits are Bonferroni adjusted over the rows of one table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .bodies import NormedSpace
from .errors import NoGradient
from .estimators import density_at_median, norm_stats, scalar_stats, theta_from_stats
from .parallel import map_blocks
from .samplers import Measure, RngStream, as_stream
from .stats import SampleStats, TailEstimate, bonferroni, clopper_pearson, stability

ALPHA = 0.05
DENSITY_TOL = 0.15
TRANSPORT_RHO = 2.0
TRANSPORT_FLOOR = 0.02
SMALL_BALL_MEASURES = ("gaussian", "exponential")


def _stats(X, m, N, rng, threads, stats):
    return stats if stats is not None else norm_stats(X, m, N, rng, threads)


def _row(check: str, param: str, value: float, te: TailEstimate, bound: float, ok: bool, asserted: bool = True, **extra):
    row = {
        "check": check,
        "param": param,
        "value": value,
        "events": te.events,
        "trials": te.trials,
        "p_hat": te.p_hat,
        "ci_low": te.ci_low,
        "ci_high": te.ci_high,
        "bound": bound,
        "pass": bool(ok),
        "asserted": asserted,
    }
    row.update(extra)
    return row


def logconcave_smalldev_check(X, m: Measure, t_grid, N=1_000_000, rng=None, threads=None, stats=None) -> list:
    """P(|Z| < med - t E| |Z| - med |) <= exp(-t/16)/2 for each t."""
    s = _stats(X, m, N, rng, threads, stats)
    med = s.median
    D = s.mean_abs_dev(med)
    t_grid = [float(t) for t in t_grid]
    alpha = bonferroni(ALPHA, len(t_grid))
    rows = []
    for t in t_grid:
        te = TailEstimate(med - t * D, int(s.count_below(med - t * D)), s.count, alpha)
        bound = 0.5 * math.exp(-t / 16)
        extra = {}
        if m.kind == "gaussian" and t > 0:
            # implied constant of the Gaussian form exp(-c t^2)/2 at this t
            extra["implied_c"] = math.log(0.5 / te.p_hat) / t**2 if te.events else math.inf
        rows.append(_row("smalldev", "t", t, te, bound, te.below(bound), **extra))
    return rows


def density_lower_check(X, m: Measure, N=1_000_000, rng=None, threads=None, stats=None) -> dict:
    """f(med) * 32 * E(|Z| - med)_+ >= 1, judged with a 15% density tolerance."""
    s = _stats(X, m, N, rng, threads, stats)
    f, med, h = density_at_median(s)
    excess = s.mean_excess(med)
    prod = 32 * f * excess
    return {"check": "density", "param": "median", "value": med, "density": f, "bandwidth": h,
            "excess": excess, "product": prod, "bound": 1 - DENSITY_TOL, "pass": prod >= 1 - DENSITY_TOL,
            "asserted": True}


def small_ball_check(X, m: Measure, eps_grid, N=1_000_000, rng=None, threads=None, stats=None) -> list:
    """P(|Z| <= eps med) <= eps^{2 theta}/2 with theta = med f(med).

    The exponent uses theta minus 3 standard errors, the conservative side of
    its estimate for eps < 1.
    """
    if m.kind not in SMALL_BALL_MEASURES:
        raise ValueError(f"dilation small-ball bound is only licensed for {SMALL_BALL_MEASURES}")
    s = _stats(X, m, N, rng, threads, stats)
    th = theta_from_stats(s)
    exponent = 2 * max(th.value - 3 * th.standard_error, 0.0)
    med = s.median
    eps_grid = [float(e) for e in eps_grid]
    alpha = bonferroni(ALPHA, len(eps_grid))
    rows = []
    for e in eps_grid:
        if not 0 < e < 1:
            raise ValueError("eps must lie in (0, 1)")
        te = TailEstimate(e * med, int(s.count_below(e * med, strict=False)), s.count, alpha)
        bound = 0.5 * e**exponent
        rows.append(_row("smallball", "eps", e, te, bound, te.below(bound), theta=th.value, theta_se=th.standard_error))
    return rows


def borell_bound(F_s: float, s: float, t: float) -> float:
    """F(s) ((1-F(s))/F(s))^{(t+s)/(2s)}, the tail bound at t > s."""
    a = (t + s) / (2 * s)
    return F_s * ((1 - F_s) / F_s) ** a


def borell_check(X, m: Measure, s_value: float, t_grid, N=1_000_000, rng=None, threads=None, stats=None) -> list:
    """1 - F(t) <= borell_bound(F(s), s, t).

    The bound decreases in F(s), so it is evaluated at the lower CP limit of F(s).
    """
    st = _stats(X, m, N, rng, threads, stats)
    t_grid = [float(t) for t in t_grid]
    alpha = bonferroni(ALPHA, len(t_grid) + 1)
    below_s = int(st.count_below(s_value, strict=False))
    Fs_lo = clopper_pearson(below_s, st.count, alpha)[0]
    rows = []
    for t in t_grid:
        if t <= s_value:
            raise ValueError("Borell rows need t > s")
        above = st.count - int(st.count_below(t, strict=False))
        te = TailEstimate(t, above, st.count, alpha)
        bound = borell_bound(Fs_lo, s_value, t) if 0 < Fs_lo < 1 else 1.0
        rows.append(_row("borell", "t", t, te, bound, te.below(bound), s=s_value, F_s=below_s / st.count))
    return rows


def seminorm_cdf_check(X, m: Measure, N=1_000_000, rng=None, threads=None, stats=None,
                       quantiles=(0.25, 0.5, 0.75, 0.9), fractions=(0.25, 0.5, 0.75)) -> list:
    """1 - F((1-l) t - l s) >= (1 - F(t))^{1-l} F(s)^l for 0 < l < t/(t+s).

    The left side is taken at its upper CP limit and the right side at the
    lower CP limits of both factors.
    """
    st = _stats(X, m, N, rng, threads, stats)
    qs = [st.quantile(q) for q in quantiles]
    grid = [(t, s, fr * t / (t + s)) for t in qs for s in qs for fr in fractions]
    alpha = bonferroni(ALPHA, 3 * len(grid))
    n = st.count
    rows = []
    for t, s, lam in grid:
        u = (1 - lam) * t - lam * s
        lhs_events = n - int(st.count_below(u, strict=False))
        te = TailEstimate(u, lhs_events, n, alpha)
        tail_t = n - int(st.count_below(t, strict=False))
        below_s = int(st.count_below(s, strict=False))
        rhs = clopper_pearson(tail_t, n, alpha)[0] ** (1 - lam) * clopper_pearson(below_s, n, alpha)[0] ** lam
        rows.append(_row("cdf-seminorm", "lambda", lam, te, rhs, te.above(rhs), t=t, s=s))
    return rows


@dataclass
class CdfProfile:
    grid: np.ndarray
    F: np.ndarray
    logF: np.ndarray
    second_diff: np.ndarray
    noise: np.ndarray

    @property
    def concave(self) -> bool:
        return bool(np.all(self.second_diff <= self.noise))


def logconcavity_profile(X, m: Measure, grid=None, N=1_000_000, rng=None, threads=None, stats=None,
                         points: int = 24, boot: int = 200) -> CdfProfile:
    """Second differences of log F on a grid against a 3 SE bootstrap band.

    The bootstrap resamples the multinomial counts of the grid cells.
    """
    rng = as_stream(rng)
    st = _stats(X, m, N, rng, threads, stats)
    if grid is None:
        grid = np.linspace(st.quantile(0.01), st.quantile(0.99), points)
    grid = np.asarray(grid, dtype=float)
    cum = st.count_below(grid, strict=False)
    cells = np.diff(np.concatenate([[0], cum, [st.count]]))
    F = cum / st.count
    logF = np.log(F)

    def d2(lf):
        return lf[..., :-2] - 2 * lf[..., 1:-1] + lf[..., 2:]

    g = rng.spawn().generator
    reps = g.multinomial(st.count, cells / st.count, size=boot)
    Fb = np.cumsum(reps, axis=1)[:, :-1] / st.count
    with np.errstate(divide="ignore"):
        se = d2(np.log(Fb)).std(axis=0, ddof=1)
    return CdfProfile(grid, F, logF, d2(logF), 3 * se)


def _nu1_quantile(u):
    u = np.asarray(u, dtype=float)
    return np.where(u < 0.5, np.log(2 * np.maximum(u, 1e-300)), -np.log(2 * np.maximum(1 - u, 1e-300)))


def transport_derivative_probe(X, m: Measure, N=1_000_000, rng=None, threads=None, stats=None) -> dict:
    """(F_nu1^{-1} o F)'(med) by a symmetric difference, and its product with E| |Z| - med |."""
    st = _stats(X, m, N, rng, threads, stats)
    _, med, h = density_at_median(st)
    lo, hi = _nu1_quantile(st.cdf([med - h, med + h]))
    deriv = float((hi - lo) / (2 * h))
    ratio = deriv * st.mean_abs_dev(med)
    return {"check": "transport-derivative", "median": med, "derivative": deriv, "ratio": ratio,
            "bound": TRANSPORT_FLOOR, "pass": bool(np.isfinite(deriv) and deriv > 0 and ratio >= TRANSPORT_FLOOR),
            "asserted": True}


def transport_tail_check(X, t_grid, N=1_000_000, rng=None, threads=None, f=None, grad=None) -> list:
    """P(f(Z) - E f <= -t sqrt(E|grad f|^2)) <= exp(-t^2/rho), rho = 2, Z Gaussian.

    ``f`` and ``grad`` default to the gauge of X and its a.e. gradient.
    """
    rng = as_stream(rng)
    f = X.gauge if f is None else f
    grad = X.gradient if grad is None else grad
    n = X.dim
    grad(np.ones((1, n)))  # raises NoGradient before sampling
    m = Measure("gaussian", n)

    def draw(s, size):
        z = m.sample(s, size)
        g = grad(z)
        return np.stack([f(z), np.einsum("ij,ij->i", g, g)], axis=1)

    vals = map_blocks(draw, int(N), n, rng, threads)
    fs = SampleStats(vals[:, 0])
    g2 = float(SampleStats(vals[:, 1]).mean)
    scale = math.sqrt(g2)
    t_grid = [float(t) for t in t_grid]
    alpha = bonferroni(ALPHA, len(t_grid))
    rows = []
    for t in t_grid:
        thr = fs.mean - t * scale
        te = TailEstimate(thr, int(fs.count_below(thr, strict=False)), fs.count, alpha)
        bound = math.exp(-t * t / TRANSPORT_RHO)
        rows.append(_row("transport", "t", t, te, bound, te.below(bound), grad_sq=g2, rho=TRANSPORT_RHO))
    return rows


def exponential_norm_profile(p: float, n_list, N=200_000, rng=None, threads=None) -> dict:
    """Mean and variance of |W|_p for W ~ nu_1^n with their size normalizations."""
    from .bodies import Lp

    rng = as_stream(rng)
    rows = []
    for n in n_list:
        s = norm_stats(Lp(int(n), p), Measure("exponential", int(n)), N, rng.spawn(), threads)
        if math.isinf(p):
            var_norm, mean_norm = s.variance, s.mean / math.log(n)
        else:
            var_norm, mean_norm = s.variance * n ** (1 - 2 / p), s.mean / (p * n ** (1 / p))
        rows.append({"n": int(n), "mean": s.mean, "mean_se": s.se_mean, "var": s.variance,
                     "var_normalized": var_norm, "mean_normalized": mean_norm})
    var_stab = stability([r["var_normalized"] for r in rows])
    mean_stab = stability([r["mean_normalized"] for r in rows])
    return {"p": p, "rows": rows, "var_stability": var_stab, "mean_stability": mean_stab,
            "pass": var_stab <= 0.4}


def suite(X: NormedSpace, m: Measure, N=1_000_000, rng=None, threads=None,
          t_grid=(1, 2, 4, 8, 16, 32), eps_grid=(0.3, 0.5, 0.7), borell_t=(1.5, 2.0, 3.0)) -> list:
    """All explicit-constant checks on one shared sample of |Z|."""
    st = norm_stats(X, m, N, rng, threads)
    med = st.median
    rows = logconcave_smalldev_check(X, m, t_grid, stats=st)
    rows.append(density_lower_check(X, m, stats=st))
    rows += borell_check(X, m, 1.1 * med, [b * med for b in borell_t], stats=st)
    rows += seminorm_cdf_check(X, m, stats=st)
    if m.kind in SMALL_BALL_MEASURES:
        rows += small_ball_check(X, m, eps_grid, stats=st)
    for r in rows:
        r.setdefault("space", X.label)
        r.setdefault("measure", m.label)
    return rows


def gaussian_cube_cdf(n: int, s: float) -> float:
    """P(|Z|_inf <= s) = (2 Phi(s) - 1)^n."""
    return float((2 * norm.cdf(s) - 1) ** n)


def uniform_cube_cdf(n: int, t: float) -> float:
    """P(|x|_inf <= t) = t^n on [0, 1] for x uniform on the cube."""
    return float(min(1.0, max(0.0, t)) ** n)


def uniform_small_deviation(n: int, eps: float) -> float:
    """mu_K(|x|_K <= (1-eps) m) = (1-eps)^n / 2 for the uniform measure on K."""
    return 0.5 * (1 - eps) ** n
