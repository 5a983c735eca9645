"""Widths and sections of a body along Haar random subspaces.

A :class:`NormedSpace` plays two roles here: its gauge defines sections
A ∩ F, and its support function h_A defines projections P_F A, since
h_{P_F A}(theta) = h_A(theta) for theta in F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import ortho_group

from .bodies import NormedSpace, circumradius
from .estimators import beta, dual_space, scalar_stats, sphere_stats, width_moment
from .linalg import Subspace, orthonormalize, polar_decompose, singular_values
from .parallel import map_blocks, ordered_map
from .samplers import Measure, RngStream, as_stream, gaussian_matrix, haar_grassmann, sphere_points
from .stats import ParamEstimate, SampleStats, TailEstimate

RATIO_INFLATION = 1.01
REFINE_STARTS = 10
INCLUSION_CONST = 0.05


def _subspace_stats(f, F: Subspace, N: int, rng, threads=None) -> SampleStats:
    rng = as_stream(rng)
    k = F.dim
    vals = map_blocks(lambda s, size: f(F.embed(sphere_points(k, size, s))), int(N), F.ambient_dim, rng, threads)
    return SampleStats(vals)


def projected_width(A: NormedSpace, F: Subspace, N: int, rng, threads=None) -> ParamEstimate:
    """w(P_F A): mean of h_A over the unit sphere of F."""
    s = _subspace_stats(A.support, F, N, rng, threads)
    return ParamEstimate(s.mean, s.se_mean, s.count, "monte-carlo/subspace-sphere")


def section_mean(X: NormedSpace, F: Subspace, N: int, rng, threads=None) -> ParamEstimate:
    """M_F = M(A ∩ F): mean of the gauge over the unit sphere of F."""
    s = _subspace_stats(X.gauge, F, N, rng, threads)
    return ParamEstimate(s.mean, s.se_mean, s.count, "monte-carlo/subspace-sphere")


def _sphere_extreme(f, F: Subspace, probe_count: int, rng: RngStream, largest: bool) -> tuple[float, np.ndarray]:
    coords = sphere_points(F.dim, probe_count, rng)
    vals = f(F.embed(coords))
    sign = -1.0 if largest else 1.0
    order = np.argsort(sign * vals)
    best = float(vals[order[0]])
    if F.dim == 1:
        return best, coords[order[0]]

    def obj(c):
        nc = np.linalg.norm(c)
        return sign * float(f(F.embed(c / nc))) if nc > 0 else np.inf

    arg = coords[order[0]]
    for i in order[:REFINE_STARTS]:
        res = minimize(obj, coords[i], method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-12})
        if sign * res.fun < sign * best:
            best, arg = sign * float(res.fun), res.x / np.linalg.norm(res.x)
    return best, arg


@dataclass(frozen=True)
class InradiusEstimate:
    value: float
    direction: np.ndarray = field(repr=False)
    probe_count: int = 0
    upper_bound: bool = True  # the true minimum can only be smaller


def projected_inradius(A: NormedSpace, F: Subspace, probe_count: int = 20_000, rng=None) -> InradiusEstimate:
    """r(P_F A) = min of h_A over S_F, by probing plus Nelder-Mead refinement."""
    rng = as_stream(rng)
    val, arg = _sphere_extreme(A.support, F, probe_count, rng.spawn(), largest=False)
    return InradiusEstimate(val, arg, probe_count, True)


def projected_circumradius(A: NormedSpace, F: Subspace, probe_count: int = 20_000, rng=None) -> float:
    """max of h_A over S_F (a lower bound on the true maximum)."""
    rng = as_stream(rng)
    return _sphere_extreme(A.support, F, probe_count, rng.spawn(), largest=True)[0]


# -- concentration over the Grassmannian ----------------------------------------


def _reference(A: NormedSpace, mode: str, N: int, rng, threads=None) -> ParamEstimate:
    f = A.support if mode == "width" else A.gauge
    s = sphere_stats(f, A.dim, N, rng, threads)
    return ParamEstimate(s.mean, s.se_mean, s.count, "monte-carlo/sphere")


@dataclass
class ConcentrationTable:
    label: str
    mode: str
    k: int
    trials: int
    reference: float
    ratios: np.ndarray = field(repr=False)
    rows: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(self.ratios.mean())

    @property
    def std(self) -> float:
        return float(self.ratios.std(ddof=1))


def concentration_experiment(
    A: NormedSpace,
    mode: str,
    k: int,
    trials: int = 400,
    N: int = 20_000,
    rng=None,
    t_grid=None,
    threads=None,
) -> ConcentrationTable:
    """Per-trial ratios w(P_F A)/w(A) (width) or M_F/M (section) for Haar F."""
    if mode not in ("width", "section"):
        raise ValueError("mode must be 'width' or 'section'")
    if trials < 100:
        raise ValueError("need at least 100 trials")
    n = A.dim
    if not 1 <= k <= n - 1:
        raise ValueError("k must lie in [1, n-1]")
    rng = as_stream(rng)
    ref = _reference(A, mode, 10 * N, rng.spawn(), threads)
    f = A.support if mode == "width" else A.gauge
    task = rng.spawn()

    def one(i):
        s = task.child(i)
        F = haar_grassmann(n, k, s)
        return float(f(F.embed(sphere_points(k, N, s))).mean())

    ratios = np.array(ordered_map(one, range(trials), threads)) / ref.value
    t0 = 2 * math.sqrt(k / n)
    if t_grid is None:
        t_grid = t0 * np.array([1.0, 1.5, 2.0, 3.0, 4.0])
    rows = []
    dev = np.abs(ratios - 1.0)
    for t in sorted(float(x) for x in t_grid):
        if t < t0:
            continue
        te = TailEstimate(t, int(np.sum(dev > t)), trials)
        rows.append({
            "t": t,
            "count": te.events,
            "trials": trials,
            "p_hat": te.p_hat,
            "ci_low": te.ci_low,
            "ci_high": te.ci_high,
            "t2k": t * t * k,
            "neg_log_tail": -math.log(te.p_hat) if te.events else math.inf,
        })
    return ConcentrationTable(A.label, mode, k, trials, ref.value, ratios, rows)


def std_scaling(A: NormedSpace, mode: str, k: int, trials: int = 400, N: int = 20_000, rng=None, threads=None) -> dict:
    """Empirical std of the ratio at k and 4k; sqrt(k) scaling predicts 1/2."""
    rng = as_stream(rng)
    a = concentration_experiment(A, mode, k, trials, N, rng.spawn(), threads=threads)
    b = concentration_experiment(A, mode, 4 * k, trials, N, rng.spawn(), threads=threads)
    return {"k": k, "std_k": a.std, "std_4k": b.std, "ratio": b.std / a.std if a.std > 0 else math.nan}


# -- projection inequalities -------------------------------------------------------


def polar_sandwich_check(A: NormedSpace, T, N: int = 100_000, rng=None) -> dict:
    """s_k w(P_F A) <= w(TA) <= s_1 w(P_F A) for F = Im T^*.

    Both widths are averaged over the same points u of S^{k-1}
    (h_{TA}(u) = h_A(T^* u) and h_{P_F A}(Q^* u)), and each inequality is
    judged on the paired difference with a 3 SE allowance.
    """
    T = np.asarray(T, dtype=float)
    S, F = polar_decompose(T)
    s = singular_values(T)
    rng = as_stream(rng)
    k = T.shape[0]
    u = sphere_points(k, int(N), rng.spawn())
    hT = A.support(u @ T)
    hP = A.support(F.embed(u))
    lower = hT - s[-1] * hP
    upper = s[0] * hP - hT

    def ok(d):
        return d.mean() >= -3 * d.std(ddof=1) / math.sqrt(len(d)) - 1e-12

    return {
        "s_max": float(s[0]),
        "s_min": float(s[-1]),
        "w_TA": float(hT.mean()),
        "w_PFA": float(hP.mean()),
        "lower_ok": bool(ok(lower)),
        "upper_ok": bool(ok(upper)),
        "pass": bool(ok(lower) and ok(upper)),
    }


def _principal(E: Subspace, F: Subspace) -> tuple[float, float]:
    D = E.projection_matrix() - F.projection_matrix()
    sv = np.linalg.svd(D, compute_uv=False)
    return float(sv[0]), float(np.sqrt(np.sum(sv**2)) / math.sqrt(E.dim))


def lipschitz_probe(A: NormedSpace, k: int, pair_count: int = 500, N: int = 4000, rng=None, threads=None) -> dict:
    """Largest observed |w(P_E A) - w(P_F A)| relative to both distance envelopes.

    F is a random perturbation of E at scale 10^U(-2, 0); the two widths
    use the same sphere coordinates so the difference has no noise floor.
    """
    n = A.dim
    rng = as_stream(rng)
    w = width_moment(A, 1.0, 200_000, rng.spawn(), threads).value
    R = circumradius(A).support_R
    task = rng.spawn()

    def one(i):
        s = task.child(i)
        g = s.generator
        E = haar_grassmann(n, k, s)
        tau = 10.0 ** g.uniform(-2.0, 0.0)
        F = orthonormalize(E.basis + tau * g.standard_normal((k, n)))
        u = sphere_points(k, N, s)
        dw = abs(float(np.mean(A.support(E.embed(u)) - A.support(F.embed(u)))))
        s_inf, s_2 = _principal(E, F)
        return dw, s_inf, s_2

    res = ordered_map(one, range(pair_count), threads)
    r_inf, r_2 = [], []
    for dw, s_inf, s_2 in res:
        if s_inf > 1e-12:
            r_inf.append(dw / (math.sqrt(n / k) * w * s_inf))
            r_2.append(dw / (R * s_2))
    mi = max(r_inf) if r_inf else 0.0
    m2 = max(r_2) if r_2 else 0.0
    return {"pairs": len(r_inf), "max_ratio_inf": mi, "max_ratio_hs": m2, "pass": mi < 10 and m2 < 10}


def unit_pair(n: int, dot: float) -> tuple[np.ndarray, np.ndarray]:
    """u = e_1 and a unit v with <u, v> = dot."""
    if n < 2 or not -1 <= dot <= 1:
        raise ValueError("need n >= 2 and |dot| <= 1")
    u = np.zeros(n)
    v = np.zeros(n)
    u[0] = 1.0
    v[0], v[1] = dot, math.sqrt(1 - dot * dot)
    return u, v


def sphere_identity_check(u, v, N: int = 100_000, rng=None, threads=None) -> dict:
    """Mean over S^{n-1} of |<u,t>u - <v,t>v|^2 against (2/n)(1 - <u,v>^2)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(u) - 1) > 1e-12 or abs(np.linalg.norm(v) - 1) > 1e-12:
        raise ValueError("u and v must be unit vectors")
    n = len(u)
    dot = float(u @ v)

    def f(t):
        d = np.outer(t @ u, u) - np.outer(t @ v, v)
        return np.einsum("ij,ij->i", d, d)

    s = sphere_stats(f, n, N, rng, threads)
    target = 2.0 / n * (1 - dot * dot)
    res = s.mean - target
    return {"n": n, "dot": dot, "estimate": s.mean, "target": target, "residual": res, "se": s.se_mean,
            "pass": abs(res) <= 3 * s.se_mean + 1e-12}


def isotropic_design(k: int, blocks: int, rng: RngStream) -> np.ndarray:
    """Unit vectors u_j with (1/M) sum u_j u_j^T = I/k exactly: the columns of
    ``blocks`` independent Haar orthogonal k x k matrices."""
    if k == 1:
        return np.ones((1, 1))
    seed = int(rng.generator.integers(0, 2**32 - 1))
    mats = ortho_group.rvs(dim=k, size=blocks, random_state=seed)
    mats = np.asarray(mats).reshape(blocks, k, k)
    return np.concatenate([m.T for m in mats], axis=0)


def gaussian_width_variance_check(A: NormedSpace, k: int, N: int = 10_000, rng=None, blocks: int = 16, threads=None) -> dict:
    """Var w(GA) <= min(R(A)^2/k, Var h_A(Z)) for a k x n Gaussian G.

    w(GA) is the average of h_A(G^T u) over a fixed isotropic design of unit
    vectors; each G^T u is standard Gaussian, so E w(GA) = E h_A(Z) and both
    variance bounds hold for the discretized statistic exactly.
    """
    rng = as_stream(rng)
    n = A.dim
    R = circumradius(A).support_R
    U = isotropic_design(k, blocks, rng.spawn())

    def draw(s, size):
        G = s.generator.standard_normal((size, k, n))
        return A.support(np.einsum("jk,mkn->mjn", U, G)).mean(axis=1)

    w = SampleStats(map_blocks(draw, N, n * k * len(U), rng, threads))
    h = scalar_stats(Measure("gaussian", n), A.support, max(N, 100_000), rng, threads)

    def var_se(st: SampleStats) -> float:
        d = st.values - st.mean
        return float(math.sqrt(max(np.mean(d**4) - st.variance**2, 0.0) / st.count))

    vw, vw_se = w.variance, var_se(w)
    vh, vh_se = h.variance, var_se(h)
    ok_R = vw <= R * R / k + 3 * vw_se
    ok_h = vw <= vh + 3 * math.hypot(vw_se, vh_se)
    return {"k": k, "var_w": vw, "var_w_se": vw_se, "R2_over_k": R * R / k, "var_h": vh, "var_h_se": vh_se,
            "mean_w": w.mean, "mean_h": h.mean, "pass": bool(ok_R and ok_h)}


def inclusion_dimensions(A: NormedSpace, epsilon: float, N: int = 200_000, rng=None, threads=None) -> dict:
    """Subspace dimensions for the two one-sided inclusions.

    k* = n (w/R)^2 is the Dvoretzky number of the dual norm and beta* its
    beta under the Gaussian measure; both dimensions are clipped below at 1.
    """
    rng = as_stream(rng)
    n = A.dim
    w = width_moment(A, 1.0, N, rng.spawn(), threads).value
    R = circumradius(A).support_R
    kstar = n * (w / R) ** 2
    bstar = beta(dual_space(A), Measure("gaussian", n), N, rng.spawn(), threads).value
    ku = max(1, int(math.floor(INCLUSION_CONST * epsilon**2 * kstar)))
    kl = max(1, int(math.floor(INCLUSION_CONST * epsilon**2 / (bstar * math.log(1 / epsilon)))))
    return {"w": w, "k_star": kstar, "beta_star": bstar, "k_upper": min(ku, n - 1), "k_lower": min(kl, n - 1)}


def one_sided_inclusion_rates(
    A: NormedSpace,
    epsilon: float,
    k_upper: int,
    k_lower: int,
    trials: int = 200,
    rng=None,
    probe_count: int | None = None,
    w: float | None = None,
    threads=None,
) -> dict:
    """Fractions of Haar subspaces with P_E A ⊆ (1+eps) w B_E and P_F A ⊇ (1-eps) w B_F."""
    rng = as_stream(rng)
    n = A.dim
    if w is None:
        w = width_moment(A, 1.0, 200_000, rng.spawn(), threads).value
    task = rng.spawn()

    def upper(i):
        s = task.child(2 * i)
        E = haar_grassmann(n, k_upper, s)
        pc = probe_count or 10_000 * k_upper
        hi = float(A.support(E.embed(sphere_points(k_upper, pc, s))).max())
        return hi * (RATIO_INFLATION if k_upper > 1 else 1.0) <= (1 + epsilon) * w

    def lower(i):
        s = task.child(2 * i + 1)
        F = haar_grassmann(n, k_lower, s)
        pc = probe_count or 10_000 * k_lower
        return projected_inradius(A, F, pc, s).value >= (1 - epsilon) * w

    ri = ordered_map(upper, range(trials), threads)
    rii = ordered_map(lower, range(trials), threads)
    return {"w": w, "k_upper": k_upper, "k_lower": k_lower, "trials": trials,
            "rate_upper": sum(ri) / trials, "rate_lower": sum(rii) / trials}


def spherical_implication_check(X: NormedSpace, k: int, epsilon: float, trials: int = 200, probe_count: int | None = None,
                                rng=None, threads=None) -> dict:
    """Subspaces with all probe gauges in (1 ± eps/2) M are (1+2 eps)-spherical."""
    rng = as_stream(rng)
    n = X.dim
    M = sphere_stats(X.gauge, n, 200_000, rng.spawn(), threads).mean
    task = rng.spawn()
    pc = probe_count or 10_000 * k

    def one(i):
        s = task.child(i)
        F = haar_grassmann(n, k, s)
        v = X.gauge(F.embed(sphere_points(k, pc, s)))
        in_band = bool(np.all(np.abs(v / M - 1) < epsilon / 2))
        spherical = bool(v.max() / v.min() < 1 + 2 * epsilon)
        return in_band, spherical

    flags = ordered_map(one, range(trials), threads)
    band = sum(a for a, _ in flags)
    viol = sum(a and not b for a, b in flags)
    return {"in_band": band, "violations": viol, "trials": trials, "pass": viol == 0}


def width_small_ball_profile(A: NormedSpace, ks, eps_grid, trials: int = 400, N: int = 4000, rng=None, threads=None) -> list:
    """Slope of log P(w(P_F A) <= eps w(A)) against log eps for each k (shape report)."""
    rng = as_stream(rng)
    w = width_moment(A, 1.0, 200_000, rng.spawn(), threads).value
    out = []
    for k in ks:
        task = rng.spawn()

        def one(i, k=k, task=task):
            s = task.child(i)
            F = haar_grassmann(A.dim, k, s)
            return float(A.support(F.embed(sphere_points(k, N, s))).mean())

        vals = np.array(ordered_map(one, range(trials), threads)) / w
        eps = np.asarray(sorted(eps_grid), dtype=float)
        p = np.array([np.mean(vals <= e) for e in eps])
        keep = p > 0
        slope = float(np.polyfit(np.log(eps[keep]), np.log(p[keep]), 1)[0]) if keep.sum() >= 2 else math.nan
        out.append({"k": k, "eps": eps.tolist(), "p_hat": p.tolist(), "slope": slope})
    return out
