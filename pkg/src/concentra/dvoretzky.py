"""Random Gaussian embeddings of l_2^k into a normed space, certified through nets,
and Monte Carlo probabilities that random sections are almost Euclidean."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .bodies import NormedSpace
from .estimators import beta, norm_stats
from .nets import MAX_DIM, build_net, extension_bounds
from .parallel import ordered_map
from .samplers import Measure, RngStream, as_stream, gaussian_matrix, haar_grassmann, sphere_points
from .stats import clopper_pearson

RATIO_INFLATION = 1.01
PROBES_PER_DIM = 10_000
K_MAX = 16
PROBE_ELEMS = 1 << 22
CERT_TOL = 1e-9


@dataclass(frozen=True)
class EmbeddingReport:
    label: str
    k: int
    epsilon: float
    delta: float
    net_card: int
    mean_norm: float
    net_min: float
    net_max: float
    net_event: bool
    certified_interval: tuple[float, float]
    sampled_min: float
    sampled_max: float
    probe_count: int

    @property
    def sampled_distortion(self) -> float:
        return self.sampled_max / self.sampled_min

    @property
    def certificate_holds(self) -> bool:
        """Sampled values stay inside the certified interval (vacuous without the net event)."""
        if not self.net_event:
            return True
        lo, hi = self.certified_interval
        return self.sampled_min >= lo * (1 - CERT_TOL) and self.sampled_max <= hi * (1 + CERT_TOL)


def _probe_rows(n: int) -> int:
    return max(256, PROBE_ELEMS // max(1, n))


def _image_norm_range(X: NormedSpace, G: np.ndarray, count: int, rng: RngStream) -> tuple[float, float]:
    k = G.shape[1]
    lo, hi = math.inf, -math.inf
    rows = _probe_rows(X.dim)
    done = 0
    while done < count:
        c = min(rows, count - done)
        v = X.gauge(sphere_points(k, c, rng) @ G.T)
        lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
        done += c
    return lo, hi


def embed(
    X: NormedSpace,
    k: int,
    epsilon: float,
    N_mean: int = 100_000,
    rng=None,
    probe_count: int = 100_000,
    net_probes: int = 100_000,
    threads=None,
) -> EmbeddingReport:
    """One run of the variance-method embedding G: l_2^k -> X at net mesh eps/2."""
    if not 1 <= k <= MAX_DIM:
        raise ValueError(f"k must lie in [1, {MAX_DIM}]")
    if not 0 < epsilon < 1 / 3:
        raise ValueError("epsilon must lie in (0, 1/3)")
    rng = as_stream(rng)
    delta = epsilon / 2
    net = build_net(k, delta, net_probes, rng.spawn())
    mean = norm_stats(X, Measure("gaussian", X.dim), N_mean, rng.spawn(), threads).mean
    G = gaussian_matrix(X.dim, k, rng.spawn())
    vals = X.gauge(net.points @ G.T) / mean
    event = bool(np.all(np.abs(vals - 1.0) <= epsilon))
    lo, hi = _image_norm_range(X, G, probe_count, rng.spawn())
    return EmbeddingReport(
        label=X.label,
        k=k,
        epsilon=epsilon,
        delta=delta,
        net_card=net.card,
        mean_norm=mean,
        net_min=float(vals.min()),
        net_max=float(vals.max()),
        net_event=event,
        certified_interval=extension_bounds(epsilon, delta),
        sampled_min=lo / mean,
        sampled_max=hi / mean,
        probe_count=probe_count,
    )


def variance_method_dimension(beta_value: float, epsilon: float) -> tuple[int, float]:
    """floor((1/3) log(1/beta) / log(6e/eps)), clipped below at 1; also the raw value."""
    raw = (1.0 / 3.0) * math.log(1.0 / beta_value) / math.log(6 * math.e / epsilon)
    return max(1, int(math.floor(raw))), raw


def end_to_end(
    X: NormedSpace,
    epsilon: float,
    seeds: int = 100,
    beta_N: int = 200_000,
    N_mean: int = 20_000,
    probe_count: int = 100_000,
    rng=None,
    threads=None,
) -> dict:
    """Run the embedding at the dimension prescribed by the variance method over many seeds."""
    rng = as_stream(rng)
    b = beta(X, Measure("gaussian", X.dim), beta_N, rng.spawn(), threads)
    k, raw = variance_method_dimension(b.value, epsilon)
    base = rng.spawn()
    reports = ordered_map(
        lambda i: embed(X, k, epsilon, N_mean, base.child(i), probe_count, net_probes=20_000, threads=1),
        range(seeds),
        threads,
    )
    hits = sum(r.net_event for r in reports)
    return {
        "space": X.label,
        "beta": b.value,
        "beta_se": b.standard_error,
        "k": k,
        "k_raw": raw,
        "seeds": seeds,
        "net_events": hits,
        "rate": hits / seeds,
        "certificate_violations": sum(not r.certificate_holds for r in reports),
        "reports": reports,
    }


@dataclass(frozen=True)
class SphericalityResult:
    k: int
    epsilon: float
    trials: int
    successes: int
    inflation: float
    ratios: tuple = field(repr=False, default=())

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return clopper_pearson(self.successes, self.trials)


def section_ratio(
    X: NormedSpace, k: int, probe_count: int, rng: RngStream, stop_at: float | None = None
) -> float:
    """Observed max/min of the gauge over probe points of S_F for a Haar random F.

    With ``stop_at`` set, probing stops as soon as the observed ratio reaches
    it, since the verdict can no longer change.
    """
    F = haar_grassmann(X.dim, k, rng)
    if k == 1:
        return 1.0
    rows = min(PROBES_PER_DIM, _probe_rows(X.dim))
    lo, hi, done = math.inf, 0.0, 0
    while done < probe_count:
        c = min(rows, probe_count - done)
        v = X.gauge(F.embed(sphere_points(k, c, rng)))
        lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
        done += c
        if stop_at is not None and hi / lo >= stop_at:
            break
    return hi / lo


def spherical_probability(
    X: NormedSpace,
    k: int,
    epsilon: float,
    trials: int = 200,
    probe_count: int | None = None,
    rng=None,
    threads=None,
) -> SphericalityResult:
    """Fraction of Haar random k-dimensional F with inflated max/min ratio < 1+eps."""
    if trials < 50:
        raise ValueError("need at least 50 trials")
    if not 1 <= k <= X.dim - 1:
        raise ValueError(f"k must lie in [1, n-1], got {k}")
    probe_count = PROBES_PER_DIM * k if probe_count is None else int(probe_count)
    if probe_count < PROBES_PER_DIM * k:
        raise ValueError("probe_count must be at least 1e4 * k")
    rng = as_stream(rng)
    infl = 1.0 if k == 1 else RATIO_INFLATION
    stop = (1 + epsilon) / infl
    task = rng.spawn()
    ratios = ordered_map(lambda i: section_ratio(X, k, probe_count, task.child(i), stop), range(trials), threads)
    succ = sum(r * infl < 1 + epsilon for r in ratios)
    return SphericalityResult(k, epsilon, trials, int(succ), infl, tuple(ratios))


def _threshold(k: int, mode: str) -> float:
    if mode == "half":
        return 0.5
    if mode == "exp_k":
        return 1.0 - math.exp(-k)
    raise ValueError(f"unknown threshold mode {mode!r}")


def estimate_k_eps(
    X: NormedSpace,
    epsilon: float,
    threshold_mode: str = "half",
    trials: int = 200,
    rng=None,
    k_max: int = K_MAX,
    threads=None,
) -> dict:
    """Largest k whose sphericality probability has lower CP limit above the threshold.

    Each k uses its own child stream, so verdicts are shared between calls that
    differ only in epsilon.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    _threshold(1, threshold_mode)
    rng = as_stream(rng)
    base = rng.spawn()
    k_max = min(k_max, X.dim - 1)
    seen: dict[int, SphericalityResult] = {}

    def ok(k: int) -> bool:
        if k not in seen:
            seen[k] = spherical_probability(X, k, epsilon, trials, None, base.child(k), threads)
        return seen[k].interval[0] >= _threshold(k, threshold_mode)

    good, bad = 0, None
    for k in (1, 2, 4, 8, 16):
        k = min(k, k_max)
        if k <= good:
            break
        if ok(k):
            good = k
        else:
            bad = k
            break
    if bad is not None:
        while bad - good > 1:
            mid = (good + bad) // 2
            if ok(mid):
                good = mid
            else:
                bad = mid
    rows = [
        {"k": k, "successes": r.successes, "trials": r.trials, "ci_low": r.interval[0],
         "threshold": _threshold(k, threshold_mode)}
        for k, r in sorted(seen.items())
    ]
    return {"k_hat": good, "epsilon": epsilon, "mode": threshold_mode, "rows": rows}


def rotation_invariance_check(X: NormedSpace, k: int, N: int, rng=None) -> dict:
    """Two-sample KS test that |G theta| and |Z| have the same law for fixed theta."""
    rng = as_stream(rng)
    theta = sphere_points(k, 1, rng.spawn())[0]
    g = rng.spawn().generator
    chunk = max(1, (1 << 22) // (X.dim * k))
    parts, done = [], 0
    while done < N:
        c = min(chunk, N - done)
        parts.append(X.gauge(g.standard_normal((c, X.dim, k)) @ theta))
        done += c
    a = np.concatenate(parts)
    b = norm_stats(X, Measure("gaussian", X.dim), N, rng.spawn()).values
    res = sps.ks_2samp(a, b)
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue), "pass": res.pvalue >= 0.01}
