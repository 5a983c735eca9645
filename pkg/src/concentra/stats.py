"""Sample summaries, parameter estimates and exact binomial intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import MeanNearZero, NonFinite

MERGE_CHUNK = 1 << 16


@dataclass(frozen=True)
class Moments:
    """(count, mean, M2) triple; M2 is the sum of squared deviations."""

    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls(0, 0.0, 0.0)
        mu = float(x.mean())
        return cls(int(x.size), mu, float(np.sum((x - mu) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        n = self.count + other.count
        d = other.mean - self.mean
        mean = self.mean + d * other.count / n
        m2 = self.m2 + other.m2 + d * d * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


def merge_pairwise(parts: list[Moments]) -> Moments:
    """Balanced, order-fixed reduction of moment triples."""
    if not parts:
        return Moments(0, 0.0, 0.0)
    level = list(parts)
    while len(level) > 1:
        nxt = [level[i].merge(level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def moments_of(x: np.ndarray) -> Moments:
    x = np.asarray(x, dtype=float).ravel()
    return merge_pairwise([Moments.of(x[i : i + MERGE_CHUNK]) for i in range(0, x.size, MERGE_CHUNK)])


@dataclass
class SampleStats:
    """Retained sample of a scalar statistic with its moments."""

    values: np.ndarray
    count: int = field(init=False)
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise NonFinite("statistic produced NaN or Inf")
        self.values = v
        m = moments_of(v)
        self.count, self.mean, self.variance = m.count, m.mean, max(m.variance, 0.0)
        self._sorted = None

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.variance / self.count)

    @property
    def sorted(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.values)
        return self._sorted

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.sorted, q))

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    def cdf(self, t) -> np.ndarray:
        """Empirical P(X <= t)."""
        return np.searchsorted(self.sorted, np.asarray(t, dtype=float), side="right") / self.count

    def count_below(self, t, strict: bool = True):
        side = "left" if strict else "right"
        return np.searchsorted(self.sorted, np.asarray(t, dtype=float), side=side)

    def mean_abs_dev(self, center: float) -> float:
        return float(np.mean(np.abs(self.values - center)))

    def mean_excess(self, center: float) -> float:
        return float(np.mean(np.maximum(self.values - center, 0.0)))


@dataclass(frozen=True)
class ParamEstimate:
    value: float
    standard_error: float
    n: int
    method: str

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.standard_error


def beta_estimate(s: SampleStats) -> ParamEstimate:
    """Var/mean^2 with a delta-method standard error.

    The influence function of sigma^2/mu^2 is
    ((x-mu)^2 - sigma^2)/mu^2 - 2 sigma^2 (x-mu)/mu^3.
    """
    mu, var = s.mean, s.variance
    if abs(mu) <= 10 * s.se_mean or mu == 0:
        raise MeanNearZero(f"mean {mu:.3g} is within 10 SE of zero")
    d = s.values - mu
    infl = (d * d - var) / mu**2 - 2 * var * d / mu**3
    se = float(np.std(infl, ddof=1) / math.sqrt(s.count))
    return ParamEstimate(var / mu**2, se, s.count, "monte-carlo/delta")


def clopper_pearson(x: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact two-sided binomial interval at level 1 - alpha."""
    if n <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= x <= n:
        raise ValueError("successes must lie in [0, n]")
    lo = 0.0 if x == 0 else float(sps.beta.ppf(alpha / 2, x, n - x + 1))
    hi = 1.0 if x == n else float(sps.beta.ppf(1 - alpha / 2, x + 1, n - x))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    events: int
    trials: int
    alpha: float = 0.05

    @property
    def p_hat(self) -> float:
        return self.events / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return clopper_pearson(self.events, self.trials, self.alpha)

    @property
    def ci_low(self) -> float:
        return self.interval[0]

    @property
    def ci_high(self) -> float:
        return self.interval[1]

    @property
    def se(self) -> float:
        p = self.p_hat
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    def below(self, bound: float) -> bool:
        """p <= bound is not rejected: the lower CP limit does not exceed it."""
        return self.ci_low <= bound

    def above(self, bound: float) -> bool:
        return self.ci_high >= bound


def bonferroni(alpha: float, rows: int) -> float:
    return alpha / max(1, rows)


def stability(values) -> float:
    """max/min - 1 of positive values; 0 means perfectly stable."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        return math.inf
    return float(v.max() / v.min() - 1.0)
