"""delta-nets on the Euclidean sphere S^{k-1} and the net-to-sphere extension bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import CardinalityExplosion, CoverageFail, VacuousBound
from .samplers import RngStream, as_stream, sphere_points

MAX_BOUND = 1e7
MAX_DIM = 12
POOL_FACTOR = 50
# the net is grown at a slightly smaller radius than delta so that probe
# points landing in the thin uncovered slivers of the pool are still covered
BUILD_SHRINK = 0.95
MAX_REPAIRS = 5


def cardinality_bound(k: int, delta: float) -> float:
    return (1.0 + 2.0 / delta) ** k


@dataclass(frozen=True, eq=False)
class Net:
    k: int
    delta: float
    points: np.ndarray
    probe_count: int
    max_observed_gap: float
    bound_violation: bool = False

    @property
    def card(self) -> int:
        return self.points.shape[0]


def _greedy_separated(pool: np.ndarray, radius: float, seed_points: np.ndarray | None = None) -> np.ndarray:
    """Greedy maximal radius-separated subset of ``pool`` (in pool order).

    Every pool point ends up within ``radius`` of a chosen point.
    """
    tree = cKDTree(pool)
    covered = np.zeros(len(pool), dtype=bool)
    chosen = []
    if seed_points is not None and len(seed_points):
        for idx in tree.query_ball_point(seed_points, radius):
            covered[idx] = True
    for i in range(len(pool)):
        if covered[i]:
            continue
        chosen.append(i)
        covered[tree.query_ball_point(pool[i], radius)] = True
    return pool[chosen]


def _gaps(points: np.ndarray, probes: np.ndarray) -> np.ndarray:
    d, _ = cKDTree(points).query(probes, k=1)
    return d


def build_net(k: int, delta: float, probe_count: int = 100_000, rng=None) -> Net:
    """Greedy delta-net of S^{k-1} from a random pool, certified by fresh probes."""
    if not 1 <= k <= MAX_DIM:
        raise ValueError(f"net dimension must be in [1, {MAX_DIM}]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    bound = cardinality_bound(k, delta)
    if bound > MAX_BOUND:
        raise CardinalityExplosion(f"(1+2/delta)^k = {bound:.3g} exceeds {MAX_BOUND:.0e}")
    rng = as_stream(rng)
    if k == 1:
        points = np.array([[1.0], [-1.0]])
        return Net(1, delta, points, int(probe_count), 0.0, False)
    pool = sphere_points(k, POOL_FACTOR * math.ceil(bound), rng.spawn())
    points = _greedy_separated(pool, BUILD_SHRINK * delta)
    probes = sphere_points(k, int(probe_count), rng.spawn())
    gaps = _gaps(points, probes)
    repairs = 0
    while gaps.max() > delta and repairs < MAX_REPAIRS:
        extra = _greedy_separated(probes[gaps > delta], BUILD_SHRINK * delta, points)
        points = np.vstack([points, extra])
        probes = sphere_points(k, int(probe_count), rng.spawn())
        gaps = _gaps(points, probes)
        repairs += 1
    if gaps.max() > delta:
        raise CoverageFail(f"probe gap {gaps.max():.4f} exceeds delta={delta}")
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    points.setflags(write=False)
    return Net(k, delta, points, int(probe_count), float(gaps.max()), len(points) > math.ceil(bound))


def extension_bounds(epsilon: float, delta: float) -> tuple[float, float]:
    """If 1-eps <= |Tz| <= 1+eps on a delta-net, then on the whole sphere
    (1-eps-2 delta)/(1-delta) <= |T theta| <= (1+eps)/(1-delta)."""
    if not (0 <= epsilon < 1 and 0 <= delta < 1):
        raise ValueError("epsilon and delta must lie in [0, 1)")
    num = 1.0 - epsilon - 2.0 * delta
    if num <= 0:
        raise VacuousBound(f"1 - eps - 2 delta = {num:.3g} <= 0")
    return num / (1.0 - delta), (1.0 + epsilon) / (1.0 - delta)
