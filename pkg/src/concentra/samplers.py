"""Seeded, splittable random sources and the sampling laws used throughout.

Every random quantity is drawn from an :class:`RngStream`, a thin wrapper around
numpy's counter-based Philox generator keyed by ``(seed, stream_id)``.  Child
streams are derived by hashing, so a Monte Carlo task split into blocks gives
the same numbers no matter how the blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .linalg import Subspace, orthonormalize

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """Counter-based random stream identified by ``(seed, stream_id)``.

    Not thread safe; give each worker its own stream via :meth:`child`.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)
        self.generator = np.random.Generator(self._bitgen)
        self._spawned = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id:#x})"

    @property
    def counter(self) -> int:
        return int(self._bitgen.state["state"]["counter"][0])

    def child(self, index: int) -> "RngStream":
        """The index-th child stream; pure function of (seed, stream_id, index)."""
        return RngStream(self.seed, _splitmix64(self.stream_id ^ _splitmix64(int(index) + 1)))

    def spawn(self) -> "RngStream":
        """Next unused child stream; successive calls never repeat."""
        self._spawned += 1
        return self.child(_splitmix64(self._spawned) ^ 0x5DEECE66D)

    def identity(self) -> str:
        return f"philox4x64:seed={self.seed}:stream={self.stream_id}"


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(int(rng))


MEASURE_KINDS = ("gaussian", "exponential", "sphere", "uniform-ball", "uniform-cube")
LOG_CONCAVE = ("gaussian", "exponential", "uniform-ball", "uniform-cube")


@dataclass(frozen=True)
class Measure:
    """A sampling law on R^n.

    ``kind`` is one of gaussian, exponential (density 2^-n e^{-|x|_1}), sphere
    (uniform on S^{n-1}), uniform-ball (uniform on the unit l_p ball) and
    uniform-cube (uniform on [-1, 1]^n).
    """

    kind: str
    dim: int
    p: float | None = None

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise SpecError(f"unknown measure kind {self.kind!r}")
        if self.dim < 1:
            raise SpecError("measure dimension must be positive")
        if self.kind == "uniform-ball":
            if self.p is None or not (self.p >= 1):
                raise SpecError("uniform-ball needs p >= 1")
            if math.isinf(self.p):
                object.__setattr__(self, "kind", "uniform-cube")
                object.__setattr__(self, "p", None)

    @property
    def log_concave(self) -> bool:
        return self.kind in LOG_CONCAVE

    @property
    def label(self) -> str:
        if self.kind == "uniform-ball":
            return f"uniform-ball:p={_fmt_p(self.p)}"
        return self.kind

    def sample(self, rng: RngStream, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (int(size), self.dim)
        g = rng.generator
        if self.kind == "gaussian":
            return g.standard_normal(shape)
        if self.kind == "exponential":
            e = g.standard_exponential(shape)
            return np.where(g.random(shape) < 0.5, -e, e)
        if self.kind == "sphere":
            z = g.standard_normal(shape)
            return z / np.linalg.norm(z, axis=-1, keepdims=True)
        if self.kind == "uniform-cube":
            return g.uniform(-1.0, 1.0, shape)
        return _uniform_lp_ball(g, self.p, shape)


def _uniform_lp_ball(g: np.random.Generator, p: float, shape) -> np.ndarray:
    # x = y / (|y|_p^p + E)^{1/p}, y_i iid with density ~ exp(-|t|^p), E ~ Exp(1)
    mag = g.standard_gamma(1.0 / p, shape) ** (1.0 / p)
    y = np.where(g.random(shape) < 0.5, -mag, mag)
    e = g.standard_exponential(shape[:-1])
    denom = (np.sum(mag**p, axis=-1) + e) ** (1.0 / p)
    return y / denom[..., None]


def _fmt_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    return f"{p:g}"


def sample(m: Measure, rng: RngStream, size: int | None = None) -> np.ndarray:
    return m.sample(rng, size)


def gaussian_matrix(k: int, n: int, rng: RngStream) -> np.ndarray:
    if k < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return rng.generator.standard_normal((k, n))


def haar_grassmann(n: int, k: int, rng: RngStream) -> Subspace:
    """Uniformly distributed k-dimensional subspace of R^n."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    return orthonormalize(gaussian_matrix(k, n, rng))


def sphere_points(k: int, count: int, rng: RngStream) -> np.ndarray:
    z = rng.generator.standard_normal((count, k))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def parse_measure(spec: str, dim: int) -> Measure:
    """Parse CLI strings such as ``gaussian`` or ``uniform-ball:p=1``."""
    parts = [s.strip() for s in str(spec).strip().lower().split(":") if s.strip()]
    if not parts:
        raise SpecError("empty measure specification")
    kind, opts = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise SpecError(f"bad measure option {item!r} in {spec!r}")
        key, val = item.split("=", 1)
        opts[key] = val
    aliases = {"normal": "gaussian", "laplace": "exponential", "cube": "uniform-cube"}
    kind = aliases.get(kind, kind)
    if kind not in MEASURE_KINDS:
        raise SpecError(f"unknown measure {parts[0]!r}")
    p = None
    if kind == "uniform-ball":
        if set(opts) != {"p"}:
            raise SpecError("uniform-ball needs exactly the option p")
        p = _parse_real(opts["p"], spec)
    elif opts:
        raise SpecError(f"measure {kind} takes no options")
    return Measure(kind, dim, p)


def _parse_real(text: str, spec: str) -> float:
    if text in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"bad number {text!r} in {spec!r}") from None
