"""Finite-dimensional normed spaces given by an evaluable gauge.

Every space acts on arrays whose last axis is the vector, so a batch of ``N``
points of R^n is an ``(N, n)`` array and the gauge returns an ``(N,)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoGradient, SpecError, UnsupportedDual
from .linalg import Subspace

NUMERIC_RESTARTS = 64
NUMERIC_TOL = 1e-6


def lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(np.asarray(x, dtype=float))
    if p == 1:
        return a.sum(axis=-1)
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", a, a))
    if math.isinf(p):
        return a.max(axis=-1)
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)) * safe[..., 0]


def lp_grad(x: np.ndarray, p: float) -> np.ndarray:
    """A subgradient of the l_p norm; ties for p = inf go to the first maximizer."""
    x = np.asarray(x, dtype=float)
    if p == 1:
        return np.sign(x)
    if math.isinf(p):
        g = np.zeros_like(x)
        idx = np.argmax(np.abs(x), axis=-1)
        picked = np.take_along_axis(x, idx[..., None], axis=-1)
        np.put_along_axis(g, idx[..., None], np.sign(picked), axis=-1)
        return g
    nrm = lp_norm(x, p)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    return np.sign(x) * (np.abs(x) / safe) ** (p - 1)


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _fmt(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


@dataclass(frozen=True)
class BodyConstants:
    """b(X) = max of the gauge on S^{n-1}; R(K) = max Euclidean norm over the unit ball."""

    circumradius_b: float
    support_R: float
    exactness: str  # "analytic" or "numeric"


class NormedSpace:
    """Base class; subclasses provide the gauge and, where known, its dual."""

    dim: int
    label: str

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"{self.label}: expected last axis {self.dim}, got {x.shape[-1]}")
        return x

    def gauge(self, x) -> np.ndarray:
        raise NotImplementedError

    def support(self, y) -> np.ndarray:
        raise UnsupportedDual(f"{self.label} has no closed-form support function")

    def gradient(self, x) -> np.ndarray:
        raise NoGradient(f"{self.label} has no registered gradient")

    def support_gradient(self, y) -> np.ndarray:
        raise UnsupportedDual(f"{self.label} has no closed-form support function")

    @property
    def has_dual(self) -> bool:
        return type(self).support is not NormedSpace.support

    def analytic_constants(self) -> BodyConstants | None:
        return None

    def __call__(self, x):
        return self.gauge(x)


@dataclass(frozen=True)
class Lp(NormedSpace):
    dim: int
    p: float

    def __post_init__(self):
        if self.dim < 1:
            raise SpecError("dimension must be positive")
        if not self.p >= 1:
            raise SpecError(f"l_p needs p >= 1, got {self.p}")

    @property
    def label(self) -> str:
        return f"lp:n={self.dim}:p={_fmt(self.p)}"

    def gauge(self, x):
        return lp_norm(self._check(x), self.p)

    def support(self, y):
        return lp_norm(self._check(y), conjugate(self.p))

    def gradient(self, x):
        return lp_grad(self._check(x), self.p)

    def support_gradient(self, y):
        return lp_grad(self._check(y), conjugate(self.p))

    def analytic_constants(self):
        n, p = self.dim, self.p
        b = n ** (1.0 / p - 0.5) if p <= 2 else 1.0
        q = conjugate(p)
        R = n ** (1.0 / q - 0.5) if q <= 2 else 1.0
        return BodyConstants(b, R, "analytic")


def euclidean(n: int) -> Lp:
    return Lp(n, 2.0)


@dataclass(frozen=True)
class AbsPlusLinf(NormedSpace):
    """(t, x) -> |t| + |x|_inf on R x R^{n-1}."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise SpecError("abs+linf needs n >= 2")

    @property
    def label(self) -> str:
        return f"abs+linf:n={self.dim}"

    def gauge(self, x):
        x = self._check(x)
        return np.abs(x[..., 0]) + np.abs(x[..., 1:]).max(axis=-1)

    def support(self, y):
        # unit ball is the l_1-sum of [-1, 1] and B_inf, so the dual is an l_inf-sum
        y = self._check(y)
        return np.maximum(np.abs(y[..., 0]), np.abs(y[..., 1:]).sum(axis=-1))

    def gradient(self, x):
        x = self._check(x)
        g = np.empty_like(x)
        g[..., 0] = np.sign(x[..., 0])
        g[..., 1:] = lp_grad(x[..., 1:], math.inf)
        return g

    def support_gradient(self, y):
        y = self._check(y)
        head = np.abs(y[..., 0]) >= np.abs(y[..., 1:]).sum(axis=-1)
        g = np.zeros_like(y)
        g[..., 0] = np.where(head, np.sign(y[..., 0]), 0.0)
        g[..., 1:] = np.where(head[..., None], 0.0, np.sign(y[..., 1:]))
        return g

    def analytic_constants(self):
        return BodyConstants(math.sqrt(2.0), max(1.0, math.sqrt(self.dim - 1)), "analytic")


@dataclass(frozen=True)
class AbsPlusLq(NormedSpace):
    """(t, x) -> |t| + |x|_q on R x R^{n-1}, 2 < q < inf."""

    dim: int
    q: float

    def __post_init__(self):
        if self.dim < 2:
            raise SpecError("abs+lq needs n >= 2")
        if not (2 < self.q < math.inf):
            raise SpecError(f"abs+lq needs 2 < q < inf, got {self.q}")

    @property
    def label(self) -> str:
        return f"abs+lq:n={self.dim}:q={_fmt(self.q)}"

    def gauge(self, x):
        x = self._check(x)
        return np.abs(x[..., 0]) + lp_norm(x[..., 1:], self.q)

    def support(self, y):
        y = self._check(y)
        return np.maximum(np.abs(y[..., 0]), lp_norm(y[..., 1:], conjugate(self.q)))

    def gradient(self, x):
        x = self._check(x)
        g = np.empty_like(x)
        g[..., 0] = np.sign(x[..., 0])
        g[..., 1:] = lp_grad(x[..., 1:], self.q)
        return g

    def support_gradient(self, y):
        y = self._check(y)
        qc = conjugate(self.q)
        head = np.abs(y[..., 0]) >= lp_norm(y[..., 1:], qc)
        g = np.zeros_like(y)
        g[..., 0] = np.where(head, np.sign(y[..., 0]), 0.0)
        g[..., 1:] = np.where(head[..., None], 0.0, lp_grad(y[..., 1:], qc))
        return g

    def analytic_constants(self):
        m = self.dim - 1
        return BodyConstants(math.sqrt(2.0), max(1.0, m ** (0.5 - 1.0 / self.q)), "analytic")


@dataclass(frozen=True, eq=False)
class LinearImage(NormedSpace):
    """The space whose unit ball is T(K) for the unit ball K of ``base``."""

    T: np.ndarray
    base: NormedSpace

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        if T.shape != (self.base.dim, self.base.dim):
            raise DimensionMismatch("T must be square with the base dimension")
        Tinv = np.linalg.inv(T)
        T.setflags(write=False)
        Tinv.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "_Tinv", Tinv)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def scale(self) -> float | None:
        c = self.T[0, 0]
        if np.array_equal(self.T, c * np.eye(self.dim)):
            return float(c)
        return None

    @property
    def label(self) -> str:
        c = self.scale
        if c is not None:
            return f"image:{self.base.label}:scale={c:g}"
        return f"image:{self.base.label}"

    def gauge(self, x):
        return self.base.gauge(self._check(x) @ self._Tinv.T)

    def support(self, y):
        return self.base.support(self._check(y) @ self.T)

    def gradient(self, x):
        return self.base.gradient(self._check(x) @ self._Tinv.T) @ self._Tinv

    def support_gradient(self, y):
        return self.base.support_gradient(self._check(y) @ self.T) @ self.T.T

    @property
    def has_dual(self) -> bool:
        return self.base.has_dual

    def analytic_constants(self):
        c = self.scale
        inner = self.base.analytic_constants()
        if c is None or inner is None:
            return None
        c = abs(c)
        return BodyConstants(inner.circumradius_b / c, inner.support_R * c, "analytic")


@dataclass(frozen=True, eq=False)
class SubspaceRestriction(NormedSpace):
    """The section X ∩ F written in an orthonormal coordinate system of F."""

    F: Subspace
    base: NormedSpace

    def __post_init__(self):
        if self.F.ambient_dim != self.base.dim:
            raise DimensionMismatch("subspace and base space live in different dimensions")

    @property
    def dim(self) -> int:
        return self.F.dim

    @property
    def label(self) -> str:
        return f"section[k={self.F.dim}]:{self.base.label}"

    def gauge(self, x):
        return self.base.gauge(self.F.embed(self._check(x)))

    def gradient(self, x):
        return self.base.gradient(self.F.embed(self._check(x))) @ self.F.basis.T


def gauge(X: NormedSpace, x) -> np.ndarray:
    return X.gauge(x)


def support(X: NormedSpace, y) -> np.ndarray:
    return X.support(y)


def _ascend_on_sphere(f, grad, dim: int, rng, restarts: int, tol: float, max_iter: int = 2000) -> float:
    """Maximize a convex function over S^{dim-1} by projected subgradient ascent.

    Uses full steps theta <- grad / |grad|_2, which never decrease a convex
    objective, from ``restarts`` random starting points.
    """
    g = rng.generator if hasattr(rng, "generator") else rng
    theta = g.standard_normal((restarts, dim))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    val = f(theta)
    for _ in range(max_iter):
        d = grad(theta)
        nd = np.linalg.norm(d, axis=1, keepdims=True)
        ok = nd[:, 0] > 0
        new = np.where(ok[:, None], d / np.where(nd > 0, nd, 1.0), theta)
        new_val = f(new)
        improved = new_val > val
        theta = np.where(improved[:, None], new, theta)
        gain = np.where(improved, new_val - val, 0.0)
        val = np.maximum(val, new_val)
        if np.all(gain <= tol * np.maximum(1.0, np.abs(val))):
            break
    return float(val.max())


def _min_gauge_on_sphere(X: NormedSpace, rng, probes: int = 20000) -> float:
    from scipy.optimize import minimize

    g = rng.generator if hasattr(rng, "generator") else rng
    theta = g.standard_normal((probes, X.dim))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    vals = X.gauge(theta)
    best = float(vals.min())

    def obj(v):
        nv = np.linalg.norm(v)
        return float(X.gauge(v / nv)) if nv > 0 else np.inf

    for i in np.argsort(vals)[:10]:
        res = minimize(obj, theta[i], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def circumradius(X: NormedSpace, rng=None, *, force_numeric: bool = False) -> BodyConstants:
    """b(X) and R(K) for the unit ball K, analytic when a closed form is registered."""
    if not force_numeric:
        exact = X.analytic_constants()
        if exact is not None:
            return exact
    from .samplers import RngStream

    rng = rng if rng is not None else RngStream(0, 0xB0D1E5)
    try:
        b = _ascend_on_sphere(X.gauge, X.gradient, X.dim, rng, NUMERIC_RESTARTS, NUMERIC_TOL)
    except NoGradient:
        b = float(X.gauge(np.eye(X.dim)).max())
    if X.has_dual:
        R = _ascend_on_sphere(X.support, X.support_gradient, X.dim, rng, NUMERIC_RESTARTS, NUMERIC_TOL)
    else:
        R = 1.0 / _min_gauge_on_sphere(X, rng)
    return BodyConstants(b, R, "numeric")


# -- specification strings ---------------------------------------------------


def _num(text: str, spec: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"bad number {text!r} in {spec!r}") from None


def _int(text: str, spec: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise SpecError(f"bad integer {text!r} in {spec!r}") from None
    if v != int(v) or v < 1:
        raise SpecError(f"bad dimension {text!r} in {spec!r}")
    return int(v)


def parse_space(spec: str) -> NormedSpace:
    """Parse strings like ``lp:n=64:p=1``, ``abs+linf:n=1024``,
    ``abs+lq:n=256:q=5`` and ``image:lp:n=32:p=1:scale=2``.

    ``n`` is always the ambient dimension of the whole space.
    """
    text = str(spec).strip().lower()
    if not text:
        raise SpecError("empty space specification")
    parts = text.split(":")
    if parts[0] == "image":
        inner, opts = [], {}
        for item in parts[1:]:
            if item.startswith("scale="):
                opts["scale"] = item.split("=", 1)[1]
            else:
                inner.append(item)
        if "scale" not in opts:
            raise SpecError(f"image space needs scale=: {spec!r}")
        base = parse_space(":".join(inner))
        c = _num(opts["scale"], spec)
        if not (math.isfinite(c) and c != 0):
            raise SpecError(f"scale must be finite and nonzero in {spec!r}")
        return LinearImage(c * np.eye(base.dim), base)
    kind, opts = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise SpecError(f"bad option {item!r} in {spec!r}")
        key, val = item.split("=", 1)
        if key in opts:
            raise SpecError(f"duplicate option {key!r} in {spec!r}")
        opts[key] = val
    if "n" not in opts:
        raise SpecError(f"missing n= in {spec!r}")
    n = _int(opts.pop("n"), spec)
    if kind in ("lp", "l2", "euclidean", "linf", "l1"):
        fixed = {"l2": 2.0, "euclidean": 2.0, "linf": math.inf, "l1": 1.0}
        p = fixed.get(kind)
        if p is None:
            if "p" not in opts:
                raise SpecError(f"lp needs p= in {spec!r}")
            p = _num(opts.pop("p"), spec)
        if opts:
            raise SpecError(f"unknown options {sorted(opts)} in {spec!r}")
        return Lp(n, p)
    if kind == "abs+linf":
        if opts:
            raise SpecError(f"unknown options {sorted(opts)} in {spec!r}")
        return AbsPlusLinf(n)
    if kind == "abs+lq":
        if set(opts) != {"q"}:
            raise SpecError(f"abs+lq needs exactly q= in {spec!r}")
        return AbsPlusLq(n, _num(opts["q"], spec))
    raise SpecError(f"unknown space kind {kind!r}")
