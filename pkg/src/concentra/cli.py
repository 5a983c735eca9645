"""Command line entry point: ``concentra <experiment> [options]``.

Exit codes: 0 when every asserted row passes, 1 when one fails, 2 for a bad
configuration (nothing is sampled), 3 for a failure while running.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import deviation as dev
from . import dvoretzky as dvo
from . import estimators as est
from . import grassmann as grs
from . import nets
from .bodies import Lp, NormedSpace, circumradius, parse_space
from .errors import ConcentraError, SpecError
from .linalg import orthonormalize
from .parallel import set_threads
from .samplers import Measure, RngStream, gaussian_matrix, haar_grassmann, parse_measure

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class Report:
    experiment: str
    config: dict
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    def verdict(self, name: str, ok: bool, asserted: bool = True, **info):
        self.verdicts.append({"name": name, "pass": bool(ok), "asserted": asserted, **info})

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts if v["asserted"])


# -- argument helpers -------------------------------------------------------------


def _count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _real(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v):
        raise argparse.ArgumentTypeError("NaN is not allowed")
    return v


def _reals(text: str) -> list:
    return [_real(x) for x in text.split(",") if x.strip()]


def _counts(text: str) -> list:
    return [_count(x) for x in text.split(",") if x.strip()]


def _need(cfg, name: str):
    v = getattr(cfg, name)
    if v is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required for {cfg.experiment}")
    return v


def _space(cfg) -> NormedSpace:
    try:
        return parse_space(_need(cfg, "space"))
    except SpecError as e:
        raise ConfigError(str(e)) from None


def _measure(cfg, dim: int, default: str = "gaussian") -> Measure:
    try:
        return parse_measure(cfg.measure or default, dim)
    except SpecError as e:
        raise ConfigError(str(e)) from None


def _eps_list(cfg, default):
    return cfg.eps if cfg.eps is not None else list(default)


def _one_eps(cfg, default, lo=0.0, hi=1.0):
    e = _eps_list(cfg, [default])
    if len(e) != 1 or not lo < e[0] < hi:
        raise ConfigError(f"--eps must be a single value in ({lo}, {hi})")
    return e[0]


def _samples(cfg, default: int, minimum: int = 100) -> int:
    n = cfg.samples or default
    if n < minimum:
        raise ConfigError(f"--samples must be at least {minimum}")
    return n


def _trials(cfg, default: int, minimum: int = 1) -> int:
    n = cfg.trials or default
    if n < minimum:
        raise ConfigError(f"--trials must be at least {minimum}")
    return n


def _k(cfg, default: int, lo: int, hi: int) -> int:
    k = cfg.k or default
    if not lo <= k <= hi:
        raise ConfigError(f"--k must lie in [{lo}, {hi}]")
    return k


def _support_space(cfg) -> NormedSpace:
    X = _space(cfg)
    if not X.has_dual:
        raise ConfigError(f"{X.label} has no closed-form support function")
    return X


# -- experiments --------------------------------------------------------------------
# Each runner validates its whole configuration before drawing any sample.


def run_beta(cfg, rng, rep: Report):
    X = _space(cfg)
    m = _measure(cfg, X.dim)
    N = _samples(cfg, 1_000_000)
    b = est.beta(X, m, N, rng)
    exact = None
    if m.kind == "uniform-cube" and isinstance(X, Lp) and math.isinf(X.p):
        exact = 1.0 / (X.dim * (X.dim + 2))
    elif m.kind == "gaussian" and isinstance(X, Lp) and X.p == 2:
        exact = est.beta_euclidean(X.dim)
    rep.rows.append({"space": X.label, "measure": m.label, "beta": b.value, "se": b.standard_error, "n_samples": b.n,
                     "exact": exact})
    if exact is not None:
        rep.verdict("beta matches closed form within 3 SE", abs(b.value - exact) <= 3 * b.standard_error)


def run_k_number(cfg, rng, rep: Report):
    X = _space(cfg)
    N = _samples(cfg, 200_000)
    c = circumradius(X)
    k = est.dvoretzky_number(X, N, rng)
    rep.rows.append({"space": X.label, "k": k.value, "se": k.standard_error, "b": c.circumradius_b,
                     "b_exactness": c.exactness, "k_over_n": k.value / X.dim, "k_over_log_n": k.value / math.log(X.dim)
                     if X.dim > 1 else math.nan})
    rep.verdict("k(X) lies in [1, n]", 1 - 3 * k.standard_error - 1e-9 <= k.value <= X.dim + 3 * k.standard_error + 1e-9)


def run_theta(cfg, rng, rep: Report):
    X = _space(cfg)
    m = _measure(cfg, X.dim)
    N = _samples(cfg, 1_000_000, 100_000)
    stats = est.norm_stats(X, m, N, rng)
    th = est.theta_from_stats(stats)
    b = est.beta_estimate(stats)
    row = {"space": X.label, "measure": m.label, "theta": th.value, "se": th.standard_error, "beta": b.value,
           "theta_over_sqrt_n": th.value / math.sqrt(X.dim), "lower_link": (1 / 32) / math.sqrt(b.value)}
    rep.rows.append(row)
    rep.verdict("theta >= (1/32)/sqrt(beta) with 20% slack", th.value >= 0.8 * row["lower_link"])
    if m.kind == "gaussian" and isinstance(X, Lp) and math.isinf(X.p):
        f, med = est.gaussian_cube_density_at_median(X.dim)
        row["theta_exact"] = f * med
        rep.verdict("theta within 10% of the exact cube value", abs(th.value / (f * med) - 1) <= 0.10)


def run_moments(cfg, rng, rep: Report):
    X = _support_space(cfg)
    qs = cfg.q or [1.0, 2.0, -2.0]
    for q in qs:
        if q == 0 or q <= -X.dim + 1:
            raise ConfigError(f"moment order {q} outside (-n+1, inf) \\ {{0}}")
    N = _samples(cfg, 200_000)
    for q in qs:
        M = est.sphere_moment(X, q, N, rng)
        chk = est.polar_identity_check(X, q, N, rng)
        rep.rows.append({"space": X.label, "q": q, "M_q": M.value, "M_q_se": M.standard_error,
                         "gaussian_support_moment": chk["gaussian_side"], "sphere_side": chk["sphere_side"],
                         "identity_se": chk["se"]})
        rep.verdict(f"polar identity q={q:g}", chk["pass"])


def run_body_moment(cfg, rng, rep: Report):
    X = _space(cfg)
    if not isinstance(X, Lp):
        raise ConfigError("J_q needs an l_p ball or the cube")
    qs = cfg.q or [1.0, 2.0, 6.0]
    if any(q <= 0 for q in qs):
        raise ConfigError("J_q bound needs q > 0")
    N = _samples(cfg, 200_000)
    for q in qs:
        J = est.body_moment_J(X, q, N, rng)
        lo = est.lower_J_bound(X, q)
        rep.rows.append({"space": X.label, "q": q, "J_q": J.value, "se": J.standard_error,
                         "a_nq": est.a_constant(X.dim, q), "lower_bound": lo})
        rep.verdict(f"J_q >= R/a_nq at q={q:g}", J.value + 3 * J.standard_error >= lo)


def run_vrad(cfg, rng, rep: Report):
    X = _space(cfg)
    if X.dim != 2 or not isinstance(X, Lp):
        raise ConfigError("vrad identity runs on a 2-dimensional l_p disc")
    ps = cfg.q or [1.0, 2.0, 4.0]
    if any(not (-1 < p <= 8) or p == 0 for p in ps):
        raise ConfigError("p must lie in (-1, 8] and be nonzero")
    for p in ps:
        r = est.vrad_identity_check(X, p)
        tol = 1e-10 if X.p == 2 else 1e-6
        rep.rows.append({"space": X.label, "p": p, **r, "tolerance": tol})
        rep.verdict(f"identity residual p={p:g}", r["residual"] < tol)


def run_net(cfg, rng, rep: Report):
    k = _k(cfg, 2, 1, nets.MAX_DIM)
    delta = _one_eps(cfg, 0.5)
    probes = cfg.probes or 100_000
    bound = nets.cardinality_bound(k, delta)
    if bound > nets.MAX_BOUND:
        raise ConfigError(f"cardinality bound {bound:.3g} too large")
    net = nets.build_net(k, delta, probes, rng)
    rep.rows.append({"k": k, "delta": delta, "card": net.card, "bound": bound, "probes": net.probe_count,
                     "max_gap": net.max_observed_gap, "bound_violation": net.bound_violation})
    rep.verdict("probe gap <= delta", net.max_observed_gap <= delta)
    rep.verdict("cardinality within (1+2/delta)^k", not net.bound_violation, asserted=False)


def run_dvoretzky(cfg, rng, rep: Report):
    X = _space(cfg)
    eps = _one_eps(cfg, 0.3, 0.0, 1 / 3)
    seeds = _trials(cfg, 100)
    res = dvo.end_to_end(X, eps, seeds=seeds, beta_N=_samples(cfg, 200_000), probe_count=cfg.probes or 100_000,
                         rng=rng)
    for i, r in enumerate(res["reports"]):
        rep.rows.append({"trial": i, "k": r.k, "net_card": r.net_card, "mean_norm": r.mean_norm, "net_min": r.net_min,
                         "net_max": r.net_max, "net_event": r.net_event, "cert_lower": r.certified_interval[0],
                         "cert_upper": r.certified_interval[1], "sampled_min": r.sampled_min,
                         "sampled_max": r.sampled_max, "certificate_holds": r.certificate_holds})
    info = {k: res[k] for k in ("beta", "beta_se", "k", "k_raw", "rate")}
    rep.verdict("net event in at least half of the seeds", res["rate"] >= 0.5, **info)
    rep.verdict("certified interval never violated", res["certificate_violations"] == 0)


def run_spherical(cfg, rng, rep: Report):
    X = _space(cfg)
    k = _k(cfg, 2, 1, X.dim - 1)
    eps = _one_eps(cfg, 0.3)
    trials = _trials(cfg, 200, 50)
    probes = cfg.probes
    if probes is not None and probes < dvo.PROBES_PER_DIM * k:
        raise ConfigError("--probes must be at least 1e4 * k")
    r = dvo.spherical_probability(X, k, eps, trials, probes, rng)
    lo, hi = r.interval
    rep.rows.append({"space": X.label, "k": k, "eps": eps, "trials": trials, "successes": r.successes,
                     "p_hat": r.p_hat, "ci_low": lo, "ci_high": hi, "inflation": r.inflation})
    rep.verdict("successes within trials", 0 <= r.successes <= trials, asserted=False)


def run_k_eps(cfg, rng, rep: Report):
    X = _space(cfg)
    eps_list = _eps_list(cfg, [0.5])
    if any(not 0 < e < 1 for e in eps_list):
        raise ConfigError("--eps values must lie in (0, 1)")
    mode = cfg.threshold_mode
    trials = _trials(cfg, 200, 50)
    for e in eps_list:
        res = dvo.estimate_k_eps(X, e, mode, trials, rng)
        for row in res["rows"]:
            rep.rows.append({"space": X.label, "eps": e, "mode": mode, **row, "k_hat": res["k_hat"]})
        rep.verdict(f"k_hat(eps={e:g})", True, asserted=False, k_hat=res["k_hat"])


def run_grassmann(cfg, rng, rep: Report):
    X = _support_space(cfg) if cfg.mode == "width" else _space(cfg)
    k = _k(cfg, 4, 1, X.dim - 1)
    trials = _trials(cfg, 400, 100)
    N = _samples(cfg, 20_000)
    tab = grs.concentration_experiment(X, cfg.mode, k, trials, N, rng, t_grid=cfg.t_grid)
    for row in tab.rows:
        rep.rows.append({"space": X.label, "mode": cfg.mode, "k": k, "mean": tab.mean, "std": tab.std, **row})
    dev3 = np.mean(np.abs(tab.ratios - tab.mean) > 3 * tab.std) if tab.std > 0 else 0.0
    p = [r["p_hat"] for r in tab.rows]
    rep.verdict("tail rows nonincreasing in t", all(a >= b for a, b in zip(p, p[1:])))
    rep.verdict("tail beyond 3 std at most 0.05", dev3 <= 0.05, fraction=float(dev3))


def run_sandwich(cfg, rng, rep: Report):
    A = _support_space(cfg)
    k = _k(cfg, 2, 1, A.dim)
    N = _samples(cfg, 100_000)
    T = gaussian_matrix(k, A.dim, rng.spawn())
    r = grs.polar_sandwich_check(A, T, N, rng)
    rep.rows.append({"space": A.label, "k": k, **r})
    rep.verdict("s_k w(P_F A) <= w(TA) <= s_1 w(P_F A)", r["pass"])


def run_width_variance(cfg, rng, rep: Report):
    A = _support_space(cfg)
    k = _k(cfg, 2, 1, A.dim)
    N = _samples(cfg, 10_000)
    r = grs.gaussian_width_variance_check(A, k, N, rng)
    rep.rows.append({"space": A.label, **r})
    rep.verdict("Var w(GA) <= min(R^2/k, Var h_A(Z))", r["pass"])


def run_lipschitz(cfg, rng, rep: Report):
    A = _support_space(cfg)
    k = _k(cfg, 4, 1, A.dim - 1)
    pairs = _trials(cfg, 500)
    r = grs.lipschitz_probe(A, k, pairs, _samples(cfg, 4000), rng)
    rep.rows.append({"space": A.label, "k": k, **r})
    rep.verdict("distance envelopes hold with constant 10", r["pass"])


def run_sphere_identity(cfg, rng, rep: Report):
    n = cfg.n or 2
    dot = 0.0 if cfg.dot is None else cfg.dot
    if n < 2 or not -1 <= dot <= 1:
        raise ConfigError("need --n >= 2 and --dot in [-1, 1]")
    N = _samples(cfg, 100_000)
    u, v = grs.unit_pair(n, dot)
    r = grs.sphere_identity_check(u, v, N, rng)
    rep.rows.append(r)
    rep.verdict("residual within 3 SE", r["pass"])


def run_inclusion(cfg, rng, rep: Report):
    A = _support_space(cfg)
    eps = _one_eps(cfg, 0.3)
    trials = _trials(cfg, 200)
    dims = grs.inclusion_dimensions(A, eps, rng=rng)
    ku = cfg.k or dims["k_upper"]
    r = grs.one_sided_inclusion_rates(A, eps, ku, dims["k_lower"], trials, rng, w=dims["w"])
    rep.rows.append({"space": A.label, "eps": eps, **{k: v for k, v in dims.items()}, **r})
    rep.verdict("upper inclusion rate", True, asserted=False, rate=r["rate_upper"])
    rep.verdict("lower inclusion rate", True, asserted=False, rate=r["rate_lower"])


DEVIATION_CHECKS = ("suite", "smalldev", "density", "smallball", "borell", "cdf", "logconcavity", "transport",
                    "transport-derivative")


def run_deviation(cfg, rng, rep: Report):
    check = cfg.check or "suite"
    X = _space(cfg)
    m = _measure(cfg, X.dim)
    N = _samples(cfg, 1_000_000)
    if check in ("smallball",) and m.kind not in dev.SMALL_BALL_MEASURES:
        raise ConfigError("smallball needs --measure gaussian or exponential")
    if check == "transport" and m.kind != "gaussian":
        raise ConfigError("transport tails are for the Gaussian measure")
    if check == "smallball" and cfg.eps is not None and any(not 0 < e < 1 for e in cfg.eps):
        raise ConfigError("--eps values must lie in (0, 1)")
    if check in ("theta", "smallball", "suite") and N < 100_000:
        raise ConfigError("this check needs --samples >= 1e5")
    if check == "transport":
        try:
            X.gradient(np.ones((1, X.dim)))
        except ConcentraError as e:
            raise ConfigError(str(e)) from None
    t_grid = cfg.t_grid
    if check == "suite":
        rows = dev.suite(X, m, N, rng, eps_grid=_eps_list(cfg, (0.3, 0.5, 0.7)),
                         t_grid=t_grid or (1, 2, 4, 8, 16, 32))
    elif check == "smalldev":
        rows = dev.logconcave_smalldev_check(X, m, t_grid or (1, 2, 4, 8, 16), N, rng)
    elif check == "density":
        rows = [dev.density_lower_check(X, m, N, rng)]
    elif check == "smallball":
        rows = dev.small_ball_check(X, m, _eps_list(cfg, (0.3, 0.5, 0.7)), N, rng)
    elif check == "borell":
        st = est.norm_stats(X, m, N, rng)
        med = st.median
        s = (cfg.s or 1.1) * med
        rows = dev.borell_check(X, m, s, [t * med for t in (t_grid or (1.5, 2.0, 3.0))], stats=st)
    elif check == "cdf":
        rows = dev.seminorm_cdf_check(X, m, N, rng)
    elif check == "logconcavity":
        p = dev.logconcavity_profile(X, m, None, N, rng)
        rows = [{"check": "logconcavity", "t": float(t), "F": float(F), "second_diff": float(d), "noise": float(z),
                 "pass": bool(d <= z), "asserted": True}
                for t, F, d, z in zip(p.grid[1:-1], p.F[1:-1], p.second_diff, p.noise)]
    elif check == "transport":
        rows = dev.transport_tail_check(X, t_grid or (1, 2, 3), N, rng)
    else:
        rows = [dev.transport_derivative_probe(X, m, N, rng)]
    for r in rows:
        r.setdefault("space", X.label)
        r.setdefault("measure", m.label)
        rep.rows.append(r)
        if r.get("asserted", True):
            rep.verdict(f"{r['check']} row {len(rep.verdicts)}", r["pass"])


def run_smallball(cfg, rng, rep: Report):
    cfg.check = "smallball"
    run_deviation(cfg, rng, rep)


def run_exp_profile(cfg, rng, rep: Report):
    p = cfg.p if cfg.p is not None else 1.0
    if p not in (1.0, 2.0, 5.0) and not math.isinf(p):
        raise ConfigError("--p must be one of 1, 2, 5, inf")
    n_list = cfg.n_list or [256, 1024, 4096]
    N = _samples(cfg, 100_000)
    r = dev.exponential_norm_profile(p, n_list, N, rng)
    for row in r["rows"]:
        rep.rows.append({"p": p, **row})
    rep.verdict("normalized variance stable within 40%", r["pass"], stability=r["var_stability"])


EXPERIMENTS = {
    "beta": ("estimators.beta", "normalized variance Var|Z|/(E|Z|)^2 of a norm", run_beta),
    "k-number": ("estimators.dvoretzky_number", "Dvoretzky number n (M/b)^2", run_k_number),
    "theta": ("estimators.theta", "median times density of the norm at its median", run_theta),
    "moments": ("estimators.sphere_moment", "spherical moments M_q and the Gaussian/sphere factorization", run_moments),
    "body-moment": ("estimators.body_moment_J", "J_q of l_p balls against the R/a_{n,q} lower bound", run_body_moment),
    "vrad": ("estimators.vrad_identity_check", "volume-radius identity by two quadratures in the plane", run_vrad),
    "net": ("nets.build_net", "greedy delta-net of S^{k-1} with probe certificate", run_net),
    "dvoretzky": ("dvoretzky.embed", "variance-method Gaussian embedding over many seeds", run_dvoretzky),
    "spherical": ("dvoretzky.spherical_probability", "probability that a random section is (1+eps)-spherical",
                  run_spherical),
    "k-eps": ("dvoretzky.estimate_k_eps", "largest k with spherical sections at the chosen threshold", run_k_eps),
    "grassmann": ("grassmann.concentration_experiment", "concentration of widths or section means over G_{n,k}",
                  run_grassmann),
    "sandwich": ("grassmann.polar_sandwich_check", "singular-value sandwich for w(TA)", run_sandwich),
    "width-variance": ("grassmann.gaussian_width_variance_check", "variance of w(GA) against R^2/k and Var h_A(Z)",
                       run_width_variance),
    "lipschitz": ("grassmann.lipschitz_probe", "width differences against subspace distances", run_lipschitz),
    "sphere-identity": ("grassmann.sphere_identity_check", "spherical integral (2/n)(1-<u,v>^2)", run_sphere_identity),
    "inclusion": ("grassmann.one_sided_inclusion_rates", "one-sided inclusions of random projections", run_inclusion),
    "deviation": ("deviation.*", "explicit-constant deviation, small-ball and tail checks", run_deviation),
    "smallball": ("deviation.small_ball_check", "dilation small-ball bound with exponent 2 theta", run_smallball),
    "exp-profile": ("deviation.exponential_norm_profile", "mean and variance of |W|_p under the exponential law",
                    run_exp_profile),
}


def catalog() -> str:
    width = max(len(n) for n in EXPERIMENTS)
    lines = [f"{name:<{width}}  {op:<40}  {desc}" for name, (op, desc, _) in EXPERIMENTS.items()]
    return "\n".join(lines) + "\n"


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("common")
    g.add_argument("--space", "--body", dest="space", help="space spec, e.g. lp:n=64:p=1")
    g.add_argument("--measure", help="gaussian, exponential, sphere, uniform-cube, uniform-ball:p=P")
    g.add_argument("--k", type=_count)
    g.add_argument("--eps", type=_reals, help="comma separated list")
    g.add_argument("--t-grid", dest="t_grid", type=_reals, help="comma separated list")
    g.add_argument("--samples", type=_count, help="Monte Carlo sample size (1e6 accepted)")
    g.add_argument("--trials", type=_count)
    g.add_argument("--seed", type=_count, default=None)
    g.add_argument("--threads", type=_count, default=None)
    g.add_argument("--out", help="write the report here")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    x = p.add_argument_group("experiment specific")
    x.add_argument("--q", type=_reals, help="moment orders")
    x.add_argument("--p", type=_real)
    x.add_argument("--n", type=_count)
    x.add_argument("--n-list", dest="n_list", type=_counts)
    x.add_argument("--dot", type=_real)
    x.add_argument("--mode", choices=("width", "section"), default="width")
    x.add_argument("--check", choices=DEVIATION_CHECKS)
    x.add_argument("--s", type=_real, help="Borell reference point as a multiple of the median")
    x.add_argument("--probes", type=_count)
    x.add_argument("--threshold-mode", dest="threshold_mode", choices=("half", "exp_k"), default="half")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="concentra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"concentra {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    sub.add_parser("list", help="print the experiment catalog")
    for name, (op, desc, _) in EXPERIMENTS.items():
        _common(sub.add_parser(name, help=desc, description=f"{desc} ({op})"))
    return parser


def _config_echo(cfg) -> dict:
    return {k: v for k, v in sorted(vars(cfg).items()) if k not in ("out", "threads")}


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def render(rep: Report, fmt: str, rng_identity: str) -> str:
    meta = {"experiment": rep.experiment, "version": __version__, "rng": rng_identity, "config": rep.config}
    if fmt == "json":
        doc = {**meta, "rows": rep.rows, "verdicts": rep.verdicts, "passed": rep.passed}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# experiment: {rep.experiment}\n# version: {__version__}\n# rng: {rng_identity}\n")
    buf.write(f"# config: {json.dumps(_jsonable(rep.config), sort_keys=True)}\n")
    for v in rep.verdicts:
        buf.write(f"# verdict: {json.dumps(_jsonable(v))}\n")
    buf.write(f"# passed: {str(rep.passed).lower()}\n")
    cols: list = []
    for r in rep.rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rep.rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _cell(v):
    v = _jsonable(v)
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return v


def main(argv=None) -> int:
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    if cfg.experiment == "list":
        sys.stdout.write(catalog())
        return EXIT_OK
    fmt = cfg.format or ("json" if cfg.out and cfg.out.endswith(".json") else "csv")
    seed = cfg.seed if cfg.seed is not None else 0
    set_threads(cfg.threads)
    rng = RngStream(seed, 0)
    identity = rng.identity()
    rep = Report(cfg.experiment, _config_echo(cfg))
    runner = EXPERIMENTS[cfg.experiment][2]
    start = time.perf_counter()
    try:
        runner(cfg, rng, rep)
    except ConfigError as e:
        print(f"concentra: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - reported as a runtime failure
        print(f"concentra: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        set_threads(None)
    text = render(rep, fmt, identity)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for v in rep.verdicts:
        tag = "PASS" if v["pass"] else ("FAIL" if v["asserted"] else "INFO")
        print(f"[{tag}] {v['name']}", file=sys.stderr)
    print(f"wall time {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
