import math

import numpy as np
import pytest
from scipy import stats

from concentra.errors import SpecError
from concentra.linalg import project
from concentra.samplers import (
    Measure,
    RngStream,
    gaussian_matrix,
    haar_grassmann,
    parse_measure,
)


def test_stream_reproducible():
    a = Measure("gaussian", 2).sample(RngStream(5, 1))
    b = Measure("gaussian", 2).sample(RngStream(5, 1))
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(5, 1).generator.random(8)
    b = RngStream(5, 2).generator.random(8)
    assert not np.array_equal(a, b)


def test_child_is_pure_and_spawn_advances():
    r = RngStream(3, 4)
    assert r.child(7).stream_id == RngStream(3, 4).child(7).stream_id
    ids = {r.spawn().stream_id for _ in range(100)}
    assert len(ids) == 100


def test_counter_advances():
    r = RngStream(1)
    c0 = r.counter
    r.generator.random(100)
    assert r.counter > c0


def test_sphere_unit_norm(rng):
    x = Measure("sphere", 13).sample(rng, 1000)
    assert np.max(np.abs(np.linalg.norm(x, axis=1) - 1)) < 1e-12


def test_gaussian_standardization(rng):
    x = Measure("gaussian", 3).sample(rng, 1_000_000)
    assert np.all(np.abs(x.mean(axis=0)) < 0.01)
    assert np.all(np.abs(x.var(axis=0) - 1) < 0.02)
    u = rng.generator.standard_normal(3)
    u /= np.linalg.norm(u)
    assert abs((x @ u).var() - 1) < 0.02


def test_exponential_marginal(rng):
    w = Measure("exponential", 2).sample(rng, 1_000_000)[:, 0]
    assert abs(np.abs(w).mean() - 1) < 0.01
    assert abs((w**2).mean() - 2) < 0.05


def test_uniform_l2_ball_volume_fraction(rng):
    x = Measure("uniform-ball", 3, 2.0).sample(rng, 100_000)
    p = np.mean(np.linalg.norm(x, axis=1) <= 0.5)
    se = math.sqrt(0.125 * 0.875 / 100_000)
    assert abs(p - 0.125) <= 3 * se
    assert np.all(np.linalg.norm(x, axis=1) <= 1)


def test_uniform_l1_ball_quadrant(rng):
    x = Measure("uniform-ball", 2, 1.0).sample(rng, 100_000)
    p = np.mean((x[:, 0] > 0) & (x[:, 1] > 0))
    assert abs(p - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 100_000)
    assert np.all(np.abs(x).sum(axis=1) <= 1)


def test_uniform_l1_ball_radial_law(rng):
    # |x|_1 has CDF t^n under the uniform measure on B_1^n
    n = 5
    r = np.abs(Measure("uniform-ball", n, 1.0).sample(rng, 50_000)).sum(axis=1)
    assert stats.kstest(r, lambda t: np.clip(t, 0, 1) ** n).pvalue > 0.001


def test_cube_is_ball_inf():
    m = Measure("uniform-ball", 4, math.inf)
    assert m.kind == "uniform-cube"


def test_gaussian_matrix(rng):
    assert gaussian_matrix(1, 1, rng).shape == (1, 1)
    g = rng.generator
    means = [RngStream(1, i).generator.standard_normal((4, 16)).mean() for i in range(10_000)]
    assert abs(np.mean(means)) < 0.01
    assert np.array_equal(gaussian_matrix(4, 16, RngStream(2)), gaussian_matrix(4, 16, RngStream(2)))


def test_haar_line_angle_uniform(rng):
    angles = []
    for i in range(100_000 // 10):
        F = haar_grassmann(2, 1, rng.child(i))
        b = F.basis[0]
        angles.append(math.atan2(b[1], b[0]) % math.pi)
    counts, _ = np.histogram(angles, bins=20, range=(0, math.pi))
    assert stats.chisquare(counts).pvalue > 0.001


def test_haar_trace_identity(rng):
    vals = []
    e1 = np.eye(8)[0]
    for i in range(20_000):
        F = haar_grassmann(8, 2, rng.child(i))
        vals.append(np.sum(project(e1, F) ** 2))
    vals = np.array(vals)
    assert abs(vals.mean() - 0.25) <= 3 * vals.std() / math.sqrt(len(vals))


def test_haar_rejects_full_dimension(rng):
    with pytest.raises(ValueError):
        haar_grassmann(3, 3, rng)


def test_parse_measure():
    assert parse_measure("gaussian", 3) == Measure("gaussian", 3)
    assert parse_measure("uniform-ball:p=1", 3) == Measure("uniform-ball", 3, 1.0)
    assert parse_measure("uniform-cube", 2).kind == "uniform-cube"
    for bad in ("", "poisson", "uniform-ball", "gaussian:p=2", "uniform-ball:p=x"):
        with pytest.raises(SpecError):
            parse_measure(bad, 3)
