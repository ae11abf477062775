from __future__ import annotations

import math
import pickle

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from anscombe_lab.errors import DomainError
from anscombe_lab.rng import StreamKey, normal_cdf, standard_normal, stream, uniform01


def test_same_key_same_stream():
    a = stream(7, 3, "x")
    b = stream(7, 3, "x")
    assert [a.uniform01() for _ in range(5)] == [b.uniform01() for _ in range(5)]
    assert np.array_equal(stream(7, 3, "y").normals(10), stream(7, 3, "y").normals(10))


@pytest.mark.parametrize("other", [(8, 3, "x"), (7, 4, "x"), (7, 3, "z")])
def test_distinct_keys_distinct_streams(other):
    a = stream(7, 3, "x").uniforms(8)
    b = stream(*other).uniforms(8)
    assert not np.array_equal(a, b)


def test_stream_order_independent_of_creation_order():
    first = [stream(1, r, "t").uniform01() for r in range(20)]
    rev = [stream(1, r, "t").uniform01() for r in reversed(range(20))][::-1]
    assert first == rev


def test_key_validation():
    with pytest.raises(DomainError):
        StreamKey(0, -2, "x")
    with pytest.raises(DomainError):
        normal_cdf(math.nan)


def test_uniform_open_range_and_ks():
    s = stream(0, 0, "ks")
    u = s.uniforms(20000)
    assert np.all((u >= 0.0) & (u < 1.0))
    assert stats.kstest(u, "uniform").pvalue > 1e-3
    assert all(0.0 <= uniform01(s) < 1.0 for _ in range(100))


def test_normal_moments_and_ks():
    g = stream(0, 0, "g").normals(50000)
    assert abs(g.mean()) < 4 / math.sqrt(50000)
    assert abs(g.var() - 1.0) < 4 * math.sqrt(2 / 50000)
    assert stats.kstest(g, "norm").pvalue > 1e-3
    s = stream(0, 1, "g")
    assert np.isfinite(standard_normal(s))


def test_cross_replicate_streams_uncorrelated():
    x = np.array([stream(5, r, "a").uniform01() for r in range(4000)])
    y = np.array([stream(5, r, "b").uniform01() for r in range(4000)])
    z = np.array([stream(5, r + 1, "a").uniform01() for r in range(4000)])
    for other in (y, z):
        assert abs(np.corrcoef(x, other)[0, 1]) < 4 / math.sqrt(4000)


def test_stream_pickles():
    s = stream(3, 2, "p")
    s.uniforms(3)
    t = pickle.loads(pickle.dumps(s))
    assert t.uniform01() == s.uniform01()


@given(st.floats(min_value=-8, max_value=8, allow_nan=False))
@settings(max_examples=200)
def test_normal_cdf_against_mpmath(x):
    assert normal_cdf(x) == pytest.approx(float(mpmath.ncdf(x)), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("x", [-3.0, -0.5, 0.0, 1.2, 4.0])
def test_normal_cdf_against_quadrature(x):
    val, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), -np.inf, x)
    assert normal_cdf(x) == pytest.approx(val, abs=1e-10)


def test_normal_cdf_tails():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(-40.0) == pytest.approx(float(mpmath.ncdf(-40)), rel=1e-12)
    assert normal_cdf(math.inf) == 1.0


@given(st.integers(0, 50), st.integers(0, 50))
@settings(max_examples=50)
def test_chunked_draws_match_single_draw(a, b):
    s = stream(2, 1, "c")
    joined = np.concatenate([s.normals(a), s.normals(b)])
    assert np.array_equal(joined, stream(2, 1, "c").normals(a + b))
