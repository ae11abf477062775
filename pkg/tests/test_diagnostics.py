from __future__ import annotations

import math
import pickle
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from anscombe_lab.diagnostics import (OMEGA, DiagnosticSample, diagnose_distributional,
                                      diagnose_from_samples, diagnose_stable_convergence,
                                      interval_event, kolmogorov_pvalue, ks_two_sample,
                                      quantize_mixing)
from anscombe_lab.errors import DomainError, EmptySample, InsufficientConditioningMass
from anscombe_lab.scenarios import DegenerateLaw, ExchangeableCLTScenario

from oracles import kolmogorov_sf_mp, ks_brute


# -- quantizer ----------------------------------------------------------------

def _check_quantized(U, delta):
    q = quantize_mixing(U, delta)
    fu, fd, fq = Fraction(U), Fraction(delta), Fraction(q)
    if fu <= fd:
        assert q == delta
        return
    j = math.ceil(fu / fd) - 1
    assert j * fd < fu <= (j + 1) * fd
    # q is j*delta, or the next double above it when j*delta is not representable
    assert fq >= j * fd
    assert float(j * fd) == q or math.nextafter(q, -math.inf) < j * fd
    assert fu - fd <= fq <= fu


@given(st.floats(1e-6, 1e6, allow_nan=False), st.floats(1e-4, 1.0))
@settings(max_examples=500)
def test_quantizer_property(U, delta):
    _check_quantized(U, delta)


@pytest.mark.parametrize("U,delta,expected", [
    (0.05, 0.1, 0.1), (0.1, 0.1, 0.1), (0.25, 0.1, 0.2), (1.0, 0.5, 0.5),
    (1.5, 0.5, 1.0), (1.50001, 0.5, 1.5), (3.0, 1.0, 2.0),
])
def test_quantizer_values(U, delta, expected):
    assert quantize_mixing(U, delta) == pytest.approx(expected, rel=1e-15)


def test_quantizer_boundaries_go_down():
    # U exactly on a grid point (j + 1) delta maps to j delta
    for j in range(1, 200):
        U = float(Fraction(j + 1, 4))
        assert quantize_mixing(U, 0.25) == j * 0.25


@pytest.mark.parametrize("U,delta", [(0.0, 0.1), (-1.0, 0.1), (math.inf, 0.1), (math.nan, 0.1),
                                     (1.0, 0.0), (1.0, 1.5), (1.0, -0.1)])
def test_quantizer_domain(U, delta):
    with pytest.raises(DomainError):
        quantize_mixing(U, delta)


# -- KS ---------------------------------------------------------------------

@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30),
       st.lists(st.integers(-5, 5), min_size=1, max_size=30))
@settings(max_examples=300)
def test_ks_matches_brute_force_with_ties(a, b):
    assert ks_two_sample(a, b) == pytest.approx(ks_brute(a, b), abs=1e-12)


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    for m, n in [(10, 10), (50, 80), (400, 300)]:
        a, b = rng.normal(size=m), rng.normal(0.2, 1.0, size=n)
        assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_empty():
    with pytest.raises(EmptySample):
        ks_two_sample([], [1.0])
    with pytest.raises(EmptySample):
        ks_two_sample([1.0], np.array([]))


@pytest.mark.parametrize("lam", [0.05, 0.3, 0.6, 0.9, 0.99, 1.0, 1.01, 1.36, 2.0, 3.0])
def test_kolmogorov_sf_against_mpmath_and_scipy(lam):
    n = 10_000
    p = kolmogorov_pvalue(lam / math.sqrt(n / 2), n, n)
    assert p == pytest.approx(kolmogorov_sf_mp(lam), abs=1e-12)
    assert p == pytest.approx(stats.kstwobign.sf(lam), abs=1e-12)


def test_kolmogorov_pvalue_limits():
    assert kolmogorov_pvalue(0.0, 5, 5) == 1.0
    assert kolmogorov_pvalue(1.0, 5000, 5000) == 0.0
    with pytest.raises(DomainError):
        kolmogorov_pvalue(0.1, 0, 5)


# -- diagnostics ------------------------------------------------------------

def _samples(obs, ker, u):
    return [DiagnosticSample(i, {"U": float(u[i])}, float(obs[i]), float(ker[i]))
            for i in range(len(obs))]


def test_same_law_passes_shifted_law_fails():
    rng = np.random.default_rng(1)
    u = rng.uniform(size=2000)
    same = diagnose_from_samples(_samples(rng.normal(size=2000), rng.normal(size=2000), u), [OMEGA], 1)
    shifted = diagnose_from_samples(_samples(rng.normal(size=2000), rng.normal(1, 1, size=2000), u),
                                    [OMEGA], 1)
    assert same.passed and not shifted.passed
    assert same.result("all").count == 2000
    with pytest.raises(KeyError):
        same.result("missing")


def test_event_split_detects_conditional_mismatch():
    # marginals agree but the dependence on U is reversed
    rng = np.random.default_rng(2)
    u = rng.uniform(size=4000)
    obs = np.where(u > 0.5, 1.0, -1.0) + 0.1 * rng.normal(size=4000)
    ker = np.where(u > 0.5, -1.0, 1.0) + 0.1 * rng.normal(size=4000)
    events = [OMEGA, interval_event(0.0, 0.5), interval_event(0.5, 1.0)]
    rep = diagnose_from_samples(_samples(obs, ker, u), events, 1)
    assert rep.result("all").passed
    assert not rep.result("0<U<=0.5").passed
    assert not rep.result("0.5<U<=1").passed


def test_insufficient_mass():
    u = np.linspace(0.01, 1, 100)
    s = _samples(np.zeros(100), np.zeros(100), u)
    with pytest.raises(InsufficientConditioningMass) as info:
        diagnose_from_samples(s, [interval_event(0.0, 0.1)], 1, min_event_count=20)
    assert info.value.count == 10
    err = pickle.loads(pickle.dumps(info.value))
    assert err.count == 10


def test_interval_event_is_half_open_and_picklable():
    ev = interval_event(1.0, 2.0)
    assert not ev({"U": 1.0}) and ev({"U": 2.0}) and ev({"U": 1.5})
    assert pickle.loads(pickle.dumps(ev))({"U": 1.5})


def test_clt_with_unit_mixing_passes_distributional():
    sc = ExchangeableCLTScenario(master_seed=11, u_law=DegenerateLaw(1.0))
    rep = diagnose_distributional(sc, 500, 1500)
    assert rep.passed
    assert rep.as_dict()["events"][0]["count"] == 1500


def test_stable_diagnostic_reproducible_across_workers():
    sc = ExchangeableCLTScenario(master_seed=4)
    events = list(sc.events())
    a = diagnose_stable_convergence(sc, 200, 300, events, min_event_count=50, workers=1)
    b = diagnose_stable_convergence(sc, 200, 300, events, min_event_count=50, workers=3)
    assert a.as_dict() == b.as_dict()
