from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from anscombe_lab.errors import DomainError, HorizonExceeded
from anscombe_lab.index_lab import mixing_limit_check
from anscombe_lab.scenarios import (EFFECTIVE_MIDPOINT_FACTOR, SCENARIOS, DegenerateLaw,
                                    ExchangeableCLTScenario, ExchangeableEmpiricalScenario,
                                    HittingMidpointScenario, LogNormalLaw,
                                    MovingIndicatorScenario, MovingIndicatorTrajectory,
                                    QuantileLaw, TruncatedLaw, build_scenario,
                                    cstar_failure_bound, empirical_sup_distance,
                                    in_moving_interval, increment_variance, make_u_law,
                                    moving_interval, oscillation_scale)

from oracles import empirical_sup_brute, gaussian_partial_sum_increment_var, moving_indicator_mp


# -- moving indicator ---------------------------------------------------------

def test_moving_indicator_worked_point():
    inst = MovingIndicatorScenario().instance_at(0.5)
    assert inst.U == pytest.approx(1.6487212707, rel=1e-10)
    assert inst.times.time_at(1) == 4
    (lo, hi), = moving_interval(4)
    assert lo == pytest.approx(0.3862943611, abs=1e-9)
    assert hi == pytest.approx(0.6094379124, abs=1e-9)
    assert inst.trajectory.point_at(4) == 1.0


def test_first_interval():
    assert moving_interval(1) == [(0.0, math.log(2))]
    # log 2 -> log 3 wraps past 1
    assert moving_interval(2) == [(math.log(2), 1.0), (0.0, pytest.approx(math.log(3) - 1))]
    assert len(moving_interval(3)) == 1
    with pytest.raises(DomainError):
        moving_interval(0)


def test_indicator_matches_high_precision_membership():
    rng = np.random.default_rng(3)
    for omega in rng.uniform(size=40):
        traj = MovingIndicatorTrajectory(math.exp(omega))
        for j in range(0, 3000):
            assert traj.point_at(j) == moving_indicator_mp(j, omega), (omega, j)


def test_interval_helper_agrees_with_trajectory():
    rng = np.random.default_rng(4)
    for omega in rng.uniform(size=30):
        traj = MovingIndicatorTrajectory(math.exp(omega))
        for j in range(1, 500):
            assert in_moving_interval(j, omega) == bool(traj.point_at(j))


def test_marginal_frequency_at_small_n():
    sc = MovingIndicatorScenario(master_seed=9)
    n, reps = 5, 20000
    hits = sum(sc.instance(r).trajectory.point_at(n) for r in range(reps))
    p = math.log((n + 1) / n)
    assert abs(hits / reps - p) < 3 * math.sqrt(p * (1 - p) / reps)


def test_random_time_always_hits_a_one():
    sc = MovingIndicatorScenario(master_seed=1, r_scale=2, r_offset=1)
    for r in range(500):
        inst = sc.instance(r)
        for n in range(0, 12):
            assert inst.trajectory.point_at(inst.times.time_at(n)) == 1.0


def test_moving_indicator_params():
    with pytest.raises(DomainError):
        MovingIndicatorScenario(r_scale=0)
    with pytest.raises(DomainError):
        MovingIndicatorScenario().instance_at(1.0)
    sc = MovingIndicatorScenario(r_fn=lambda n: n * n)
    assert sc.r(3) == 9


def test_horizon_is_enforced():
    traj = MovingIndicatorTrajectory(1.5, max_horizon=1000)
    with pytest.raises(HorizonExceeded):
        traj.point_at(1001)
    with pytest.raises(HorizonExceeded):
        traj.hitting_time(10)


# -- hitting midpoint -----------------------------------------------------------

def test_hitting_worked_point():
    inst = HittingMidpointScenario().instance_at(0.5)
    traj = inst.trajectory
    assert [traj.hitting_time(k) for k in range(4)] == [0, 1, 4, 12]
    assert inst.times.time_at(0) == 0
    assert inst.times.time_at(3) == 8
    assert inst.mixing["U_eff"] == pytest.approx(inst.mixing["U"] * (1 + math.e) / (2 * math.e))


def test_hitting_times_closed_form():
    sc = HittingMidpointScenario(master_seed=2)
    for r in range(10_000):
        inst = sc.instance(r)
        U = inst.mixing["U"]
        traj = inst.trajectory
        prev = 0
        for n in range(1, 11):
            t = traj.hitting_time(n)
            assert t == math.floor(math.exp(n - 1) * U)
            assert t > prev
            prev = t


def test_hitting_times_are_ones_of_the_indicator():
    sc = HittingMidpointScenario(master_seed=6)
    for r in range(200):
        traj = sc.instance(r).trajectory
        ones = [j for j in range(1, 3000) if traj.point_at(j) == 1.0]
        k = 1
        while traj.hitting_time(k) < 3000:
            assert traj.hitting_time(k) == ones[k - 1]
            k += 1
        assert k - 1 == len(ones)


def test_midpoint_strictly_between_hitting_times():
    sc = HittingMidpointScenario(master_seed=3)
    for r in range(2000):
        inst = sc.instance(r)
        for n in range(3, 20):
            assert inst.trajectory.hitting_time(n - 1) < inst.times.time_at(n) \
                < inst.trajectory.hitting_time(n)


def test_midpoint_can_touch_previous_hitting_time_at_n2():
    # T_1 = 1, T_2 = 2 gives N_2 = 1 = T_1
    inst = HittingMidpointScenario().instance_at(0.05)
    assert inst.trajectory.hitting_time(1) == 1
    assert inst.trajectory.hitting_time(2) == 2
    assert inst.times.time_at(2) == 1


def test_mixing_limits():
    assert mixing_limit_check(MovingIndicatorScenario(master_seed=1), 30, 2000) < 0.01
    assert mixing_limit_check(HittingMidpointScenario(master_seed=1), 25, 2000) < 0.01
    assert mixing_limit_check(ExchangeableCLTScenario(master_seed=1), 4000, 2000) < 0.01
    assert mixing_limit_check(ExchangeableEmpiricalScenario(master_seed=1), 800, 2000) < 0.01
    assert EFFECTIVE_MIDPOINT_FACTOR == pytest.approx((1 + math.e) / (2 * math.e))


# -- exchangeable CLT -------------------------------------------------------------

def test_clt_start_and_unit_mixing_normality():
    sc = ExchangeableCLTScenario(master_seed=5, u_law=DegenerateLaw(1.0))
    x = np.array([sc.instance(r).trajectory.point_at(50) for r in range(10_000)])
    assert sc.instance(0).trajectory.point_at(0) == 0.0
    assert stats.kstest(x, "norm").pvalue >= 0.01


def test_clt_random_time_is_floor_nU():
    sc = ExchangeableCLTScenario(master_seed=5)
    for r in range(50):
        inst = sc.instance(r)
        assert inst.times.time_at(1000) == math.floor(1000 * inst.U)
        assert inst.times.scaling(1000) == 1000.0


def test_clt_conditional_increment_variance():
    # (X_n - X_m) / U has variance 2 - 2 sqrt(m / n) whatever U is
    n, delta = 100, 0.1
    m = math.floor(n * (1 - delta))
    sc = ExchangeableCLTScenario(master_seed=8)
    reps = 100_000
    inc = np.empty(reps)
    for r in range(reps):
        inst = sc.instance(r)
        t = inst.trajectory
        inc[r] = (t.point_at(n) - t.point_at(m)) / inst.U
    target = gaussian_partial_sum_increment_var(m, n)
    assert increment_variance(m, n) == pytest.approx(target, rel=1e-14)
    se = target * math.sqrt(2.0 / (reps - 1))
    assert abs(inc.var(ddof=1) - target) < 3 * se


def test_clt_chunked_extension_is_consistent():
    sc = ExchangeableCLTScenario(master_seed=7)
    a = sc.instance(3).trajectory
    b = sc.instance(3).trajectory
    big = a.point_at(5000)
    b.point_at(10)
    b.point_at(700)
    assert b.point_at(5000) == big
    assert b.point_at(10) == a.point_at(10)


def test_kernel_variance_is_U_squared():
    sc = ExchangeableCLTScenario(master_seed=2, u_law=DegenerateLaw(2.0))
    ks = np.array([sc.instance(r).kernel.sample(sc.instance(r).mixing, sc.instance(r).kernel_stream)
                   for r in range(20000)])
    assert ks.var() == pytest.approx(4.0, rel=4 * math.sqrt(2 / 20000))


def test_increment_variance_values():
    assert increment_variance(7, 7) == 0.0
    assert increment_variance(400, 500) == pytest.approx(0.21115, abs=5e-6)
    assert increment_variance(1, 10**12) == pytest.approx(2.0, abs=1e-5)
    with pytest.raises(DomainError):
        increment_variance(5, 4)
    with pytest.raises(DomainError):
        increment_variance(0, 4)


def test_cstar_bound_values():
    assert oscillation_scale(0.36) == pytest.approx(1.26491, abs=5e-6)
    assert cstar_failure_bound(math.inf, 0.1) == 1.0
    assert cstar_failure_bound(1e9, 0.1) == pytest.approx(1.0, abs=1e-6)
    assert cstar_failure_bound(1e-3, 0.1) < 1e-100
    f = oscillation_scale(0.1)
    assert cstar_failure_bound(2.0, 0.1) == pytest.approx(
        float(2 * mpmath.ncdf(-1 / (2.0 * f))), rel=1e-12)
    vals = [cstar_failure_bound(u, 0.1) for u in (1, 2, 4)]
    assert vals[0] < vals[1] < vals[2]
    for bad in [(0.0, 0.1), (1.0, 0.0), (1.0, 0.5)]:
        with pytest.raises(DomainError):
            cstar_failure_bound(*bad)


def test_u_laws():
    with pytest.raises(DomainError):
        LogNormalLaw(sigma=-0.1)
    with pytest.raises(DomainError):
        DegenerateLaw(0.0)
    with pytest.raises(DomainError):
        TruncatedLaw(LogNormalLaw(), -1.0)
    law = LogNormalLaw(0.0, 0.5)
    assert law.quantile(0.5) == pytest.approx(1.0)
    assert law.cdf(law.quantile(0.3)) == pytest.approx(0.3)
    t = TruncatedLaw(law, 2.0)
    assert t.quantile(0.0) > 2.0
    q = QuantileLaw(lambda p: 1.0 + p)
    assert q.quantile(0.5) == 1.5
    assert isinstance(make_u_law({"kind": "degenerate", "u": 3.0}), DegenerateLaw)
    assert isinstance(make_u_law(None), LogNormalLaw)
    with pytest.raises(DomainError):
        make_u_law({"kind": "cauchy"})


def test_truncated_law_samples_stay_above_lower():
    sc = ExchangeableCLTScenario(master_seed=1, u_law=TruncatedLaw(LogNormalLaw(), 4.0))
    assert all(sc.instance(r).U > 4.0 for r in range(500))


# -- exchangeable empirical -------------------------------------------------------

def test_empirical_path_vanishes_at_one():
    sc = ExchangeableEmpiricalScenario(master_seed=3)
    for r in range(200):
        x = sc.instance(r).trajectory.point_at(500)
        assert float(x(np.array([1.0]))[0]) == 0.0


def test_empirical_sample_support_and_mixing():
    sc = ExchangeableEmpiricalScenario(master_seed=3)
    for r in range(100):
        inst = sc.instance(r)
        z = inst.trajectory.sample_upto(300)
        W = inst.mixing["W"]
        assert 0.5 < W <= 1.0
        assert inst.U == pytest.approx(2 * W)
        assert np.all((z >= 0) & (z <= W))
        assert len(np.unique(z)) == z.size


def test_unit_W_gives_identity_F():
    sc = ExchangeableEmpiricalScenario(master_seed=0, w_low=0.999999, w_high=1.0)
    inst = sc.instance(0)
    t = np.linspace(0, 1, 11)
    assert np.allclose(inst.trajectory.F(t), t, atol=1e-5)


def test_empirical_distances_match_brute_force():
    sc = ExchangeableEmpiricalScenario(master_seed=4)
    for r in range(5):
        traj = sc.instance(r).trajectory
        z = traj.sample_upto(80)
        c = 50
        d = traj.distances(c, 30, 80)
        for k, j in enumerate(range(30, 81)):
            ref = empirical_sup_brute(z, traj.F, j, c)
            assert d[k] == pytest.approx(ref, abs=1e-9)
            assert empirical_sup_distance(traj.point_at(j), traj.point_at(c)) == pytest.approx(ref, abs=1e-9)


def test_bridge_kernel_vanishes_where_F_is_one():
    sc = ExchangeableEmpiricalScenario(master_seed=4, bridge_grid=256)
    inst = sc.instance(0)
    path = inst.kernel.sample(inst.mixing, inst.kernel_stream)
    # the path is resolved on the grid i/256; the first grid point past W has F = 1
    first = math.ceil(inst.mixing["W"] * 256) / 256
    t = np.array([first, 0.999, 1.0, 0.0])
    assert np.all(np.asarray(path(t)) == 0.0)


def test_empirical_params():
    with pytest.raises(DomainError):
        ExchangeableEmpiricalScenario(w_low=0.5, w_high=1.5)
    with pytest.raises(DomainError):
        ExchangeableEmpiricalScenario(u_scale=0.0)


# -- registry -------------------------------------------------------------------

def test_registry_and_determinism():
    assert set(SCENARIOS) == {"moving_indicator", "hitting_midpoint", "exchangeable_clt",
                              "exchangeable_empirical"}
    for name in SCENARIOS:
        a = build_scenario(name, 17).instance(5)
        b = build_scenario(name, 17).instance(5)
        assert a.mixing == b.mixing
        assert a.U > 0
    with pytest.raises(DomainError):
        build_scenario("nope")
    with pytest.raises(DomainError):
        build_scenario("moving_indicator", 0, bogus=1)
