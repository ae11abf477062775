"""Empirical stable-convergence diagnostics.

For each conditioning event ``H`` the diagnostic compares, with a two-sample
Kolmogorov-Smirnov test, a scalar functional of ``X_{N_n}`` over the
replicates in ``H`` against the same functional of one kernel draw per
replicate in ``H``.  Drawing the kernel sample from each replicate's own
mixing state yields the mixture ``E[K | H]`` without any integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, EmptySample, HorizonExceeded, InsufficientConditioningMass
from .index_lab import DEFAULT_MIN_EVENT_COUNT
from .parallel import map_replicates
from .rng import RngStream

DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class KernelSampler:
    """Sampler for the limit kernel ``K`` given a replicate's mixing state."""

    sample: Callable[[dict, RngStream], Any]
    functional: Callable[[Any], float] = float


@dataclass(frozen=True)
class ConditioningEvent:
    label: str
    predicate: Callable[[dict], bool]
    empirical_mass: float | None = None

    def __call__(self, mixing: dict) -> bool:
        return bool(self.predicate(mixing))

    def with_mass(self, mass: float) -> "ConditioningEvent":
        return ConditioningEvent(self.label, self.predicate, mass)


def _always(_: dict) -> bool:
    return True


OMEGA = ConditioningEvent("all", _always)


@dataclass(frozen=True)
class _Interval:
    var: str
    lo: float
    hi: float

    def __call__(self, mixing: dict) -> bool:
        return self.lo < mixing[self.var] <= self.hi


def interval_event(lo: float, hi: float, var: str = "U", label: str | None = None) -> ConditioningEvent:
    """The event ``lo < var <= hi`` on the mixing state (picklable)."""
    if label is None:
        label = f"{lo:g}<{var}<={hi:g}"
    return ConditioningEvent(label, _Interval(var, float(lo), float(hi)))


# -- quantizer ----------------------------------------------------------------

def quantize_mixing(U: float, delta: float) -> float:
    """Round ``U`` down onto the grid ``{delta, 2 delta, ...}``, never below ``delta``.

    Returns ``delta`` when ``0 < U <= delta`` and otherwise ``j * delta`` for
    the unique integer ``j >= 1`` with ``j delta < U <= (j + 1) delta``.  The
    index ``j`` is found in exact rational arithmetic, so boundary cases such
    as ``U == (j + 1) * delta`` go down as required.  When ``j * delta`` is
    not a double, the smallest double above it is returned; that keeps
    ``U - delta <= result <= U`` exact.
    """
    if not U > 0 or not math.isfinite(U):
        raise DomainError("U must be a positive finite number")
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0,1]")
    if U <= delta:
        return float(delta)
    step = Fraction(delta)
    j = math.ceil(Fraction(U) / step) - 1
    return _round_up(j * step)


def _round_up(q: Fraction) -> float:
    r = float(q)
    if Fraction(r) < q:
        r = math.nextafter(r, math.inf)
    return r


# -- two-sample KS ------------------------------------------------------------

def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    """``sup_x |F_a(x) - F_b(x)|`` for right-continuous empirical CDFs."""
    aa = np.sort(np.asarray(a, dtype=np.float64).reshape(-1))
    bb = np.sort(np.asarray(b, dtype=np.float64).reshape(-1))
    if aa.size == 0 or bb.size == 0:
        raise EmptySample("ks_two_sample needs two non-empty samples")
    return kernels.ks_statistic(aa, bb)


def _kolmogorov_sf(lam: float) -> float:
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        # the alternating series needs many terms here; use the dual theta series
        c = -(math.pi**2) / (8.0 * lam * lam)
        total, k = 0.0, 1
        while True:
            term = math.exp(c * k * k)
            total += term
            if term < 1e-16:
                break
            k += 2
        return 1.0 - math.sqrt(2.0 * math.pi) / lam * total
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-12:
            break
        k += 1
    return 2.0 * total


def kolmogorov_pvalue(statistic: float, m: int, n: int) -> float:
    """Asymptotic p-value ``Q(lambda)`` with ``lambda = D * sqrt(m n / (m + n))``."""
    if m < 1 or n < 1:
        raise DomainError("sample sizes must be at least 1")
    lam = statistic * math.sqrt(m * n / (m + n))
    return min(1.0, max(0.0, _kolmogorov_sf(lam)))


# -- diagnostics --------------------------------------------------------------

@dataclass(frozen=True)
class EventResult:
    event: str
    count: int
    mass: float
    statistic: float
    p_value: float
    passed: bool

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class DiagnosticReport:
    n: int
    reps: int
    alpha: float
    events: list[EventResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.events)

    def result(self, label: str) -> EventResult:
        for e in self.events:
            if e.event == label:
                return e
        raise KeyError(label)

    def as_dict(self) -> dict[str, Any]:
        return {"n": self.n, "reps": self.reps, "alpha": self.alpha,
                "passed": self.passed, "events": [e.as_dict() for e in self.events]}


@dataclass(frozen=True)
class DiagnosticSample:
    replicate_id: int
    mixing: dict
    observed: float
    kernel: float


def diagnostic_sample(scenario, n: int, replicate_id: int) -> DiagnosticSample:
    """Functional of ``X_{N_n}`` and of one kernel draw for one replicate."""
    inst = scenario.instance(replicate_id)
    try:
        N = inst.times.time_at(n)
        x = inst.trajectory.point_at(N)
    except HorizonExceeded as exc:
        raise exc.with_context(replicate=replicate_id, n=n)
    k = inst.kernel.sample(inst.mixing, inst.kernel_stream)
    f = inst.kernel.functional
    return DiagnosticSample(replicate_id, dict(inst.mixing), float(f(x)), float(f(k)))


def collect_diagnostic_samples(scenario, n: int, reps: int, workers: int = 1) -> list[DiagnosticSample]:
    return map_replicates(partial(diagnostic_sample, scenario, n), range(reps), workers)


def diagnose_from_samples(samples: Sequence[DiagnosticSample], events: Sequence[ConditioningEvent],
                          n: int, alpha: float = DEFAULT_ALPHA,
                          min_event_count: int = DEFAULT_MIN_EVENT_COUNT) -> DiagnosticReport:
    obs = np.array([s.observed for s in samples])
    ker = np.array([s.kernel for s in samples])
    report = DiagnosticReport(n, len(samples), alpha)
    for ev in events:
        mask = np.array([ev(s.mixing) for s in samples], dtype=bool)
        count = int(mask.sum())
        if count < min_event_count:
            raise InsufficientConditioningMass(ev.label, count, min_event_count)
        stat = ks_two_sample(obs[mask], ker[mask])
        p = kolmogorov_pvalue(stat, count, count)
        report.events.append(EventResult(ev.label, count, count / len(samples),
                                         stat, p, p >= alpha))
    return report


def diagnose_stable_convergence(scenario, n: int, reps: int, events: Sequence[ConditioningEvent],
                                alpha: float = DEFAULT_ALPHA,
                                min_event_count: int = DEFAULT_MIN_EVENT_COUNT,
                                workers: int = 1) -> DiagnosticReport:
    """Per-event KS comparison of ``X_{N_n}`` against the kernel mixture.

    An event passes when its p-value is at least ``alpha``; no multiplicity
    correction is applied across events.
    """
    samples = collect_diagnostic_samples(scenario, n, reps, workers)
    return diagnose_from_samples(samples, events, n, alpha, min_event_count)


def diagnose_distributional(scenario, n: int, reps: int, alpha: float = DEFAULT_ALPHA,
                            min_event_count: int = DEFAULT_MIN_EVENT_COUNT,
                            workers: int = 1) -> DiagnosticReport:
    return diagnose_stable_convergence(scenario, n, reps, [OMEGA], alpha,
                                       min_event_count, workers)
