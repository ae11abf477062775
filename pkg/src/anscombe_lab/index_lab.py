"""Window maxima and Monte Carlo probes of the oscillation conditions.

The window maximum around ``center`` is

    M_center(delta) = max { d(X_j, X_center) : j >= 0, |center - j| <= center * delta }

and the probes estimate ``P(M > eps)`` with the window centred at ``n``
(variants ``c`` and ``c_star``), at the random time ``N_n`` (``d``) or at
``floor(k_n * U)`` (``e``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, HorizonExceeded, InsufficientConditioningMass
from .parallel import map_replicates

DEFAULT_MAX_HORIZON = 2**22
DEFAULT_MIN_EVENT_COUNT = 200
VARIANTS = ("c", "c_star", "d", "e")
# which window centre each variant uses
_CENTER_KIND = {"c": "n", "c_star": "n", "d": "N", "e": "kU"}


def window_bounds(center: int, delta: float) -> tuple[int, int]:
    """Integer window ``{j >= 0 : |center - j| <= center * delta}``.

    The comparison is exact in rational arithmetic on the float ``delta``;
    ``center * delta`` is never rounded.
    """
    if center < 0:
        raise DomainError("center must be non-negative")
    if not 0.0 <= delta <= 1.0:
        raise DomainError("delta must lie in (0,1]")
    half = Fraction(center) * Fraction(delta)
    lo = math.ceil(center - half)
    hi = math.floor(center + half)
    return max(lo, 0), hi


def as_index(x: float, max_horizon: int, what: str = "index") -> int:
    """``floor(x)`` as an int, refusing non-finite values and values past the horizon."""
    if not math.isfinite(x) or x > max_horizon:
        raise HorizonExceeded(f"{what} {x!r} exceeds max_horizon={max_horizon}",
                              max_horizon=max_horizon)
    if x < 0:
        raise DomainError(f"{what} must be non-negative, got {x!r}")
    return math.floor(x)


class Trajectory:
    """Lazily indexed sequence ``X_0, X_1, ...`` in a metric space.

    Subclasses implement :meth:`point_at` and :meth:`metric`; fast paths
    override :meth:`distances` or :meth:`window_maxima`.
    """

    max_horizon: int = DEFAULT_MAX_HORIZON

    def point_at(self, j: int) -> Any:
        raise NotImplementedError

    def metric(self, x: Any, y: Any) -> float:
        raise NotImplementedError

    def check_horizon(self, j: int) -> None:
        if j > self.max_horizon:
            raise HorizonExceeded(
                f"index {j} exceeds max_horizon={self.max_horizon}",
                index=j, max_horizon=self.max_horizon)

    def distances(self, center: int, lo: int, hi: int) -> np.ndarray:
        """``d(X_j, X_center)`` for ``j = lo..hi``."""
        xc = self.point_at(center)
        return np.array([self.metric(self.point_at(j), xc) for j in range(lo, hi + 1)],
                        dtype=np.float64)

    def window_maxima(self, center: int, deltas: Sequence[float]) -> np.ndarray:
        """Window maxima for several deltas, sharing one pass over the widest window."""
        deltas = np.asarray(deltas, dtype=np.float64)
        bounds = [window_bounds(center, float(d)) for d in deltas]
        hi_max = max(b[1] for b in bounds)
        lo_min = min(b[0] for b in bounds)
        self.check_horizon(hi_max)
        prof = self.distances(center, lo_min, hi_max)
        out = np.empty(len(deltas), dtype=np.float64)
        for k, (lo, hi) in enumerate(bounds):
            out[k] = float(np.max(prof[lo - lo_min:hi - lo_min + 1]))
        return out


class SequenceTrajectory(Trajectory):
    """Trajectory over an explicit list of points (reals by default)."""

    def __init__(self, points: Sequence[Any], metric: Callable[[Any, Any], float] | None = None,
                 max_horizon: int | None = None) -> None:
        self.points = list(points)
        self._metric = metric
        self.max_horizon = len(self.points) - 1 if max_horizon is None else max_horizon

    def point_at(self, j: int) -> Any:
        self.check_horizon(j)
        return self.points[j]

    def metric(self, x: Any, y: Any) -> float:
        if self._metric is None:
            return abs(float(x) - float(y))
        return float(self._metric(x, y))

    def distances(self, center: int, lo: int, hi: int) -> np.ndarray:
        if self._metric is None:
            v = np.asarray(self.points[lo:hi + 1], dtype=np.float64)
            return np.abs(v - float(self.points[center]))
        return super().distances(center, lo, hi)


class RealTrajectory(Trajectory):
    """Real-valued trajectory materialised into a growing array cache.

    Subclasses implement :meth:`_extend`, which must append values so that
    ``self._values`` covers indices ``0..size-1``; the same values come back
    whatever sequence of sizes is requested.
    """

    def __init__(self, max_horizon: int = DEFAULT_MAX_HORIZON) -> None:
        self.max_horizon = max_horizon
        self._values = np.zeros(0, dtype=np.float64)

    def _extend(self, size: int) -> None:
        raise NotImplementedError

    def values_upto(self, hi: int) -> np.ndarray:
        self.check_horizon(hi)
        if self._values.size <= hi:
            target = max(hi + 1, min(2 * self._values.size, self.max_horizon + 1))
            self._extend(target)
        return self._values

    def point_at(self, j: int) -> float:
        return float(self.values_upto(j)[j])

    def metric(self, x: float, y: float) -> float:
        return abs(x - y)

    def distances(self, center: int, lo: int, hi: int) -> np.ndarray:
        v = self.values_upto(max(hi, center))
        return np.abs(v[lo:hi + 1] - v[center])

    def window_maxima(self, center: int, deltas: Sequence[float]) -> np.ndarray:
        deltas = np.asarray(deltas, dtype=np.float64)
        order = np.argsort(deltas, kind="stable")
        bounds = [window_bounds(center, float(deltas[k])) for k in order]
        hi_max = bounds[-1][1]
        self.check_horizon(hi_max)
        v = self.values_upto(max(hi_max, center))
        los = np.array([b[0] for b in bounds], dtype=np.int64)
        his = np.array([b[1] for b in bounds], dtype=np.int64)
        nested = kernels.nested_window_max(v, center, los, his)
        out = np.empty(len(deltas), dtype=np.float64)
        out[order] = nested
        return out


@dataclass
class RandomTimeSequence:
    """Per-replicate random times ``N_n`` with scaling constants ``k_n``."""

    time_fn: Callable[[int], int]
    scaling_fn: Callable[[int], float]

    def time_at(self, n: int) -> int:
        return int(self.time_fn(n))

    def scaling(self, n: int) -> float:
        return float(self.scaling_fn(n))


def window_max(t: Trajectory, center: int, delta: float) -> float:
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0,1]")
    return float(t.window_maxima(center, [delta])[0])


def window_max_at_random_time(t: Trajectory, times: RandomTimeSequence, n: int,
                              delta: float) -> float:
    return window_max(t, times.time_at(n), delta)


def window_max_at_scaled(t: Trajectory, U: float, k_n: float, delta: float) -> float:
    if U <= 0 or k_n <= 0:
        raise DomainError("U and k_n must be positive")
    return window_max(t, as_index(k_n * U, t.max_horizon, "floor(k_n U)"), delta)


# -- probes -------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeGrid:
    n_values: tuple[int, ...]
    delta_values: tuple[float, ...]
    epsilon_values: tuple[float, ...]
    replications: int

    def __post_init__(self) -> None:
        for name in ("n_values", "delta_values", "epsilon_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise DomainError(f"{name} must not be empty")
        if any(n < 1 for n in self.n_values) or list(self.n_values) != sorted(set(self.n_values)):
            raise DomainError("n_values must be strictly increasing positive integers")
        if any(not 0.0 < d <= 1.0 for d in self.delta_values):
            raise DomainError("delta must lie in (0,1]")
        if list(self.delta_values) != sorted(set(self.delta_values), reverse=True):
            raise DomainError("delta_values must be strictly decreasing")
        if any(e <= 0 for e in self.epsilon_values):
            raise DomainError("epsilon values must be positive")
        if self.replications < 100:
            raise DomainError("replications must be at least 100")


@dataclass(frozen=True)
class ProbeRow:
    n: int
    delta: float
    epsilon: float
    event: str
    p_hat: float
    se: float
    hits: int
    count: int
    limsup_proxy: float

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ConditionEstimate:
    """Estimated exceedance probabilities for one variant over a probe grid."""

    variant: str
    grid: ProbeGrid
    rows: list[ProbeRow] = field(default_factory=list)

    def p_hat(self, n: int, delta: float, epsilon: float, event: str = "all") -> float:
        return self._row(n, delta, epsilon, event).p_hat

    def se(self, n: int, delta: float, epsilon: float, event: str = "all") -> float:
        return self._row(n, delta, epsilon, event).se

    def _row(self, n, delta, epsilon, event) -> ProbeRow:
        for r in self.rows:
            if r.n == n and r.delta == delta and r.epsilon == epsilon and r.event == event:
                return r
        raise KeyError((n, delta, epsilon, event))

    @property
    def events(self) -> list[str]:
        return list(dict.fromkeys(r.event for r in self.rows))

    def limsup_proxy(self, delta: float, epsilon: float, event: str = "all") -> float:
        return self._row(self.grid.n_values[-1], delta, epsilon, event).limsup_proxy

    def limsup_se(self, delta: float, epsilon: float, event: str = "all") -> float:
        """Standard error of the grid row that attains the limsup proxy."""
        top = self.grid.n_values[-2:]
        rows = [self._row(n, delta, epsilon, event) for n in top]
        return max(rows, key=lambda r: (r.p_hat, r.se)).se

    def delta_curve(self, epsilon: float, event: str = "all") -> tuple[list[tuple[float, float]], float]:
        """Limsup proxy as a function of delta, with its minimum (the inf over delta)."""
        curve = [(d, self.limsup_proxy(d, epsilon, event)) for d in self.grid.delta_values]
        return curve, min(v for _, v in curve)

    def as_dict(self) -> dict[str, Any]:
        return {"variant": self.variant, "rows": [r.as_dict() for r in self.rows]}


@dataclass
class ReplicateProbe:
    replicate_id: int
    mixing: dict[str, float]
    maxima: dict[str, np.ndarray]


def _centers(inst, n: int, kind: str, max_horizon: int) -> int:
    if kind == "n":
        return n
    if kind == "N":
        return inst.times.time_at(n)
    k_n = inst.times.scaling(n)
    return as_index(k_n * inst.U, max_horizon, "floor(k_n U)")


def probe_replicate(scenario, grid: ProbeGrid, kinds: Sequence[str],
                    replicate_id: int) -> ReplicateProbe:
    """Window maxima of one replicate for every (centre kind, n, delta)."""
    inst = scenario.instance(replicate_id)
    traj = inst.trajectory
    out: dict[str, np.ndarray] = {}
    for kind in kinds:
        arr = np.empty((len(grid.n_values), len(grid.delta_values)), dtype=np.float64)
        for a, n in enumerate(grid.n_values):
            try:
                c = _centers(inst, n, kind, traj.max_horizon)
                arr[a] = traj.window_maxima(c, grid.delta_values)
            except HorizonExceeded as exc:
                raise exc.with_context(replicate=replicate_id, n=n)
        out[kind] = arr
    return ReplicateProbe(replicate_id, dict(inst.mixing), out)


def collect_probes(scenario, grid: ProbeGrid, variants: Iterable[str],
                   workers: int = 1) -> list[ReplicateProbe]:
    kinds = sorted({_CENTER_KIND[v] for v in variants})
    fn = partial(probe_replicate, scenario, grid, kinds)
    return map_replicates(fn, range(grid.replications), workers)


def _event_masks(probes: Sequence[ReplicateProbe], events) -> list[tuple[str, np.ndarray]]:
    return [(ev.label, np.array([bool(ev.predicate(p.mixing)) for p in probes]))
            for ev in events]


def summarize(variant: str, grid: ProbeGrid, probes: Sequence[ReplicateProbe],
              events=None, min_event_count: int = DEFAULT_MIN_EVENT_COUNT) -> ConditionEstimate:
    """Turn per-replicate window maxima into exceedance estimates."""
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    kind = _CENTER_KIND[variant]
    stack = np.stack([p.maxima[kind] for p in probes]) if probes else np.zeros(
        (0, len(grid.n_values), len(grid.delta_values)))
    if variant == "c_star":
        if not events:
            raise DomainError("variant c_star needs at least one conditioning event")
        masks = _event_masks(probes, events)
        for label, mask in masks:
            if int(mask.sum()) < min_event_count:
                raise InsufficientConditioningMass(label, int(mask.sum()), min_event_count)
    else:
        masks = [("all", np.ones(len(probes), dtype=bool))]

    est = ConditionEstimate(variant, grid)
    top = len(grid.n_values) - min(2, len(grid.n_values))
    for label, mask in masks:
        count = int(mask.sum())
        sub = stack[mask]
        for di, delta in enumerate(grid.delta_values):
            for eps in grid.epsilon_values:
                hits = (sub[:, :, di] > eps).sum(axis=0) if count else np.zeros(len(grid.n_values))
                p = hits / count if count else np.full(len(grid.n_values), np.nan)
                proxy = float(np.max(p[top:]))
                for ni, n in enumerate(grid.n_values):
                    ph = float(p[ni])
                    se = math.sqrt(ph * (1.0 - ph) / count) if count else math.nan
                    est.rows.append(ProbeRow(n, float(delta), float(eps), label, ph, se,
                                             int(hits[ni]), count, proxy))
    est.rows.sort(key=lambda r: (_mask_order(masks, r.event), r.n, -r.delta, r.epsilon))
    return est


def _mask_order(masks, label: str) -> int:
    for i, (lab, _) in enumerate(masks):
        if lab == label:
            return i
    return len(masks)


def estimate_condition(scenario, grid: ProbeGrid, variant: str, events=None,
                       min_event_count: int = DEFAULT_MIN_EVENT_COUNT,
                       workers: int = 1) -> ConditionEstimate:
    """Monte Carlo estimate of ``P(M > eps)`` for one condition variant.

    ``events`` are used by ``c_star`` only: each row is then the conditional
    frequency given the event.  ``HorizonExceeded`` carries the offending
    replicate and n.
    """
    probes = collect_probes(scenario, grid, [variant], workers)
    return summarize(variant, grid, probes, events, min_event_count)


def estimate_conditions(scenario, grid: ProbeGrid, variants: Sequence[str], events=None,
                        min_event_count: int = DEFAULT_MIN_EVENT_COUNT,
                        workers: int = 1) -> dict[str, ConditionEstimate]:
    """Several variants from a single pass over the replicates."""
    probes = collect_probes(scenario, grid, variants, workers)
    return {v: summarize(v, grid, probes, events, min_event_count) for v in variants}


@dataclass(frozen=True)
class EquivalenceRow:
    n: int
    delta: float
    epsilon: float
    p_d: float
    p_e: float
    diff: float
    bound: float
    top: bool
    flagged: bool

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class EquivalenceReport:
    rows: list[EquivalenceRow]

    @property
    def passed(self) -> bool:
        """No flagged row at the two largest grid n."""
        return not any(r.flagged for r in self.rows if r.top)

    @property
    def exact(self) -> bool:
        return all(r.diff == 0.0 for r in self.rows)

    def as_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "exact": self.exact,
                "rows": [r.as_dict() for r in self.rows]}


def equivalence_from_estimates(est_d: ConditionEstimate, est_e: ConditionEstimate) -> EquivalenceReport:
    grid = est_d.grid
    top = set(grid.n_values[-2:])
    rows = []
    for rd in est_d.rows:
        re_ = est_e._row(rd.n, rd.delta, rd.epsilon, rd.event)
        diff = abs(rd.p_hat - re_.p_hat)
        bound = 3.0 * math.sqrt(rd.se**2 + re_.se**2)
        rows.append(EquivalenceRow(rd.n, rd.delta, rd.epsilon, rd.p_hat, re_.p_hat,
                                   diff, bound, rd.n in top, diff > bound))
    return EquivalenceReport(rows)


def equivalence_report(scenario, grid: ProbeGrid, workers: int = 1) -> EquivalenceReport:
    """Compare the random-time (d) and scaled-mixing (e) probes row by row."""
    est = estimate_conditions(scenario, grid, ["d", "e"], workers=workers)
    return equivalence_from_estimates(est["d"], est["e"])


@dataclass(frozen=True)
class ImplicationRow:
    delta: float
    epsilon: float
    cstar_sup: float
    cstar_passes: bool
    e_limsup: float
    bound: float
    violated: bool

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def implication_from_estimates(est_cstar: ConditionEstimate,
                               est_e: ConditionEstimate) -> list[ImplicationRow]:
    """Where the conditional probe passes at level eps, (e) must not exceed it."""
    grid = est_cstar.grid
    rows = []
    for eps in grid.epsilon_values:
        for delta in grid.delta_values:
            vals = [(est_cstar.limsup_proxy(delta, eps, ev), est_cstar.limsup_se(delta, eps, ev))
                    for ev in est_cstar.events]
            sup_val, sup_se = max(vals)
            passes = all(v < eps for v, _ in vals)
            e_val = est_e.limsup_proxy(delta, eps)
            e_se = est_e.limsup_se(delta, eps)
            bound = sup_val + 3.0 * math.sqrt(sup_se**2 + e_se**2)
            rows.append(ImplicationRow(delta, eps, sup_val, passes, e_val, bound,
                                       passes and e_val > bound))
    return rows


def implication_check(scenario, grid: ProbeGrid, events, workers: int = 1,
                      min_event_count: int = DEFAULT_MIN_EVENT_COUNT) -> list[ImplicationRow]:
    est = estimate_conditions(scenario, grid, ["c_star", "e"], events,
                              min_event_count=min_event_count, workers=workers)
    return implication_from_estimates(est["c_star"], est["e"])


def _mixing_ratio(scenario, n: int, replicate_id: int) -> float:
    inst = scenario.instance(replicate_id)
    return inst.times.time_at(n) / (inst.times.scaling(n) * inst.U)


def mixing_limit_check(scenario, n: int, reps: int, tol: float = 0.01,
                       workers: int = 1) -> float:
    """Fraction of replicates with ``|N_n / (k_n U) - 1| > tol``."""
    ratios = map_replicates(partial(_mixing_ratio, scenario, n), range(reps), workers)
    return float(np.mean(np.abs(np.asarray(ratios) - 1.0) > tol))
