"""The four example constructions as replicable scenario generators.

Each scenario maps ``replicate_id`` to a :class:`ScenarioInstance` holding
the mixing state, the trajectory ``X``, the random times ``N_n`` with their
scaling ``k_n``, and a sampler for the limit kernel.  Everything is a pure
function of ``(master_seed, replicate_id)``.

* ``moving_indicator``: ``X_n = 1{omega in A_n}`` with
  ``A_n = [log n, log(n+1)) mod 1`` and ``N_n = floor(U e^{r_n})``, ``U = e^omega``.
* ``hitting_midpoint``: same ``X``; ``N_n`` is the midpoint of consecutive
  hitting times of 1.
* ``exchangeable_clt``: ``Z_i = U V_i`` with standard normal ``V``;
  ``X_n = U S_n / sqrt(n)`` and ``N_n = floor(n U)``.
* ``exchangeable_empirical``: ``Z_i = W V_i`` with uniform ``V``; ``X_n`` is
  the empirical process against ``F(t) = min(t / W, 1)`` and ``N_n = floor(n U)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Any, Callable, ClassVar

import numpy as np

from . import kernels
from .cadlag import (
    EmpiricalProcess,
    UniformScaleCDF,
    brownian_bridge_sample,
    compose_bridge_with_F,
    uniform_grid,
)
from .diagnostics import OMEGA, ConditioningEvent, KernelSampler, interval_event
from .errors import DomainError, HorizonExceeded
from .index_lab import (
    DEFAULT_MAX_HORIZON,
    ProbeGrid,
    RandomTimeSequence,
    RealTrajectory,
    Trajectory,
    as_index,
    window_bounds,
)
from .rng import RngStream, normal_cdf, stream

# analytic trajectories do O(log) work per window; the cap only protects
# the integer meaning of floor(U * e^r) in double precision
ANALYTIC_MAX_HORIZON = 2**52


@dataclass(frozen=True)
class ScenarioInstance:
    replicate_id: int
    mixing: dict[str, float]
    U: float
    trajectory: Trajectory
    times: RandomTimeSequence
    kernel: KernelSampler
    kernel_stream: RngStream


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _point_mass_zero(mixing: dict, s: RngStream) -> float:
    return 0.0


def _sup_abs(x) -> float:
    return float(x.sup_abs())


def _quartile_events(q: Callable[[float], float], var: str = "U") -> list[ConditioningEvent]:
    cuts = [q(0.25), q(0.5), q(0.75)]
    if len(set(cuts)) < 3:
        return [OMEGA]
    edges = [0.0, *cuts, math.inf]
    return [interval_event(edges[i], edges[i + 1], var, label=f"{var}-quartile-{i + 1}")
            for i in range(4)]


class Scenario:
    """Base class; subclasses fill in :meth:`instance` and the defaults."""

    name: ClassVar[str] = ""

    master_seed: int
    max_horizon: int

    def instance(self, replicate_id: int) -> ScenarioInstance:
        raise NotImplementedError

    def u_quantile(self, p: float) -> float:
        raise NotImplementedError

    def events(self) -> list[ConditioningEvent]:
        """Quartile events of the mixing variable ``U``."""
        return _quartile_events(self.u_quantile)

    def default_grid(self) -> ProbeGrid:
        raise NotImplementedError

    default_diagnostic_n: ClassVar[int] = 1000
    default_diagnostic_reps: ClassVar[int] = 2000

    def functional(self, x) -> float:
        return self.kernel_sampler().functional(x)

    def kernel_sampler(self) -> KernelSampler:
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        d = asdict(self)  # type: ignore[call-overload]
        d.pop("master_seed", None)
        d.pop("max_horizon", None)
        return d

    def streams(self, replicate_id: int) -> tuple[RngStream, RngStream, RngStream]:
        return (stream(self.master_seed, replicate_id, f"{self.name}/mixing"),
                stream(self.master_seed, replicate_id, f"{self.name}/trajectory"),
                stream(self.master_seed, replicate_id, f"{self.name}/kernel"))


# -- moving indicator (and its hitting-time variant) ---------------------------

def moving_interval(n: int) -> list[tuple[float, float]]:
    """``A_n = [log n, log(n + 1)) mod 1`` as one or two subintervals of [0, 1)."""
    if n < 1:
        raise DomainError("A_n is defined for n >= 1")
    a, b = math.log(n), math.log(n + 1)
    fa = a - math.floor(a)
    fb = fa + (b - a)
    if fb <= 1.0:
        return [(fa, fb)]
    return [(fa, 1.0), (0.0, fb - 1.0)]


def in_moving_interval(n: int, omega: float) -> bool:
    return any(lo <= omega < hi for lo, hi in moving_interval(n))


class MovingIndicatorTrajectory(Trajectory):
    """``X_j = 1{omega in A_j}``, ``X_0 = 0``, with values in {0, 1}.

    ``omega`` lies in ``A_j`` exactly when ``j = floor(e^{omega + q})`` for
    some integer ``q >= 0``, so the indices where ``X = 1`` are the
    hitting times ``floor(U e^q)``.  Membership is evaluated through that
    exponential map, which is the same floating-point computation that
    produces the random times; window maxima then reduce to counting ones.
    """

    def __init__(self, U: float, max_horizon: int = ANALYTIC_MAX_HORIZON) -> None:
        self.U = U
        self.max_horizon = max_horizon
        self._ones: list[float] = []
        self._q = 0

    def _next(self) -> None:
        v = self.U * _safe_exp(self._q)
        self._q += 1
        # past 2**53 floor() no longer separates integers; nothing there is queried
        self._ones.append(math.floor(v) if v < 2.0**53 else math.inf)

    def _grow(self, hi: int) -> None:
        while not self._ones or self._ones[-1] <= hi:
            if self._ones and self._ones[-1] == math.inf:
                return
            self._next()

    def hitting_time(self, k: int) -> int:
        """``T_k``: the ``k``-th index with ``X = 1`` (``T_0 = 0``)."""
        if k == 0:
            return 0
        while len(self._ones) < k:
            self._next()
        t = self._ones[k - 1]
        if t > self.max_horizon:
            raise HorizonExceeded(f"hitting time T_{k} exceeds max_horizon={self.max_horizon}",
                                  max_horizon=self.max_horizon)
        return int(t)

    def ones_between(self, lo: int, hi: int) -> int:
        self._grow(hi)
        return bisect.bisect_right(self._ones, hi) - bisect.bisect_left(self._ones, lo)

    def point_at(self, j: int) -> float:
        self.check_horizon(j)
        if j == 0:
            return 0.0
        return 1.0 if self.ones_between(j, j) else 0.0

    def metric(self, x: float, y: float) -> float:
        return abs(x - y)

    def window_maxima(self, center, deltas) -> np.ndarray:
        out = np.empty(len(deltas), dtype=np.float64)
        xc = self.point_at(center)
        for k, d in enumerate(deltas):
            lo, hi = window_bounds(center, float(d))
            self.check_horizon(hi)
            ones = self.ones_between(lo, hi)
            size = hi - lo + 1
            differs = ones < size if xc == 1.0 else ones > 0
            out[k] = 1.0 if differs else 0.0
        return out


@dataclass
class MovingIndicatorScenario(Scenario):
    """``r_n = r_scale * n + r_offset`` unless ``r_fn`` is given."""

    master_seed: int = 0
    r_scale: int = 1
    r_offset: int = 0
    max_horizon: int = ANALYTIC_MAX_HORIZON
    r_fn: Callable[[int], int] | None = field(default=None, repr=False)

    name: ClassVar[str] = "moving_indicator"
    default_diagnostic_n: ClassVar[int] = 20
    default_diagnostic_reps: ClassVar[int] = 2000

    def __post_init__(self) -> None:
        if self.r_fn is None and (self.r_scale < 1 or self.r_offset < 0):
            raise DomainError("r_n must be non-negative integers increasing to infinity")

    def r(self, n: int) -> int:
        return int(self.r_fn(n)) if self.r_fn is not None else self.r_scale * n + self.r_offset

    def params(self) -> dict[str, Any]:
        return {"r_scale": self.r_scale, "r_offset": self.r_offset}

    def u_quantile(self, p: float) -> float:
        return math.exp(p)

    def kernel_sampler(self) -> KernelSampler:
        return KernelSampler(_point_mass_zero, float)

    def default_grid(self) -> ProbeGrid:
        return ProbeGrid((10, 20, 30), (0.2, 0.1, 0.05), (0.5,), 1000)

    def instance(self, replicate_id: int) -> ScenarioInstance:
        s_mix, _, s_ker = self.streams(replicate_id)
        return self._build(replicate_id, s_mix.uniform01(), s_ker)

    def instance_at(self, omega: float, replicate_id: int = 0) -> ScenarioInstance:
        """Instance with a prescribed ``omega`` in [0, 1)."""
        if not 0.0 <= omega < 1.0:
            raise DomainError("omega must lie in [0, 1)")
        return self._build(replicate_id, omega, self.streams(replicate_id)[2])

    def _build(self, replicate_id: int, omega: float, s_ker: RngStream) -> ScenarioInstance:
        U = math.exp(omega)
        traj = MovingIndicatorTrajectory(U, self.max_horizon)
        H = self.max_horizon

        def scaling(n: int) -> float:
            return _safe_exp(self.r(n))

        def time_at(n: int) -> int:
            return as_index(U * scaling(n), H, f"N_{n}")

        times = RandomTimeSequence(time_at, scaling)
        return ScenarioInstance(replicate_id, {"omega": omega, "U": U}, U, traj, times,
                                self.kernel_sampler(), s_ker)


EFFECTIVE_MIDPOINT_FACTOR = (1.0 + math.e) / (2.0 * math.e)


@dataclass
class HittingMidpointScenario(MovingIndicatorScenario):
    """``N_n = floor((T_{n-1} + T_n) / 2)`` with ``k_n = e^{n-1}``.

    With this ``k_n``, ``N_n / k_n`` tends to ``U (1 + e) / (2e)``, not ``U``;
    the instance exposes that effective mixing variable as ``U_eff`` and the
    scaled-centre probe uses it.
    """

    name: ClassVar[str] = "hitting_midpoint"
    default_diagnostic_n: ClassVar[int] = 20

    def params(self) -> dict[str, Any]:
        return {}

    def default_grid(self) -> ProbeGrid:
        return ProbeGrid((10, 15, 20, 25), (0.2, 0.1, 0.05), (0.5,), 1000)

    def _build(self, replicate_id: int, omega: float, s_ker: RngStream) -> ScenarioInstance:
        U = math.exp(omega)
        traj = MovingIndicatorTrajectory(U, self.max_horizon)
        u_eff = U * EFFECTIVE_MIDPOINT_FACTOR

        def time_at(n: int) -> int:
            if n == 0:
                return 0
            return (traj.hitting_time(n - 1) + traj.hitting_time(n)) // 2

        def scaling(n: int) -> float:
            return _safe_exp(n - 1)

        times = RandomTimeSequence(time_at, scaling)
        mixing = {"omega": omega, "U": U, "U_eff": u_eff}
        return ScenarioInstance(replicate_id, mixing, u_eff, traj, times,
                                self.kernel_sampler(), s_ker)


# -- exchangeable CLT ---------------------------------------------------------

@dataclass(frozen=True)
class LogNormalLaw:
    mu: float = 0.0
    sigma: float = 0.5

    def __post_init__(self) -> None:
        if not self.sigma >= 0 or not math.isfinite(self.mu):
            raise DomainError("lognormal law needs finite mu and sigma >= 0")

    def sample(self, s: RngStream) -> float:
        return math.exp(self.mu + self.sigma * s.standard_normal())

    def quantile(self, p: float) -> float:
        if self.sigma == 0:
            return math.exp(self.mu)
        return math.exp(self.mu + self.sigma * NormalDist().inv_cdf(p))

    def cdf(self, u: float) -> float:
        if u <= 0:
            return 0.0
        if self.sigma == 0:
            return 1.0 if u >= math.exp(self.mu) else 0.0
        return normal_cdf((math.log(u) - self.mu) / self.sigma)


@dataclass(frozen=True)
class DegenerateLaw:
    u: float = 1.0

    def __post_init__(self) -> None:
        if not self.u > 0 or not math.isfinite(self.u):
            raise DomainError("a degenerate U must sit at a positive finite value")

    def sample(self, s: RngStream) -> float:
        s.uniform01()  # keep stream consumption uniform across laws
        return self.u

    def quantile(self, p: float) -> float:
        return self.u


@dataclass(frozen=True)
class QuantileLaw:
    """``U = quantile(V)`` with ``V`` uniform; ``quantile`` must map (0,1) to (0, inf)."""

    quantile_fn: Callable[[float], float]

    def sample(self, s: RngStream) -> float:
        u = self.quantile_fn(s.uniform01())
        if not u > 0:
            raise DomainError("custom quantile function returned a non-positive U")
        return float(u)

    def quantile(self, p: float) -> float:
        return float(self.quantile_fn(p))


@dataclass(frozen=True)
class TruncatedLaw:
    """The law of ``U`` given ``U > lower``, sampled by inversion.

    Running a scenario under it gives the conditional probabilities given
    ``{U > lower}`` without discarding replicates.
    """

    base: LogNormalLaw
    lower: float

    def __post_init__(self) -> None:
        if not self.lower > 0 or not self.base.cdf(self.lower) < 1.0:
            raise DomainError("truncation point must be positive with positive tail mass")

    def quantile(self, p: float) -> float:
        f0 = self.base.cdf(self.lower)
        q = min(f0 + p * (1.0 - f0), math.nextafter(1.0, 0.0))
        return max(self.base.quantile(q), math.nextafter(self.lower, math.inf))

    def sample(self, s: RngStream) -> float:
        return self.quantile(s.uniform01())


def make_u_law(spec: dict | str | None):
    """Build a U law from a config mapping such as ``{kind: lognormal, mu: 0, sigma: .5}``."""
    if spec is None:
        return LogNormalLaw()
    if isinstance(spec, (LogNormalLaw, DegenerateLaw, QuantileLaw, TruncatedLaw)):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    spec = dict(spec)
    kind = spec.pop("kind", "lognormal")
    try:
        if kind == "lognormal":
            return LogNormalLaw(**spec)
        if kind == "degenerate":
            return DegenerateLaw(**spec)
    except TypeError as exc:
        raise DomainError(f"bad parameters for U law {kind!r}: {exc}") from None
    raise DomainError(f"unknown U law {kind!r}")


class GaussianPartialSumTrajectory(RealTrajectory):
    """``X_0 = 0``, ``X_j = U * (V_1 + ... + V_j) / sqrt(j)``."""

    def __init__(self, U: float, s: RngStream, max_horizon: int = DEFAULT_MAX_HORIZON) -> None:
        super().__init__(max_horizon)
        self.U = U
        self._stream = s
        self._sums = np.zeros(1, dtype=np.float64)
        self._values = np.zeros(1, dtype=np.float64)

    def _extend(self, size: int) -> None:
        have = self._sums.size
        if size <= have:
            return
        v = self._stream.normals(size - have)
        new = np.cumsum(np.concatenate([self._sums[-1:], v]))[1:]
        self._sums = np.concatenate([self._sums, new])
        j = np.arange(have, size, dtype=np.float64)
        self._values = np.concatenate([self._values, self.U * new / np.sqrt(j)])

    def partial_sum(self, j: int) -> float:
        self.values_upto(j)
        return float(self._sums[j])


def _scaled_normal(mixing: dict, s: RngStream) -> float:
    return mixing["U"] * s.standard_normal()


@dataclass
class ExchangeableCLTScenario(Scenario):
    master_seed: int = 0
    u_law: Any = field(default_factory=LogNormalLaw)
    max_horizon: int = DEFAULT_MAX_HORIZON

    name: ClassVar[str] = "exchangeable_clt"
    default_diagnostic_n: ClassVar[int] = 10_000
    default_diagnostic_reps: ClassVar[int] = 4000

    def __post_init__(self) -> None:
        self.u_law = make_u_law(self.u_law)

    def params(self) -> dict[str, Any]:
        law = self.u_law
        if isinstance(law, LogNormalLaw):
            return {"u_law": {"kind": "lognormal", "mu": law.mu, "sigma": law.sigma}}
        if isinstance(law, DegenerateLaw):
            return {"u_law": {"kind": "degenerate", "u": law.u}}
        return {"u_law": {"kind": "custom"}}

    def u_quantile(self, p: float) -> float:
        return self.u_law.quantile(p)

    def kernel_sampler(self) -> KernelSampler:
        """``N(0, L)`` with ``L = E(Z^2|T) - E(Z|T)^2 = U^2``, drawn as ``U * G``."""
        return KernelSampler(_scaled_normal, float)

    def default_grid(self) -> ProbeGrid:
        return ProbeGrid((1000, 2000, 4000), (0.2, 0.1, 0.05, 0.01), (0.25, 0.5), 1000)

    def instance(self, replicate_id: int) -> ScenarioInstance:
        s_mix, s_traj, s_ker = self.streams(replicate_id)
        U = self.u_law.sample(s_mix)
        traj = GaussianPartialSumTrajectory(U, s_traj, self.max_horizon)
        H = self.max_horizon
        times = RandomTimeSequence(lambda n: as_index(n * U, H, f"N_{n}"), float)
        return ScenarioInstance(replicate_id, {"U": U}, U, traj, times,
                                self.kernel_sampler(), s_ker)


def increment_variance(n: int, m: int) -> float:
    """Variance of ``S_n / sqrt(n) - S_m / sqrt(m)`` for standard normal summands."""
    if not 1 <= n <= m:
        raise DomainError("increment_variance needs 1 <= n <= m")
    return 2.0 - 2.0 * math.sqrt(n / m)


def oscillation_scale(delta: float) -> float:
    """``f(delta) = 2 sqrt(2 - 2 sqrt(1 - delta))``."""
    return 2.0 * math.sqrt(2.0 - 2.0 * math.sqrt(1.0 - delta))


def cstar_failure_bound(u: float, delta: float) -> float:
    """Lower bound ``2 Phi(-1 / (u f(delta)))`` for ``P(M_n(2 delta) > 1/2 | U > u)``."""
    if not u > 0:
        raise DomainError("u must be positive")
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if math.isinf(u):
        return 1.0
    return 2.0 * normal_cdf(-1.0 / (u * oscillation_scale(delta)))


# -- exchangeable empirical process -------------------------------------------

class EmpiricalProcessTrajectory(Trajectory):
    """``X_j`` = empirical process of ``Z_1..Z_j`` against a continuous ``F``.

    Distances are exact uniform distances between the cadlag paths.
    """

    def __init__(self, W: float, s: RngStream, F: UniformScaleCDF,
                 max_horizon: int = DEFAULT_MAX_HORIZON) -> None:
        self.W = W
        self.F = F
        self.max_horizon = max_horizon
        self._stream = s
        self._z = np.zeros(0, dtype=np.float64)
        self._fz = np.zeros(0, dtype=np.float64)

    def sample_upto(self, j: int) -> np.ndarray:
        self.check_horizon(j)
        have = self._z.size
        if have < j:
            target = max(j, min(2 * have, self.max_horizon))
            z = self.W * self._stream.uniforms(target - have)
            self._z = np.concatenate([self._z, z])
            self._fz = np.concatenate([self._fz, self.F(z)])
        return self._z[:j]

    def point_at(self, j: int) -> EmpiricalProcess:
        return EmpiricalProcess(self.sample_upto(j).copy(), self.F)

    def metric(self, x: EmpiricalProcess, y: EmpiricalProcess) -> float:
        return empirical_sup_distance(x, y)

    def distances(self, center: int, lo: int, hi: int) -> np.ndarray:
        m = max(hi, center)
        self.sample_upto(m)
        return kernels.ecdf_sup_profile(self._z, self._fz, float(self.F(0.0)),
                                        float(self.F(1.0)), center, lo, hi)


def empirical_sup_distance(x: EmpiricalProcess, y: EmpiricalProcess) -> float:
    """Exact ``sup_t |x(t) - y(t)|`` for empirical processes sharing one continuous ``F``.

    Between sample points the difference is a constant minus a multiple of
    ``F``, hence monotone, so the sup is attained at sample points, at their
    left limits, or at the endpoints.
    """
    pts = np.union1d(x.sorted_sample, y.sorted_sample)
    pts = np.concatenate([[0.0], pts, [1.0]])

    def left(e: EmpiricalProcess, t: np.ndarray) -> np.ndarray:
        if e.n == 0:
            return np.zeros_like(t)
        cnt = np.searchsorted(e.sorted_sample, t, side="left")
        return math.sqrt(e.n) * (cnt / e.n - x.F(t))

    right = np.abs(x(pts) - y(pts))
    lefts = np.abs(left(x, pts) - left(y, pts))
    return float(max(np.max(right), np.max(lefts)))


@dataclass(frozen=True)
class _BridgeKernel:
    grid_size: int

    def __call__(self, mixing: dict, s: RngStream):
        F = UniformScaleCDF(mixing["W"])
        t = uniform_grid(self.grid_size)
        s_grid = np.unique(F(t))
        b = brownian_bridge_sample(s_grid, s)
        return compose_bridge_with_F(b, F, t)


@dataclass
class ExchangeableEmpiricalScenario(Scenario):
    """``W ~ Uniform(w_low, w_high]``, ``U = u_scale * W``."""

    master_seed: int = 0
    w_low: float = 0.5
    w_high: float = 1.0
    u_scale: float = 2.0
    bridge_grid: int = 8192
    max_horizon: int = DEFAULT_MAX_HORIZON

    name: ClassVar[str] = "exchangeable_empirical"
    default_diagnostic_n: ClassVar[int] = 2000
    default_diagnostic_reps: ClassVar[int] = 3000

    def __post_init__(self) -> None:
        if not 0.0 <= self.w_low < self.w_high <= 1.0:
            raise DomainError("W law must be supported in (0, 1]")
        if not self.u_scale > 0:
            raise DomainError("u_scale must be positive")
        if self.bridge_grid < 2:
            raise DomainError("bridge_grid must be at least 2")

    def u_quantile(self, p: float) -> float:
        return self.u_scale * (self.w_low + (self.w_high - self.w_low) * p)

    def kernel_sampler(self) -> KernelSampler:
        """Draws ``t -> B(F(t))``; the functional is ``sup_t |x(t)|``."""
        return KernelSampler(_BridgeKernel(self.bridge_grid), _sup_abs)

    def default_grid(self) -> ProbeGrid:
        return ProbeGrid((200, 400, 800), (0.1, 0.05, 0.02), (0.25, 0.5), 200)

    def instance(self, replicate_id: int) -> ScenarioInstance:
        s_mix, s_traj, s_ker = self.streams(replicate_id)
        W = self.w_high - (self.w_high - self.w_low) * s_mix.uniform01()
        U = self.u_scale * W
        F = UniformScaleCDF(W)
        traj = EmpiricalProcessTrajectory(W, s_traj, F, self.max_horizon)
        H = self.max_horizon
        times = RandomTimeSequence(lambda n: as_index(n * U, H, f"N_{n}"), float)
        return ScenarioInstance(replicate_id, {"W": W, "U": U}, U, traj, times,
                                self.kernel_sampler(), s_ker)


SCENARIOS: dict[str, type[Scenario]] = {
    cls.name: cls for cls in (MovingIndicatorScenario, HittingMidpointScenario,
                              ExchangeableCLTScenario, ExchangeableEmpiricalScenario)
}


def build_scenario(name: str, master_seed: int = 0, **params) -> Scenario:
    try:
        cls = SCENARIOS[name]
    except KeyError:
        raise DomainError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    try:
        return cls(master_seed=master_seed, **params)  # type: ignore[call-arg]
    except TypeError as exc:
        raise DomainError(f"bad parameters for scenario {name!r}: {exc}") from None
