"""Cadlag paths on [0, 1]: step functions, Brownian bridges, empirical processes.

This is the metric-space backend for the exchangeable empirical-process
scenario.  Two distances are provided: the exact uniform distance between
step functions and a Skorohod (J1) distance computed as a certified upper
bound (exact for step functions with at most ``matching_cap`` jumps).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, ResolutionTooCoarse
from .rng import RngStream

DEFAULT_DRIFT_GRID = 512
DEFAULT_BRIDGE_GRID = 512
DEFAULT_MATCHING_CAP = 20


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant path on [0, 1].

    ``values[i]`` holds on ``[jump_times[i], jump_times[i+1])`` and
    ``initial_value`` on ``[0, jump_times[0])``.  A "jump" may have height 0;
    nothing requires the levels to differ.
    """

    jump_times: np.ndarray
    values: np.ndarray
    initial_value: float = 0.0

    def __post_init__(self) -> None:
        jt = np.asarray(self.jump_times, dtype=np.float64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if jt.shape != vals.shape:
            raise DomainError("jump_times and values must have equal length")
        if jt.size:
            if jt[0] <= 0.0 or jt[-1] > 1.0:
                raise DomainError("jump times must lie in (0, 1]")
            if np.any(np.diff(jt) <= 0.0):
                raise DomainError("jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "initial_value", float(self.initial_value))

    @classmethod
    def constant(cls, c: float) -> "StepFunction":
        return cls(np.empty(0), np.empty(0), c)

    @classmethod
    def indicator(cls, start: float, height: float = 1.0) -> "StepFunction":
        """``height * 1_{[start, 1]}``."""
        return cls(np.array([start]), np.array([height]), 0.0)

    @property
    def levels(self) -> np.ndarray:
        return np.concatenate([[self.initial_value], self.values])

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self.levels[idx]
        return float(out) if np.ndim(out) == 0 else out

    def __add__(self, c: float) -> "StepFunction":
        return StepFunction(self.jump_times, self.values + c, self.initial_value + c)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.jump_times, -self.values, -self.initial_value)

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.levels)))

    def compose(self, lam: "TimeChange") -> "StepFunction":
        """The path ``t -> self(lam(t))``."""
        if self.jump_times.size == 0:
            return self
        s = lam.inverse(self.jump_times)
        return StepFunction(s, self.values, self.initial_value)

    def simplified(self) -> "StepFunction":
        """Drop zero-height jumps."""
        lv = self.levels
        keep = lv[1:] != lv[:-1]
        return StepFunction(self.jump_times[keep], self.values[keep], self.initial_value)


@dataclass(frozen=True)
class TimeChange:
    """Strictly increasing piecewise-linear bijection of [0, 1]."""

    nodes: np.ndarray
    images: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.nodes, dtype=np.float64)
        lam = np.asarray(self.images, dtype=np.float64)
        if s.shape != lam.shape or s.size < 2:
            raise DomainError("a time change needs at least the two endpoints")
        if s[0] != 0.0 or s[-1] != 1.0 or lam[0] != 0.0 or lam[-1] != 1.0:
            raise DomainError("a time change must fix 0 and 1")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(lam) <= 0):
            raise DomainError("a time change must be strictly increasing")
        object.__setattr__(self, "nodes", s)
        object.__setattr__(self, "images", lam)

    @classmethod
    def identity(cls) -> "TimeChange":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    def __call__(self, t):
        return np.interp(t, self.nodes, self.images)

    def inverse(self, u):
        return np.interp(u, self.images, self.nodes)

    def distance_to_identity(self) -> float:
        return float(np.max(np.abs(self.images - self.nodes)))


@dataclass(frozen=True)
class BrownianBridgePath:
    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        out = np.interp(t, self.grid, self.values)
        return float(out) if np.ndim(out) == 0 else out


class RandomDistributionFunction:
    """Distribution function on [0, 1] fixed by a replicate's mixing state."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "F") -> None:
        self._fn = fn
        self.label = label

    def __call__(self, t):
        out = self._fn(np.asarray(t, dtype=np.float64))
        return float(out) if np.ndim(out) == 0 else out

    eval = __call__

    def __repr__(self) -> str:
        return f"RandomDistributionFunction({self.label})"


class UniformScaleCDF(RandomDistributionFunction):
    """``F(t) = min(t / W, 1)``: the law of ``W * V`` with ``V ~ Uniform(0, 1)``."""

    def __init__(self, w: float) -> None:
        if not 0.0 < w <= 1.0:
            raise DomainError("W must lie in (0, 1]")
        self.w = float(w)
        super().__init__(lambda t: np.minimum(np.maximum(t, 0.0) / self.w, 1.0),
                         label=f"min(t/{self.w:g}, 1)")

    def __reduce__(self):
        return (UniformScaleCDF, (self.w,))


def uniform_grid(size: int) -> np.ndarray:
    if size < 1:
        raise DomainError("grid size must be at least 1")
    return np.linspace(0.0, 1.0, size + 1)


# -- empirical processes ------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalProcess:
    """``t -> sqrt(n) * (Fhat_n(t) - F(t))`` kept in exact form.

    Holds the sorted sample, so evaluation, the uniform norm and distances to
    other empirical processes are computed on the cadlag path itself rather
    than on a gridded step approximation.  ``F`` must be continuous.
    """

    sample: np.ndarray
    F: RandomDistributionFunction
    sorted_sample: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        z = np.asarray(self.sample, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "sample", z)
        object.__setattr__(self, "sorted_sample", np.sort(z))

    @property
    def n(self) -> int:
        return int(self.sample.size)

    def __call__(self, t):
        n = self.n
        if n == 0:
            return 0.0 * np.asarray(t, dtype=np.float64)
        cnt = np.searchsorted(self.sorted_sample, t, side="right")
        out = math.sqrt(n) * (cnt / n - self.F(t))
        return float(out) if np.ndim(out) == 0 else out

    def sup_abs(self) -> float:
        """Exact ``sup_t |X(t)|``: extremes sit at sample points or their left limits."""
        n = self.n
        if n == 0:
            return 0.0
        zs = self.sorted_sample
        uniq, counts = np.unique(zs, return_counts=True)
        upto = np.cumsum(counts)
        fu = np.asarray(self.F(uniq), dtype=np.float64)
        right = np.max(np.abs(upto / n - fu))
        left = np.max(np.abs((upto - counts) / n - fu))
        ends = max(abs(np.searchsorted(zs, 0.0, side="right") / n - float(self.F(0.0))),
                   abs(np.searchsorted(zs, 1.0, side="right") / n - float(self.F(1.0))))
        return math.sqrt(n) * float(max(right, left, ends))

    def to_step_function(self, drift_grid: int = DEFAULT_DRIFT_GRID) -> StepFunction:
        return empirical_process(self.sample, self.F, drift_grid=drift_grid)


def empirical_process(z: Sequence[float], F: RandomDistributionFunction,
                      drift_grid: int = DEFAULT_DRIFT_GRID) -> StepFunction:
    """Step representation of ``sqrt(n) * (Fhat_n - F)``.

    Jumps of the empirical CDF are kept exactly; the continuous drift
    ``-sqrt(n) F`` is sampled at the knots, which are the sample points merged
    with the uniform grid ``k / drift_grid``.  The value on each knot interval
    is the exact process value at its left knot.
    """
    zz = np.asarray(z, dtype=np.float64).reshape(-1)
    n = zz.size
    if n < 1:
        raise DomainError("empirical_process needs at least one observation")
    if np.any(zz < 0.0) or np.any(zz > 1.0) or np.any(np.isnan(zz)):
        raise DomainError("observations must lie in [0, 1]")
    zs = np.sort(zz)
    grid = uniform_grid(drift_grid)[1:]
    knots = np.union1d(zs[zs > 0.0], grid)
    rn = math.sqrt(n)
    vals = rn * (np.searchsorted(zs, knots, side="right") / n - F(knots))
    init = rn * (np.searchsorted(zs, 0.0, side="right") / n - float(F(0.0)))
    return StepFunction(knots, vals, init)


# -- Brownian bridge ----------------------------------------------------------

def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64).reshape(-1)
    if g.size < 2 or g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
        raise DomainError("grid must increase strictly from 0 to 1")
    return g


def brownian_bridge_sample(grid, stream: RngStream) -> BrownianBridgePath:
    """One bridge path on ``grid`` by sequential conditional Gaussian steps.

    Step ``k -> k+1`` draws ``B(t_{k+1})`` given ``B(t_k)``:
    mean ``B(t_k)(1-t_{k+1})/(1-t_k)``, variance
    ``(t_{k+1}-t_k)(1-t_{k+1})/(1-t_k)``.  Dividing by ``1 - t`` turns the
    recursion into a cumulative sum, which is what is evaluated.
    """
    g = _check_grid(grid)
    inner = g[1:-1]
    vals = np.zeros(g.size, dtype=np.float64)
    if inner.size:
        odds = inner / (1.0 - inner)
        steps = np.sqrt(np.diff(np.concatenate([[0.0], odds])))
        vals[1:-1] = (1.0 - inner) * np.cumsum(steps * stream.normals(inner.size))
    return BrownianBridgePath(g, vals)


def compose_bridge_with_F(b: BrownianBridgePath, F: RandomDistributionFunction,
                          grid=None) -> StepFunction:
    """``t -> b(F(t))`` sampled on ``grid`` (default: the bridge's own grid)."""
    g = _check_grid(b.grid if grid is None else grid)
    vals = b(np.asarray(F(g), dtype=np.float64))
    return StepFunction(g[1:], vals[1:], vals[0])


# -- distances ----------------------------------------------------------------

def sup_norm(x: StepFunction, y: StepFunction) -> float:
    """Exact uniform distance between two step functions."""
    pts = np.union1d(x.jump_times, y.jump_times)
    pts = np.concatenate([[0.0], pts])
    return float(np.max(np.abs(x(pts) - y(pts))))


@dataclass(frozen=True)
class SkorohodDistance:
    """Result of :func:`skorohod_distance`.

    ``value`` is always an upper bound of the J1 distance; ``exact`` is True
    when it came from the exact jump-matching sweep on the original paths.
    """

    value: float
    exact: bool
    method: str

    def __float__(self) -> float:
        return self.value

    @property
    def label(self) -> str:
        return "upper bound (exact)" if self.exact else "upper bound"


def _step_distance_exact(x: StepFunction, y: StepFunction) -> float:
    xa, xl = x.jump_times, x.levels
    ya, yl = y.jump_times, y.levels
    cands = [np.zeros(1)]
    if xa.size and ya.size:
        cands.append(np.abs(xa[:, None] - ya[None, :]).ravel())
    cands.append(np.abs(xl[:, None] - yl[None, :]).ravel())
    cand = np.unique(np.concatenate(cands))
    lo, hi = 0, cand.size - 1
    # the identity change is feasible at the sup-norm, which is a candidate
    while lo < hi:
        mid = (lo + hi) // 2
        if kernels.skorohod_feasible(xa, xl, ya, yl, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def _coarsen(x: StepFunction, resolution: int) -> tuple[StepFunction, float]:
    """Snap jumps to the grid ``k / resolution``; return path and J1 error bound.

    Each grid cell's jumps collapse into one jump at the cell's right end.  A
    time change moving the cell's last jump there costs < 1/resolution in
    time; intermediate levels inside a cell add their deviation from the
    level the cell started with.
    """
    jt = x.jump_times
    if jt.size == 0:
        return x, 0.0
    lv = x.levels
    cell = np.ceil(jt * resolution).astype(np.int64)
    cell = np.clip(cell, 1, resolution)
    bound = 1.0 / resolution
    uniq, first, counts = np.unique(cell, return_index=True, return_counts=True)
    last = first + counts - 1
    new_vals = lv[last + 1]
    for f, c in zip(first, counts):
        if c > 1:
            start = lv[f]
            bound = max(bound, float(np.max(np.abs(lv[f + 1:f + c] - start))))
    return StepFunction(uniq / resolution, new_vals, x.initial_value), bound


def skorohod_distance(x: StepFunction, y: StepFunction, resolution: int = 512,
                      matching_cap: int = DEFAULT_MATCHING_CAP) -> SkorohodDistance:
    """J1 distance ``inf_lambda max(||lambda - id||, ||x o lambda - y||)``.

    With at most ``matching_cap`` jumps on each side the bottleneck sweep over
    monotone jump matchings gives the exact value.  Otherwise both paths are
    coarsened onto the ``1/resolution`` grid, matched exactly there, and the
    coarsening errors are added back; a :class:`ResolutionTooCoarse` warning
    is issued.  The result never exceeds ``sup_norm(x, y)``.
    """
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    sup = sup_norm(x, y)
    xs, ys = x.simplified(), y.simplified()
    if xs.jump_times.size <= matching_cap and ys.jump_times.size <= matching_cap:
        d = _step_distance_exact(xs, ys)
        return SkorohodDistance(min(d, sup), True, "matching")
    warnings.warn(
        f"{xs.jump_times.size} and {ys.jump_times.size} jumps exceed matching_cap="
        f"{matching_cap}; using grid-coarsened bound at resolution {resolution}",
        ResolutionTooCoarse, stacklevel=2)
    xc, ex = _coarsen(xs, resolution)
    yc, ey = _coarsen(ys, resolution)
    d = ex + _step_distance_exact(xc.simplified(), yc.simplified()) + ey
    if d < sup:
        return SkorohodDistance(d, False, "grid")
    return SkorohodDistance(sup, False, "sup-norm")
