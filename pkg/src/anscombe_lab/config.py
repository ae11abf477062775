"""YAML run configuration.

A minimal document only names the scenario::

    scenario: exchangeable_clt
    master_seed: 1

Everything else falls back to the scenario's defaults.  The full schema::

    scenario:                 # a name, or a mapping with ``name`` and parameters
      name: moving_indicator
      r_scale: 1              # r_n = r_scale * n + r_offset
      r_offset: 0
    master_seed: 0
    workers: 1
    output_dir: results
    probe:
      n_values: [10, 20, 30]
      delta_values: [0.2, 0.1, 0.05]
      epsilon_values: [0.5]
      replications: 1000
      variants: [c, c_star, d, e]
      max_horizon: 4194304    # overrides the scenario default
      min_event_count: 200
    diagnostics:
      enabled: true
      n: 20
      reps: 2000
      alpha: 0.01
      events: quartiles       # or {intervals: [[lo, hi], ...]} on U
    equivalence: true

Scenario parameters: ``exchangeable_clt`` takes ``u_law`` (``{kind: lognormal,
mu, sigma}`` or ``{kind: degenerate, u}``); ``exchangeable_empirical`` takes
``w_low``, ``w_high``, ``u_scale`` and ``bridge_grid``; ``hitting_midpoint``
takes none.  All scenarios accept ``max_horizon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from .diagnostics import DEFAULT_ALPHA, OMEGA, ConditioningEvent, interval_event
from .errors import DomainError, ParseError, ValidationError
from .index_lab import DEFAULT_MIN_EVENT_COUNT, VARIANTS, ProbeGrid
from .scenarios import SCENARIOS, Scenario, build_scenario

_SCENARIO_PARAMS = {
    "moving_indicator": {"r_scale", "r_offset", "max_horizon"},
    "hitting_midpoint": {"max_horizon"},
    "exchangeable_clt": {"u_law", "max_horizon"},
    "exchangeable_empirical": {"w_low", "w_high", "u_scale", "bridge_grid", "max_horizon"},
}
_TOP_KEYS = {"scenario", "master_seed", "workers", "output_dir", "probe", "diagnostics",
             "equivalence"}
_PROBE_KEYS = {"n_values", "delta_values", "epsilon_values", "replications", "variants",
               "max_horizon", "min_event_count"}
_DIAG_KEYS = {"enabled", "n", "reps", "alpha", "events"}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)

    def build(self, master_seed: int, max_horizon: int | None = None) -> Scenario:
        params = dict(self.params)
        if max_horizon is not None:
            params["max_horizon"] = max_horizon
        return build_scenario(self.name, master_seed, **params)


@dataclass(frozen=True)
class ProbeConfig:
    """Probe settings; ``grid`` is None when any grid list is empty."""

    grid: ProbeGrid | None
    variants: tuple[str, ...]
    max_horizon: int | None = None
    min_event_count: int = DEFAULT_MIN_EVENT_COUNT

    def as_dict(self) -> dict[str, Any]:
        g = self.grid
        return {
            "n_values": list(g.n_values) if g else [],
            "delta_values": list(g.delta_values) if g else [],
            "epsilon_values": list(g.epsilon_values) if g else [],
            "replications": g.replications if g else 0,
            "variants": list(self.variants),
            "max_horizon": self.max_horizon,
            "min_event_count": self.min_event_count,
        }


@dataclass(frozen=True)
class DiagnosticsConfig:
    enabled: bool
    n: int
    reps: int
    alpha: float = DEFAULT_ALPHA
    events: str | tuple[tuple[float, float], ...] = "quartiles"

    def as_dict(self) -> dict[str, Any]:
        ev = self.events if isinstance(self.events, str) else {
            "intervals": [list(iv) for iv in self.events]}
        return {"enabled": self.enabled, "n": self.n, "reps": self.reps,
                "alpha": self.alpha, "events": ev}


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    master_seed: int
    probe: ProbeConfig
    diagnostics: DiagnosticsConfig
    equivalence: bool = True
    output_dir: str = "results"
    workers: int = 1

    def build_scenario(self) -> Scenario:
        return self.scenario.build(self.master_seed, self.probe.max_horizon)

    def events(self, scenario: Scenario | None = None) -> list[ConditioningEvent]:
        spec = self.diagnostics.events
        if spec == "quartiles":
            return (scenario or self.build_scenario()).events()
        if spec == "all":
            return [OMEGA]
        return [interval_event(lo, hi) for lo, hi in spec]

    def with_overrides(self, *, master_seed: int | None = None, workers: int | None = None,
                       output_dir: str | None = None) -> "RunConfig":
        return RunConfig(self.scenario,
                         self.master_seed if master_seed is None else int(master_seed),
                         self.probe, self.diagnostics, self.equivalence,
                         self.output_dir if output_dir is None else str(output_dir),
                         self.workers if workers is None else _positive_int(workers, "workers"))

    def as_dict(self) -> dict[str, Any]:
        """Config echo; ``parse_config(yaml.dump(cfg.as_dict()))`` reproduces ``cfg``."""
        return {"scenario": {"name": self.scenario.name, **self.scenario.params},
                "master_seed": self.master_seed,
                "probe": self.probe.as_dict(),
                "diagnostics": self.diagnostics.as_dict(),
                "equivalence": self.equivalence,
                "output_dir": self.output_dir,
                "workers": self.workers}


# -- parsing ------------------------------------------------------------------

def _key_lines(node, prefix: str = "", out: dict[str, int] | None = None) -> dict[str, int]:
    """Map dotted key paths to 1-based source lines."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            out[path] = k.start_mark.line + 1
            _key_lines(v, path + ".", out)
    return out


def _check_keys(doc: dict, allowed: set[str], prefix: str, lines: dict[str, int]) -> None:
    for k in doc:
        if not isinstance(k, str) or k not in allowed:
            path = f"{prefix}{k}"
            raise ParseError(f"unknown key {path!r}", line=lines.get(path), key=path)


def _positive_int(v: Any, name: str, minimum: int = 1) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ValidationError(name, f"must be an integer >= {minimum}, got {v!r}")
    return v


def _real(v: Any, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(name, f"must be a finite number, got {v!r}")
    return float(v)


def _real_list(v: Any, name: str) -> list[float]:
    if not isinstance(v, list):
        raise ValidationError(name, "must be a list")
    return [_real(x, name) for x in v]


def _parse_scenario(raw: Any, lines: dict[str, int]) -> ScenarioConfig:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise ValidationError("scenario", "must be a scenario name or a mapping with 'name'")
    name = raw["name"]
    if name not in SCENARIOS:
        raise ValidationError("scenario", f"unknown scenario {name!r}; "
                              f"choose from {sorted(SCENARIOS)}")
    params = {k: v for k, v in raw.items() if k != "name"}
    _check_keys(params, _SCENARIO_PARAMS[name], "scenario.", lines)
    try:
        build_scenario(name, 0, **params)
    except DomainError as exc:
        raise ValidationError("scenario", str(exc)) from None
    return ScenarioConfig(name, params)


def _parse_probe(raw: dict, scenario: Scenario, lines: dict[str, int]) -> ProbeConfig:
    _check_keys(raw, _PROBE_KEYS, "probe.", lines)
    default = scenario.default_grid()
    n_values = raw.get("n_values", list(default.n_values))
    if not isinstance(n_values, list):
        raise ValidationError("probe.n_values", "must be a list")
    n_values = [_positive_int(n, "probe.n_values") for n in n_values]
    deltas = _real_list(raw.get("delta_values", list(default.delta_values)), "probe.delta_values")
    for d in deltas:
        if not 0.0 < d <= 1.0:
            raise ValidationError("probe.delta_values", "delta must lie in (0,1]")
    eps = _real_list(raw.get("epsilon_values", list(default.epsilon_values)),
                     "probe.epsilon_values")
    reps = _positive_int(raw.get("replications", default.replications), "probe.replications")
    variants = raw.get("variants", list(VARIANTS))
    if not isinstance(variants, list) or any(v not in VARIANTS for v in variants):
        raise ValidationError("probe.variants", f"must be a list drawn from {list(VARIANTS)}")
    if len(set(variants)) != len(variants):
        raise ValidationError("probe.variants", "duplicate variant")
    mh = raw.get("max_horizon")
    if mh is not None:
        mh = _positive_int(mh, "probe.max_horizon")
    mec = _positive_int(raw.get("min_event_count", DEFAULT_MIN_EVENT_COUNT),
                        "probe.min_event_count")
    grid = None
    if n_values and deltas and eps:
        try:
            grid = ProbeGrid(tuple(n_values), tuple(deltas), tuple(eps), reps)
        except DomainError as exc:
            raise ValidationError("probe", str(exc)) from None
    return ProbeConfig(grid, tuple(variants), mh, mec)


def _parse_diagnostics(raw: dict, scenario: Scenario, lines: dict[str, int]) -> DiagnosticsConfig:
    _check_keys(raw, _DIAG_KEYS, "diagnostics.", lines)
    enabled = raw.get("enabled", True)
    if not isinstance(enabled, bool):
        raise ValidationError("diagnostics.enabled", "must be true or false")
    n = _positive_int(raw.get("n", scenario.default_diagnostic_n), "diagnostics.n")
    reps = _positive_int(raw.get("reps", scenario.default_diagnostic_reps), "diagnostics.reps")
    alpha = _real(raw.get("alpha", DEFAULT_ALPHA), "diagnostics.alpha")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("diagnostics.alpha", "must lie in (0,1)")
    ev = raw.get("events", "quartiles")
    if isinstance(ev, dict):
        _check_keys(ev, {"intervals"}, "diagnostics.events.", lines)
        ivs = ev.get("intervals")
        if not isinstance(ivs, list) or not ivs:
            raise ValidationError("diagnostics.events.intervals", "must be a non-empty list")
        parsed = []
        for iv in ivs:
            if not isinstance(iv, list) or len(iv) != 2:
                raise ValidationError("diagnostics.events.intervals", "entries must be [lo, hi]")
            lo = _real(iv[0], "diagnostics.events.intervals")
            hi = iv[1]
            hi = math.inf if hi in ("inf", ".inf") else hi
            hi = float(hi) if hi == math.inf else _real(hi, "diagnostics.events.intervals")
            if not lo < hi:
                raise ValidationError("diagnostics.events.intervals", "need lo < hi")
            parsed.append((lo, hi))
        ev = tuple(parsed)
    elif ev not in ("quartiles", "all"):
        raise ValidationError("diagnostics.events", "must be 'quartiles', 'all' or {intervals: ...}")
    return DiagnosticsConfig(enabled, n, reps, alpha, ev)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration, filling defaults."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ParseError(f"malformed YAML: {exc.problem or exc}",
                         line=mark.line + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("config must be a mapping", line=1)
    lines = _key_lines(node)
    _check_keys(doc, _TOP_KEYS, "", lines)
    if "scenario" not in doc:
        raise ValidationError("scenario", "is required")
    scen = _parse_scenario(doc["scenario"], lines)
    seed = doc.get("master_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError("master_seed", "must be a non-negative integer")
    workers = _positive_int(doc.get("workers", 1), "workers")
    out = doc.get("output_dir", "results")
    if not isinstance(out, str) or not out:
        raise ValidationError("output_dir", "must be a non-empty path")
    eq = doc.get("equivalence", True)
    if not isinstance(eq, bool):
        raise ValidationError("equivalence", "must be true or false")
    for sect in ("probe", "diagnostics"):
        if doc.get(sect) is not None and not isinstance(doc[sect], dict):
            raise ValidationError(sect, "must be a mapping")
    scenario = scen.build(seed)
    probe = _parse_probe(doc.get("probe") or {}, scenario, lines)
    diag = _parse_diagnostics(doc.get("diagnostics") or {}, scenario, lines)
    return RunConfig(scen, seed, probe, diag, eq, out, workers)


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
