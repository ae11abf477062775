"""Monte Carlo laboratory for limit theorems with random indices.

Probes the oscillation conditions behind Anscombe-type theorems, checks
stable convergence of ``X_{N_n}`` empirically, and ships the four reference
constructions as replicable scenarios.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AnscombeLabError,
    ConfigError,
    DomainError,
    EmptySample,
    HorizonExceeded,
    InsufficientConditioningMass,
    ParseError,
    ResolutionTooCoarse,
    ValidationError,
)

__all__ = [
    "__version__",
    "AnscombeLabError",
    "ConfigError",
    "DomainError",
    "EmptySample",
    "HorizonExceeded",
    "InsufficientConditioningMass",
    "ParseError",
    "ResolutionTooCoarse",
    "ValidationError",
]
