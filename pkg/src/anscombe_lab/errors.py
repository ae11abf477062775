"""Exception types shared across the package."""

from __future__ import annotations


class AnscombeLabError(Exception):
    """Base class for all errors raised by anscombe_lab."""


class DomainError(AnscombeLabError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class EmptySample(AnscombeLabError, ValueError):
    pass


class HorizonExceeded(AnscombeLabError):
    """A window or random time reaches past the trajectory's ``max_horizon``.

    ``replicate`` and ``n`` are filled in by the probe drivers so the
    offending unit of work can be reported.
    """

    def __init__(self, message: str, *, index: int | None = None,
                 max_horizon: int | None = None, replicate: int | None = None,
                 n: int | None = None) -> None:
        super().__init__(message)
        self.index = index
        self.max_horizon = max_horizon
        self.replicate = replicate
        self.n = n

    def __reduce__(self):
        return (_rebuild_horizon, (self.args[0], self.index, self.max_horizon,
                                   self.replicate, self.n))

    def with_context(self, *, replicate: int | None = None,
                     n: int | None = None) -> "HorizonExceeded":
        if replicate is not None:
            self.replicate = replicate
        if n is not None:
            self.n = n
        return self

    def __str__(self) -> str:
        base = super().__str__()
        ctx = []
        if self.replicate is not None:
            ctx.append(f"replicate={self.replicate}")
        if self.n is not None:
            ctx.append(f"n={self.n}")
        return f"{base} ({', '.join(ctx)})" if ctx else base


class InsufficientConditioningMass(AnscombeLabError):
    def __init__(self, label: str, count: int, required: int) -> None:
        super().__init__(
            f"event {label!r} holds on {count} replicates, "
            f"fewer than min_event_count={required}"
        )
        self.label = label
        self.count = count
        self.required = required

    def __reduce__(self):
        return (InsufficientConditioningMass, (self.label, self.count, self.required))


def _rebuild_horizon(message, index, max_horizon, replicate, n):
    return HorizonExceeded(message, index=index, max_horizon=max_horizon,
                           replicate=replicate, n=n)


class ResolutionTooCoarse(UserWarning):
    """Advisory: jump counts exceed the exact-matching cap.

    Issued through :mod:`warnings`; the Skorohod routine then switches to
    its grid-coarsened upper bound instead of failing.
    """


class ConfigError(AnscombeLabError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, *, line: int | None = None,
                 key: str | None = None) -> None:
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.key = key


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
