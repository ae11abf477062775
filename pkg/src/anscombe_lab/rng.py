"""Splittable random streams and scalar probability helpers.

Every stream is keyed by ``(master_seed, replicate_id, label)``.  The key is
hashed into a 128-bit Philox key, so streams are derived without any shared
state: a replicate can be recomputed in isolation, on any worker, and give
the same draws.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    replicate_id: int
    label: str

    def __post_init__(self) -> None:
        if self.replicate_id < 0:
            raise DomainError("replicate_id must be non-negative")

    def philox_key(self) -> int:
        seed = self.master_seed & _MASK64
        payload = b"%d:%d:%s" % (seed, self.replicate_id, self.label.encode("utf-8"))
        digest = hashlib.blake2b(payload, digest_size=16, person=b"anscombe-lab").digest()
        return int.from_bytes(digest, "little")


class RngStream:
    """Counter-based stream of uniform and normal variates.

    The ``k``-th draw depends only on the key and ``k``: drawing ``a`` values
    and then ``b`` values yields the same numbers as drawing ``a + b`` at once.
    """

    __slots__ = ("key", "_gen")

    def __init__(self, key: StreamKey) -> None:
        self.key = key
        self._gen = np.random.Generator(np.random.Philox(key=key.philox_key()))

    def uniform01(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def standard_normal(self) -> float:
        return float(self._gen.standard_normal())

    def normals(self, size: int) -> np.ndarray:
        return self._gen.standard_normal(size)

    def __repr__(self) -> str:
        k = self.key
        return f"RngStream(seed={k.master_seed}, replicate={k.replicate_id}, label={k.label!r})"


def derive_stream(key: StreamKey) -> RngStream:
    return RngStream(key)


def stream(master_seed: int, replicate_id: int, label: str) -> RngStream:
    """Shorthand for ``derive_stream(StreamKey(...))``."""
    return RngStream(StreamKey(master_seed, replicate_id, label))


def uniform01(s: RngStream) -> float:
    """Next draw from ``s``, uniform on ``[0, 1)``."""
    return s.uniform01()


def standard_normal(s: RngStream) -> float:
    return s.standard_normal()


_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function.

    Uses ``erfc`` on both tails, which keeps the relative error small far out
    in the lower tail where ``1 + erf`` would cancel.
    """
    if math.isnan(x):
        raise DomainError("normal_cdf is undefined at NaN")
    return 0.5 * math.erfc(-x / _SQRT2)
