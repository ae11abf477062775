"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels`` are used.  Set ``ANSCOMBE_LAB_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import DomainError

_ck = None
if os.environ.get("ANSCOMBE_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ck  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _ck = None

BACKEND = "cython" if _ck is not None else "python"
_impl = _ck if _ck is not None else _pykernels


def available_backends() -> dict[str, object]:
    backends: dict[str, object] = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def ks_statistic(a_sorted, b_sorted) -> float:
    return float(_impl.ks_statistic(_f64(a_sorted), _f64(b_sorted)))


def nested_window_max(values, center: int, los, his) -> np.ndarray:
    """``max |values[j] - values[center]|`` over each window ``[los[k], his[k]]``.

    Windows must contain ``center`` and grow with ``k`` (narrowest first); the
    compiled kernel extends the previous window instead of rescanning.
    """
    lo, hi = _i64(los), _i64(his)
    if lo.size and (lo[0] > center or hi[0] < center or np.any(np.diff(lo) > 0)
                    or np.any(np.diff(hi) < 0)):
        raise DomainError("windows must contain center and be nested, narrowest first")
    return _impl.nested_window_max(_f64(values), int(center), lo, hi)


def ecdf_sup_profile(z, fz, f0: float, f1: float, center: int, lo: int,
                     hi: int) -> np.ndarray:
    return _impl.ecdf_sup_profile(_f64(z), _f64(fz), float(f0), float(f1),
                                  int(center), int(lo), int(hi))


def skorohod_feasible(xa, xl, ya, yl, eps: float) -> bool:
    return bool(_impl.skorohod_feasible(_f64(xa), _f64(xl), _f64(ya), _f64(yl), float(eps)))
