"""Backend selection for the boundary-hit kernel.

The compiled backend (``cy``) is used when the extension built; the pure
Python backend (``py``) is always available and bit-identical.  Selection
happens at import and can be forced with the PWHMC_KERNEL environment
variable (``py``, ``cy``, or ``auto``) or at runtime with set_backend —
the latter exists for the benchmark and the equivalence tests.
"""

import os

import numpy as np

from . import _hit_py

_BACKENDS = {"py": _hit_py}
try:
    from . import _hit_cy
    _BACKENDS["cy"] = _hit_cy
except ImportError:
    _hit_cy = None


def _pick(requested):
    if requested in (None, "", "auto"):
        return "cy" if "cy" in _BACKENDS else "py"
    if requested not in _BACKENDS:
        raise RuntimeError(
            f"hit kernel backend '{requested}' unavailable; "
            f"have {sorted(_BACKENDS)}"
        )
    return requested


_active = _pick(os.environ.get("PWHMC_KERNEL", "auto"))


def available_backends():
    return tuple(sorted(_BACKENDS))


def current_backend() -> str:
    return _active


def set_backend(name: str) -> str:
    """Switch the active kernel; returns the previous backend name."""
    global _active
    previous = _active
    _active = _pick(name)
    return previous


def first_hit(fa, fb, h, t_max, eps_t, tie_tol=1e-9):
    """First boundary crossing among m constraints via the active backend.

    fa, fb, h are per-constraint coefficient arrays; returns (k, tau) with
    k = -1 and tau = t_max when no constraint is hit in (eps_t, t_max].
    """
    fa = np.ascontiguousarray(fa, dtype=np.float64)
    fb = np.ascontiguousarray(fb, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    return _BACKENDS[_active].first_hit(
        fa, fb, h, float(t_max), float(eps_t), float(tie_tol)
    )
