"""Backend selection for the iteration kernels.

The compiled extension is preferred when present; the pure-Python/numpy
fallback is selected otherwise, or when REVDYN_PURE_PYTHON is set in the
environment.  Both expose the same functions (see ``_kernels_py``), so the
choice only affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("REVDYN_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

eval_poly = _impl.eval_poly
iterate_map = _impl.iterate_map
sweep = _impl.sweep


def backends() -> dict:
    """All importable backends, keyed by name (used by the benchmark)."""
    found = {"python": _kernels_py}
    try:
        from . import _speedups

        found["c"] = _speedups
    except ImportError:
        pass
    return found
