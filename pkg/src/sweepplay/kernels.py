"""Backend selection for the catching-up kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``SWEEPPLAY_PURE_PYTHON`` is set to a non-empty value,
the pure-Python twin is used.  Both expose the same functions.
"""

from __future__ import annotations

import os

if os.environ.get("SWEEPPLAY_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

        BACKEND = "python"

sweep_ball = _impl.sweep_ball
sweep_box = _impl.sweep_box
sweep_halfspace = _impl.sweep_halfspace
sweep_polyhedron = _impl.sweep_polyhedron
dykstra_halfspaces = _impl.dykstra_halfspaces

__all__ = [
    "BACKEND",
    "sweep_ball",
    "sweep_box",
    "sweep_halfspace",
    "sweep_polyhedron",
    "dykstra_halfspaces",
]
