"""Hot-kernel dispatch: compiled extension when built, numpy otherwise.

Set CRANIOFIT_NO_NATIVE=1 to force the fallbacks (used by tests and the
benchmark to compare routes). Both routes are importable explicitly via
get(name, "native") / get(name, "numpy"); results are bit-identical by
construction, the compiled route is just faster.
"""

from __future__ import annotations

import os

_native = None
if os.environ.get("CRANIOFIT_NO_NATIVE") != "1":
    try:
        from . import _fastkern as _native  # type: ignore[attr-defined]
    except ImportError:
        _native = None

HAVE_NATIVE = _native is not None

_KERNELS = ("mc_sweep", "bvh_distance", "voxelize_parity")


def _fallback(name: str):
    if name == "mc_sweep":
        from .isosurface import _sweep_numpy

        return _sweep_numpy
    if name == "bvh_distance":
        from .bvh import _fallback_kernel

        return _fallback_kernel(name)
    if name == "voxelize_parity":
        from .metrics import _voxelize_parity_numpy

        return _voxelize_parity_numpy
    raise KeyError(f"unknown kernel {name!r}")


def get(name: str, impl: str = "auto"):
    """Resolve a kernel callable by name and implementation choice."""
    if name not in _KERNELS:
        raise KeyError(f"unknown kernel {name!r}")
    if impl == "auto":
        impl = "native" if (_native is not None and hasattr(_native, name)) else "numpy"
    if impl == "native":
        if _native is None or not hasattr(_native, name):
            raise RuntimeError(f"compiled kernel {name!r} is not available")
        return getattr(_native, name)
    if impl == "numpy":
        return _fallback(name)
    raise ValueError(f"impl must be auto|native|numpy, got {impl!r}")
