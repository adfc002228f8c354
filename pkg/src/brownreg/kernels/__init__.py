"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba implementation is used when numba imports cleanly, unless the
environment variable ``BROWNREG_NO_NUMBA`` is set to ``1``/``true``/``yes``.
Both paths produce identical random streams; floating-point kernels agree to
rounding.
"""

import os

from . import _numpy

_DISABLED = os.environ.get("BROWNREG_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

if _DISABLED:
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        _impl = _numpy
        BACKEND = "numpy"


def get_backend(name):
    """Return the kernel module for ``"numpy"`` or ``"numba"``."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown backend {name!r}")


philox4x32 = _impl.philox4x32
standard_normals = _impl.standard_normals
em_affine = _impl.em_affine
local_transition = _impl.local_transition

__all__ = ["BACKEND", "get_backend", "philox4x32", "standard_normals", "em_affine",
           "local_transition"]
