"""Kernel backend selection.

Imports the compiled extension when available, otherwise falls back to
the pure numpy implementations.  Set ``TUMORBAYES_KERNELS=numpy`` (or
``cython``) to force a backend.
"""

import os

from . import _numpy

_choice = os.environ.get("TUMORBAYES_KERNELS", "auto").lower()

if _choice == "numpy":
    _impl = _numpy
elif _choice == "cython":
    from . import _core as _impl  # raises if the extension is missing
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _numpy

BACKEND = _impl.BACKEND_NAME

pow_floor = _impl.pow_floor
velocity_1d = _impl.velocity_1d
velocity_2d = _impl.velocity_2d
transport_1d = _impl.transport_1d
transport_2d = _impl.transport_2d
prediction_matvec_2d = _impl.prediction_matvec_2d
prediction_diag_2d = _impl.prediction_diag_2d
prediction_bicgstab_2d = _impl.prediction_bicgstab_2d
solve_tridiagonal = _impl.solve_tridiagonal
