"""Selects the training kernel backend at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``ROLERECON_PURE_PYTHON`` is set to a non-empty value,
the NumPy fallback is used.
"""

import os

if os.environ.get("ROLERECON_PURE_PYTHON"):
    from . import _kernels_py as backend
else:
    try:
        from . import _kernels as backend
    except ImportError:  # extension not built
        from . import _kernels_py as backend

BACKEND = backend.BACKEND
instance_grad = backend.instance_grad
instance_step = backend.instance_step
