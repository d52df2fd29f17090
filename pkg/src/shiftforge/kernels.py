"""Backend selection for the trigonometric-polynomial kernels.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``SHIFTFORGE_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the numpy fallback is used.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SHIFTFORGE_PURE_PYTHON", "") in ("", "0"):
    backend = compiled_backend
    BACKEND_NAME = "cython"
else:
    backend = python_backend
    BACKEND_NAME = "python"

eval_points = backend.eval_points
eval_derivatives = backend.eval_derivatives
