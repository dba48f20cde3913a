"""Numeric kernel selection: compiled extension with a NumPy fallback.

The Cython extension is used when built; set VOXPROFILE_BACKEND=numpy or
=cython to force one. Runs are deterministic within a backend, but the two
backends may disagree in the last bits of reductions (different summation
orders), so byte-level reproducibility claims hold per backend.
"""

import os

_requested = os.environ.get("VOXPROFILE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "cython", "numpy"):
    raise ImportError(
        f"VOXPROFILE_BACKEND must be 'auto', 'cython' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from voxprofile.backend import ops_py as _impl

    _name = "numpy"
else:
    try:
        from voxprofile.backend import _kernels as _impl  # type: ignore[no-redef]

        _name = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from voxprofile.backend import ops_py as _impl  # type: ignore[no-redef]

        _name = "numpy"

IDENTITY = 0
TANH = 1
RELU = 2
SOFTPLUS = 3

matmul = _impl.matmul
dense_forward = _impl.dense_forward
dense_backward = _impl.dense_backward
adam_step = _impl.adam_step


def backend_name() -> str:
    """Name of the kernel implementation selected at import time."""
    return _name
