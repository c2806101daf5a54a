"""Kernel backend selection.

The hot loops (cell decoding and fully-labeled scans) exist twice: as numba
@njit kernels and as pure-numpy fallbacks.  FIXSIM_KERNELS=numpy|numba|auto
picks the backend at import time; auto (the default) prefers numba when it
imports, falling back to numpy otherwise.

benchmarks/bench_kernels.py compares the two backends head to head.
"""

import os

from . import _kernels_np

_requested = os.environ.get("FIXSIM_KERNELS", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(f"FIXSIM_KERNELS must be auto, numba, or numpy, got {_requested!r}")

BACKEND = "numpy"
_impl = _kernels_np

if _requested in ("auto", "numba"):
    try:
        from . import _kernels_nb

        BACKEND = "numba"
        _impl = _kernels_nb
    except ImportError:
        if _requested == "numba":
            raise

decode_cells_range = _impl.decode_cells_range
count_fully_labeled = _impl.count_fully_labeled
first_fully_labeled = _impl.first_fully_labeled
fully_labeled_mask = _impl.fully_labeled_mask
staircase_to_bary = _kernels_np.staircase_to_bary
