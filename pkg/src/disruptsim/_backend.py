"""Pick the compiled kernels when available, the pure-Python ones otherwise.

Set ``DISRUPTSIM_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("DISRUPTSIM_BACKEND", "").lower() == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels
        BACKEND = "python"
