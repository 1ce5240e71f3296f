"""Selects the write-phase kernel at import.

The compiled extension is used when it is importable; setting the environment
variable ``MEMXBAR_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernel_py

BACKEND = "python"
write_phase_kernel = _kernel_py.write_phase_kernel

if os.environ.get("MEMXBAR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernel import write_phase_kernel  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass
