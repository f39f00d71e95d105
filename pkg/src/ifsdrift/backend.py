"""Kernel backend selection.

The compiled extension is used when importable; setting IFSDRIFT_PURE=1 in
the environment forces the numpy fallback.  ``python -m ifsdrift.bench``
compares the two.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("IFSDRIFT_PURE", "") not in ("", "0")

_compiled = None
if not _force_pure:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "compiled"
    steps_path = _compiled.steps_path
    steps_cloud = _compiled.steps_cloud
    accumulate_cells = _compiled.accumulate_cells
    network_simplex = _compiled.network_simplex
else:
    BACKEND = "pure"
    steps_path = _kernels_py.steps_path
    steps_cloud = _kernels_py.steps_cloud
    accumulate_cells = _kernels_py.accumulate_cells
    network_simplex = _kernels_py.network_simplex


def has_compiled_kernels():
    return BACKEND == "compiled"
