"""Backend selection for the hot loops.

The compiled extension is used when it was built; set
``HOTSPOT_IPP_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HOTSPOT_IPP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

_NO_GENERATORS = np.zeros((1, 2))


def rollout_path(x, y, heading, depth, step, offsets, bounds, draws,
                 generators=None, own=-1):
    gens = _NO_GENERATORS if generators is None else np.ascontiguousarray(generators, dtype=float)
    return _impl.rollout_path(float(x), float(y), float(heading), int(depth), float(step),
                              np.ascontiguousarray(offsets, dtype=float),
                              np.ascontiguousarray(bounds, dtype=float),
                              gens, int(own if generators is not None else -1),
                              np.ascontiguousarray(draws, dtype=np.int64))


def nearest_generator(points, generators):
    return _impl.nearest_generator(np.ascontiguousarray(points, dtype=float),
                                   np.ascontiguousarray(generators, dtype=float))


wrap_angle = _kernels_py.wrap_angle
in_cell = _kernels_py.in_cell
