"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference kernels are used. Setting ``OPEQUIV_PURE=1`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels_ext
except ImportError:  # extension not built
    _kernels_ext = None

_BACKENDS = {"python": _kernels_py}
if _kernels_ext is not None:
    _BACKENDS["compiled"] = _kernels_ext

if os.environ.get("OPEQUIV_PURE", "") not in ("", "0") or _kernels_ext is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    return _BACKENDS[name or BACKEND]


def conv_matmul(x, y, ia, ib, ic, starts, backend=None):
    mod = _BACKENDS[backend or BACKEND]
    return mod.conv_matmul(np.ascontiguousarray(x, dtype=float),
                           np.ascontiguousarray(y, dtype=float),
                           ia, ib, ic, starts)


def trace_words(mats, words, lengths, backend=None):
    mod = _BACKENDS[backend or BACKEND]
    return mod.trace_words(np.ascontiguousarray(mats, dtype=float),
                           np.ascontiguousarray(words, dtype=np.intp),
                           np.ascontiguousarray(lengths, dtype=np.intp))
