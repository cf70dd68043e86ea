"""Hot-kernel backend selection.

Two interchangeable backends implement the compute-heavy inner loops:
``_numba`` (jitted, the default when numba imports cleanly) and ``_numpy``
(pure numpy, always available).  The environment variable ``SENCORE_KERNELS``
forces a choice:

    SENCORE_KERNELS=numpy   pure-numpy kernels
    SENCORE_KERNELS=numba   jitted kernels (import error if numba is absent)

Matrix multiplies are not routed through here; they stay on numpy's BLAS
either way.  ``benchmarks/bench_kernels.py`` times the two backends against
each other at training shapes.
"""

from __future__ import annotations

import os

_ENV_VAR = "SENCORE_KERNELS"
_CHOICES = ("numba", "numpy")


def _pick_backend():
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested and requested not in _CHOICES:
        raise ValueError(
            f"{_ENV_VAR}={requested!r} is not recognized; use one of {_CHOICES}"
        )
    if requested == "numpy":
        from . import _numpy as impl
        return impl
    if requested == "numba":
        from . import _numba as impl
        return impl
    try:
        from . import _numba as impl
    except ImportError:
        from . import _numpy as impl
    return impl


_impl = _pick_backend()

BACKEND = _impl.BACKEND_NAME

softmax_rows = _impl.softmax_rows
softmax_backward = _impl.softmax_backward
layernorm_rows = _impl.layernorm_rows
layernorm_backward = _impl.layernorm_backward
gelu = _impl.gelu
gelu_backward = _impl.gelu_backward
dropout_apply = _impl.dropout_apply
adam_update = _impl.adam_update
ema_update = _impl.ema_update
embedding_grad = _impl.embedding_grad


def active_backend() -> str:
    """Name of the backend selected at import time."""
    return BACKEND
