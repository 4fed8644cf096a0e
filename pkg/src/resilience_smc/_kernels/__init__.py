"""Hot-loop kernels with import-time backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
twin is loaded. Set ``RESILIENCE_SMC_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernel

_requested = os.environ.get("RESILIENCE_SMC_BACKEND", "auto").lower()

if _requested == "python":
    _impl = _pykernel
    BACKEND = "python"
else:
    try:
        from . import queue_kernel as _impl
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _pykernel
        BACKEND = "python"

HIT, HORIZON, NEED_DRAWS = _pykernel.HIT, _pykernel.HORIZON, _pykernel.NEED_DRAWS

propagate_queue = _impl.propagate_queue
queue_reaction = _impl.queue_reaction

__all__ = ["BACKEND", "HIT", "HORIZON", "NEED_DRAWS", "propagate_queue",
           "queue_reaction", "backends"]


def backends():
    """Map of available backend name to kernel module."""
    found = {"python": _pykernel}
    try:
        from . import queue_kernel
        found["cython"] = queue_kernel
    except ImportError:
        pass
    return found
