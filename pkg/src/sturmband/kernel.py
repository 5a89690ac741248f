"""Backend selection for the trace kernel.

The compiled MPFR extension is used when it imports; otherwise the
pure-Python gmpy2 kernel.  Set ``STURMBAND_KERNEL=python`` to force the
fallback.  Both backends expose ``trace``, ``trace_many`` and ``solve`` with
identical semantics and bit-identical results.
"""

import os

from . import _kernel_py

_forced = os.environ.get("STURMBAND_KERNEL", "").lower()

if _forced == "python":
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl
    except ImportError:
        if _forced == "mpfr":
            raise
        _impl = _kernel_py

BACKEND = _impl.BACKEND
trace = _impl.trace
trace_many = _impl.trace_many
solve = _impl.solve

python_backend = _kernel_py


def compiled_backend():
    """The compiled module, or None when it is not built."""
    try:
        from . import _kernel
    except ImportError:
        return None
    return _kernel
