"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

The numba path is used whenever numba imports cleanly.  Set the environment
variable ``FOCALSTYLE_NUMBA=0`` (or ``false``/``off``/``no``) before import
to force the numpy implementations; ``benchmarks/bench_kernels.py`` compares
the two paths.

Both implementations of every kernel produce the same results (bitwise for
the integer-valued kernels, to floating round-off for the convolutions).
"""

from __future__ import annotations

import os


def _numba_enabled() -> bool:
    flag = os.environ.get("FOCALSTYLE_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()

if USE_NUMBA:
    from . import numba_impl as impl
else:
    from . import numpy_impl as impl  # type: ignore[no-redef]

conv3x3 = impl.conv3x3
maxpool2 = impl.maxpool2
maxpool2_vjp = impl.maxpool2_vjp
slic_assign = impl.slic_assign
slic_accumulate = impl.slic_accumulate
label_components = impl.label_components

__all__ = [
    "USE_NUMBA",
    "conv3x3",
    "maxpool2",
    "maxpool2_vjp",
    "slic_assign",
    "slic_accumulate",
    "label_components",
]
