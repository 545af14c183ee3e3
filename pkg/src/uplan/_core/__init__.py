"""Backend selection for the evidential mass kernel.

The compiled Cython kernel is preferred when it built successfully; the
pure-Python twin is the fallback.  ``UPLAN_KERNEL=pure`` or
``UPLAN_KERNEL=compiled`` in the environment forces a backend (forcing the
compiled one raises if the extension is unavailable).

The compiled kernel only handles masks that fit 64 bits; ``kernel_for``
routes wider frames to the pure kernel regardless of the selection.
"""

from __future__ import annotations

import os

from . import _masskernel_py as pure_kernel

try:
    from . import _masskernel as compiled_kernel
except ImportError:
    compiled_kernel = None

_MAX_COMPILED_BITS = 64


def _select():
    forced = os.environ.get("UPLAN_KERNEL", "").strip().lower()
    if forced == "pure":
        return pure_kernel
    if forced == "compiled":
        if compiled_kernel is None:
            raise ImportError(
                "UPLAN_KERNEL=compiled but the compiled mass kernel is not built"
            )
        return compiled_kernel
    return compiled_kernel if compiled_kernel is not None else pure_kernel


kernel = _select()


def backend_name() -> str:
    return kernel.BACKEND


def compiled_available() -> bool:
    return compiled_kernel is not None


def kernel_for(nbits: int):
    """The active kernel, demoted to pure for frames wider than 64 bits."""
    if nbits > _MAX_COMPILED_BITS:
        return pure_kernel
    return kernel
