"""Convolution kernel dispatch.

Two interchangeable backends implement the same kernel set: a numba-compiled
one (default when numba imports cleanly) and a pure-numpy fallback. Selection:

    MIXSEP_KERNELS=numba   force numba (raises if unavailable)
    MIXSEP_KERNELS=numpy   force the numpy fallback
    MIXSEP_KERNELS=auto    numba if importable, else numpy (default)

``use_backend`` switches at runtime (used by tests and the kernel benchmark).
"""

import os

from . import numpy_backend

try:
    from . import numba_backend
    HAS_NUMBA = True
except ImportError:
    numba_backend = None
    HAS_NUMBA = False

_KERNEL_NAMES = (
    "conv1d_fwd", "conv1d_bwd_x", "conv1d_bwd_w",
    "convt1d_fwd", "convt1d_bwd_x", "convt1d_bwd_w",
    "gconv2d_fwd", "gconv2d_bwd_x", "gconv2d_bwd_w",
)

_active = None


def use_backend(name):
    """Select the kernel backend: 'numba', 'numpy' or 'auto'."""
    global _active
    if name == "auto":
        name = "numba" if HAS_NUMBA else "numpy"
    if name == "numba":
        if not HAS_NUMBA:
            raise ImportError("numba backend requested but numba is not installed")
        _active = numba_backend
    elif name == "numpy":
        _active = numpy_backend
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return _active


def active_backend_name():
    return "numba" if _active is numba_backend else "numpy"


use_backend(os.environ.get("MIXSEP_KERNELS", "auto"))


def _dispatch(name):
    def call(*args):
        return getattr(_active, name)(*args)
    call.__name__ = name
    return call


conv1d_fwd = _dispatch("conv1d_fwd")
conv1d_bwd_x = _dispatch("conv1d_bwd_x")
conv1d_bwd_w = _dispatch("conv1d_bwd_w")
convt1d_fwd = _dispatch("convt1d_fwd")
convt1d_bwd_x = _dispatch("convt1d_bwd_x")
convt1d_bwd_w = _dispatch("convt1d_bwd_w")
gconv2d_fwd = _dispatch("gconv2d_fwd")
gconv2d_bwd_x = _dispatch("gconv2d_bwd_x")
gconv2d_bwd_w = _dispatch("gconv2d_bwd_w")
