"""Pixel kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; set
``EDGEATTEND_PURE_KERNELS=1`` to force the fallback (useful for
benchmarking and debugging). ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("EDGEATTEND_PURE_KERNELS") == "1":
    _impl = _pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND

box_downscale = _impl.box_downscale
warp_affine = _impl.warp_affine
gaussian_blur = _impl.gaussian_blur
gaussian_kernel = _pure.gaussian_kernel

__all__ = ["BACKEND", "box_downscale", "warp_affine", "gaussian_blur", "gaussian_kernel"]
