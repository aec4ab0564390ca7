"""Hot-kernel backend selection.

Prefers the compiled Cython extension; falls back to pure numpy when the
extension was not built. ``BACKEND`` reports which one is active and
``VOXPICK_FORCE_FALLBACK=1`` pins the numpy path (used by the benchmark and
the parity tests).
"""

import os

from . import fallback

if os.environ.get("VOXPICK_FORCE_FALLBACK") == "1":
    _impl = fallback
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = fallback

BACKEND = _impl.BACKEND

im2col2d = _impl.im2col2d
col2im2d = _impl.col2im2d
im2col3d = _impl.im2col3d
col2im3d = _impl.col2im3d
voxelize_points = _impl.voxelize_points

__all__ = [
    "BACKEND",
    "im2col2d",
    "col2im2d",
    "im2col3d",
    "col2im3d",
    "voxelize_points",
    "fallback",
]
