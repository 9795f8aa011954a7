"""Kernel backend selection.

The compiled Cython kernels are preferred; the numpy implementation is the
fallback. ``FRAMEFORGE_BACKEND=python`` or ``=c`` forces a choice (``c``
raises if the extension is missing). ``BACKEND`` records what was picked.
"""

import os

import numpy as np

_choice = os.environ.get("FRAMEFORGE_BACKEND", "auto").lower()

if _choice not in ("auto", "c", "python"):
    raise ValueError(f"FRAMEFORGE_BACKEND must be auto|c|python, got {_choice!r}")

if _choice == "python":
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _choice == "c":
            raise ImportError(
                "FRAMEFORGE_BACKEND=c but the compiled kernels are not built; "
                "run `pip install -e . --no-build-isolation`"
            )
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND


def _as_c2d(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def correlate1d(x, taps, origin, axis):
    """Circular correlation: out[n] = sum_j taps[j] x[(n+origin+j) mod S]."""
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    return _impl.correlate1d(
        _as_c2d(x), np.ascontiguousarray(taps, dtype=np.float64), int(origin), axis
    )


def correlate1d_adjoint(y, taps, origin, axis):
    """Exact transpose of :func:`correlate1d` for the same (taps, origin)."""
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return _impl.correlate1d(
        _as_c2d(y), taps[::-1].copy(), -(int(origin) + taps.shape[0] - 1), axis
    )


def im2patch(u, r):
    """Stride-1 periodic patch matrix of shape (r*r, rows*cols)."""
    return _impl.im2patch(_as_c2d(u), int(r))


def patch2im(patches, r, rows, cols):
    """Adjoint of :func:`im2patch` (each pixel is hit r*r times)."""
    return _impl.patch2im(_as_c2d(patches), int(r), int(rows), int(cols))
