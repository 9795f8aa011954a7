"""Pure numpy fallback for the compiled kernels.

Same contracts as ``_ckernels``; used when the extension is not built or
when ``FRAMEFORGE_BACKEND=python`` is set.
"""

import numpy as np

BACKEND = "python"


def correlate1d(x, taps, origin, axis):
    """Circular correlation along one axis of a 2D array.

    out[n] = sum_j taps[j] * x[(n + origin + j) mod S] along ``axis``.
    """
    out = np.zeros_like(x)
    for j in range(taps.shape[0]):
        out += taps[j] * np.roll(x, -(origin + j), axis=axis)
    return out


def im2patch(u, r):
    """All r x r patches of ``u`` with stride 1 and periodic wrap.

    Column i*cols+j holds the vectorized patch anchored at pixel (i, j);
    row a*r+b is patch offset (a, b).
    """
    rows, cols = u.shape
    out = np.empty((r * r, rows * cols))
    for a in range(r):
        rolled = np.roll(u, -a, axis=0)
        for b in range(r):
            out[a * r + b] = np.roll(rolled, -b, axis=1).ravel()
    return out


def patch2im(patches, r, rows, cols):
    """Adjoint of :func:`im2patch`: scatter-add patches back onto the grid."""
    u = np.zeros((rows, cols))
    for a in range(r):
        for b in range(r):
            u += np.roll(
                np.roll(patches[a * r + b].reshape(rows, cols), a, axis=0),
                b,
                axis=1,
            )
    return u
