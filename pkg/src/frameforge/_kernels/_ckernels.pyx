# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: periodic stencil correlation and patch gather/scatter.

These are the inner loops of the frame transforms and of the patch-based
dictionary machinery; contracts match ``_pykernels``.
"""

import numpy as np

BACKEND = "c"


def correlate1d(double[:, ::1] x, double[::1] taps, int origin, int axis):
    """out[n] = sum_j taps[j] * x[(n + origin + j) mod S] along ``axis``."""
    cdef Py_ssize_t rows = x.shape[0]
    cdef Py_ssize_t cols = x.shape[1]
    cdef Py_ssize_t ntaps = taps.shape[0]
    out_arr = np.zeros((rows, cols))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, n, shift, src
    cdef double t
    if axis == 1:
        for j in range(ntaps):
            t = taps[j]
            if t == 0.0:
                continue
            shift = (origin + j) % cols
            if shift < 0:
                shift += cols
            for i in range(rows):
                for n in range(cols - shift):
                    out[i, n] += t * x[i, n + shift]
                for n in range(cols - shift, cols):
                    out[i, n] += t * x[i, n + shift - cols]
    else:
        for j in range(ntaps):
            t = taps[j]
            if t == 0.0:
                continue
            shift = (origin + j) % rows
            if shift < 0:
                shift += rows
            for n in range(rows):
                src = n + shift
                if src >= rows:
                    src -= rows
                for i in range(cols):
                    out[n, i] += t * x[src, i]
    return out_arr


def im2patch(double[:, ::1] u, int r):
    """Stride-1 periodic r x r patch matrix, (r*r, rows*cols)."""
    cdef Py_ssize_t rows = u.shape[0]
    cdef Py_ssize_t cols = u.shape[1]
    out_arr = np.empty((r * r, rows * cols))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t a, b, i, j, k, ii, jj, base
    for a in range(r):
        for b in range(r):
            k = a * r + b
            for i in range(rows):
                ii = i + a
                if ii >= rows:
                    ii -= rows
                base = i * cols
                for j in range(cols - b):
                    out[k, base + j] = u[ii, j + b]
                for j in range(cols - b, cols):
                    out[k, base + j] = u[ii, j + b - cols]
    return out_arr


def patch2im(double[:, ::1] patches, int r, int rows, int cols):
    """Adjoint of :func:`im2patch`: scatter-add patches back onto the grid."""
    out_arr = np.zeros((rows, cols))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t a, b, i, j, k, ii, jj
    for a in range(r):
        for b in range(r):
            k = a * r + b
            for i in range(rows):
                ii = i + a
                if ii >= rows:
                    ii -= rows
                for j in range(cols):
                    jj = j + b
                    if jj >= cols:
                        jj -= cols
                    out[ii, jj] += patches[k, i * cols + j]
    return out_arr
