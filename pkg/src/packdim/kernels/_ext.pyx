# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: escape-time grids and greedy disc packing.

Mirrors _pyref.py operation for operation: complex products are expanded
by hand (ac - bd, ad + bc), the only divisions are by real |den|^2, and
the build disables FP contraction, so results match the numpy reference
bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND = "ext"

cdef double POLE_EPS2 = 1e-300


def escape_grid(num, den, double x0, double y0, double dx, double dy,
                int nx, int ny, int max_iter, double escape_radius,
                int row_start=0, int row_stop=-1):
    """See _pyref.escape_grid.  row_start/row_stop select an i-range so
    callers can split work across threads; the loop releases the GIL."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] nc = np.ascontiguousarray(num, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] dc = np.ascontiguousarray(den, dtype=complex)
    if row_stop < 0:
        row_stop = nx
    cdef cnp.ndarray[cnp.int32_t, ndim=2] out = np.full((row_stop - row_start, ny), -1, dtype=np.int32)
    cdef double complex[::1] nv = nc
    cdef double complex[::1] dv = dc
    cdef int[:, ::1] ov = out
    cdef int i, j
    cdef double esc2 = escape_radius * escape_radius
    with nogil:
        for i in range(row_start, row_stop):
            for j in range(ny):
                ov[i - row_start, j] = _escape_point(
                    x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy,
                    &nv[0], nv.shape[0], &dv[0], dv.shape[0],
                    max_iter, esc2)
    return out


cdef inline int _escape_point(double zr, double zi,
                              double complex* num, Py_ssize_t nn,
                              double complex* den, Py_ssize_t nd,
                              int max_iter, double esc2) nogil:
    cdef int it
    cdef double pr, pi, qr, qi, q2, ar, ai, tr
    cdef Py_ssize_t k
    for it in range(max_iter + 1):
        if zr * zr + zi * zi > esc2:
            return it
        if it == max_iter:
            return -1
        # Horner for numerator
        pr = num[nn - 1].real
        pi = num[nn - 1].imag
        for k in range(nn - 2, -1, -1):
            tr = pr * zr - pi * zi + num[k].real
            pi = pr * zi + pi * zr + num[k].imag
            pr = tr
        # Horner for denominator
        qr = den[nd - 1].real
        qi = den[nd - 1].imag
        for k in range(nd - 2, -1, -1):
            tr = qr * zr - qi * zi + den[k].real
            qi = qr * zi + qi * zr + den[k].imag
            qr = tr
        q2 = qr * qr + qi * qi
        if q2 < POLE_EPS2:
            return it + 1
        # z = p * conj(q) / |q|^2
        ar = pr * qr + pi * qi
        ai = pi * qr - pr * qi
        zr = ar / q2
        zi = ai / q2
    return -1


def greedy_disc_pack(cnp.ndarray[cnp.float64_t, ndim=2] points, double r):
    """See _pyref.greedy_disc_pack; identical accept order and output."""
    cdef Py_ssize_t n = points.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] X = np.ascontiguousarray(points[:, 0])
    cdef cnp.ndarray[cnp.float64_t, ndim=1] Y = np.ascontiguousarray(points[:, 1])
    cdef double[::1] xv = X
    cdef double[::1] yv = Y
    cdef double cell = 2.0 * r
    cdef double four_r2 = 4.0 * r * r
    cdef dict grid = {}
    cdef list accepted = []
    cdef Py_ssize_t i, j, m
    cdef long cx, cy, gx, gy
    cdef double x, y, ddx, ddy
    cdef bint ok
    cdef list bucket
    for i in range(n):
        x = xv[i]
        y = yv[i]
        cx = <long>floor(x / cell)
        cy = <long>floor(y / cell)
        ok = True
        for gx in range(cx - 1, cx + 2):
            for gy in range(cy - 1, cy + 2):
                bucket = <list>grid.get((gx, gy))
                if bucket is None:
                    continue
                m = len(bucket)
                for j in range(m):
                    ddx = x - xv[<Py_ssize_t>bucket[j]]
                    ddy = y - yv[<Py_ssize_t>bucket[j]]
                    if ddx * ddx + ddy * ddy < four_r2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            key = (cx, cy)
            bucket = <list>grid.get(key)
            if bucket is None:
                grid[key] = [i]
            else:
                bucket.append(i)
            accepted.append(i)
    return np.asarray(accepted, dtype=np.int64)
