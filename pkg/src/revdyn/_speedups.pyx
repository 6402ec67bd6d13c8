# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled iteration kernels; see _kernels_py for the contracts."""

import numpy as np

cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()

BACKEND = "c"


cdef inline Py_ssize_t _find_piece(const double[::1] breaks, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = breaks.shape[0] - 1, mid
    # index i with breaks[i] <= x < breaks[i+1], clamped to the outer pieces
    if x < breaks[0]:
        return 0
    if x >= breaks[hi]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if x < breaks[mid]:
            hi = mid
        else:
            lo = mid
    return lo


cdef inline double _horner(const double[:, ::1] coeffs, Py_ssize_t i, double x) noexcept nogil:
    cdef Py_ssize_t k = coeffs.shape[1] - 1
    cdef double out = coeffs[i, k]
    while k > 0:
        k -= 1
        out = out * x + coeffs[i, k]
    return out


def eval_poly(const double[::1] breaks, const double[:, ::1] coeffs, x):
    xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    cdef const double[::1] xv = np.ascontiguousarray(xs.reshape(-1))
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _horner(coeffs, _find_piece(breaks, xv[i]), xv[i])
    return out.reshape(xs.shape)


def iterate_map(const double[::1] breaks, const double[:, ::1] coeffs, double x0, Py_ssize_t n,
                double clamp_tol=1e-12):
    samples = np.empty(n + 1)
    cdef double[::1] sv = samples
    cdef double x = x0
    cdef Py_ssize_t step, status = -1
    sv[0] = x
    with nogil:
        for step in range(1, n + 1):
            x = _horner(coeffs, _find_piece(breaks, x), x)
            if x < 0.0 or x > 1.0:
                if x >= -clamp_tol and x < 0.0:
                    x = 0.0
                elif x > 1.0 and x <= 1.0 + clamp_tol:
                    x = 1.0
                else:
                    sv[step] = x
                    status = step
                    break
            sv[step] = x
    if status >= 0:
        return samples[: status + 1], status
    return samples, -1


def sweep(const double[::1] breaks, const double[:, ::1] disp_coeffs, const double[::1] deltas,
          const double[::1] seeds, Py_ssize_t transient, Py_ssize_t keep,
          double clamp_tol=1e-12):
    cdef Py_ssize_t n_d = deltas.shape[0], n_s = seeds.shape[0]
    states = np.full((n_d, n_s, keep), np.nan)
    dead = np.zeros((n_d, n_s), dtype=np.uint8)
    cdef double[:, :, ::1] stv = states
    cdef unsigned char[:, ::1] dv = dead
    cdef Py_ssize_t i, j, step
    cdef double x, delta
    cdef bint escaped
    with nogil:
        for i in range(n_d):
            delta = deltas[i]
            for j in range(n_s):
                x = seeds[j]
                escaped = False
                for step in range(transient + keep):
                    x = x + delta * _horner(disp_coeffs, _find_piece(breaks, x), x)
                    if x < 0.0 or x > 1.0:
                        if x >= -clamp_tol and x < 0.0:
                            x = 0.0
                        elif x > 1.0 and x <= 1.0 + clamp_tol:
                            x = 1.0
                        else:
                            escaped = True
                            break
                    if step >= transient:
                        stv[i, j, step - transient] = x
                if escaped:
                    dv[i, j] = 1
                    for step in range(keep):
                        stv[i, j, step] = NAN
    return states, dead.astype(bool)
