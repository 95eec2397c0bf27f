# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mild-integration kernels: the hot loops of the Picard solver.

Same contracts as ``_reference``; loops run path-major so each path's
increment row is walked contiguously, and the trigonometric coefficient
tables are precomputed by the caller once per sweep.
"""

from libc.math cimport fabs

BACKEND = "compiled"


def gamma_pass(double[:, :, ::1] out, double[:, :, ::1] x_in,
               double[:, :, ::1] incr, double[::1] exp_dt,
               double[:, ::1] forcing, double[:, ::1] sigma_t,
               double drift_gain, double diff_gain, double dt):
    cdef Py_ssize_t n_paths = out.shape[0]
    cdef Py_ssize_t n_steps = incr.shape[1]
    cdef Py_ssize_t d = out.shape[2]
    cdef Py_ssize_t k = sigma_t.shape[1]
    cdef Py_ssize_t p, j, i
    cdef double x, s, step
    with nogil:
        for p in range(n_paths):
            for j in range(n_steps):
                for i in range(d):
                    x = x_in[p, j, i]
                    s = x / (1.0 + fabs(x))
                    step = out[p, j, i] + (forcing[j, i] + drift_gain * s) * dt
                    if i < k:
                        step = step + (sigma_t[j, i] + diff_gain * s) * incr[p, j, i]
                    out[p, j + 1, i] = exp_dt[i] * step
    return out.base


def integrate_pass(double[:, :, ::1] out, double[:, :, ::1] incr,
                   double[::1] exp_dt, double[:, ::1] forcing,
                   double[:, ::1] sigma_t,
                   double drift_gain, double diff_gain, double dt):
    cdef Py_ssize_t n_paths = out.shape[0]
    cdef Py_ssize_t n_steps = incr.shape[1]
    cdef Py_ssize_t d = out.shape[2]
    cdef Py_ssize_t k = sigma_t.shape[1]
    cdef Py_ssize_t p, j, i
    cdef double x, s, step
    with nogil:
        for p in range(n_paths):
            for j in range(n_steps):
                for i in range(d):
                    x = out[p, j, i]
                    s = x / (1.0 + fabs(x))
                    step = x + (forcing[j, i] + drift_gain * s) * dt
                    if i < k:
                        step = step + (sigma_t[j, i] + diff_gain * s) * incr[p, j, i]
                    out[p, j + 1, i] = exp_dt[i] * step
    return out.base
