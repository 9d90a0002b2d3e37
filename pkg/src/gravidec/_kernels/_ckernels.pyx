# cython: language_level=3
"""Compiled versions of the hot loops in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, sqrt

cnp.import_array()


def psi_big_sq_phi_mean(omega, u, cphi, wphi, double tau, double b_sa, double b_ca):
    cdef double[::1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] cp = np.ascontiguousarray(cphi, dtype=np.float64)
    cdef double[::1] wp = np.ascontiguousarray(wphi, dtype=np.float64)
    cdef Py_ssize_t nw = om.shape[0], nu = uu.shape[0], nphi = cp.shape[0]
    out = np.empty((nw, nu), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, k
    cdef double s, lon, tr, hab, hac, a, b, acc, half
    for j in range(nu):
        s = 1.0 - uu[j] * uu[j]
        s = sqrt(s) if s > 0.0 else 0.0
        lon = b_sa * uu[j]
        for i in range(nw):
            half = 0.5 * om[i] * tau
            acc = 0.0
            for k in range(nphi):
                tr = b_ca * s * cp[k]
                a = sin(half * (1.0 - lon - tr))
                b = sin(half * (1.0 + lon - tr))
                acc += wp[k] * 16.0 * a * a * b * b
            res[i, j] = acc
    return out
