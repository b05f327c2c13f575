# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the walk-stepping and Szegő ratio loops.

Signatures and semantics mirror ``qrw._kernels_py`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx x) nogil:
    return x.real * x.real + x.imag * x.imag


def theta_pairs(cplx[:, ::1] psi, cplx[:, :, ::1] blocks, Py_ssize_t first):
    cdef Py_ssize_t nb = psi.shape[0], npair = blocks.shape[0], w = blocks.shape[1]
    cdef Py_ssize_t b, p, r, q, c0
    cdef cplx tmp[4]
    cdef cplx acc
    if w > 4:
        raise ValueError("block width above 4 is not supported")
    with nogil:
        for b in range(nb):
            for p in range(npair):
                c0 = first + p * w
                for q in range(w):
                    acc = 0
                    for r in range(w):
                        acc = acc + psi[b, c0 + r] * blocks[p, r, q]
                    tmp[q] = acc
                for q in range(w):
                    psi[b, c0 + q] = tmp[q]
    return np.asarray(psi)


def coin_step(cplx[:, ::1] up, cplx[:, ::1] down, cplx[:, ::1] coins, bint halfline):
    cdef Py_ssize_t nb = up.shape[0], ns = up.shape[1], b, i
    out_up_arr = np.zeros((nb, ns), dtype=np.complex128)
    out_down_arr = np.zeros((nb, ns), dtype=np.complex128)
    cdef cplx[:, ::1] nu = out_up_arr
    cdef cplx[:, ::1] nd = out_down_arr
    cdef cplx u, d, left
    with nogil:
        for b in range(nb):
            for i in range(ns):
                u = up[b, i]
                d = down[b, i]
                if i + 1 < ns:
                    nu[b, i + 1] = coins[i, 0] * u + coins[i, 1] * d
                left = coins[i, 2] * u + coins[i, 3] * d
                if i > 0:
                    nd[b, i - 1] = left
                elif halfline:
                    nu[b, 0] = nu[b, 0] + left
    return out_up_arr, out_down_arr


def szego_ratio(cplx[::1] alphas, zs_in, double tol, Py_ssize_t min_iter):
    zs_arr = np.ascontiguousarray(zs_in, dtype=np.complex128).ravel()
    cdef cplx[::1] zs = zs_arr
    cdef Py_ssize_t n = zs.shape[0], nj = alphas.shape[0], k, j
    ratio_arr = np.ones(n, dtype=np.complex128)
    gap_arr = np.full(n, INFINITY)
    iters_arr = np.zeros(n, dtype=np.int64)
    cdef cplx[::1] ratio = ratio_arr
    cdef double[::1] gap = gap_arr
    cdef long long[::1] iters = iters_arr
    cdef cplx z, p, ps, tp, tps, np_, nps, ntp, ntps, a, ca, r, rp, rp2
    cdef double rho, scale, g, mag
    with nogil:
        for k in range(n):
            z = zs[k]
            p = 1; ps = 1; tp = 1; tps = 1
            rp = 1; rp2 = 1; r = 1
            g = INFINITY
            for j in range(nj):
                a = alphas[j]
                ca = a.conjugate()
                rho = sqrt(1.0 - cabs2(a))
                np_ = (z * p - ca * ps) / rho
                nps = (ps - a * z * p) / rho
                ntp = (z * tp + ca * tps) / rho
                ntps = (tps + a * z * tp) / rho
                scale = sqrt(cabs2(nps))
                p = np_ / scale; ps = nps / scale; tp = ntp / scale; tps = ntps / scale
                r = tps / ps
                g = sqrt(cabs2(r - rp2))
                rp2 = rp
                rp = r
                iters[k] = j + 1
                mag = sqrt(cabs2(r))
                if mag < 1.0:
                    mag = 1.0
                if g < tol * mag and j + 1 >= min_iter:
                    break
            ratio[k] = r
            gap[k] = g
    return ratio_arr, gap_arr, iters_arr
