# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled implementations of the hot kernels; contracts match _kernels_py.

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor, sqrt, fabs

cnp.import_array()


def dft_1d(const double[::1] x, const double[::1] wre, const double[::1] wim, const double[::1] k):
    cdef Py_ssize_t nk = k.shape[0], nx = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_re = np.empty(nk)
    cdef cnp.ndarray[double, ndim=1] out_im = np.empty(nk)
    cdef double[::1] ore = out_re, oim = out_im
    cdef Py_ssize_t i, j
    cdef double phase, c, s, sre, sim, twopik
    for i in range(nk):
        sre = 0.0
        sim = 0.0
        twopik = -6.283185307179586476925286766559 * k[i]
        for j in range(nx):
            phase = twopik * x[j]
            c = cos(phase)
            s = sin(phase)
            sre += wre[j] * c - wim[j] * s
            sim += wre[j] * s + wim[j] * c
        ore[i] = sre
        oim[i] = sim
    return out_re, out_im


def pair_hist_1d(const double[::1] x, const double[::1] wre, const double[::1] wim,
                 double lo, double width, Py_ssize_t nbins, double rmax):
    cdef cnp.ndarray[double, ndim=1] out_re = np.zeros(nbins)
    cdef cnp.ndarray[double, ndim=1] out_im = np.zeros(nbins)
    cdef double[::1] ore = out_re, oim = out_im
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double dz, pre, pim
    cdef Py_ssize_t idx
    for i in range(n):
        j = i + 1
        while j < n and x[j] - x[i] <= rmax:
            dz = x[j] - x[i]
            pre = wre[j] * wre[i] + wim[j] * wim[i]
            pim = wim[j] * wre[i] - wre[j] * wim[i]
            idx = <Py_ssize_t> floor((dz - lo) / width)
            if 0 <= idx < nbins:
                ore[idx] += pre
                oim[idx] += pim
            idx = <Py_ssize_t> floor((-dz - lo) / width)
            if 0 <= idx < nbins:
                ore[idx] += pre
                oim[idx] -= pim
            j += 1
    return out_re, out_im


def pair_radial_hist(const double[:, ::1] pts, const double[::1] r_edges, double halfwidth):
    cdef Py_ssize_t nbins = r_edges.shape[0] - 1
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(nbins)
    cdef double[::1] o = out
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1], i, j, c, idx
    cdef double rmax = r_edges[nbins], rmin = r_edges[0]
    cdef double r2max = rmax * rmax
    cdef double dz, r2, r, overlap
    # sort by first coordinate outside for the early break
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order = np.argsort(np.asarray(pts)[:, 0]).astype(np.intp)
    cdef cnp.intp_t[::1] ord_v = order
    cdef Py_ssize_t a, b
    for i in range(n):
        a = ord_v[i]
        for j in range(i + 1, n):
            b = ord_v[j]
            dz = pts[b, 0] - pts[a, 0]
            if dz > rmax:
                break
            r2 = dz * dz
            overlap = 2.0 * halfwidth - fabs(dz)
            for c in range(1, d):
                dz = pts[b, c] - pts[a, c]
                r2 += dz * dz
                overlap *= 2.0 * halfwidth - fabs(dz)
            if r2 > r2max or overlap <= 0.0:
                continue
            r = sqrt(r2)
            if r < rmin:
                continue
            # linear scan is fine: bin counts are small
            idx = nbins - 1
            while idx > 0 and r < r_edges[idx]:
                idx -= 1
            o[idx] += 2.0 / overlap
    return out


def dft_grouped_1d(const double[::1] x, const double[::1] wre, const double[::1] wim,
                   const double[::1] base_k, double delta, Py_ssize_t q):
    cdef Py_ssize_t ng = base_k.shape[0], nx = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_re = np.zeros(ng * q)
    cdef cnp.ndarray[double, ndim=1] out_im = np.zeros(ng * q)
    cdef double[::1] ore = out_re, oim = out_im
    cdef cnp.ndarray[double, ndim=1] inc_re_a = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] inc_im_a = np.empty(nx)
    cdef double[::1] inc_re = inc_re_a, inc_im = inc_im_a
    cdef Py_ssize_t g, j, jj
    cdef double phase, pre, pim, tmp, twopik
    cdef double TWO_PI = 6.283185307179586476925286766559
    for j in range(nx):
        phase = -TWO_PI * delta * x[j]
        inc_re[j] = cos(phase)
        inc_im[j] = sin(phase)
    for g in range(ng):
        twopik = -TWO_PI * base_k[g]
        for j in range(nx):
            phase = twopik * x[j]
            pre = cos(phase)
            pim = sin(phase)
            # p = w_j * exp(-2 pi i k x_j), then advance by delta per step
            tmp = wre[j] * pre - wim[j] * pim
            pim = wre[j] * pim + wim[j] * pre
            pre = tmp
            for jj in range(q):
                ore[g * q + jj] += pre
                oim[g * q + jj] += pim
                if jj + 1 < q:
                    tmp = pre * inc_re[j] - pim * inc_im[j]
                    pim = pre * inc_im[j] + pim * inc_re[j]
                    pre = tmp
    return out_re, out_im
