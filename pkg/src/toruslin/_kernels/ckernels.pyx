# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same contract as ``pykernels``: see that module for the semantics.  The
convolution accumulates into a hash map keyed by packed exponents and emits
the surviving coefficients sorted by key, so orderings match the fallback
bit for bit.
"""

import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref
from cython.operator cimport preincrement as inc
from libc.math cimport log2
from libcpp.algorithm cimport sort as cppsort
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()

cdef extern from "<complex>" namespace "std" nogil:
    double complex exp(double complex) nogil

BACKEND = "c"


def cauchy_product(exps_a, vals_a, exps_b, vals_b, int n, int d, long long vmax,
                   long long hband, double prune):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ea = np.ascontiguousarray(exps_a, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] eb = np.ascontiguousarray(exps_b, dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] va = np.ascontiguousarray(vals_a, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] vb = np.ascontiguousarray(vals_b, dtype=np.complex128)
    cdef int k = n + d
    cdef Py_ssize_t na = va.shape[0], nb = vb.shape[0]
    if na == 0 or nb == 0:
        return (np.zeros((0, k), dtype=np.int64),
                np.zeros(0, dtype=np.complex128), 0.0)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] lo = np.empty(k, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sizes = np.empty(k, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] strides = np.ones(k, dtype=np.int64)
    cdef long long loa, hia, lob, hib, e
    cdef double logsz = 0.0
    cdef Py_ssize_t i, j, t
    for j in range(k):
        loa = ea[0, j]; hia = ea[0, j]
        for i in range(1, na):
            e = ea[i, j]
            if e < loa: loa = e
            if e > hia: hia = e
        lob = eb[0, j]; hib = eb[0, j]
        for i in range(1, nb):
            e = eb[i, j]
            if e < lob: lob = e
            if e > hib: hib = e
        lo[j] = loa + lob
        sizes[j] = (hia - loa) + (hib - lob) + 1
        logsz += log2(<double> sizes[j])
    if logsz > 62:
        raise OverflowError("exponent grid too large to pack into int64")
    for j in range(k - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]

    cdef cnp.ndarray[cnp.int64_t, ndim=1] keys_a = np.zeros(na, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] keys_b = np.zeros(nb, dtype=np.int64)
    cdef long long base = 0
    for j in range(k):
        base += lo[j] * strides[j]
        for i in range(na):
            keys_a[i] += ea[i, j] * strides[j]
        for i in range(nb):
            keys_b[i] += eb[i, j] * strides[j]

    cdef unordered_map[long long, double complex] acc
    acc.reserve(<size_t> (4 * (na + nb)))
    cdef long long key
    for i in range(na):
        for t in range(nb):
            key = keys_a[i] + keys_b[t] - base
            acc[key] = acc[key] + va[i] * vb[t]

    cdef vector[long long] keys
    keys.reserve(acc.size())
    cdef unordered_map[long long, double complex].iterator it = acc.begin()
    while it != acc.end():
        keys.push_back(deref(it).first)
        inc(it)
    cppsort(keys.begin(), keys.end())

    cdef Py_ssize_t nk = keys.size()
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out_e = np.empty((nk, k), dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out_v = np.empty(nk, dtype=np.complex128)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] keep = np.zeros(nk, dtype=np.uint8)
    cdef double discarded = 0.0
    cdef double complex cval
    cdef long long rem, q, pmax_abs, qsum
    cdef double mag
    cdef Py_ssize_t nkeep = 0
    for i in range(nk):
        key = keys[i]
        cval = acc[key]
        rem = key
        pmax_abs = 0
        qsum = 0
        for j in range(k):
            q = rem / strides[j]
            rem -= q * strides[j]
            q += lo[j]
            out_e[i, j] = q
            if j < n:
                if q < 0:
                    q = -q
                if q > pmax_abs:
                    pmax_abs = q
            else:
                qsum += q
        mag = abs(cval)
        if mag <= prune:
            continue
        if pmax_abs > hband or qsum > vmax:
            discarded += mag
            continue
        out_v[i] = cval
        keep[i] = 1
        nkeep += 1

    cdef cnp.ndarray[cnp.int64_t, ndim=2] res_e = np.empty((nkeep, k), dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] res_v = np.empty(nkeep, dtype=np.complex128)
    t = 0
    for i in range(nk):
        if keep[i]:
            for j in range(k):
                res_e[t, j] = out_e[i, j]
            res_v[t] = out_v[i]
            t += 1
    return res_e, res_v, discarded


def evaluate(exps, vals, logh, v):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ee = np.ascontiguousarray(exps, dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] vv = np.ascontiguousarray(vals, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] lh = np.ascontiguousarray(logh, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vpt = np.ascontiguousarray(v, dtype=np.complex128)
    cdef Py_ssize_t m_pts = lh.shape[0]
    cdef int n = lh.shape[1]
    cdef int d = vpt.shape[1]
    cdef Py_ssize_t nt = vv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(m_pts, dtype=np.complex128)
    cdef Py_ssize_t m, t
    cdef int j, l
    cdef long long q, p
    cdef double complex z, mono, w, pw
    for m in range(m_pts):
        z = 0
        for t in range(nt):
            w = 0
            for j in range(n):
                w = w + (<double complex> ee[t, j]) * lh[m, j]
            mono = exp(w)
            for l in range(d):
                q = ee[t, n + l]
                if q:
                    pw = 1
                    while q > 0:
                        pw = pw * vpt[m, l]
                        q -= 1
                    mono = mono * pw
            z = z + vv[t] * mono
        out[m] = z
    return out
