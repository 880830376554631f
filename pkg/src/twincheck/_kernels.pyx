# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernels; see _fallback.py for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef long _gcd(long a, long b) nogil:
    while b:
        a, b = b, a % b
    return a


def perm_orders(perms):
    cdef long[:, :] p = np.ascontiguousarray(perms, dtype=np.int64)
    cdef Py_ssize_t B = p.shape[0], n = p.shape[1], b, v, x
    cdef long order, size
    out = np.empty(B, dtype=np.int64)
    cdef long[:] o = out
    seen_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[:] seen = seen_arr
    with nogil:
        for b in range(B):
            for v in range(n):
                seen[v] = 0
            order = 1
            for v in range(n):
                if not seen[v]:
                    size = 0
                    x = v
                    while not seen[x]:
                        seen[x] = 1
                        x = p[b, x]
                        size += 1
                    order = order // _gcd(order, size) * size
            o[b] = order
    return out


def absolute_counts(dualities, incidence, Py_ssize_t n_points):
    cdef long[:, :] d = np.ascontiguousarray(dualities, dtype=np.int64)
    cdef unsigned char[:, :] inc = np.ascontiguousarray(incidence, dtype=np.uint8)
    cdef Py_ssize_t B = d.shape[0], b, p
    cdef int c
    out = np.empty(B, dtype=np.int32)
    cdef int[:] o = out
    with nogil:
        for b in range(B):
            c = 0
            for p in range(n_points):
                c += inc[p, d[b, p] - n_points]
            o[b] = c
    return out


def j_opposite(maps, opposite, members):
    cdef int[:, :] g = np.ascontiguousarray(maps, dtype=np.int32)
    cdef unsigned char[:, :] opp = np.ascontiguousarray(opposite, dtype=np.uint8)
    cdef int[:, :] mem = np.ascontiguousarray(members, dtype=np.int32)
    cdef Py_ssize_t B = g.shape[0], n = g.shape[1], k = mem.shape[1], b, c, j
    cdef int ok, found, img
    out = np.empty(B, dtype=np.uint8)
    cdef unsigned char[:] o = out
    with nogil:
        for b in range(B):
            ok = 1
            for c in range(n):
                found = 0
                for j in range(k):
                    if opp[c, g[b, mem[c, j]]]:
                        found = 1
                        break
                if not found:
                    ok = 0
                    break
            if ok:
                for c in range(n):
                    img = g[b, c]
                    found = 0
                    for j in range(k):
                        if opp[mem[c, j], img]:
                            found = 1
                            break
                    if not found:
                        ok = 0
                        break
            o[b] = ok
    return out


def local_descent(lengths, neighbors, Py_ssize_t start):
    """Chamber where first-improvement descent from ``start`` stops."""
    cdef long[:, :] L = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef int[:, :] nb = np.ascontiguousarray(neighbors, dtype=np.int32)
    cdef Py_ssize_t B = L.shape[0], deg = nb.shape[1], b, j, c
    cdef long cur
    cdef int moved
    out = np.empty(B, dtype=np.int64)
    cdef long[:] o = out
    with nogil:
        for b in range(B):
            c = start
            while True:
                cur = L[b, c]
                moved = 0
                for j in range(deg):
                    if L[b, nb[c, j]] < cur:
                        c = nb[c, j]
                        moved = 1
                        break
                if not moved:
                    break
            o[b] = c
    return out
