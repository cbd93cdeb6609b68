# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Semantics, tie-breaking included, match snowfold._fallback."""

import numpy as np

from libc.stdint cimport int64_t, uint64_t


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


def light_sweep(const double[:, ::1] sd, const double[:, ::1] imgd,
                const double[::1] radii, const int64_t[::1] centers, double diam_bound):
    """Worst ratio diam(component) / r over probe radii and probe centres.

    Radii must be ascending; the scan stops once ``diam_bound / r`` cannot
    beat the current best.  Returns (best, radius index, centre, component,
    radii scanned); the component is unsorted.
    """
    cdef Py_ssize_t n = sd.shape[0], nr = radii.shape[0], nc = centers.shape[0]
    cdef int64_t[::1] members = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] comp = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] best_comp = np.empty(n, dtype=np.int64)
    cdef signed char[::1] state = np.zeros(n, dtype=np.int8)
    cdef double best = 0.0, r, dmax, ratio
    cdef Py_ssize_t best_r = -1, best_c = -1, best_len = 0, scanned = 0
    cdef Py_ssize_t ri, ci, a, b, i, k, m, clen, head
    cdef int64_t p, x, u, v, ui

    with nogil:
        for ri in range(nr):
            r = radii[ri]
            if diam_bound / r <= best:
                break
            scanned += 1
            for ci in range(nc):
                p = centers[ci]
                m = 0
                for x in range(n):
                    if imgd[p, x] <= r:
                        members[m] = x
                        m += 1
                        state[x] = 1
                for a in range(m):
                    x = members[a]
                    if state[x] != 1:
                        continue
                    state[x] = 2
                    comp[0] = x
                    clen = 1
                    head = 0
                    while head < clen:
                        u = comp[head]
                        head += 1
                        for b in range(m):
                            v = members[b]
                            if state[v] == 1 and sd[u, v] <= r:
                                state[v] = 2
                                comp[clen] = v
                                clen += 1
                    dmax = 0.0
                    for i in range(clen):
                        ui = comp[i]
                        for k in range(i + 1, clen):
                            if sd[ui, comp[k]] > dmax:
                                dmax = sd[ui, comp[k]]
                    ratio = dmax / r
                    if ratio > best:
                        best = ratio
                        best_r = ri
                        best_c = p
                        best_len = clen
                        for i in range(clen):
                            best_comp[i] = comp[i]
                for a in range(m):
                    state[members[a]] = 0

    return best, best_r, best_c, np.asarray(best_comp[:best_len]).copy(), scanned


def subset_tables(const double[:, ::1] D, const int64_t[::1] adj):
    """For every bitmask of points: connected flag and diameter under D.

    ``adj[i]`` is the neighbour bitmask of point i.
    """
    cdef Py_ssize_t n = D.shape[0]
    cdef uint64_t total = (<uint64_t>1) << n
    conn_arr = np.zeros(total, dtype=np.uint8)
    diam_arr = np.zeros(total, dtype=np.float64)
    cdef unsigned char[::1] conn = conn_arr
    cdef double[::1] diam = diam_arr
    cdef uint64_t mask, rest, t, reach, frontier, nb
    cdef int low, i
    cdef double d

    with nogil:
        for mask in range(1, total):
            low = __builtin_ctzll(mask)
            rest = mask & (mask - 1)
            d = diam[rest]
            t = rest
            while t:
                i = __builtin_ctzll(t)
                if D[low, i] > d:
                    d = D[low, i]
                t &= t - 1
            diam[mask] = d
            reach = (<uint64_t>1) << low
            frontier = reach
            while frontier:
                i = __builtin_ctzll(frontier)
                frontier &= frontier - 1
                nb = (<uint64_t>adj[i]) & mask & ~reach
                reach |= nb
                frontier |= nb
            conn[mask] = reach == mask
    return conn_arr, diam_arr


def pair_minimizers(const unsigned char[::1] conn, const double[::1] diam, int n):
    """Minimum table value over connected masks containing each pair.

    Returns (values, witness masks); ties go to the smallest mask.
    """
    out_arr = np.full((n, n), np.inf)
    wit_arr = np.full((n, n), -1, dtype=np.int64)
    cdef double[:, ::1] out = out_arr
    cdef int64_t[:, ::1] wit = wit_arr
    cdef uint64_t total = (<uint64_t>1) << n
    cdef uint64_t mask, t, s
    cdef int i, k
    cdef double v
    for i in range(n):
        out[i, i] = 0.0
        wit[i, i] = (<int64_t>1) << i
    with nogil:
        for mask in range(1, total):
            if not conn[mask] or (mask & (mask - 1)) == 0:
                continue
            v = diam[mask]
            t = mask
            while t:
                i = __builtin_ctzll(t)
                t &= t - 1
                s = t
                while s:
                    k = __builtin_ctzll(s)
                    s &= s - 1
                    if v < out[i, k]:
                        out[i, k] = v
                        out[k, i] = v
                        wit[i, k] = mask
                        wit[k, i] = mask
    return out_arr, wit_arr
