"""Pure-Python (numpy/scipy) versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


def light_sweep(sd, imgd, radii, centers, diam_bound):
    sd = np.asarray(sd)
    imgd = np.asarray(imgd)
    best, best_r, best_c, best_comp, scanned = 0.0, -1, -1, np.zeros(0, np.int64), 0
    for ri, r in enumerate(radii):
        r = float(r)
        if diam_bound / r <= best:
            break
        scanned += 1
        adj = sd <= r
        for p in centers:
            S = np.flatnonzero(imgd[p] <= r)
            _, labels = connected_components(csr_matrix(adj[np.ix_(S, S)]), directed=False)
            # components in order of their smallest member, as the BFS in the kernel visits them
            _, first = np.unique(labels, return_index=True)
            for lab in labels[np.sort(first)]:
                ids = S[labels == lab]
                dmax = float(sd[np.ix_(ids, ids)].max())
                ratio = dmax / r
                if ratio > best:
                    best, best_r, best_c, best_comp = ratio, ri, int(p), ids.copy()
    return best, best_r, best_c, best_comp, scanned


def subset_tables(D, adj):
    D = np.asarray(D)
    adj = np.asarray(adj, dtype=np.int64)
    n = D.shape[0]
    total = 1 << n
    diam = np.zeros(total)
    nbr = np.zeros(total, dtype=np.int64)
    # build by highest bit: mask = 2^b + sub with sub < 2^b
    for b in range(n):
        lo = 1 << b
        far = np.zeros(lo)
        for i in range(b):
            far[1 << i: 1 << (i + 1)] = np.maximum(far[: 1 << i], D[b, i])
        diam[lo: 2 * lo] = np.maximum(diam[:lo], far)
        nbr[lo: 2 * lo] = nbr[:lo] | adj[b]
    masks = np.arange(total, dtype=np.int64)
    reach = masks & -masks
    for _ in range(n):
        reach = masks & (reach | nbr[reach])
    conn = ((reach == masks) & (masks > 0)).astype(np.uint8)
    return conn, diam


def pair_minimizers(conn, diam, n):
    total = 1 << n
    masks = np.arange(total, dtype=np.int64)
    multi = (masks & (masks - 1)) != 0
    live = (np.asarray(conn) == 1) & multi
    val = np.where(live, diam, np.inf)
    wit = np.where(live, masks, np.iinfo(np.int64).max)
    # superset minimum, lexicographic on (value, mask)
    for i in range(n):
        idx = masks[(masks >> i) & 1 == 0]
        cand = idx | (1 << i)
        better = (val[cand] < val[idx]) | ((val[cand] == val[idx]) & (wit[cand] < wit[idx]))
        val[idx[better]] = val[cand[better]]
        wit[idx[better]] = wit[cand[better]]
    out = np.full((n, n), np.inf)
    wout = np.full((n, n), -1, dtype=np.int64)
    for i in range(n):
        out[i, i] = 0.0
        wout[i, i] = 1 << i
        for k in range(i + 1, n):
            pm = (1 << i) | (1 << k)
            if np.isfinite(val[pm]):
                out[i, k] = out[k, i] = val[pm]
                wout[i, k] = wout[k, i] = wit[pm]
    return out, wout
