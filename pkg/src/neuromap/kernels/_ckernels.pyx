# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of ``_pykernels``. Keep arithmetic order identical."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    PE = 0
    PW = 1
    PN = 2
    PS = 3
    PLOCAL = 4

cdef enum:
    SXY = 0
    SWEST_FIRST = 1
    SNORTH_LAST = 2
    SNEGATIVE_FIRST = 3
    SODD_EVEN = 4
    SDYAD = 5

E, W, N, S, LOCAL = PE, PW, PN, PS, PLOCAL
NO_DIR = -1
XY, WEST_FIRST, NORTH_LAST, NEGATIVE_FIRST, ODD_EVEN, DYAD = range(6)

cdef int _DX[4]
cdef int _DY[4]
_DX[:] = [1, -1, 0, 0]
_DY[:] = [0, 0, 1, -1]


cdef inline int _mod2(long v) nogil:
    return <int>(((v % 2) + 2) % 2)


cdef int _odd_even_mask(long cx, long cy, long dx, long dy, int last) nogil:
    cdef long ex = dx - cx
    cdef long ey = dy - cy
    cdef int mask = 0
    if ex == 0:
        mask |= 1 << (PN if ey > 0 else PS)
    elif ex > 0:
        if ey == 0:
            mask |= 1 << PE
        else:
            if _mod2(cx) == 1 or last != PE:
                mask |= 1 << (PN if ey > 0 else PS)
            if _mod2(dx) == 1 or ex != 1:
                mask |= 1 << PE
    else:
        mask |= 1 << PW
        if ey != 0 and _mod2(cx) == 0:
            mask |= 1 << (PN if ey > 0 else PS)
    return mask


cdef int _permitted(int strategy, long cx, long cy, long dx, long dy, int last) except -1:
    cdef long ex = dx - cx
    cdef long ey = dy - cy
    cdef int mask = 0
    cdef int xdir, ydir
    if ex == 0 and ey == 0:
        return 1 << PLOCAL
    xdir = PE if ex > 0 else PW
    ydir = PN if ey > 0 else PS
    if strategy == SXY:
        return 1 << (xdir if ex != 0 else ydir)
    if strategy == SWEST_FIRST:
        if ex < 0:
            return 1 << PW
        if ex > 0:
            mask = 1 << PE
        if ey != 0:
            mask |= 1 << ydir
        return mask
    if strategy == SNORTH_LAST:
        if ex == 0:
            return 1 << ydir
        mask = 1 << xdir
        if ey < 0:
            mask |= 1 << PS
        return mask
    if strategy == SNEGATIVE_FIRST:
        if ex < 0:
            mask |= 1 << PW
        if ey < 0:
            mask |= 1 << PS
        if mask:
            return mask
        if ex > 0:
            mask |= 1 << PE
        if ey > 0:
            mask |= 1 << PN
        return mask
    if strategy == SODD_EVEN or strategy == SDYAD:
        return _odd_even_mask(cx, cy, dx, dy, last)
    raise ValueError(f"unknown routing strategy code {strategy}")


def permitted_ports(int strategy, long cx, long cy, long dx, long dy, int last):
    return _permitted(strategy, cx, cy, dx, dy, last)


cdef int _route_next(int strategy, long cx, long cy, long dx, long dy, int last,
                     long dyad_threshold, object free) except -2:
    cdef int mask = _permitted(strategy, cx, cy, dx, dy, last)
    cdef int port, best = -1
    cdef long best_free = -1, f
    cdef bint adaptive
    if mask == 1 << PLOCAL:
        return PLOCAL
    adaptive = strategy == SDYAD and free is not None and abs(dx - cx) + abs(dy - cy) >= dyad_threshold
    for port in range(4):
        if (mask >> port) & 1:
            if not adaptive:
                return port
            f = free[port]
            if f > best_free:
                best = port
                best_free = f
    return best


def route_next(int strategy, long cx, long cy, long dx, long dy, int last, long dyad_threshold, free):
    return _route_next(strategy, cx, cy, dx, dy, last, dyad_threshold, free)


def trace_route(int strategy, long sx, long sy, long dx, long dy, long dyad_threshold):
    cdef list ports = []
    cdef long cx = sx, cy = sy
    cdef int last = -1, p
    while True:
        p = _route_next(strategy, cx, cy, dx, dy, last, dyad_threshold, None)
        if p == PLOCAL:
            return ports
        ports.append(p)
        cx += _DX[p]
        cy += _DY[p]
        last = p


def count_inversions(values):
    arr = np.array(values, dtype=np.int64)
    scratch = np.empty_like(arr)
    cdef cnp.int64_t[::1] va = arr
    cdef cnp.int64_t[::1] vb = scratch
    cdef Py_ssize_t n = arr.shape[0]
    if n < 2:
        return 0
    cdef cnp.int64_t* a = &va[0]
    cdef cnp.int64_t* buf = &vb[0]
    cdef cnp.int64_t* tmp
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef long long inv = 0
    with nogil:
        while width < n:
            lo = 0
            while lo < n:
                mid = min(lo + width, n)
                hi = min(lo + 2 * width, n)
                i = lo
                j = mid
                k = lo
                while i < mid and j < hi:
                    if a[i] <= a[j]:
                        buf[k] = a[i]
                        i += 1
                    else:
                        buf[k] = a[j]
                        inv += mid - i
                        j += 1
                    k += 1
                while i < mid:
                    buf[k] = a[i]
                    i += 1
                    k += 1
                while j < hi:
                    buf[k] = a[j]
                    j += 1
                    k += 1
                lo += 2 * width
            tmp = a
            a = buf
            buf = tmp
            width *= 2
    return int(inv)


def kl_pass(double[:, ::1] weights, cnp.uint8_t[::1] side, d_in):
    cdef Py_ssize_t n = side.shape[0]
    cdef double[::1] d = np.array(d_in, dtype=np.float64, copy=True)
    cdef cnp.uint8_t[::1] locked = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t na = 0, i, a, b, x, step, steps, ba, bb, k, best_k
    cdef double g, bg, run, best_g, wa, wb
    for i in range(n):
        if side[i] == 0:
            na += 1
    steps = min(na, n - na)
    cdef cnp.int64_t[::1] pa = np.empty(steps, dtype=np.int64)
    cdef cnp.int64_t[::1] pb = np.empty(steps, dtype=np.int64)
    cdef double[::1] gains = np.empty(steps, dtype=np.float64)
    with nogil:
        for step in range(steps):
            ba = -1
            bb = -1
            bg = 0.0
            for a in range(n):
                if side[a] != 0 or locked[a]:
                    continue
                for b in range(n):
                    if side[b] == 0 or locked[b]:
                        continue
                    g = d[a] + d[b] - 2.0 * weights[a, b]
                    if ba < 0 or g > bg:
                        ba = a
                        bb = b
                        bg = g
            pa[step] = ba
            pb[step] = bb
            gains[step] = bg
            locked[ba] = 1
            locked[bb] = 1
            for x in range(n):
                if locked[x]:
                    continue
                wa = weights[x, ba]
                wb = weights[x, bb]
                if side[x] == 0:
                    d[x] += 2.0 * wa - 2.0 * wb
                else:
                    d[x] += 2.0 * wb - 2.0 * wa
        best_k = 0
        best_g = 0.0
        run = 0.0
        for k in range(steps):
            run += gains[k]
            if run > best_g + 1e-12:
                best_k = k + 1
                best_g = run
        for k in range(best_k):
            side[pa[k]] = 1
            side[pb[k]] = 0
    return best_g


def cut_costs(cnp.int64_t[:, ::1] assign, cnp.int64_t[::1] src, cnp.int64_t[::1] dst, double[::1] w):
    cdef Py_ssize_t P = assign.shape[0], m = src.shape[0], p, e
    cdef double total
    out = np.zeros(P)
    cdef double[::1] o = out
    with nogil:
        for p in range(P):
            total = 0.0
            for e in range(m):
                if assign[p, src[e]] != assign[p, dst[e]]:
                    total += w[e]
                else:
                    total += 0.0
            o[p] = total
    return out


def placement_costs(cnp.int64_t[:, ::1] perm, cnp.int64_t[::1] src, cnp.int64_t[::1] dst,
                    double[::1] w, cnp.int64_t[:, ::1] dist):
    cdef Py_ssize_t P = perm.shape[0], m = src.shape[0], p, e
    cdef double total
    out = np.zeros(P)
    cdef double[::1] o = out
    with nogil:
        for p in range(P):
            total = 0.0
            for e in range(m):
                total += w[e] * <double>dist[perm[p, src[e]], perm[p, dst[e]]]
            o[p] = total
    return out


def elmore_grid(Py_ssize_t n, double r_wl, double r_bl, double c_wl, double c_bl):
    out = np.zeros((n, n))
    cdef double[:, ::1] o = out
    cdef double row0 = 0.0, acc
    cdef Py_ssize_t i, j
    with nogil:
        for j in range(n):
            row0 += (j + 1) * r_wl * c_wl
            acc = row0
            o[0, j] = acc
            for i in range(1, n):
                acc += ((j + 1) * r_wl + i * r_bl) * c_bl
                o[i, j] = acc
    return out


def repair_assign(cnp.int64_t[:, ::1] assign, Py_ssize_t k, Py_ssize_t cap,
                  cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, cnp.uint8_t[::1] is_col):
    cdef Py_ssize_t P = assign.shape[0], n = assign.shape[1], p, v, c, e, s, best, new, nev
    counts_arr = np.zeros((k, n), dtype=np.int32)
    cdef int[:, ::1] counts = counts_arr
    cdef cnp.int64_t[::1] nrows = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] cols = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] size = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] evicted = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] gone = np.zeros(n, dtype=np.uint8)
    out = np.zeros(P, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for p in range(P):
            counts[:, :] = 0
            nrows[:] = 0
            cols[:] = 0
            size[:] = 0
            gone[:] = 0
            for v in range(n):
                c = assign[p, v]
                size[c] += 1
                cols[c] += is_col[v]
                for e in range(indptr[v], indptr[v + 1]):
                    s = indices[e]
                    counts[c, s] += 1
                    if counts[c, s] == 1:
                        nrows[c] += 1
            nev = 0
            for c in range(k):
                v = n - 1
                while size[c] > 1 and (nrows[c] > cap or cols[c] > cap):
                    while assign[p, v] != c or gone[v]:
                        v -= 1
                    gone[v] = 1
                    size[c] -= 1
                    cols[c] -= is_col[v]
                    for e in range(indptr[v], indptr[v + 1]):
                        s = indices[e]
                        counts[c, s] -= 1
                        if counts[c, s] == 0:
                            nrows[c] -= 1
                    evicted[nev] = v
                    nev += 1
            # evictions were collected cluster by cluster; re-home in ascending id
            for v in range(n):
                if not gone[v]:
                    continue
                best = -1
                for c in range(k):
                    if cols[c] + is_col[v] > cap:
                        continue
                    new = 0
                    for e in range(indptr[v], indptr[v + 1]):
                        if counts[c, indices[e]] == 0:
                            new += 1
                    if nrows[c] + new > cap:
                        continue
                    if best < 0 or size[c] < size[best]:
                        best = c
                if best < 0:
                    best = 0
                    for c in range(1, k):
                        if size[c] < size[best]:
                            best = c
                size[best] += 1
                cols[best] += is_col[v]
                for e in range(indptr[v], indptr[v + 1]):
                    s = indices[e]
                    counts[best, s] += 1
                    if counts[best, s] == 1:
                        nrows[best] += 1
                assign[p, v] = best
            o[p] = 0
            for c in range(k):
                if nrows[c] > cap:
                    o[p] += nrows[c] - cap
                if cols[c] > cap:
                    o[p] += cols[c] - cap
    return out
