"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same arithmetic order, so both backends give identical answers.
"""

import numpy as np

E, W, N, S, LOCAL = 0, 1, 2, 3, 4
NO_DIR = -1

XY, WEST_FIRST, NORTH_LAST, NEGATIVE_FIRST, ODD_EVEN, DYAD = range(6)

_DX = (1, -1, 0, 0)
_DY = (0, 0, 1, -1)


def _odd_even_mask(cx, cy, dx, dy, last):
    ex = dx - cx
    ey = dy - cy
    mask = 0
    if ex == 0:
        mask |= 1 << (N if ey > 0 else S)
    elif ex > 0:
        if ey == 0:
            mask |= 1 << E
        else:
            # N/S from an even column only if we have not arrived from the west
            if cx % 2 == 1 or last != E:
                mask |= 1 << (N if ey > 0 else S)
            if dx % 2 == 1 or ex != 1:
                mask |= 1 << E
    else:
        mask |= 1 << W
        if ey != 0 and cx % 2 == 0:
            mask |= 1 << (N if ey > 0 else S)
    return mask


def permitted_ports(strategy, cx, cy, dx, dy, last):
    """Bitmask of minimal output ports the strategy allows at (cx, cy)."""
    ex = dx - cx
    ey = dy - cy
    if ex == 0 and ey == 0:
        return 1 << LOCAL
    xdir = E if ex > 0 else W
    ydir = N if ey > 0 else S
    if strategy == XY:
        return 1 << (xdir if ex != 0 else ydir)
    if strategy == WEST_FIRST:
        if ex < 0:
            return 1 << W
        mask = 1 << E if ex > 0 else 0
        if ey != 0:
            mask |= 1 << ydir
        return mask
    if strategy == NORTH_LAST:
        if ex == 0:
            return 1 << ydir
        mask = 1 << xdir
        if ey < 0:
            mask |= 1 << S
        return mask
    if strategy == NEGATIVE_FIRST:
        mask = 0
        if ex < 0:
            mask |= 1 << W
        if ey < 0:
            mask |= 1 << S
        if mask:
            return mask
        if ex > 0:
            mask |= 1 << E
        if ey > 0:
            mask |= 1 << N
        return mask
    if strategy == ODD_EVEN or strategy == DYAD:
        return _odd_even_mask(cx, cy, dx, dy, last)
    raise ValueError(f"unknown routing strategy code {strategy}")


def route_next(strategy, cx, cy, dx, dy, last, dyad_threshold, free):
    """Output port for a flit at (cx, cy) headed to (dx, dy).

    ``free`` is None or a 4-sequence of free downstream buffer slots per port;
    it only matters for DYAD beyond ``dyad_threshold`` segments.
    """
    mask = permitted_ports(strategy, cx, cy, dx, dy, last)
    if mask == 1 << LOCAL:
        return LOCAL
    adaptive = (
        strategy == DYAD and free is not None and abs(dx - cx) + abs(dy - cy) >= dyad_threshold
    )
    best = -1
    best_free = -1
    for port in range(4):
        if mask >> port & 1:
            if not adaptive:
                return port
            if free[port] > best_free:
                best = port
                best_free = free[port]
    return best


def trace_route(strategy, sx, sy, dx, dy, dyad_threshold):
    ports = []
    cx, cy, last = sx, sy, NO_DIR
    while True:
        p = route_next(strategy, cx, cy, dx, dy, last, dyad_threshold, None)
        if p == LOCAL:
            return ports
        ports.append(p)
        cx += _DX[p]
        cy += _DY[p]
        last = p


def count_inversions(values):
    """Pairs i < j with values[i] > values[j], by merge sort."""
    a = [int(v) for v in values]
    n = len(a)
    buf = [0] * n
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
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
        a, buf = buf, a
        width *= 2
    return inv


def kl_pass(weights, side, d):
    """One Kernighan-Lin pass over a bipartition; swaps in place.

    ``weights`` is a symmetric (n, n) float array, ``side`` a uint8 array of
    part labels (0/1) and ``d`` the external-minus-internal cost per vertex.
    Returns the cut reduction achieved (0.0 when no improving prefix exists).
    """
    n = side.shape[0]
    d = d.astype(np.float64).copy()
    locked = np.zeros(n, dtype=bool)
    in_a = side == 0
    steps = min(int(in_a.sum()), n - int(in_a.sum()))
    pairs = []
    gains = []
    for _ in range(steps):
        a_idx = np.flatnonzero(in_a & ~locked)
        b_idx = np.flatnonzero(~in_a & ~locked)
        g = d[a_idx][:, None] + d[b_idx][None, :] - 2.0 * weights[np.ix_(a_idx, b_idx)]
        flat = int(np.argmax(g))
        ai, bi = divmod(flat, b_idx.shape[0])
        a, b = int(a_idx[ai]), int(b_idx[bi])
        gains.append(float(g[ai, bi]))
        pairs.append((a, b))
        locked[a] = locked[b] = True
        rest = np.flatnonzero(~locked)
        wa = weights[rest, a]
        wb = weights[rest, b]
        ra = in_a[rest]
        d[rest[ra]] += 2.0 * wa[ra] - 2.0 * wb[ra]
        d[rest[~ra]] += 2.0 * wb[~ra] - 2.0 * wa[~ra]
    best_k, best_g, run = 0, 0.0, 0.0
    for k, g in enumerate(gains, 1):
        run += g
        if run > best_g + 1e-12:
            best_k, best_g = k, run
    for a, b in pairs[:best_k]:
        side[a] = 1
        side[b] = 0
    return best_g


def cut_costs(assign, src, dst, w):
    """Spike weight crossing cluster boundaries, per row of ``assign``."""
    if src.shape[0] == 0:
        return np.zeros(assign.shape[0])
    vals = np.where(assign[:, src] != assign[:, dst], w[None, :], 0.0)
    # cumsum adds left to right, matching the compiled loop bit for bit
    return np.cumsum(vals, axis=1)[:, -1].copy()


def placement_costs(perm, src, dst, w, dist):
    """Spike weight times link distance, per candidate placement row."""
    if src.shape[0] == 0:
        return np.zeros(perm.shape[0])
    vals = w[None, :] * dist[perm[:, src], perm[:, dst]].astype(np.float64)
    return np.cumsum(vals, axis=1)[:, -1].copy()


def elmore_grid(n, r_wl, r_bl, c_wl, c_bl):
    """Elmore delay of the wordline-then-bitline path through every cell.

    Cell (i, j) sees j+1 wordline segments followed by i bitline segments;
    ``c_wl``/``c_bl`` are per-segment capacitances including coupling.
    """
    out = np.zeros((n, n))
    row0 = 0.0
    for j in range(n):
        row0 += (j + 1) * r_wl * c_wl
        acc = row0
        out[0, j] = acc
        for i in range(1, n):
            acc += ((j + 1) * r_wl + i * r_bl) * c_bl
            out[i, j] = acc
    return out


def repair_assign(assign, k, cap, indptr, indices, is_col):
    """Make each row of ``assign`` (particles x neurons) capacity-feasible in place.

    Clusters over ``cap`` input rows (distinct sources, CSR ``indptr``/``indices``)
    or output columns evict their highest-id members; evicted neurons, in
    ascending id, move to the smallest cluster that can take them (lowest
    index on ties), or to the smallest cluster outright if none can.
    Returns the remaining capacity excess per row (0 = feasible).
    """
    P, n = assign.shape
    fanin = [indices[indptr[v]:indptr[v + 1]].tolist() for v in range(n)]
    cols_of = is_col.tolist()
    out = np.zeros(P, dtype=np.int64)
    for p in range(P):
        row = assign[p]
        counts = [dict() for _ in range(k)]
        cols = [0] * k
        size = [0] * k
        for v, c in enumerate(row.tolist()):
            size[c] += 1
            cols[c] += cols_of[v]
            cnt = counts[c]
            for s in fanin[v]:
                cnt[s] = cnt.get(s, 0) + 1
        gone = set()
        for c in range(k):
            cnt = counts[c]
            v = n - 1
            while size[c] > 1 and (len(cnt) > cap or cols[c] > cap):
                while row[v] != c or v in gone:
                    v -= 1
                gone.add(v)
                size[c] -= 1
                cols[c] -= cols_of[v]
                for s in fanin[v]:
                    if cnt[s] == 1:
                        del cnt[s]
                    else:
                        cnt[s] -= 1
        for v in sorted(gone):
            best = -1
            for c in range(k):
                if cols[c] + cols_of[v] > cap:
                    continue
                cnt = counts[c]
                if len(cnt) + sum(1 for s in fanin[v] if s not in cnt) > cap:
                    continue
                if best < 0 or size[c] < size[best]:
                    best = c
            if best < 0:
                best = min(range(k), key=lambda c: (size[c], c))
            size[best] += 1
            cols[best] += cols_of[v]
            cnt = counts[best]
            for s in fanin[v]:
                cnt[s] = cnt.get(s, 0) + 1
            row[v] = best
        out[p] = sum(max(0, len(counts[c]) - cap) + max(0, cols[c] - cap) for c in range(k))
    return out
