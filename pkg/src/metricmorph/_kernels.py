"""Compiled inner loops shared by metrics, similarity and the annealer."""

import math

import numpy as np
from numba import njit

# |cross product| at or below this is treated as collinear
COLLINEAR_TOL = 1e-12

SIM_GREEDY = 0
SIM_MSE = 1
SIM_PROCRUSTES = 2


# -- segment crossings --------------------------------------------------------

@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if abs(v) <= COLLINEAR_TOL:
        return 0
    return 1 if v > 0 else -1


@njit(cache=True)
def _on_segment(ax, ay, bx, by, px, py):
    # p is known to be collinear with a-b
    return (min(ax, bx) <= px <= max(ax, bx)) and (min(ay, by) <= py <= max(ay, by))


@njit(cache=True)
def segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
    """True if closed segments ab and cd intersect (touching counts)."""
    if (ax == bx and ay == by) or (cx == dx and cy == dy):
        return False
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    return False


@njit(cache=True)
def edge_pair_crosses(X, edges, e, f):
    a, b = edges[e, 0], edges[e, 1]
    c, d = edges[f, 0], edges[f, 1]
    if a == c or a == d or b == c or b == d:
        return False
    return segments_cross(X[a, 0], X[a, 1], X[b, 0], X[b, 1],
                          X[c, 0], X[c, 1], X[d, 0], X[d, 1])


@njit(cache=True)
def crossing_matrix(X, edges):
    m = edges.shape[0]
    C = np.zeros((m, m), dtype=np.uint8)
    for e in range(m):
        for f in range(e + 1, m):
            if edge_pair_crosses(X, edges, e, f):
                C[e, f] = 1
                C[f, e] = 1
    return C


@njit(cache=True)
def crossing_count(X, edges):
    m = edges.shape[0]
    total = 0
    for e in range(m):
        for f in range(e + 1, m):
            if edge_pair_crosses(X, edges, e, f):
                total += 1
    return total


@njit(cache=True)
def crossing_rows(X, edges, touched):
    """Crossing flags of each edge in ``touched`` against every edge."""
    m = edges.shape[0]
    rows = np.zeros((touched.shape[0], m), dtype=np.uint8)
    for r in range(touched.shape[0]):
        e = touched[r]
        for f in range(m):
            if f != e and edge_pair_crosses(X, edges, e, f):
                rows[r, f] = 1
    return rows


@njit(cache=True)
def touched_edges(indptr, eids, moved, mark):
    """Distinct edges incident to ``moved`` (sorted). ``mark`` is scratch of
    length m and is left all-False."""
    count = 0
    for t in range(moved.shape[0]):
        v = moved[t]
        count += indptr[v + 1] - indptr[v]
    out = np.empty(count, dtype=np.int64)
    k = 0
    for t in range(moved.shape[0]):
        v = moved[t]
        for q in range(indptr[v], indptr[v + 1]):
            e = eids[q]
            if not mark[e]:
                mark[e] = True
                out[k] = e
                k += 1
    out = np.sort(out[:k])
    for q in range(k):
        mark[out[q]] = False
    return out


@njit(cache=True)
def closed_neighborhood(indptr, nbrs, moved, mark):
    """Sorted distinct nodes in ``moved`` or adjacent to it; ``mark`` is scratch."""
    count = moved.shape[0]
    for t in range(moved.shape[0]):
        v = moved[t]
        count += indptr[v + 1] - indptr[v]
    out = np.empty(count, dtype=np.int64)
    k = 0
    for t in range(moved.shape[0]):
        v = moved[t]
        if not mark[v]:
            mark[v] = True
            out[k] = v
            k += 1
        for q in range(indptr[v], indptr[v + 1]):
            w = nbrs[q]
            if not mark[w]:
                mark[w] = True
                out[k] = w
                k += 1
    out = np.sort(out[:k])
    for q in range(k):
        mark[out[q]] = False
    return out


@njit(cache=True)
def eld_value(L):
    m = L.shape[0]
    mu = 0.0
    for i in range(m):
        mu += L[i]
    mu /= m
    s = 0.0
    for i in range(m):
        r = L[i] - mu
        s += r * r
    return math.sqrt(s / m)


@njit(cache=True)
def update_lengths(X, edges, touched, L):
    for q in range(touched.shape[0]):
        e = touched[q]
        a, b = edges[e, 0], edges[e, 1]
        dx = X[a, 0] - X[b, 0]
        dy = X[a, 1] - X[b, 1]
        L[e] = math.sqrt(dx * dx + dy * dy)


# -- angular resolution -------------------------------------------------------

@njit(cache=True)
def angle_deviation(X, indptr, nbrs, nodes, out):
    """Write |(Theta - theta) / Theta| for each node into ``out[node]``.

    Nodes of degree < 2 get 0. Returns the first node with a zero-length
    incident edge, or -1.
    """
    for t in range(nodes.shape[0]):
        v = nodes[t]
        lo, hi = indptr[v], indptr[v + 1]
        deg = hi - lo
        if deg < 2:
            out[v] = 0.0
            continue
        ang = np.empty(deg)
        for k in range(deg):
            w = nbrs[lo + k]
            dx = X[w, 0] - X[v, 0]
            dy = X[w, 1] - X[v, 1]
            if dx == 0.0 and dy == 0.0:
                return v
            ang[k] = math.atan2(dy, dx)
        ang.sort()
        smallest = ang[0] + 2.0 * math.pi - ang[deg - 1]
        for k in range(1, deg):
            gap = ang[k] - ang[k - 1]
            if gap < smallest:
                smallest = gap
        ideal = 2.0 * math.pi / deg
        out[v] = abs((ideal - smallest) / ideal)
    return -1


# -- point-set similarity -----------------------------------------------------

@njit(cache=True)
def greedy_sim(X, Y):
    """Match each X row in order to its nearest unused Y row; sum distances.

    Ties go to the lowest Y index (ascending scan, strict ``<``).
    """
    n = X.shape[0]
    match_y = np.empty(n, dtype=np.int64)
    d_match = np.empty(n)
    row_of_y = np.empty(n, dtype=np.int64)
    cum = np.empty(n + 1)
    return greedy_prefix(X, Y, match_y, d_match, row_of_y, cum)


@njit(cache=True)
def mse_sim(X, Y):
    n = X.shape[0]
    s = 0.0
    for i in range(n):
        dx = X[i, 0] - Y[i, 0]
        dy = X[i, 1] - Y[i, 1]
        s += dx * dx + dy * dy
    return s / n


@njit(cache=True)
def procrustes_sim(X, Y):
    """1 - |<x, y>|^2 for centred, unit-norm complex embeddings of X and Y.

    That is the residual after the best translation, scale and rotation
    (no reflection) of X onto Y. Returns NaN for degenerate X or Y.
    """
    n = X.shape[0]
    mx0 = 0.0
    mx1 = 0.0
    my0 = 0.0
    my1 = 0.0
    for i in range(n):
        mx0 += X[i, 0]
        mx1 += X[i, 1]
        my0 += Y[i, 0]
        my1 += Y[i, 1]
    mx0 /= n
    mx1 /= n
    my0 /= n
    my1 /= n
    nx = 0.0
    ny = 0.0
    re = 0.0
    im = 0.0
    for i in range(n):
        a, b = X[i, 0] - mx0, X[i, 1] - mx1
        c, d = Y[i, 0] - my0, Y[i, 1] - my1
        nx += a * a + b * b
        ny += c * c + d * d
        # conj(x) * y
        re += a * c + b * d
        im += a * d - b * c
    if nx == 0.0 or ny == 0.0:
        return np.nan
    r = (re * re + im * im) / (nx * ny)
    return max(0.0, 1.0 - r)


@njit(cache=True)
def similarity(X, Y, kind):
    if kind == SIM_GREEDY:
        return greedy_sim(X, Y)
    if kind == SIM_MSE:
        return mse_sim(X, Y)
    return procrustes_sim(X, Y)


# -- jitter -------------------------------------------------------------------

@njit(cache=True)
def greedy_prefix(X, Y, match_y, d_match, row_of_y, cum):
    """Greedy matching of X onto Y with a full record of the matching.

    ``match_y[i]`` is the Y row taken by X row ``i`` at squared distance
    ``d_match[i]``, ``row_of_y`` the inverse, and ``cum[i]`` the loss
    accumulated before row ``i`` (``cum[n]`` is the total).
    """
    n = X.shape[0]
    used = np.zeros(n, dtype=np.bool_)
    loss = 0.0
    for i in range(n):
        cum[i] = loss
        best = np.inf
        bj = -1
        xi, yi = X[i, 0], X[i, 1]
        for j in range(n):
            if used[j]:
                continue
            dx = xi - Y[j, 0]
            dy = yi - Y[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
                bj = j
        used[bj] = True
        match_y[i] = bj
        d_match[i] = best
        row_of_y[bj] = i
        loss += math.sqrt(best)
    cum[n] = loss
    return loss


@njit(cache=True)
def greedy_repair(X, Y, moved, first, match_y, d_match, row_of_y, cum, avail, freed):
    """Greedy loss of X given the record of a matching for a reference X.

    Rows outside ``moved`` must equal the reference rows and ``first`` must
    not exceed the smallest moved row. An unmoved row whose recorded match
    is still free keeps it unless a Y row released earlier in this pass
    ("freed": free, but recorded as taken by an earlier row) is closer; any
    other row falls back to a full scan. Equal to ``greedy_sim(X, Y)``
    bit for bit, including the lowest-index tie rule.
    """
    n = X.shape[0]
    for j in range(n):
        avail[j] = row_of_y[j] >= first
    nf = 0
    loss = cum[first]
    for i in range(first, n):
        xi, yi = X[i, 0], X[i, 1]
        ys = match_y[i]
        if not moved[i] and avail[ys]:
            best = d_match[i]
            bj = ys
            for q in range(nf):
                j = freed[q]
                dx = xi - Y[j, 0]
                dy = yi - Y[j, 1]
                d2 = dx * dx + dy * dy
                if d2 < best or (d2 == best and j < bj):
                    best = d2
                    bj = j
        else:
            best = np.inf
            bj = -1
            for j in range(n):
                if not avail[j]:
                    continue
                dx = xi - Y[j, 0]
                dy = yi - Y[j, 1]
                d2 = dx * dx + dy * dy
                if d2 < best:
                    best = d2
                    bj = j
        avail[bj] = False
        for q in range(nf):
            if freed[q] == bj:
                nf -= 1
                freed[q] = freed[nf]
                break
        if avail[ys]:
            freed[nf] = ys
            nf += 1
        loss += math.sqrt(best)
    return loss


def new_record(n):
    return (np.empty(n, dtype=np.int64), np.empty(n), np.empty(n, dtype=np.int64), np.empty(n + 1))


@njit(cache=True)
def jitter_block(X, Y, T, diff, kmax, step_scale, step_clip, clamp, kind,
                 unif, norm, out, perm, record, rebuild):
    """Run jitter attempts from a pre-drawn block of random numbers.

    Attempt ``b`` consumes ``unif[b, 0]`` (subset size), ``unif[b, 1:kmax+1]``
    (partial Fisher-Yates selection), ``norm[b, :size]`` (Gaussian steps) and
    ``unif[b, kmax+1]`` (temperature draw). On success ``out`` holds the
    proposal and ``perm[:size]`` the moved nodes. ``record`` holds the greedy
    matching of ``X`` (see :func:`greedy_prefix`); it is recomputed first when
    ``rebuild`` is set.

    Returns ``(attempt, sim, size, escaped)``; attempt is -1 if the block ran
    out without a proposal being returned.
    """
    n = X.shape[0]
    match_y, d_match, row_of_y, cum = record
    avail = np.empty(n, dtype=np.bool_)
    freed = np.empty(n, dtype=np.int64)
    moved = np.zeros(n, dtype=np.bool_)
    if kind == SIM_GREEDY and rebuild:
        greedy_prefix(X, Y, match_y, d_match, row_of_y, cum)
    for b in range(unif.shape[0]):
        size = 1 + int(unif[b, 0] * kmax)
        if size > kmax:
            size = kmax
        for i in range(n):
            perm[i] = i
        for t in range(size):
            j = t + int(unif[b, 1 + t] * (n - t))
            if j >= n:
                j = n - 1
            tmp = perm[t]
            perm[t] = perm[j]
            perm[j] = tmp
        out[:, :] = X
        first = n
        for t in range(size):
            v = perm[t]
            if v < first:
                first = v
            for c in range(2):
                z = norm[b, t, c]
                if z > step_clip:
                    z = step_clip
                elif z < -step_clip:
                    z = -step_clip
                p = X[v, c] + z * step_scale
                if clamp:
                    if p < 0.0:
                        p = 0.0
                    elif p > 1.0:
                        p = 1.0
                out[v, c] = p
        if kind == SIM_GREEDY:
            for t in range(size):
                moved[perm[t]] = True
            s = greedy_repair(out, Y, moved, first, match_y, d_match, row_of_y, cum, avail, freed)
            for t in range(size):
                moved[perm[t]] = False
        else:
            s = similarity(out, Y, kind)
        if s < diff:
            return b, s, size, False
        if T > unif[b, kmax + 1]:
            return b, s, size, True
    return -1, 0.0, 0, False
