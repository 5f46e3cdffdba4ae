"""
Numba kernels for the lattice registries and the event-driven dynamics.

Sites are flattened as ``s = y * width + x``. Every site is registered in
exactly one of three dense index lists (vacant, type 1, type 2) so that
insert, delete and uniform sampling are O(1).
"""
from __future__ import annotations

import numpy as np
from numba import njit

VACANT = 0
ONE = 1
TWO = 2

# event kinds
BIRTH1 = 0
BIRTH2 = 1
DEATH1 = 2
DEATH2 = 3
FIRE = 4
SUPP1 = 5
SUPP2 = 6
FLIP_UP = 7
FLIP_DOWN = 8
N_KINDS = 9
TALLY_BURNED = 9  # sites vacated by fires
TALLY_SIZE = 10

# advance() status codes
REACHED_TIME = 0
ABSORBED = 1
STOPPED = 2
MAX_EVENTS = 3
CAPPED = 4

# stop modes
STOP_NONE = 0
STOP_ONE_EXTINCT = 1
STOP_TWO_EXTINCT = 2
STOP_BOTH_EXTINCT = 3
STOP_EITHER_EXTINCT = 4

INF = np.inf


@njit(cache=True)
def rebuild_registries(grid, members, index, counts):
    """Recompute all three registries from the grid."""
    counts[:] = 0
    for s in range(grid.shape[0]):
        st = grid[s]
        members[st, counts[st]] = s
        index[s] = counts[st]
        counts[st] += 1


@njit(cache=True, inline='always')
def set_state(grid, members, index, counts, s, new):
    """Move site ``s`` to registry ``new``; returns the previous state."""
    old = grid[s]
    if old == new:
        return old
    pos = index[s]
    last = counts[old] - 1
    moved = members[old, last]
    members[old, pos] = moved
    index[moved] = pos
    counts[old] = last
    members[new, counts[new]] = s
    index[s] = counts[new]
    counts[new] += 1
    grid[s] = new
    return old


@njit(cache=True, inline='always')
def randbelow(rng, n):
    """Uniform integer in [0, n) from one 53-bit double (bias below n / 2**53)."""
    i = int(rng.random() * n)
    return i if i < n else n - 1


@njit(cache=True, inline='always')
def ring_offset(r, k):
    """Map k in [0, 8r) onto the sites of the L-infinity sphere of radius r."""
    side = 2 * r
    if k < side:
        return -r + k, -r
    k -= side
    if k < side:
        return r, -r + k
    k -= side
    if k < side:
        return r - k, r
    k -= side
    return -r, r - k


@njit(cache=True, inline='always')
def sample_radius(cdf, u):
    n = cdf.shape[0]
    if n == 1:
        return 1
    lo = 0
    hi = n - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo + 1


@njit(cache=True, inline='always')
def sample_offset(cdf, rng):
    r = sample_radius(cdf, rng.random())
    k = randbelow(rng, 8 * r)
    return ring_offset(r, k)


@njit(cache=True)
def sample_offsets(cdf, rng, n):
    """Draw ``n`` dispersal offsets; returns an (n, 2) array of (dx, dy)."""
    out = np.empty((n, 2), dtype=np.int64)
    for i in range(n):
        dx, dy = sample_offset(cdf, rng)
        out[i, 0] = dx
        out[i, 1] = dy
    return out


@njit(cache=True, inline='always')
def resolve(x, y, width, height, torus):
    """Flat index of (x, y), wrapped on a torus; -1 if outside a box."""
    if torus:
        x %= width
        y %= height
    elif x < 0 or y < 0 or x >= width or y >= height:
        return -1
    return y * width + x


@njit(cache=True)
def clear_block(grid, members, index, counts, width, height, torus, cx, cy, radius, pinned):
    """Vacate the L-infinity ball of ``radius`` around (cx, cy); returns the number removed."""
    removed = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            s = resolve(cx + dx, cy + dy, width, height, torus)
            if s < 0 or grid[s] == VACANT:
                continue
            if pinned.shape[0] > 0 and pinned[s] != 0:
                continue
            set_state(grid, members, index, counts, s, VACANT)
            removed += 1
    return removed


@njit(cache=True)
def square_full(grid, width, height, torus, cx, cy, n, typ):
    """True when every site of (cx, cy) + [-n, n]^2 holds ``typ``."""
    for dy in range(-n, n + 1):
        for dx in range(-n, n + 1):
            s = resolve(cx + dx, cy + dy, width, height, torus)
            if s < 0 or grid[s] != typ:
                return False
    return True


@njit(cache=True)
def _watch_check(grid, width, height, torus, s, n, typ, mask):
    x = s % width
    y = s // width
    for dy in range(-n, n + 1):
        for dx in range(-n, n + 1):
            c = resolve(x + dx, y + dy, width, height, torus)
            if c < 0 or mask[c] == 0:
                continue
            if square_full(grid, width, height, torus, c % width, c // width, n, typ):
                return True
    return False


@njit(cache=True, inline='always')
def _stop_reached(counts, mode):
    if mode == STOP_ONE_EXTINCT:
        return counts[ONE] == 0
    if mode == STOP_TWO_EXTINCT:
        return counts[TWO] == 0
    if mode == STOP_BOTH_EXTINCT:
        return counts[ONE] == 0 and counts[TWO] == 0
    if mode == STOP_EITHER_EXTINCT:
        return counts[ONE] == 0 or counts[TWO] == 0
    return False


@njit(cache=True)
def advance(grid, members, index, counts, width, height, torus,
            rates, fire_radius, flip, cdf1, cdf2, rng, clock, t_stop, max_events,
            stop_mode, ext_time, hit_type, hit_time,
            log_t, log_rate, log_kind, log_xy, log_n, tally, pinned,
            watch_type, watch_n, watch_mask, watch_window, watch_found, count_cap):
    """Run the aggregate-rate Gillespie loop until ``t_stop``.

    ``rates`` holds (beta1, beta2, delta1, delta2, delta0). ``clock`` holds
    (current time, pending next-event time or -1). The pending time is kept
    across calls so that the trajectory does not depend on where the caller
    pauses it. ``count_cap > 0`` stops the run once n1 + n2 reaches it.
    Returns one of the status codes above.
    """
    b1 = rates[0]
    b2 = rates[1]
    d1 = rates[2]
    d2 = rates[3]
    d0 = rates[4]
    if torus:
        fire_w = width
        fire_h = height
        fire_off = 0
    else:
        fire_w = width + 2 * fire_radius
        fire_h = height + 2 * fire_radius
        fire_off = fire_radius
    n_fire = fire_w * fire_h
    fire_total = n_fire * d0
    log_cap = log_t.shape[0]
    track_hits = hit_time.shape[0] > 0
    watching = watch_mask.shape[0] > 0
    done = 0

    while True:
        if done >= max_events:
            return MAX_EVENTS
        n0 = counts[VACANT]
        n1 = counts[ONE]
        n2 = counts[TWO]
        if flip:
            a0 = n0 * b1
            a1 = n1 * d1
            a4 = 0.0
        else:
            a0 = n1 * b1
            a1 = n1 * d1
            a4 = fire_total
        a2 = n2 * b2
        a3 = n2 * d2
        total = a0 + a1 + a2 + a3 + a4
        if total <= 0.0:
            clock[1] = -1.0
            if clock[0] < t_stop < INF:
                clock[0] = t_stop
            return ABSORBED
        if clock[1] < 0.0:
            clock[1] = clock[0] + rng.standard_exponential() / total
        if clock[1] > t_stop:
            clock[0] = t_stop
            return REACHED_TIME
        t = clock[1]
        clock[0] = t
        clock[1] = -1.0
        done += 1

        u = rng.random() * total
        kind = -1
        sx = -1
        sy = -1
        tx = -1
        ty = -1
        placed = -1
        placed_type = VACANT
        if u < a0:
            if flip:
                kind = FLIP_UP
                s = members[VACANT, randbelow(rng, n0)]
                set_state(grid, members, index, counts, s, ONE)
                sx = s % width
                sy = s // width
                tx = sx
                ty = sy
                placed = s
                placed_type = ONE
            else:
                s = members[ONE, randbelow(rng, n1)]
                sx = s % width
                sy = s // width
                dx, dy = sample_offset(cdf1, rng)
                tx = sx + dx
                ty = sy + dy
                tgt = resolve(tx, ty, width, height, torus)
                if tgt >= 0 and grid[tgt] == VACANT:
                    kind = BIRTH1
                    set_state(grid, members, index, counts, tgt, ONE)
                    placed = tgt
                    placed_type = ONE
                else:
                    kind = SUPP1
        elif u < a0 + a1:
            kind = FLIP_DOWN if flip else DEATH1
            s = members[ONE, randbelow(rng, n1)]
            sx = s % width
            sy = s // width
            tx = sx
            ty = sy
            if pinned.shape[0] == 0 or pinned[s] == 0:
                set_state(grid, members, index, counts, s, VACANT)
        elif u < a0 + a1 + a2:
            s = members[TWO, randbelow(rng, n2)]
            sx = s % width
            sy = s // width
            dx, dy = sample_offset(cdf2, rng)
            tx = sx + dx
            ty = sy + dy
            tgt = resolve(tx, ty, width, height, torus)
            if tgt >= 0 and grid[tgt] == VACANT:
                kind = BIRTH2
                set_state(grid, members, index, counts, tgt, TWO)
                placed = tgt
                placed_type = TWO
            else:
                kind = SUPP2
        elif u < a0 + a1 + a2 + a3:
            kind = DEATH2
            s = members[TWO, randbelow(rng, n2)]
            sx = s % width
            sy = s // width
            tx = sx
            ty = sy
            if pinned.shape[0] == 0 or pinned[s] == 0:
                set_state(grid, members, index, counts, s, VACANT)
        else:
            kind = FIRE
            c = randbelow(rng, n_fire)
            sx = c % fire_w - fire_off
            sy = c // fire_w - fire_off
            tx = sx
            ty = sy
            tally[TALLY_BURNED] += clear_block(grid, members, index, counts, width, height,
                                               torus, sx, sy, fire_radius, pinned)

        tally[kind] += 1
        if log_n[0] < log_cap:
            i = log_n[0]
            log_t[i] = t
            log_rate[i] = total
            log_kind[i] = kind
            log_xy[i, 0] = sx
            log_xy[i, 1] = sy
            log_xy[i, 2] = tx
            log_xy[i, 3] = ty
            log_n[0] += 1
        log_n[1] += 1

        if placed >= 0:
            if track_hits and placed_type == hit_type and hit_time[placed] == INF:
                hit_time[placed] = t
            if (watching and placed_type == watch_type and watch_found[0] == INF
                    and t >= watch_window[0] and t < watch_window[1]):
                if _watch_check(grid, width, height, torus, placed, watch_n, watch_type,
                                watch_mask):
                    watch_found[0] = t
            if count_cap > 0 and counts[ONE] + counts[TWO] >= count_cap:
                return CAPPED
        else:
            if counts[ONE] == 0 and ext_time[ONE] != ext_time[ONE]:
                ext_time[ONE] = t
            if counts[TWO] == 0 and ext_time[TWO] != ext_time[TWO]:
                ext_time[TWO] = t
            if _stop_reached(counts, stop_mode):
                return STOPPED


@njit(cache=True)
def coupled_advance(grid_a, mem_a, idx_a, cnt_a, grid_b, mem_b, idx_b, cnt_b,
                    width, height, torus, beta, delta, delta0, fire_radius, cdf,
                    rng, clock, t_stop, window_a, hit_time_a, violations, tally):
    """Drive two single-type processes from one graphical representation.

    Every site carries a birth-arrow clock (rate ``beta``), a death mark
    clock (rate ``delta``) and a fire clock (rate ``delta0``), independent of
    occupancy; both lattices read the same marks. ``window_a`` (x0, y0, x1,
    y1, inclusive) truncates births of process A when non-empty. After each
    arrow the target site is checked for A subset-of B; ``violations``
    counts failures. Returns a status code.
    """
    n = width * height
    site_rate = beta + delta
    total = n * site_rate + n * delta0
    truncated = window_a.shape[0] > 0
    track = hit_time_a.shape[0] > 0
    if total <= 0.0:
        clock[0] = t_stop
        return ABSORBED
    while True:
        if clock[1] < 0.0:
            clock[1] = clock[0] + rng.standard_exponential() / total
        if clock[1] > t_stop:
            clock[0] = t_stop
            return REACHED_TIME
        t = clock[1]
        clock[0] = t
        clock[1] = -1.0
        u = rng.random() * total
        if u >= n * site_rate:
            c = randbelow(rng, n)
            cx = c % width
            cy = c // width
            clear_block(grid_a, mem_a, idx_a, cnt_a, width, height, torus, cx, cy,
                        fire_radius, np.empty(0, dtype=np.int8))
            clear_block(grid_b, mem_b, idx_b, cnt_b, width, height, torus, cx, cy,
                        fire_radius, np.empty(0, dtype=np.int8))
            tally[FIRE] += 1
            continue
        s = randbelow(rng, n)
        if rng.random() * site_rate < delta:
            set_state(grid_a, mem_a, idx_a, cnt_a, s, VACANT)
            set_state(grid_b, mem_b, idx_b, cnt_b, s, VACANT)
            tally[DEATH1] += 1
            continue
        tally[BIRTH1] += 1
        x = s % width
        y = s // width
        dx, dy = sample_offset(cdf, rng)
        tgt = resolve(x + dx, y + dy, width, height, torus)
        if tgt < 0:
            continue
        if grid_b[s] == ONE and grid_b[tgt] == VACANT:
            set_state(grid_b, mem_b, idx_b, cnt_b, tgt, ONE)
        if grid_a[s] == ONE and grid_a[tgt] == VACANT:
            inside = True
            if truncated:
                tx = tgt % width
                ty = tgt // width
                inside = (window_a[0] <= tx <= window_a[2]) and (window_a[1] <= ty <= window_a[3])
            if inside:
                set_state(grid_a, mem_a, idx_a, cnt_a, tgt, ONE)
                if track and hit_time_a[tgt] == INF:
                    hit_time_a[tgt] = t
        if grid_a[tgt] == ONE and grid_b[tgt] != ONE:
            violations[0] += 1
