"""Compiled hot path for the multi-table merge (spans up to 64 bits).

Mirrors the pure-Python engine operation for operation: same pop order,
same float accumulation, same admission rule, so both produce identical
results.  Per-table priority queues are array-backed binary min-heaps
keyed by (weight, bucket value); the result heap is an array-backed
max-heap keyed by (distance, id).
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True, nogil=True)
def _queue_before(w1, k1, w2, k2):
    # (weight, bucket value) lexicographic
    return w1 < w2 or (w1 == w2 and k1 < k2)


@njit(cache=True, nogil=True)
def _queue_push(qw, qk, qr, qp, size, w, key, rightmost, prefix):
    i = size
    qw[i], qk[i], qr[i], qp[i] = w, key, rightmost, prefix
    while i > 0:
        parent = (i - 1) // 2
        if _queue_before(qw[i], qk[i], qw[parent], qk[parent]):
            qw[i], qw[parent] = qw[parent], qw[i]
            qk[i], qk[parent] = qk[parent], qk[i]
            qr[i], qr[parent] = qr[parent], qr[i]
            qp[i], qp[parent] = qp[parent], qp[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, nogil=True)
def _queue_pop(qw, qk, qr, qp, size):
    last = size - 1
    qw[0], qw[last] = qw[last], qw[0]
    qk[0], qk[last] = qk[last], qk[0]
    qr[0], qr[last] = qr[last], qr[0]
    qp[0], qp[last] = qp[last], qp[0]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= last:
            break
        child = left
        right = left + 1
        if right < last and _queue_before(qw[right], qk[right], qw[left], qk[left]):
            child = right
        if _queue_before(qw[child], qk[child], qw[i], qk[i]):
            qw[i], qw[child] = qw[child], qw[i]
            qk[i], qk[child] = qk[child], qk[i]
            qr[i], qr[child] = qr[child], qr[i]
            qp[i], qp[child] = qp[child], qp[i]
            i = child
        else:
            break
    return last


@njit(cache=True, nogil=True)
def _heap_worse(d1, i1, d2, i2):
    # (d1, i1) ranks strictly after (d2, i2)
    return d1 > d2 or (d1 == d2 and i1 > i2)


@njit(cache=True, nogil=True)
def _result_sift_down(hd, hi, size):
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and _heap_worse(hd[right], hi[right], hd[left], hi[left]):
            child = right
        if _heap_worse(hd[child], hi[child], hd[i], hi[i]):
            hd[i], hd[child] = hd[child], hd[i]
            hi[i], hi[child] = hi[child], hi[i]
            i = child
        else:
            break


@njit(cache=True, nogil=True)
def _result_push(hd, hi, size, d, idx):
    i = size
    hd[i], hi[i] = d, idx
    while i > 0:
        parent = (i - 1) // 2
        if _heap_worse(hd[i], hi[i], hd[parent], hi[parent]):
            hd[i], hd[parent] = hd[parent], hd[i]
            hi[i], hi[parent] = hi[parent], hi[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, nogil=True)
def merge_query(
    codes,        # (n, nbytes) uint8
    luts,         # (nbytes, 256) float64
    keys_flat,    # (total buckets,) uint64, sorted per table
    key_starts,   # (m+1,) int64
    bounds_flat,  # (total buckets + m,) int64
    bound_starts, # (m+1,) int64
    tids,         # (m, n) int64
    span_lens,    # (m,) int64
    h_keys,       # (m,) uint64
    base_ws,      # (m,) float64
    deltas,       # (m, max_span) float64, rank-ordered per table
    pos_bits,     # (m, max_span) uint64
    k,
    by_cost,
    out_d,        # (k,) float64
    out_ids,      # (k,) int64
):
    n, nbytes = codes.shape
    m = span_lens.shape[0]

    cap = 256
    qw = np.empty((m, cap), dtype=np.float64)
    qk = np.empty((m, cap), dtype=np.uint64)
    qr = np.empty((m, cap), dtype=np.int64)
    qp = np.empty((m, cap), dtype=np.float64)
    sizes = np.zeros(m, dtype=np.int64)
    for t in range(m):
        sizes[t] = _queue_push(
            qw[t], qk[t], qr[t], qp[t], 0, base_ws[t], h_keys[t], -1, base_ws[t]
        )

    seen = np.zeros(n, dtype=np.uint8)
    hsize = 0
    probes = 0
    cands = 0
    rounds = 0
    s_hat = 0.0

    popped_w = np.empty(m, dtype=np.float64)
    popped_key = np.empty(m, dtype=np.uint64)
    has_bucket = np.empty(m, dtype=np.uint8)
    advanced_w = np.empty(m, dtype=np.float64)
    deltas_f = np.empty(m, dtype=np.float64)
    order = np.empty(m, dtype=np.int64)

    done = False
    while not done:
        any_popped = False
        for t in range(m):
            if sizes[t] == 0:
                popped_w[t] = INF
                has_bucket[t] = 0
                advanced_w[t] = INF
                continue
            w = qw[t, 0]
            key = qk[t, 0]
            rightmost = qr[t, 0]
            prefix = qp[t, 0]
            sizes[t] = _queue_pop(qw[t], qk[t], qr[t], qp[t], sizes[t])
            nxt = rightmost + 1
            if nxt < span_lens[t]:
                if sizes[t] + 2 > cap:
                    new_cap = cap * 2
                    nqw = np.empty((m, new_cap), dtype=np.float64)
                    nqk = np.empty((m, new_cap), dtype=np.uint64)
                    nqr = np.empty((m, new_cap), dtype=np.int64)
                    nqp = np.empty((m, new_cap), dtype=np.float64)
                    nqw[:, :cap] = qw
                    nqk[:, :cap] = qk
                    nqr[:, :cap] = qr
                    nqp[:, :cap] = qp
                    qw, qk, qr, qp = nqw, nqk, nqr, nqp
                    cap = new_cap
                sizes[t] = _queue_push(
                    qw[t], qk[t], qr[t], qp[t], sizes[t],
                    w + deltas[t, nxt], key ^ pos_bits[t, nxt], nxt, w,
                )
                if rightmost >= 0:
                    sizes[t] = _queue_push(
                        qw[t], qk[t], qr[t], qp[t], sizes[t],
                        prefix + deltas[t, nxt],
                        key ^ pos_bits[t, rightmost] ^ pos_bits[t, nxt],
                        nxt, prefix,
                    )
            popped_w[t] = w
            popped_key[t] = key
            has_bucket[t] = 1
            advanced_w[t] = qw[t, 0] if sizes[t] > 0 else INF
            any_popped = True
        if not any_popped:
            s_hat = INF
            break
        rounds += 1
        for t in range(m):
            deltas_f[t] = advanced_w[t] - popped_w[t] if has_bucket[t] else 0.0
            order[t] = t
        if by_cost:
            for i in range(1, m):  # stable insertion sort by (delta, table)
                dv = deltas_f[order[i]]
                tv = order[i]
                j = i - 1
                while j >= 0 and deltas_f[order[j]] > dv:
                    order[j + 1] = order[j]
                    j -= 1
                order[j + 1] = tv
        s_hat = 0.0
        for t in range(m):
            s_hat += popped_w[t]
        for pos in range(m):
            t = order[pos]
            if has_bucket[t]:
                probes += 1
                lo = key_starts[t]
                hi = key_starts[t + 1]
                key = popped_key[t]
                i = lo + np.searchsorted(keys_flat[lo:hi], key)
                if i < hi and keys_flat[i] == key:
                    b0 = bounds_flat[bound_starts[t] + (i - lo)]
                    b1 = bounds_flat[bound_starts[t] + (i - lo) + 1]
                    for p in range(b0, b1):
                        idx = tids[t, p]
                        if seen[idx]:
                            continue
                        seen[idx] = 1
                        cands += 1
                        d = 0.0
                        for c in range(nbytes):
                            d += luts[c, codes[idx, c]]
                        if hsize < k:
                            hsize = _result_push(out_d, out_ids, hsize, d, idx)
                        elif d < out_d[0] or (d == out_d[0] and idx < out_ids[0]):
                            out_d[0] = d
                            out_ids[0] = idx
                            _result_sift_down(out_d, out_ids, hsize)
            s_hat += deltas_f[t]
            if hsize == k and out_d[0] < s_hat:
                done = True
                break
    return hsize, probes, cands, rounds, s_hat
