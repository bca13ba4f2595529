"""Compiled scan, bucket and sort loops behind the engine's selection paths.

Both selection methods run through the same compiler so that wall-clock
comparisons between them are not skewed by one side being interpreted.
Every kernel reports the work it performed; the Python wrappers in
``engine`` copy those numbers into a CounterSet.
"""

import numpy as np
from numba import njit

_STACK_DEPTH = 256


@njit(cache=True, inline="always")
def _less(v, p, i, vj, pj):
    # (value, pk) lexicographic order; pk is unique so keys never tie
    return v[i] < vj or (v[i] == vj and p[i] < pj)


@njit(cache=True)
def _counted_quicksort(v, p, lo, hi):
    """Sort v[lo:hi+1] (carrying p) by (value, pk); return comparisons made.

    Hoare partition around the middle element, iterative, always descending
    into the smaller side first so the stack stays logarithmic.
    """
    comparisons = 0
    stack = np.empty(_STACK_DEPTH, dtype=np.int64)
    top = 0
    stack[0] = lo
    stack[1] = hi
    top = 2
    while top > 0:
        top -= 2
        lo = stack[top]
        hi = stack[top + 1]
        while lo < hi:
            mid = lo + (hi - lo) // 2
            pv = v[mid]
            pp = p[mid]
            i = lo - 1
            j = hi + 1
            while True:
                i += 1
                comparisons += 1
                while _less(v, p, i, pv, pp):
                    i += 1
                    comparisons += 1
                j -= 1
                comparisons += 1
                while pv < v[j] or (pv == v[j] and pp < p[j]):
                    j -= 1
                    comparisons += 1
                if i >= j:
                    break
                v[i], v[j] = v[j], v[i]
                p[i], p[j] = p[j], p[i]
            # [lo, j] and [j + 1, hi]
            if j - lo < hi - (j + 1):
                stack[top] = j + 1
                stack[top + 1] = hi
                top += 2
                hi = j
            else:
                stack[top] = lo
                stack[top + 1] = j
                top += 2
                lo = j + 1
    return comparisons


@njit(cache=True)
def absolute_select(codes, values, pks, mask, n_classes):
    """Scan, hash survivors into per-class buckets, sort each bucket, take the top.

    Returns (present, best_value, best_pk, rows_scanned, hash_probes,
    comparisons, bucketed_rows).
    """
    n = codes.shape[0]
    sizes = np.zeros(n_classes, dtype=np.int64)
    survivors = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        c = codes[i]
        if mask[c]:
            sizes[c] += 1
            survivors[m] = i
            m += 1
    hash_probes = m

    offsets = np.zeros(n_classes + 1, dtype=np.int64)
    for c in range(n_classes):
        offsets[c + 1] = offsets[c] + sizes[c]
    fill = offsets[:-1].copy()
    bucket_v = np.empty(m, dtype=np.int64)
    bucket_p = np.empty(m, dtype=np.uint64)
    for k in range(m):
        i = survivors[k]
        c = codes[i]
        slot = fill[c]
        bucket_v[slot] = values[i]
        bucket_p[slot] = pks[i]
        fill[c] = slot + 1

    present = sizes > 0
    best_v = np.zeros(n_classes, dtype=np.int64)
    best_p = np.zeros(n_classes, dtype=np.uint64)
    comparisons = 0
    for c in range(n_classes):
        if sizes[c] == 0:
            continue
        lo = offsets[c]
        hi = offsets[c + 1] - 1
        comparisons += _counted_quicksort(bucket_v, bucket_p, lo, hi)
        best_v[c] = bucket_v[hi]
        best_p[c] = bucket_p[hi]
    return present, best_v, best_p, n, hash_probes, comparisons, m


@njit(cache=True)
def delta_select(codes, values, mask, n_classes):
    """Single scan adding each surviving delta into its class accumulator.

    Returns (present, sums, rows_scanned, additions).
    """
    n = codes.shape[0]
    sums = np.zeros(n_classes, dtype=np.int64)
    present = np.zeros(n_classes, dtype=np.bool_)
    additions = 0
    for i in range(n):
        c = codes[i]
        if mask[c]:
            sums[c] += values[i]
            present[c] = True
            additions += 1
    return present, sums, n, additions


@njit(cache=True)
def class_sum(codes, values, code):
    """Full scan summing one class's stored values. Returns (sum, matches)."""
    total = 0
    matches = 0
    for i in range(codes.shape[0]):
        if codes[i] == code:
            total += values[i]
            matches += 1
    return total, matches


@njit(cache=True)
def per_class_deltas(codes, values, n_classes):
    """Consecutive per-class differences in row order; first row kept verbatim.

    Returns (deltas, last_value, seen).
    """
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int64)
    last = np.zeros(n_classes, dtype=np.int64)
    seen = np.zeros(n_classes, dtype=np.bool_)
    for i in range(n):
        c = codes[i]
        if seen[c]:
            out[i] = values[i] - last[c]
        else:
            out[i] = values[i]
            seen[c] = True
        last[c] = values[i]
    return out, last, seen


@njit(cache=True)
def per_class_prefix_sums(codes, values, n_classes):
    """Running per-class sums in row order.

    Returns (absolutes, first_negative_index) with -1 when every prefix is >= 0.
    """
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int64)
    acc = np.zeros(n_classes, dtype=np.int64)
    bad = -1
    for i in range(n):
        c = codes[i]
        acc[c] += values[i]
        out[i] = acc[c]
        if bad < 0 and acc[c] < 0:
            bad = i
    return out, bad
