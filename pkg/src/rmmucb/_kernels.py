"""Compiled inner loop for the closed-form RMM upper confidence bound.

Signs are stored packed, eight per byte in little-endian bit order, with a
set bit meaning a sign of -1; row b of the packed matrix holds data indices
8b..8b+7 of every column.  For each block the bytes overlapping it are cut
into "pieces" (at most eight consecutive indices inside one byte and one
block).  Two 256-entry tables per piece map a byte value to the sum of the
piece's data points whose sign is -1 and to the number of such points, so
the signed block sums of one resampled column cost one lookup per piece
instead of one operation per data point.  Columns are processed in chunks,
piece by piece, so each table stays in cache while a chunk streams past.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# |numerator| below this fraction of (1 + |mom|) counts as an exact 0/0.
ZERO_NUMERATOR_RTOL = 1e-12


@njit(cache=True)
def _pieces(starts, sizes):
    k = starts.size
    count = 0
    for ell in range(k):
        s = starts[ell]
        e = s + sizes[ell]
        count += (e - 1) // 8 - s // 8 + 1
    piece_byte = np.empty(count, dtype=np.int64)
    piece_lo = np.empty(count, dtype=np.int64)
    piece_hi = np.empty(count, dtype=np.int64)
    block_first = np.empty(k + 1, dtype=np.int64)
    c = 0
    for ell in range(k):
        s = starts[ell]
        e = s + sizes[ell]
        block_first[ell] = c
        b = s // 8
        while 8 * b < e:
            piece_byte[c] = b
            piece_lo[c] = max(s, 8 * b)
            piece_hi[c] = min(e, 8 * b + 8)
            c += 1
            b += 1
    block_first[k] = c
    return piece_byte, piece_lo, piece_hi, block_first


@njit(cache=True)
def _tables(x, piece_byte, piece_lo, piece_hi):
    """Per-piece subset sums of x and subset sizes, indexed by byte value."""
    count = piece_byte.size
    sums = np.zeros((count, 256))
    flips = np.zeros((count, 256), dtype=np.int32)
    for c in range(count):
        base = 8 * piece_byte[c]
        mask = 0
        for i in range(piece_lo[c], piece_hi[c]):
            mask |= 1 << (i - base)
        for code in range(1, 256):
            low = code & (-code)
            bit = 0
            while (1 << bit) != low:
                bit += 1
            if mask & low:
                sums[c, code] = sums[c, code ^ low] + x[base + bit]
                flips[c, code] = flips[c, code ^ low] + 1
            else:
                sums[c, code] = sums[c, code ^ low]
                flips[c, code] = flips[c, code ^ low]
    return sums, flips


@njit(cache=True)
def _select(a, kth):
    """Partially reorder `a` in place so a[kth] is its (kth+1)-th smallest."""
    lo = 0
    hi = a.size - 1
    while lo < hi:
        pivot = a[(lo + hi) // 2]
        i = lo
        j = hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                tmp = a[i]
                a[i] = a[j]
                a[j] = tmp
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            break
    return a[kth]


@njit(cache=True)
def _chunk_crossings(j0, width, sizes, block_sums, center, sign_bits, pi,
                     piece_byte, block_first, sums, flips, neg, nflip, cross):
    """Fill cross[:width, l] with the crossing points of columns j0..j0+width-1.

    For column j and block l the alternative block line meets the line of
    the original reference statistic at

        (center - mean_l(alpha_j * x)) / (1 - mean_l(alpha_j)).

    A vanishing denominator (all signs +1 in the block) gives +-inf by the
    sign of the numerator; if the numerator vanishes too the lines coincide
    and the tie-breaking permutation decides: +inf when pi[j] < pi[0].
    """
    k = sizes.size
    tol = ZERO_NUMERATOR_RTOL * (1.0 + abs(center))
    for ell in range(k):
        neg[:width] = 0.0
        nflip[:width] = 0
        for c in range(block_first[ell], block_first[ell + 1]):
            row = sign_bits[piece_byte[c]]
            for jj in range(width):
                code = row[j0 + jj]
                neg[jj] += sums[c, code]
                nflip[jj] += flips[c, code]
        # crossing = (center * size - signed block sum) / (2 * flips)
        scaled = center * sizes[ell] - block_sums[ell]
        num = center - block_sums[ell] / sizes[ell]
        for jj in range(width):
            if nflip[jj] > 0:
                cross[jj, ell] = (scaled + 2.0 * neg[jj]) / (2.0 * nflip[jj])
            elif abs(num) <= tol:
                cross[jj, ell] = np.inf if pi[j0 + jj + 1] < pi[0] else -np.inf
            elif num > 0:
                cross[jj, ell] = np.inf
            else:
                cross[jj, ell] = -np.inf


CHUNK = 2048


@njit(cache=True)
def column_bounds(x, starts, sizes, block_sums, center, sign_bits, pi):
    """Per-column upper bounds U_j, j = 1..m-1, of the one-sided RMM region.

    U_j is the (floor(k/2) + 1)-th smallest crossing point over the blocks,
    which is where the lower median of the block lines drops below the
    original statistic.
    """
    k = starts.size
    piece_byte, piece_lo, piece_hi, block_first = _pieces(starts, sizes)
    sums, flips = _tables(x, piece_byte, piece_lo, piece_hi)
    ncols = sign_bits.shape[1]
    out = np.empty(ncols)
    neg = np.empty(CHUNK)
    nflip = np.empty(CHUNK, dtype=np.int32)
    cross = np.empty((CHUNK, k))
    pick = k // 2
    for j0 in range(0, ncols, CHUNK):
        width = min(CHUNK, ncols - j0)
        _chunk_crossings(j0, width, sizes, block_sums, center, sign_bits, pi,
                         piece_byte, block_first, sums, flips, neg, nflip, cross)
        for jj in range(width):
            out[j0 + jj] = _select(cross[jj], pick)
    return out


@njit(cache=True)
def upper_order_stat(x, starts, sizes, block_sums, center, sign_bits, pi, r):
    """The r-th largest of the column bounds returned by `column_bounds`.

    Keeps the r largest bounds seen so far.  Once r are held, a column whose
    crossings already include floor(k/2) + 1 values at or below the current
    r-th largest cannot raise it and skips the selection step.
    """
    k = starts.size
    piece_byte, piece_lo, piece_hi, block_first = _pieces(starts, sizes)
    sums, flips = _tables(x, piece_byte, piece_lo, piece_hi)
    ncols = sign_bits.shape[1]
    neg = np.empty(CHUNK)
    nflip = np.empty(CHUNK, dtype=np.int32)
    cross = np.empty((CHUNK, k))
    pick = k // 2
    top = np.empty(r)  # ascending; top[0] is the current r-th largest
    held = 0
    for j0 in range(0, ncols, CHUNK):
        width = min(CHUNK, ncols - j0)
        _chunk_crossings(j0, width, sizes, block_sums, center, sign_bits, pi,
                         piece_byte, block_first, sums, flips, neg, nflip, cross)
        for jj in range(width):
            row = cross[jj]
            if held == r:
                bar = top[0]
                below = 0
                for ell in range(k):
                    if row[ell] <= bar:
                        below += 1
                if below > pick:
                    continue
            value = _select(row, pick)
            if held < r:
                i = held
                held += 1
            elif value > top[0]:
                i = 0
            else:
                continue
            # insertion step keeping top ascending
            while i > 0 and top[i - 1] > value:
                top[i] = top[i - 1]
                i -= 1
            while i + 1 < held and top[i + 1] < value:
                top[i] = top[i + 1]
                i += 1
            top[i] = value
    return top[0]
