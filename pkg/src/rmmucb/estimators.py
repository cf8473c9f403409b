"""Point estimators and block machinery.

Every estimator here works on a 1-D float64 array (a "dataset"): the order of
the entries matters because median-of-means blocks are contiguous index
ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError

__all__ = [
    "BlockPartition",
    "as_dataset",
    "block_means",
    "empirical_mean",
    "lower_median",
    "median_index",
    "mom",
    "partition_blocks",
    "truncated_mean",
]


def as_dataset(values, *, allow_empty=False) -> np.ndarray:
    """Return `values` as a 1-D float64 array, rejecting NaN and infinities."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        x = x.reshape(-1)
    if not allow_empty and x.size == 0:
        raise InvalidParameterError("dataset must be nonempty")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("dataset values must be finite")
    return x


def median_index(n: int) -> int:
    """0-based position of the lower median in a sorted array of length `n`."""
    return (n - 1) // 2


def lower_median(values) -> float:
    """Lower empirical median: X_(n/2) for even n, X_(floor(n/2)+1) for odd n.

    >>> lower_median([1, 2, 3, 4])
    2.0
    """
    x = as_dataset(values)
    i = median_index(x.size)
    return float(np.partition(x, i)[i])


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous split of ``range(n)`` into `k` blocks.

    The first ``n % k`` blocks hold one extra element, so every block has at
    least ``n // k`` members.
    """

    n: int
    k: int
    starts: np.ndarray
    sizes: np.ndarray

    @property
    def bounds(self) -> list[range]:
        return [range(int(s), int(s + z)) for s, z in zip(self.starts, self.sizes)]

    @property
    def min_size(self) -> int:
        return self.n // self.k


def partition_blocks(n: int, k: int) -> BlockPartition:
    n, k = int(n), int(k)
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    if not 1 <= k <= n:
        raise InvalidParameterError(f"block count k must satisfy 1 <= k <= n={n}, got {k}")
    q, extra = divmod(n, k)
    sizes = np.full(k, q, dtype=np.int64)
    sizes[:extra] += 1
    starts = np.zeros(k, dtype=np.int64)
    np.cumsum(sizes[:-1], out=starts[1:])
    starts.flags.writeable = False
    sizes.flags.writeable = False
    return BlockPartition(n=n, k=k, starts=starts, sizes=sizes)


def block_means(samples: np.ndarray, partition: BlockPartition) -> np.ndarray:
    """Block averages along the last axis of `samples` (any leading shape)."""
    sums = np.add.reduceat(samples, partition.starts, axis=-1)
    return sums / partition.sizes


def _mom_lastaxis(samples: np.ndarray, partition: BlockPartition) -> np.ndarray:
    means = block_means(samples, partition)
    i = median_index(partition.k)
    return np.partition(means, i, axis=-1)[..., i]


def mom(data, k: int) -> float:
    """Median-of-means with `k` contiguous blocks and the lower-median rule."""
    x = as_dataset(data)
    part = partition_blocks(x.size, k)
    return float(_mom_lastaxis(x, part))


def empirical_mean(data) -> float:
    # Same reduction as a single-block MoM, so mom(x, 1) == empirical_mean(x) bitwise.
    x = as_dataset(data)
    return float(np.add.reduceat(x, [0])[0] / x.size)


def truncated_mean(data, M: float, a: float, delta: float) -> float:
    """Truncated empirical mean.

    The t-th observation (1-based) is replaced by zero when its magnitude
    exceeds ``(M * t / log(1 / delta)) ** (1 / (1 + a))``.

    Parameters
    ----------
    data : array_like
        Observations in arrival order.
    M : float
        Bound on the (1 + a)-th absolute moment, positive.
    a : float
        Moment order offset in (0, 1].
    delta : float
        Confidence parameter in (0, 1).
    """
    x = as_dataset(data)
    if not M > 0:
        raise InvalidParameterError(f"M must be positive, got {M}")
    if not 0 < a <= 1:
        raise InvalidParameterError(f"a must lie in (0, 1], got {a}")
    if not 0 < delta < 1:
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta}")
    t = np.arange(1, x.size + 1, dtype=np.float64)
    level = (M * t / math.log(1.0 / delta)) ** (1.0 / (1.0 + a))
    kept = np.where(np.abs(x) <= level, x, 0.0)
    return float(np.add.reduceat(kept, [0])[0] / x.size)
