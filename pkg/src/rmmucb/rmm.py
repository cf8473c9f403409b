"""One-sided resampled median-of-means (RMM) test and upper confidence bound.

The test compares the median-of-means of the observed sample with those of
``m - 1`` sign-flipped alternative samples reflected about a candidate
center ``theta``.  Under symmetry about the true mean the rank of the
observed reference statistic is uniform on ``{1, ..., m}``, which gives an
exact one-sided test of level ``r / m``.  Reusing the same signs for every
``theta`` turns the acceptance region into a half-line whose right end has a
closed form (``rmm_ucb``); ``rmm_ucb_oracle`` recovers it by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .estimators import (
    BlockPartition,
    _mom_lastaxis,
    as_dataset,
    median_index,
    partition_blocks,
)
from .exceptions import InvalidParameterError

__all__ = [
    "ConfidenceSpec",
    "RmmContext",
    "alternative_sample",
    "batch_rank",
    "build_context",
    "column_bounds",
    "default_oracle_bounds",
    "draw_sign_bits",
    "rank",
    "rank_grid",
    "reference_stat",
    "rmm_test",
    "rmm_ucb",
    "rmm_ucb_oracle",
    "unpack_signs",
]


@dataclass(frozen=True)
class ConfidenceSpec:
    """Significance level ``p = r / m`` as a pair of integers."""

    r: int
    m: int

    def __post_init__(self):
        if not (isinstance(self.r, (int, np.integer)) and isinstance(self.m, (int, np.integer))):
            raise InvalidParameterError("r and m must be integers")
        if not 1 <= self.r <= self.m:
            raise InvalidParameterError(f"need 1 <= r <= m, got r={self.r}, m={self.m}")
        if self.m < 2:
            raise InvalidParameterError(f"need m >= 2 alternative ranks, got m={self.m}")

    @property
    def level(self) -> float:
        return self.r / self.m


def draw_sign_bits(rng: np.random.Generator, n: int, columns: int) -> np.ndarray:
    """Draw `columns` independent Rademacher vectors of length `n`, packed.

    Column j's signs live in column j of the result, eight per byte in
    little-endian bit order; a set bit is a sign of -1.  Bytes are drawn
    byte-row by byte-row (row b holds data indices 8b..8b+7 of every
    column), which lets the bound kernel stream across columns.  Padding
    bits past `n` are cleared so equal sign matrices have equal packings.
    """
    nbytes = (n + 7) // 8
    raw = rng.bytes(columns * nbytes)
    bits = np.frombuffer(raw, dtype=np.uint8).reshape(nbytes, columns).copy()
    tail = n - 8 * (nbytes - 1)
    if tail < 8:
        bits[-1] &= np.uint8((1 << tail) - 1)
    return bits


def unpack_signs(sign_bits: np.ndarray, n: int) -> np.ndarray:
    """(nbytes, columns) packed bits -> (n, columns) matrix of +-1 (int8)."""
    flips = np.unpackbits(sign_bits, axis=0, count=n, bitorder="little")
    return 1 - 2 * flips.astype(np.int8)


@dataclass(frozen=True, eq=False)
class RmmContext:
    """Everything the RMM test and bound consume, fixed once drawn.

    Attributes
    ----------
    data : ndarray, shape (n,)
        The observed sample, in arrival order.
    sign_bits : ndarray of uint8, shape (ceil(n / 8), m - 1)
        Packed Rademacher signs, see `draw_sign_bits`.
    pi : ndarray of int, shape (m,)
        Tie-breaking permutation of ``0..m-1``; ``pi[0]`` belongs to the
        observed sample.
    conf : ConfidenceSpec
    k : int
        Number of median-of-means blocks.
    """

    data: np.ndarray
    sign_bits: np.ndarray
    pi: np.ndarray
    conf: ConfidenceSpec
    k: int

    def __post_init__(self):
        n = self.data.size
        if not 1 <= self.k <= n:
            raise InvalidParameterError(f"need 1 <= k <= n={n}, got k={self.k}")
        if self.sign_bits.shape != ((n + 7) // 8, self.conf.m - 1):
            raise InvalidParameterError("packed signs do not match (n, m - 1)")
        if self.pi.shape != (self.conf.m,) or not np.array_equal(
                np.sort(self.pi), np.arange(self.conf.m)):
            raise InvalidParameterError("pi must be a permutation of 0..m-1")
        for arr in (self.data, self.sign_bits, self.pi):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.data.size

    @property
    def m(self) -> int:
        return self.conf.m

    @property
    def r(self) -> int:
        return self.conf.r

    @property
    def partition(self) -> BlockPartition:
        return partition_blocks(self.n, self.k)

    @property
    def signs(self) -> np.ndarray:
        """The n x (m - 1) sign matrix; column j - 1 holds alpha_{., j}."""
        return unpack_signs(self.sign_bits, self.n)

    @classmethod
    def from_signs(cls, data, signs, pi, conf: ConfidenceSpec, k: int) -> RmmContext:
        """Build a context from an explicit n x (m - 1) matrix of +-1."""
        x = as_dataset(data)
        s = np.asarray(signs)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape != (x.size, conf.m - 1) or not np.all(np.abs(s) == 1):
            raise InvalidParameterError("signs must be an n x (m - 1) matrix of +-1")
        bits = np.packbits((s < 0).astype(np.uint8), axis=0, bitorder="little")
        return cls(x.copy(), bits, np.asarray(pi, dtype=np.int64).copy(), conf, int(k))


def build_context(data, conf: ConfidenceSpec, k: int, rng: np.random.Generator) -> RmmContext:
    """Draw signs (first) and the tie-breaking permutation (second) from `rng`."""
    x = as_dataset(data).copy()
    bits = draw_sign_bits(rng, x.size, conf.m - 1)
    pi = rng.permutation(conf.m).astype(np.int64)
    return RmmContext(x, bits, pi, conf, int(k))


def alternative_sample(data, sign_column, theta: float) -> np.ndarray:
    """Reflect ``data`` about ``theta`` where the sign is -1.

    Entry i is ``alpha_i * (x_i - theta) + theta``; a +1 sign returns x_i
    itself, bit for bit.
    """
    x = as_dataset(data)
    s = np.asarray(sign_column)
    if s.shape != x.shape:
        raise InvalidParameterError(f"sign column has shape {s.shape}, data has {x.shape}")
    return np.where(s > 0, x, 2.0 * theta - x)


def reference_stat(data_j, theta: float, k: int) -> float:
    x = as_dataset(data_j)
    return float(_mom_lastaxis(x, partition_blocks(x.size, k)) - theta)


def _reference_stats(ctx: RmmContext, thetas: np.ndarray) -> np.ndarray:
    """S_j(theta) for j = 0..m-1 and every theta: shape (len(thetas), m)."""
    signs = np.concatenate([np.ones((ctx.n, 1), dtype=np.int8), ctx.signs], axis=1)
    th = thetas[:, None, None]
    samples = np.where(signs.T[None, :, :] > 0, ctx.data[None, None, :], 2.0 * th - ctx.data)
    return _mom_lastaxis(samples, ctx.partition) - thetas[:, None]


def _ranks_from_stats(stats: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """1 + #{j >= 1 : S_0 precedes S_j}, leading axes broadcast with pi."""
    s0 = stats[..., :1]
    rest = stats[..., 1:]
    ahead = (s0 < rest) | ((s0 == rest) & (pi[..., :1] < pi[..., 1:]))
    return 1 + ahead.sum(axis=-1)


def rank_grid(ctx: RmmContext, thetas) -> np.ndarray:
    """Rank of the observed sample at each candidate center in `thetas`."""
    th = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    return _ranks_from_stats(_reference_stats(ctx, th), ctx.pi)


def rank(ctx: RmmContext, theta: float) -> int:
    return int(rank_grid(ctx, [theta])[0])


def rmm_test(ctx: RmmContext, theta: float) -> bool:
    """True when H0: mu <= theta is rejected, i.e. rank > m - r."""
    return rank(ctx, theta) > ctx.m - ctx.r


def _kernel_args(ctx: RmmContext) -> tuple:
    part = ctx.partition
    sums = np.add.reduceat(ctx.data, part.starts)
    means = sums / part.sizes
    i = median_index(part.k)
    center = float(np.partition(means, i)[i])
    return ctx.data, part.starts, part.sizes, sums, center, ctx.sign_bits, ctx.pi


def column_bounds(ctx: RmmContext) -> np.ndarray:
    """Right end U_j of ``{theta : S_j(theta) precedes S_0(theta)}`` for each column."""
    return _kernels.column_bounds(*_kernel_args(ctx))


def rmm_ucb(ctx: RmmContext) -> float:
    """Closed-form ``sup {theta : rank(theta) <= m - r}``; may be +-inf.

    This is the (m - r)-th smallest per-column bound, i.e. the r-th largest.
    Equal values are interchangeable, so the order among ties (by ``pi``)
    never changes the returned number.
    """
    if ctx.r >= ctx.m:
        raise InvalidParameterError("an upper bound needs r < m")
    return float(_kernels.upper_order_stat(*_kernel_args(ctx), ctx.r))


def default_oracle_bounds(data) -> tuple[float, float]:
    x = as_dataset(data)
    lo, hi = float(x.min()), float(x.max())
    spread = hi - lo if hi > lo else max(1.0, abs(hi))
    return lo - 10.0 * spread, hi + 10.0 * spread


def rmm_ucb_oracle(ctx: RmmContext, lo=None, hi=None, steps: int = 100_000,
                   chunk: int = 4096) -> float:
    """Brute-force upper bound: largest accepted point of a uniform grid.

    Returns -inf if no grid point is accepted and +inf if the top point is
    (the region may then extend past `hi`).
    """
    if lo is None or hi is None:
        dlo, dhi = default_oracle_bounds(ctx.data)
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
    if not lo < hi or steps < 2:
        raise InvalidParameterError("need lo < hi and steps >= 2")
    grid = np.linspace(lo, hi, steps)
    threshold = ctx.m - ctx.r
    best = -np.inf
    for start in range(0, steps, chunk):
        part = grid[start:start + chunk]
        ok = rank_grid(ctx, part) <= threshold
        if ok.any():
            best = part[np.flatnonzero(ok)[-1]]
    if best == grid[-1]:
        return float(np.inf)
    return float(best)


def batch_rank(data: np.ndarray, signs: np.ndarray, pi: np.ndarray, theta: float,
               k: int) -> np.ndarray:
    """Vectorised rank for many independent contexts at one center.

    Parameters
    ----------
    data : (T, n) array
    signs : (T, m - 1, n) array of +-1
    pi : (T, m) array, each row a permutation
    """
    part = partition_blocks(data.shape[-1], k)
    alt = np.where(signs > 0, data[:, None, :], 2.0 * theta - data[:, None, :])
    samples = np.concatenate([data[:, None, :], alt], axis=1)
    stats = _mom_lastaxis(samples, part) - theta
    return _ranks_from_stats(stats, pi)

