"""RMM-UCB and baseline index policies.

All index policies share one confidence schedule: at round t the level is
``p_t = 1 / ceil(1 + t * ln(t)**2)`` and median-of-means estimators use
``k_t = floor(min(17 * ln(t), sqrt(T_i(t - 1))))`` blocks.  Both raw formulas
degenerate in the first rounds, so m is clamped to at least 2 and k to at
least 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bandit import GAUSSIAN, EnvironmentSpec, Policy, PolicyState, central_moment_constant
from .estimators import as_dataset, empirical_mean, mom, partition_blocks, truncated_mean
from .exceptions import ConfigurationError, InvalidParameterError
from .rmm import ConfidenceSpec, build_context, rmm_ucb
from .streams import derive_stream

__all__ = [
    "BaselineParams",
    "FixedArmPolicy",
    "IndexPolicy",
    "MarsPolicy",
    "MomUcbPolicy",
    "POLICY_NAMES",
    "RmmUcbPolicy",
    "TruncatedUcbPolicy",
    "VanillaUcbPolicy",
    "baseline_params",
    "confidence_level",
    "make_policy",
    "mars_index",
    "mom_ucb_index",
    "rmm_ucb_index",
    "schedule_k",
    "schedule_m",
    "select_arm",
    "truncated_ucb_index",
    "vanilla_ucb_index",
]


def schedule_m(t: int) -> int:
    """Resample count m_t = ceil(1 + t ln^2 t), at least 2."""
    if t < 1:
        raise InvalidParameterError(f"round index must be >= 1, got {t}")
    return max(2, math.ceil(1.0 + t * math.log(t) ** 2))


def schedule_k(t: int, pulls: int) -> int:
    """Block count floor(min(17 ln t, sqrt(pulls))), at least 1."""
    if pulls < 1:
        raise InvalidParameterError(f"need at least one pull, got {pulls}")
    raw = min(math.floor(17.0 * math.log(t)), math.isqrt(pulls))
    return max(1, raw)


def confidence_level(t: int) -> float:
    """Per-round level p_t = 1 / m_t (r = 1)."""
    return 1.0 / schedule_m(t)


def rmm_ucb_index(history, t: int, rng: np.random.Generator, *, k: int | None = None,
                  m_max: int | None = None) -> float:
    """One-sided RMM upper bound of an arm at round t, with r = 1.

    `m_max` caps the resample count; any cap below ``schedule_m(t)`` changes
    the level away from p_t.
    """
    x = as_dataset(history)
    m = schedule_m(t)
    if m_max is not None:
        m = max(2, min(m, int(m_max)))
    if k is None:
        k = schedule_k(t, x.size)
    return rmm_ucb(build_context(x, ConfidenceSpec(1, m), k, rng))


def mars_index(history, t: int, rng: np.random.Generator, *, m_max: int | None = None) -> float:
    """RMM bound with a single block: the median of one resampled mean."""
    return rmm_ucb_index(history, t, rng, k=1, m_max=m_max)


def select_arm(indices: Sequence[float], rng: np.random.Generator) -> int:
    """Argmax; ties (including several +inf) are broken uniformly at random."""
    values = np.asarray(indices, dtype=np.float64)
    best = np.flatnonzero(values == values.max())
    if best.size == 1:
        return int(best[0])
    return int(best[rng.integers(best.size)])


@dataclass(frozen=True)
class BaselineParams:
    """Moment bound M on E|X - mu|^(1 + a) handed to the moment-based baselines."""

    M: float
    a: float

    def __post_init__(self):
        if not self.M > 0:
            raise InvalidParameterError(f"M must be positive, got {self.M}")
        if not 0 < self.a <= 1:
            raise InvalidParameterError(f"a must lie in (0, 1], got {self.a}")


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta}")


def vanilla_ucb_index(history, delta: float) -> float:
    _check_delta(delta)
    x = as_dataset(history)
    return empirical_mean(x) + math.sqrt(2.0 * math.log(1.0 / delta) / x.size)


def mom_ucb_index(history, k: int, params: BaselineParams) -> float:
    """MoM plus the width (12 M)^(1/(1+a)) * (1 / floor(n/k))^(a/(1+a))."""
    x = as_dataset(history)
    a = params.a
    ntilde = partition_blocks(x.size, k).min_size
    width = (12.0 * params.M) ** (1.0 / (1.0 + a)) * (1.0 / ntilde) ** (a / (1.0 + a))
    return mom(x, k) + width


def truncated_ucb_index(history, delta: float, params: BaselineParams) -> float:
    _check_delta(delta)
    x = as_dataset(history)
    a = params.a
    est = truncated_mean(x, params.M, a, delta)
    bonus = 4.0 * params.M ** (1.0 / (1.0 + a)) * (math.log(1.0 / delta) / x.size) ** (a / (1.0 + a))
    return est + bonus


class IndexPolicy(Policy):
    """Plays the argmax of a per-arm index computed from that arm's history."""

    def index(self, arm: int, history: np.ndarray, t: int) -> float:
        raise NotImplementedError

    def select(self, state: PolicyState) -> int:
        t = state.t
        indices = [self.index(i, state.history(i), t) for i in range(state.n_arms)]
        return select_arm(indices, self.rng)


class RmmUcbPolicy(IndexPolicy):
    """Parameter-free RMM-UCB: needs nothing but the observed rewards.

    Fresh signs and permutation are drawn every round for every arm, from a
    stream keyed by (policy key, round, arm); the key is drawn once per
    trajectory from the policy stream.
    """

    name = "rmm-ucb"
    single_block = False

    def __init__(self, m_max: int | None = None):
        self.m_max = m_max

    def reset(self, n_arms, rng):
        super().reset(n_arms, rng)
        self._key = int(rng.integers(2**63))

    def index(self, arm, history, t):
        stream = derive_stream(self._key, (t, arm))
        k = 1 if self.single_block else None
        return rmm_ucb_index(history, t, stream, k=k, m_max=self.m_max)


class MarsPolicy(RmmUcbPolicy):
    name = "mars"
    single_block = True


class VanillaUcbPolicy(IndexPolicy):
    name = "vanilla-ucb"

    def index(self, arm, history, t):
        return vanilla_ucb_index(history, confidence_level(t))


class _MomentPolicy(IndexPolicy):
    """Baseline fed the true per-arm moment constants."""

    def __init__(self, params: Sequence[BaselineParams]):
        self.params = list(params)

    def reset(self, n_arms, rng):
        if len(self.params) != n_arms:
            raise ConfigurationError(f"{len(self.params)} parameter sets for {n_arms} arms")
        super().reset(n_arms, rng)


class MomUcbPolicy(_MomentPolicy):
    name = "mom-ucb"

    def index(self, arm, history, t):
        return mom_ucb_index(history, schedule_k(t, history.size), self.params[arm])


class TruncatedUcbPolicy(_MomentPolicy):
    name = "trunc-ucb"

    def index(self, arm, history, t):
        return truncated_ucb_index(history, confidence_level(t), self.params[arm])


class FixedArmPolicy(Policy):
    """Reference policy that always plays one arm after initialisation."""

    name = "fixed"

    def __init__(self, arm: int):
        self.arm = int(arm)

    def select(self, state):
        return self.arm


def baseline_params(env: EnvironmentSpec) -> list[BaselineParams]:
    """Oracle moment parameters per arm.

    Pareto arms use a = min(tail, 1), which keeps 1 + a below the shape
    1.05 + tail; Gaussian arms use a = 1 (M is then the variance).
    """
    out = []
    for arm in env.arms:
        a = 1.0 if arm.kind == GAUSSIAN else min(arm.tail, 1.0)
        out.append(BaselineParams(central_moment_constant(arm, a), a))
    return out


def _best_arm(env: EnvironmentSpec, m_max) -> Policy:
    policy = FixedArmPolicy(int(np.argmax(env.means)))
    policy.name = "best-arm"
    return policy


_FACTORIES: dict[str, Callable[[EnvironmentSpec, int | None], Policy]] = {
    "rmm-ucb": lambda env, m_max: RmmUcbPolicy(m_max),
    "mars": lambda env, m_max: MarsPolicy(m_max),
    "vanilla-ucb": lambda env, m_max: VanillaUcbPolicy(),
    "mom-ucb": lambda env, m_max: MomUcbPolicy(baseline_params(env)),
    "trunc-ucb": lambda env, m_max: TruncatedUcbPolicy(baseline_params(env)),
    # oracle reference: reads the environment's means
    "best-arm": _best_arm,
}

POLICY_NAMES = tuple(_FACTORIES)


def make_policy(name: str, env: EnvironmentSpec, m_max: int | None = None) -> Policy:
    try:
        factory = _FACTORIES[name]
    except KeyError:
        valid = ", ".join(POLICY_NAMES)
        raise ConfigurationError(f"unknown policy {name!r}; valid names: {valid}") from None
    return factory(env, m_max)
