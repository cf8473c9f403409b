"""Reward environments, the policy interface and the simulation loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .exceptions import InvalidParameterError, MomentDoesNotExistError

__all__ = [
    "ArmSpec",
    "EnvironmentSpec",
    "Policy",
    "PolicyState",
    "TrajectoryResult",
    "PARETO_SHAPE_BASE",
    "central_moment_constant",
    "pareto_mean",
    "pareto_reward",
    "run_trajectory",
    "sample_reward",
    "sample_rewards",
    "true_mean",
]

PARETO = "symmetrized-pareto"
GAUSSIAN = "gaussian"
PARETO_SHAPE_BASE = 1.05


@dataclass(frozen=True)
class ArmSpec:
    """One arm's reward law.

    ``kind="symmetrized-pareto"``: ``mean + S * (X - 1)`` with S a fair random
    sign and X Pareto with scale 1 and shape ``1.05 + tail``.
    ``kind="gaussian"``: normal with standard deviation ``tail``.
    """

    kind: str
    mean: float
    tail: float

    def __post_init__(self):
        if self.kind not in (PARETO, GAUSSIAN):
            raise InvalidParameterError(f"unknown arm kind {self.kind!r}")
        if not math.isfinite(self.mean):
            raise InvalidParameterError("arm mean must be finite")
        if not self.tail > 0:
            raise InvalidParameterError(f"tail parameter must be positive, got {self.tail}")

    @classmethod
    def pareto(cls, mean: float, eps: float) -> ArmSpec:
        return cls(PARETO, float(mean), float(eps))

    @classmethod
    def gaussian(cls, mean: float, std: float) -> ArmSpec:
        return cls(GAUSSIAN, float(mean), float(std))

    @property
    def shape(self) -> float:
        """Pareto tail exponent (shape parameter alpha_p)."""
        if self.kind != PARETO:
            raise InvalidParameterError("shape is defined for symmetrized-pareto arms only")
        return PARETO_SHAPE_BASE + self.tail


@dataclass(frozen=True)
class EnvironmentSpec:
    arms: tuple[ArmSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 2:
            raise InvalidParameterError("an environment needs at least two arms")

    @classmethod
    def symmetrized_pareto(cls, means: Sequence[float], eps: float) -> EnvironmentSpec:
        return cls(tuple(ArmSpec.pareto(mu, eps) for mu in means))

    @classmethod
    def gaussian(cls, means: Sequence[float], std: float) -> EnvironmentSpec:
        return cls(tuple(ArmSpec.gaussian(mu, std) for mu in means))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([true_mean(arm) for arm in self.arms])

    @property
    def gaps(self) -> np.ndarray:
        mu = self.means
        return mu.max() - mu


def pareto_reward(mean: float, shape: float, u, sign):
    """Inverse-CDF map: ``mean + sign * (u ** (-1 / shape) - 1)`` for u in (0, 1]."""
    return mean + sign * (np.power(u, -1.0 / shape) - 1.0)


def sample_rewards(arm: ArmSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw `size` rewards; for Pareto arms all uniforms come before all signs."""
    if arm.kind == PARETO:
        u = 1.0 - rng.random(size)  # (0, 1]
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return pareto_reward(arm.mean, arm.shape, u, sign)
    return arm.mean + arm.tail * rng.standard_normal(size)


def sample_reward(arm: ArmSpec, rng: np.random.Generator) -> float:
    return float(sample_rewards(arm, rng, 1)[0])


def true_mean(arm: ArmSpec) -> float:
    # both families are symmetric about the shift
    return arm.mean


def pareto_mean(shape: float) -> float:
    """Mean of a scale-1 Pareto variable, finite for shape > 1."""
    if not shape > 1:
        raise MomentDoesNotExistError(f"Pareto mean needs shape > 1, got {shape}")
    return shape / (shape - 1.0)


def central_moment_constant(arm: ArmSpec, a: float) -> float:
    """E|reward - mean|**(1 + a) by adaptive quadrature.

    For the symmetrized Pareto arm the centered magnitude is X - 1; with
    X = exp(s) the integrand decays like exp(-(shape - 1 - a) s), and the
    range is split at one and ten decay lengths before the infinite tail.
    """
    if not 0 < a <= 1:
        raise InvalidParameterError(f"a must lie in (0, 1], got {a}")
    p = 1.0 + a
    if arm.kind == GAUSSIAN:
        sigma = arm.tail

        def gauss(y):
            return 2.0 * y**p * math.exp(-0.5 * (y / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

        pieces = [(0.0, sigma), (sigma, 10 * sigma), (10 * sigma, np.inf)]
        return sum(integrate.quad(gauss, lo, hi, epsabs=0, epsrel=1e-11, limit=200)[0]
                   for lo, hi in pieces)

    shape = arm.shape
    rate = shape - p
    if rate <= 0:
        raise MomentDoesNotExistError(
            f"E|X|^{p:g} diverges for Pareto shape {shape:g} (need 1 + a < shape)"
        )

    def pareto(s):
        if s <= 0:
            return 0.0
        return shape * math.exp(p * (s + math.log1p(-math.exp(-s))) - shape * s)

    cuts = [0.0, 1.0 / rate, 10.0 / rate, np.inf]
    return sum(integrate.quad(pareto, lo, hi, epsabs=0, epsrel=1e-11, limit=500)[0]
               for lo, hi in zip(cuts, cuts[1:]))


@dataclass
class PolicyState:
    """What a policy may see at round t: per-arm reward histories and counts.

    Histories are read-only views into one preallocated buffer.
    """

    t: int
    counts: np.ndarray
    _buffer: np.ndarray = field(repr=False)

    @property
    def n_arms(self) -> int:
        return self.counts.size

    def history(self, arm: int) -> np.ndarray:
        view = self._buffer[arm, : self.counts[arm]]
        view.flags.writeable = False
        return view

    @property
    def histories(self) -> list[np.ndarray]:
        return [self.history(i) for i in range(self.n_arms)]


class Policy:
    """Base class for bandit policies.

    Subclasses implement `select`; `reset` is called once per trajectory
    with the number of arms and the policy's own random stream.
    """

    name = "policy"

    def reset(self, n_arms: int, rng: np.random.Generator) -> None:
        self.n_arms = n_arms
        self.rng = rng

    def select(self, state: PolicyState) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class TrajectoryResult:
    arms: np.ndarray
    rewards: np.ndarray
    regret: np.ndarray

    @property
    def horizon(self) -> int:
        return self.arms.size


def run_trajectory(env: EnvironmentSpec, policy: Policy, horizon: int,
                   rng: np.random.Generator) -> TrajectoryResult:
    """Play `horizon` rounds; rounds 1..K pull each arm once in index order.

    The environment and the policy get disjoint child streams of `rng`.
    Arm i's s-th reward is the s-th draw of its own pre-sampled sequence, so
    the environment's randomness does not depend on the pull order.
    """
    K = env.n_arms
    horizon = int(horizon)
    if horizon < K:
        raise InvalidParameterError(f"horizon {horizon} is shorter than the {K} arms")
    env_rng, policy_rng = rng.spawn(2)
    reward_tape = np.stack([sample_rewards(arm, env_rng, horizon) for arm in env.arms])
    gaps = env.gaps

    buffer = np.empty((K, horizon))
    counts = np.zeros(K, dtype=np.int64)
    arms = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    regret = np.empty(horizon)
    policy.reset(K, policy_rng)
    visible = counts.view()
    visible.flags.writeable = False
    state = PolicyState(t=0, counts=visible, _buffer=buffer)
    for t in range(1, horizon + 1):
        if t <= K:
            arm = t - 1
        else:
            state.t = t
            arm = int(policy.select(state))
            if not 0 <= arm < K:
                raise InvalidParameterError(f"policy chose arm {arm} outside 0..{K - 1}")
        x = reward_tape[arm, counts[arm]]
        buffer[arm, counts[arm]] = x
        counts[arm] += 1
        arms[t - 1] = arm
        rewards[t - 1] = x
        regret[t - 1] = float(counts @ gaps)
    return TrajectoryResult(arms, rewards, regret)
