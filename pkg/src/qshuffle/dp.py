"""kappa-ary randomized response, its privacy parameters and the de-biased sum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qshuffle.errors import ConfigError, DomainError


def gamma_from_epsilon(kappa: int, epsilon: float) -> float:
    """gamma = kappa / (kappa - 1 + e^epsilon); epsilon = inf gives 0."""
    if kappa < 2:
        raise DomainError(f"kappa must be >= 2, got {kappa}")
    if epsilon < 0 or math.isnan(epsilon):
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    if math.isinf(epsilon):
        return 0.0
    return min(1.0, kappa / (kappa - 1 + math.exp(epsilon)))


def epsilon_from_gamma(kappa: int, gamma: float) -> float:
    """Inverse of gamma_from_epsilon on (0, 1]; gamma = 0 means no privacy (inf)."""
    if kappa < 2:
        raise DomainError(f"kappa must be >= 2, got {kappa}")
    if not 0 <= gamma <= 1:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 0:
        return math.inf
    return math.log(kappa / gamma - kappa + 1)


@dataclass(frozen=True)
class RandomizerConfig:
    kappa: int
    gamma: float
    epsilon: float | None = None

    def __post_init__(self):
        if isinstance(self.kappa, bool) or not isinstance(self.kappa, (int, np.integer)) or self.kappa < 2:
            raise ConfigError(f"kappa must be an integer >= 2, got {self.kappa!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.epsilon is not None:
            if self.epsilon < 0:
                raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
            expected = gamma_from_epsilon(self.kappa, self.epsilon)
            if not math.isclose(self.gamma, expected, rel_tol=1e-12, abs_tol=1e-15):
                raise ConfigError(f"gamma {self.gamma} is inconsistent with epsilon {self.epsilon}")

    @classmethod
    def from_epsilon(cls, kappa: int, epsilon: float) -> RandomizerConfig:
        return cls(kappa, gamma_from_epsilon(kappa, epsilon), epsilon)

    @property
    def keep_probability(self) -> float:
        """Pr[y = x] = 1 - (kappa - 1) gamma / kappa."""
        return 1.0 - (self.kappa - 1) * self.gamma / self.kappa


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0
    invocations: int = 1

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if not 0 <= self.delta <= 1:
            raise ConfigError("delta must lie in [0, 1]")
        if self.invocations < 1:
            raise ConfigError("invocations must be a positive integer")


def compose(budget: PrivacyBudget) -> tuple[float, float]:
    """Basic composition: t runs of an (eps, delta) mechanism are (t*eps, t*delta)-DP."""
    t = budget.invocations
    return t * budget.epsilon, t * budget.delta


def _check_input(x: int, kappa: int) -> None:
    if not 0 <= x < kappa:
        raise DomainError(f"input {x} outside [0, {kappa})")


def randomize(x: int, config: RandomizerConfig, rng: np.random.Generator) -> int:
    """One draw of the randomizer. The Bernoulli(gamma) coin is drawn first, then the uniform."""
    _check_input(x, config.kappa)
    if rng.random() < config.gamma:
        return int(rng.integers(config.kappa))
    return int(x)


def randomize_batch(x, config: RandomizerConfig, rng: np.random.Generator) -> np.ndarray:
    """Vectorised randomize over an array of inputs (same draw order, per array)."""
    x = np.asarray(x, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= config.kappa):
        raise DomainError(f"inputs must lie in [0, {config.kappa})")
    flip = rng.random(x.shape) < config.gamma
    uniform = rng.integers(config.kappa, size=x.shape)
    return np.where(flip, uniform, x)


def output_distribution(x: int, config: RandomizerConfig) -> np.ndarray:
    """Exact law of randomize(x): (1 - gamma) on x plus gamma/kappa everywhere."""
    _check_input(x, config.kappa)
    p = np.full(config.kappa, config.gamma / config.kappa)
    p[x] += 1.0 - config.gamma
    return p


def max_privacy_ratio(config: RandomizerConfig) -> float:
    """max over x, x', y of Pr[y | x] / Pr[y | x'] computed from the exact law."""
    table = np.stack([output_distribution(x, config) for x in range(config.kappa)])
    if (table == 0).any():
        return math.inf
    return float((table.max(axis=0) / table.min(axis=0)).max())


def debias(sum_z: float, n: int, kappa: int, gamma: float) -> float:
    """Unbiased estimate of sum x_i: (sum_z - gamma (kappa - 1) n / 2) / (1 - gamma)."""
    if gamma >= 1:
        raise DomainError("debias is undefined for gamma = 1")
    if n < 1 or kappa < 2:
        raise DomainError("need n >= 1 and kappa >= 2")
    return (sum_z - gamma * (kappa - 1) * n / 2.0) / (1.0 - gamma)
