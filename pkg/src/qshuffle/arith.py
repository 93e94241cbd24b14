"""Modular arithmetic over Z_d and exact d-th root of unity phases.

Phases are carried as integer exponents of omega = exp(2*pi*i/d) and only turned
into floating point complex numbers at the dense state-vector boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from qshuffle.errors import ConfigError


@lru_cache(maxsize=4096)
def is_prime(d: int) -> bool:
    if d < 2:
        return False
    if d < 4:
        return True
    if d % 2 == 0:
        return False
    for k in range(3, math.isqrt(d) + 1, 2):
        if d % k == 0:
            return False
    return True


def require_prime(d: int) -> int:
    """Return ``d`` unchanged, raising ConfigError unless it is a prime >= 2."""
    if isinstance(d, bool) or not isinstance(d, int) or not is_prime(d):
        raise ConfigError(f"qudit dimension must be a prime >= 2, got {d!r}")
    return d


def next_prime(k: int) -> int:
    """Smallest prime strictly greater than ``k``."""
    c = max(k + 1, 2)
    while not is_prime(c):
        c += 1
    return c


def mod_inverse(a: int, d: int) -> int:
    return pow(a % d, -1, d)


@dataclass(frozen=True)
class ModInt:
    """An element of Z_d; ``value`` is always the canonical representative."""

    value: int
    modulus: int

    def __post_init__(self):
        require_prime(self.modulus)
        object.__setattr__(self, "value", int(self.value) % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, ModInt):
            if other.modulus != self.modulus:
                raise ConfigError(f"modulus mismatch: {self.modulus} vs {other.modulus}")
            return other.value
        return int(other)

    def __add__(self, other):
        return ModInt(self.value + self._coerce(other), self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return ModInt(self.value - self._coerce(other), self.modulus)

    def __rsub__(self, other):
        return ModInt(self._coerce(other) - self.value, self.modulus)

    def __mul__(self, other):
        return ModInt(self.value * self._coerce(other), self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return ModInt(-self.value, self.modulus)

    def inverse(self) -> ModInt:
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in Z_d")
        return ModInt(mod_inverse(self.value, self.modulus), self.modulus)

    def __eq__(self, other):
        if isinstance(other, ModInt):
            return self.value == other.value and self.modulus == other.modulus
        if isinstance(other, int):
            return self.value == other % self.modulus and 0 <= other < self.modulus
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __repr__(self):
        return f"ModInt({self.value} mod {self.modulus})"


@dataclass(frozen=True)
class PhaseExp:
    """The phase omega**exponent; composition adds exponents."""

    exponent: ModInt

    @property
    def d(self) -> int:
        return self.exponent.modulus

    def __mul__(self, other: PhaseExp) -> PhaseExp:
        return PhaseExp(self.exponent + other.exponent)

    def conjugate(self) -> PhaseExp:
        return PhaseExp(-self.exponent)


def reduce_exponent(x: int, d: int) -> ModInt:
    """Canonical representative of ``x`` in Z_d (omega**x == omega**(x mod d))."""
    return ModInt(x, require_prime(d))


def phase_sum_over_group(x: ModInt | int, d: int) -> int:
    """Exact value of sum_{j=0}^{d-1} omega**(j*x): d if x == 0 mod d, else 0."""
    require_prime(d)
    return d if int(x) % d == 0 else 0


def to_complex(p: PhaseExp) -> complex:
    theta = 2.0 * math.pi * p.exponent.value / p.d
    return complex(math.cos(theta), math.sin(theta))


def omega(d: int) -> complex:
    return cmath.exp(2j * math.pi / d)
