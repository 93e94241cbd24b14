"""Exact dense simulation of n prime-dimension qudits.

Amplitudes are stored flat, big-endian in base d: qudit 0 is the most
significant digit, so basis state |s_0 s_1 ... s_{n-1}> lives at index
sum_i s_i * d**(n-1-i). Gates act on one tensor axis at a time and never build
a d**n x d**n matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qshuffle.arith import require_prime
from qshuffle.errors import ConfigError, DomainError, SimulationError

MAX_AMPLITUDES = 2**26


def check_size(n: int, d: int, cap: int = MAX_AMPLITUDES) -> None:
    if n < 0:
        raise DomainError(f"qudit count must be non-negative, got {n}")
    if d**n > cap:
        raise ConfigError(f"{d}**{n} amplitudes exceeds the state-vector cap of {cap}")


class StateVector:
    """Pure state of ``n`` qudits of prime dimension ``d``.

    The object is mutable; the gate functions below update it in place and
    return it for chaining.
    """

    def __init__(self, amplitudes, n: int, d: int, *, cap: int = MAX_AMPLITUDES):
        require_prime(d)
        check_size(n, d, cap)
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != d**n:
            raise DomainError(f"expected {d**n} amplitudes for n={n}, d={d}, got {amps.size}")
        self.n = n
        self.d = d
        self.amplitudes = amps

    @property
    def tensor(self) -> np.ndarray:
        """View of the amplitudes with one axis per qudit."""
        return self.amplitudes.reshape((self.d,) * self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.n, self.d)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _check_target(self, target: int) -> None:
        if not 0 <= target < self.n:
            raise DomainError(f"qudit index {target} out of range for n={self.n}")

    def _axis_view(self, target: int) -> np.ndarray:
        # (prefix, d, suffix) view so every single-qudit gate is a 1-axis op
        return self.amplitudes.reshape(self.d**target, self.d, self.d ** (self.n - target - 1))

    def __repr__(self):
        return f"StateVector(n={self.n}, d={self.d})"


def basis_index(digits: Sequence[int], d: int) -> int:
    idx = 0
    for s in digits:
        idx = idx * d + int(s)
    return idx


def basis_state(n: int, d: int, digits: Sequence[int]) -> StateVector:
    require_prime(d)
    if len(digits) != n:
        raise DomainError(f"expected {n} digits, got {len(digits)}")
    if any(not 0 <= int(s) < d for s in digits):
        raise DomainError(f"basis digits must lie in [0, {d}), got {list(digits)}")
    check_size(n, d)
    amps = np.zeros(d**n, dtype=np.complex128)
    amps[basis_index(digits, d)] = 1.0
    return StateVector(amps, n, d)


def zero_state(n: int, d: int) -> StateVector:
    return basis_state(n, d, [0] * n)


def phase_vector(d: int, a: int) -> np.ndarray:
    """omega**(a*s) for s in Z_d, with the exponent reduced exactly first."""
    s = np.arange(d)
    return np.exp(2j * np.pi * ((a * s) % d) / d)


def apply_x_pow(psi: StateVector, target: int, a: int = 1) -> StateVector:
    """|s> -> |s + a> on ``target``."""
    psi._check_target(target)
    a = int(a) % psi.d
    if a:
        view = psi._axis_view(target)
        view[...] = np.roll(view, a, axis=1)
    return psi


def apply_z_pow(psi: StateVector, target: int, a: int = 1) -> StateVector:
    """|s> -> omega**(a*s) |s> on ``target``."""
    psi._check_target(target)
    a = int(a) % psi.d
    if a:
        view = psi._axis_view(target)
        view *= phase_vector(psi.d, a)[None, :, None]
    return psi


def apply_h(psi: StateVector, target: int, inverse: bool = False) -> StateVector:
    """Generalised Hadamard |s> -> d**-1/2 sum_j omega**(j*s) |j> (conjugate when ``inverse``)."""
    psi._check_target(target)
    view = psi._axis_view(target)
    scale = math.sqrt(psi.d)
    # numpy's ifft carries the +2*pi*i sign and a 1/d factor
    if inverse:
        view[...] = np.fft.fft(view, axis=1) / scale
    else:
        view[...] = np.fft.ifft(view, axis=1) * scale
    return psi


def apply_cx(psi: StateVector, control: int, target: int, inverse: bool = False) -> StateVector:
    """|s>|r> -> |s>|r + s> (``r - s`` when ``inverse``) on (control, target)."""
    psi._check_target(control)
    psi._check_target(target)
    if control == target:
        raise DomainError("control and target must differ")
    t = psi.tensor
    sign = -1 if inverse else 1
    # slices for different control values are disjoint, so rolling each in place is safe
    t_axis = target - 1 if target > control else target
    for s in range(1, psi.d):
        idx = [slice(None)] * psi.n
        idx[control] = s
        idx = tuple(idx)
        t[idx] = np.roll(t[idx], sign * s, axis=t_axis)
    return psi


def branch_probabilities(psi: StateVector, target: int) -> np.ndarray:
    """Unnormalised weight of each computational-basis outcome on ``target``."""
    psi._check_target(target)
    # float view interleaves re/im along the last axis, so one einsum gives |a|^2 sums
    flat = psi._axis_view(target).view(np.float64)
    return np.einsum("ijk,ijk->j", flat, flat)


def _sample_outcome(probs: np.ndarray, rng, outcome: int | None, d: int) -> tuple[int, float]:
    total = float(probs.sum())
    if total < 1e-12:
        raise SimulationError("state has zero norm; cannot measure")
    p = np.clip(probs / total, 0.0, None)
    if outcome is None:
        outcome = int(rng.choice(d, p=p / p.sum()))
    else:
        outcome = int(outcome) % d
        if p[outcome] < 1e-14:
            raise DomainError(f"forced outcome {outcome} has probability zero")
    return outcome, float(probs[outcome])


def measure_z(psi: StateVector, target: int, rng: np.random.Generator, *, outcome: int | None = None):
    """Projective computational-basis measurement of one qudit.

    Returns ``(outcome, psi)`` with ``psi`` collapsed and renormalised in place.
    Passing ``outcome`` forces that branch (it must have non-zero probability).
    """
    outcome, weight = _sample_outcome(branch_probabilities(psi, target), rng, outcome, psi.d)
    view = psi._axis_view(target)
    view[:, :outcome, :] = 0.0
    view[:, outcome + 1 :, :] = 0.0
    view[:, outcome, :] /= math.sqrt(weight)
    return outcome, psi


def measure_out(psi: StateVector, target: int, rng: np.random.Generator, *, outcome: int | None = None):
    """Measure ``target`` and discard it, returning ``(outcome, smaller_state)``."""
    outcome, weight = _sample_outcome(branch_probabilities(psi, target), rng, outcome, psi.d)
    rest = psi._axis_view(target)[:, outcome, :] / math.sqrt(weight)
    return outcome, StateVector(rest.reshape(-1), psi.n - 1, psi.d)


def remove_qudit(psi: StateVector, target: int, value: int) -> StateVector:
    """Drop a qudit known to be in basis state ``value`` (e.g. just measured)."""
    probs = branch_probabilities(psi, target)
    if probs.sum() - probs[value] > 1e-9:
        raise SimulationError(f"qudit {target} is not in basis state |{value}>")
    rest = psi._axis_view(target)[:, value, :]
    return StateVector(rest.reshape(-1).copy(), psi.n - 1, psi.d)


def tensor(psi: StateVector, phi: StateVector) -> StateVector:
    """psi (x) phi, with phi's qudits appended after psi's."""
    if psi.d != phi.d:
        raise DomainError("cannot combine registers of different dimension")
    check_size(psi.n + phi.n, psi.d)
    joint = (psi.amplitudes[:, None] * phi.amplitudes[None, :]).reshape(-1)
    return StateVector(joint, psi.n + phi.n, psi.d)


def move_qudit(psi: StateVector, source: int, destination: int) -> StateVector:
    psi._check_target(source)
    psi._check_target(destination)
    moved = np.moveaxis(psi.tensor, source, destination)
    return StateVector(np.ascontiguousarray(moved).reshape(-1), psi.n, psi.d)


def inner(psi: StateVector, phi: StateVector) -> complex:
    return complex(np.vdot(psi.amplitudes, phi.amplitudes))


def equal_up_to_global_phase(psi: StateVector, phi: StateVector, tol: float = 1e-9) -> bool:
    if (psi.n, psi.d) != (phi.n, phi.d):
        raise DomainError("states live in different spaces")
    return abs(abs(inner(psi, phi)) - 1.0) <= tol


@dataclass(frozen=True)
class DensityMatrix:
    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        size = math.prod(self.dims)
        if self.matrix.shape != (size, size):
            raise DomainError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")
        self.matrix.setflags(write=False)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_valid(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=tol):
            return False
        if abs(self.trace() - 1.0) > tol:
            return False
        return bool(np.linalg.eigvalsh(m).min() >= -tol)


def density(psi: StateVector) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix((psi.d,) * psi.n, np.outer(a, a.conj()))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the subsystems listed in ``keep`` (returned in ascending order)."""
    keep = sorted(set(int(k) for k in keep))
    k = len(rho.dims)
    if not keep or keep[0] < 0 or keep[-1] >= k:
        raise DomainError(f"invalid subsystem selection {keep} for {k} subsystems")
    traced = [i for i in range(k) if i not in keep]
    t = rho.matrix.reshape(rho.dims + rho.dims)
    # contract each traced ket axis with its bra axis
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * k > len(letters):
        raise DomainError("too many subsystems for partial_trace")
    ket = list(letters[:k])
    bra = list(letters[k : 2 * k])
    for i in traced:
        bra[i] = ket[i]
    out = "".join(ket[i] for i in keep) + "".join(bra[i] for i in keep)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    kd = tuple(rho.dims[i] for i in keep)
    size = math.prod(kd)
    return DensityMatrix(kd, reduced.reshape(size, size))


def reduced_density(psi: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace straight from a pure state, without forming |psi><psi|."""
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= psi.n:
        raise DomainError(f"invalid subsystem selection {keep} for n={psi.n}")
    m = np.moveaxis(psi.tensor, keep, range(len(keep))).reshape(psi.d ** len(keep), -1)
    return DensityMatrix((psi.d,) * len(keep), m @ m.conj().T)


def pauli_matrix(d: int, x: int, z: int) -> np.ndarray:
    """Dense d x d matrix of X**x Z**z."""
    s = np.arange(d)
    zm = np.diag(phase_vector(d, z))
    xm = np.zeros((d, d), dtype=np.complex128)
    xm[(s + x) % d, s] = 1.0
    return xm @ zm


def hadamard_matrix(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)


def cx_matrix(d: int) -> np.ndarray:
    """Two-qudit CX on |control, target> in big-endian order."""
    m = np.zeros((d * d, d * d), dtype=np.complex128)
    for s in range(d):
        for r in range(d):
            m[s * d + (r + s) % d, s * d + r] = 1.0
    return m
