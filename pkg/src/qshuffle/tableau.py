"""Stabilizer-tableau simulation of Clifford circuits on odd-prime qudits.

A generalised Pauli is stored as ``omega**phase * X**x Z**z`` (X factors to the
left of Z factors, qudit by qudit). With ``Z**l X**k = omega**(k*l) X**k Z**l``
the product rule is

    (w^a X^x1 Z^z1)(w^b X^x2 Z^z2) = w^(a + b + <z1, x2>) X^(x1+x2) Z^(z1+z2)

and powers pick up ``w^(<x, z> * k(k-1)/2)``. For d = 2 that power phase is not a
power of omega (it needs i), so only odd primes are supported here.

The images of X and Z under H and CX are not hard coded. They are read off the
dense matrices at import time and re-checked against dense conjugation for
every small runtime dimension on first use. Every tableau update goes through
the product rule above.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from qshuffle import statevec as sv
from qshuffle.arith import mod_inverse, require_prime
from qshuffle.errors import DomainError, SimulationError, UnsupportedDimensionError

SUPPORTS_QUBITS = False
ORACLE_DIMENSION = 3
SPOT_CHECK_MAX_D = 31


def require_odd_prime(d: int) -> int:
    require_prime(d)
    if d == 2:
        raise UnsupportedDimensionError(
            "the tableau backend needs an odd prime d; d=2 Pauli phases are not powers of omega"
        )
    return d


# -- row-wise Pauli algebra ---------------------------------------------------
# ``phase`` has shape (r,), ``x`` and ``z`` have shape (r, n); every function
# works on r operators at once.


def _tri(k: np.ndarray, d: int) -> np.ndarray:
    """k(k-1)/2 mod d for integer arrays (exact since k(k-1) is even)."""
    k = np.asarray(k, dtype=np.int64) % d
    return (k * (k - 1) // 2) % d


def rows_multiply(p1, x1, z1, p2, x2, z2, d: int):
    corr = np.einsum("ij,ij->i", z1 % d, x2 % d) % d
    return (p1 + p2 + corr) % d, (x1 + x2) % d, (z1 + z2) % d


def rows_power(p, x, z, k, d: int):
    """Raise each row to its own exponent ``k`` (shape (r,))."""
    k = np.asarray(k, dtype=np.int64) % d
    xz = np.einsum("ij,ij->i", x, z) % d
    phase = (p * k + xz * _tri(k, d)) % d
    return phase, (x * k[:, None]) % d, (z * k[:, None]) % d


def rows_commutation_phase(x1, z1, x2, z2, d: int) -> np.ndarray:
    """j with P1 P2 = omega**j P2 P1, row by row."""
    return (np.einsum("ij,ij->i", z1, x2) - np.einsum("ij,ij->i", x1, z2)) % d


@dataclass
class PauliOperator:
    """omega**phase * X**x * Z**z on ``n`` qudits of odd prime dimension ``d``."""

    d: int
    phase: int
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        require_odd_prime(self.d)
        self.x = np.asarray(self.x, dtype=np.int64).reshape(-1) % self.d
        self.z = np.asarray(self.z, dtype=np.int64).reshape(-1) % self.d
        if self.x.shape != self.z.shape:
            raise DomainError("x and z exponent vectors must have equal length")
        self.phase = int(self.phase) % self.d

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def identity(cls, n: int, d: int) -> PauliOperator:
        return cls(d, 0, np.zeros(n, np.int64), np.zeros(n, np.int64))

    @classmethod
    def single(cls, n: int, d: int, target: int, x: int = 0, z: int = 0, phase: int = 0) -> PauliOperator:
        if not 0 <= target < n:
            raise DomainError(f"qudit index {target} out of range for n={n}")
        xs = np.zeros(n, np.int64)
        zs = np.zeros(n, np.int64)
        xs[target] = x
        zs[target] = z
        return cls(d, phase, xs, zs)

    def _rows(self):
        return np.array([self.phase], np.int64), self.x[None, :].copy(), self.z[None, :].copy()

    @classmethod
    def _from_rows(cls, d, p, x, z) -> PauliOperator:
        return cls(d, int(p[0]), x[0], z[0])

    def _check_compatible(self, other: PauliOperator) -> None:
        if self.d != other.d or self.n != other.n:
            raise DomainError(f"Pauli mismatch: (n={self.n}, d={self.d}) vs (n={other.n}, d={other.d})")

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return multiply(self, other)

    def __pow__(self, k: int) -> PauliOperator:
        p, x, z = rows_power(*self._rows(), np.array([k]), self.d)
        return PauliOperator._from_rows(self.d, p, x, z)

    def __eq__(self, other):
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (
            self.d == other.d
            and self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def is_identity(self) -> bool:
        return self.phase == 0 and not self.x.any() and not self.z.any()

    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def commutation_phase(self, other: PauliOperator) -> int:
        """j such that self * other == omega**j * other * self."""
        self._check_compatible(other)
        return int((self.z @ other.x - self.x @ other.z) % self.d)

    def symplectic_form(self, other: PauliOperator) -> int:
        """<x1, z2> - <x2, z1> mod d; zero iff the operators commute."""
        self._check_compatible(other)
        return int((self.x @ other.z - other.x @ self.z) % self.d)

    def commutes_with(self, other: PauliOperator) -> bool:
        return self.symplectic_form(other) == 0

    def to_matrix(self) -> np.ndarray:
        """Dense d**n x d**n matrix; for small oracles only."""
        m = np.array([[1.0 + 0j]])
        for a, b in zip(self.x, self.z):
            m = np.kron(m, sv.pauli_matrix(self.d, int(a), int(b)))
        return sv.phase_vector(self.d, 1)[self.phase] * m

    def label(self) -> str:
        parts = []
        for q, (a, b) in enumerate(zip(self.x, self.z)):
            if a or b:
                parts.append(f"X{q}^{a}Z{q}^{b}" if a and b else (f"X{q}^{a}" if a else f"Z{q}^{b}"))
        return f"w^{self.phase} " + (" ".join(parts) if parts else "I")

    def __repr__(self):
        return f"PauliOperator(d={self.d}, {self.label()})"


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    p._check_compatible(q)
    return PauliOperator._from_rows(p.d, *rows_multiply(*p._rows(), *q._rows(), p.d))


# -- Clifford conjugation tables, derived from dense matrices ----------------


@dataclass(frozen=True)
class LocalImage:
    """Image of one local generator: omega**phase X**xs Z**zs over the gate's qudits.

    Exponents are stored as signed small integers (-1, 0, 1) so the same table
    serves every odd prime d after reduction mod d.
    """

    phase: int
    xs: tuple[int, ...]
    zs: tuple[int, ...]


def _signed(v: int, d: int) -> int:
    v %= d
    return v - d if v > d // 2 else v


def _gate_unitary(gate: str, d: int) -> np.ndarray:
    h = sv.hadamard_matrix(d)
    cx = sv.cx_matrix(d)
    return {
        "h": h,
        "h_dag": h.conj().T,
        "cx": cx,
        "cx_dag": cx.conj().T,
    }[gate]


GATE_ARITY = {"h": 1, "h_dag": 1, "cx": 2, "cx_dag": 2}


def _identify_pauli(m: np.ndarray, k: int, d: int) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    """Find (phase, xs, zs) with m == omega**phase X**xs Z**zs on k qudits."""
    size = d**k
    for code in range(d ** (2 * k)):
        digits = np.base_repr(code, d).zfill(2 * k) if code else "0" * (2 * k)
        ex = [int(c, d) for c in digits]
        xs, zs = ex[:k], ex[k:]
        cand = np.array([[1.0 + 0j]])
        for a, b in zip(xs, zs):
            cand = np.kron(cand, sv.pauli_matrix(d, a, b))
        c = np.trace(cand.conj().T @ m) / size
        if abs(abs(c) - 1.0) < 1e-9 and np.allclose(m, c * cand, atol=1e-9):
            phase = int(round(np.angle(c) * d / (2 * np.pi))) % d
            return phase, tuple(xs), tuple(zs)
    raise SimulationError("conjugated generator is not a Pauli operator")


def derive_gate_images(gate: str, d: int = ORACLE_DIMENSION) -> tuple[LocalImage, ...]:
    """Conjugate X_q and Z_q for every qudit the gate touches by the dense unitary.

    Returned in the order X_0, Z_0, X_1, Z_1 over the gate's local qudits.
    """
    k = GATE_ARITY[gate]
    u = _gate_unitary(gate, d)
    images = []
    for q in range(k):
        for which in ("x", "z"):
            g = np.array([[1.0 + 0j]])
            for j in range(k):
                if j == q:
                    g = np.kron(g, sv.pauli_matrix(d, 1 if which == "x" else 0, 1 if which == "z" else 0))
                else:
                    g = np.kron(g, np.eye(d))
            phase, xs, zs = _identify_pauli(u @ g @ u.conj().T, k, d)
            images.append(
                LocalImage(_signed(phase, d), tuple(_signed(v, d) for v in xs), tuple(_signed(v, d) for v in zs))
            )
    return tuple(images)


GATE_IMAGES: dict[str, tuple[LocalImage, ...]] = {g: derive_gate_images(g) for g in GATE_ARITY}


@lru_cache(maxsize=None)
def validate_tables(d: int) -> bool:
    """Spot-check the frozen tables against dense conjugation at dimension ``d``."""
    require_odd_prime(d)
    if d > SPOT_CHECK_MAX_D:
        return False
    for gate, table in GATE_IMAGES.items():
        fresh = derive_gate_images(gate, d)
        for a, b in zip(table, fresh):
            if (a.phase % d, tuple(v % d for v in a.xs), tuple(v % d for v in a.zs)) != (
                b.phase % d,
                tuple(v % d for v in b.xs),
                tuple(v % d for v in b.zs),
            ):
                raise SimulationError(f"conjugation table for {gate} fails the dense check at d={d}")
    return True


def conjugate_rows(p, x, z, gate: str, qudits: Sequence[int], d: int):
    """Apply U P U^dagger for the tabulated gate U acting on ``qudits``; updates arrays in place."""
    images = GATE_IMAGES[gate]
    qudits = list(qudits)
    k = len(qudits)
    r = p.shape[0]
    exps = []
    for q in qudits:
        exps.append(x[:, q].copy())
        exps.append(z[:, q].copy())
    acc_p = p.copy()
    acc_x = np.zeros((r, k), np.int64)
    acc_z = np.zeros((r, k), np.int64)
    for img, e in zip(images, exps):
        if not e.any():
            continue
        ix = np.broadcast_to(np.array(img.xs, np.int64) % d, (r, k))
        iz = np.broadcast_to(np.array(img.zs, np.int64) % d, (r, k))
        ip = np.full(r, img.phase % d, np.int64)
        gp, gx, gz = rows_power(ip, ix, iz, e, d)
        acc_p, acc_x, acc_z = rows_multiply(acc_p, acc_x, acc_z, gp, gx, gz, d)
    p[:] = acc_p
    x[:, qudits] = acc_x
    z[:, qudits] = acc_z


def _conjugate_single(pauli: PauliOperator, gate: str, qudits: Sequence[int]) -> PauliOperator:
    for q in qudits:
        if not 0 <= q < pauli.n:
            raise DomainError(f"qudit index {q} out of range for n={pauli.n}")
    validate_tables(pauli.d)
    p, x, z = pauli._rows()
    conjugate_rows(p, x, z, gate, qudits, pauli.d)
    return PauliOperator._from_rows(pauli.d, p, x, z)


def conjugate_h(pauli: PauliOperator, target: int, inverse: bool = False) -> PauliOperator:
    """H P H^dagger (H^dagger P H when ``inverse``)."""
    return _conjugate_single(pauli, "h_dag" if inverse else "h", [target])


def conjugate_cx(pauli: PauliOperator, control: int, target: int, inverse: bool = False) -> PauliOperator:
    if control == target:
        raise DomainError("control and target must differ")
    return _conjugate_single(pauli, "cx_dag" if inverse else "cx", [control, target])


# -- the tableau ------------------------------------------------------------------


@dataclass
class StabilizerTableau:
    """n commuting, independent generators of a stabilizer state.

    Row i is ``omega**phase[i] X**x[i] Z**z[i]``. The object is mutated in place by
    the gate and measurement functions below.
    """

    n: int
    d: int
    phase: np.ndarray
    x: np.ndarray
    z: np.ndarray
    validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        require_odd_prime(self.d)
        self.phase = np.asarray(self.phase, np.int64) % self.d
        self.x = np.asarray(self.x, np.int64) % self.d
        self.z = np.asarray(self.z, np.int64) % self.d
        if self.x.shape != (self.n, self.n) or self.z.shape != (self.n, self.n) or self.phase.shape != (self.n,):
            raise DomainError(f"tableau arrays do not match n={self.n}")
        self.validated = validate_tables(self.d)

    @classmethod
    def from_generators(cls, generators: Sequence[PauliOperator]) -> StabilizerTableau:
        if not generators:
            raise DomainError("need at least one generator")
        d = generators[0].d
        n = generators[0].n
        if len(generators) != n:
            raise DomainError(f"a pure state on {n} qudits needs {n} generators, got {len(generators)}")
        return cls(
            n,
            d,
            np.array([g.phase for g in generators]),
            np.stack([g.x for g in generators]),
            np.stack([g.z for g in generators]),
        )

    def generators(self) -> list[PauliOperator]:
        return [PauliOperator(self.d, int(self.phase[i]), self.x[i], self.z[i]) for i in range(self.n)]

    def copy(self) -> StabilizerTableau:
        return StabilizerTableau(self.n, self.d, self.phase.copy(), self.x.copy(), self.z.copy())

    def _check_target(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise DomainError(f"qudit index {q} out of range for n={self.n}")

    def commutation_matrix(self) -> np.ndarray:
        return (self.z @ self.x.T - self.x @ self.z.T) % self.d

    def rank(self) -> int:
        return rank_mod_p(np.hstack([self.x, self.z]), self.d)

    def check_invariants(self) -> None:
        """Raise SimulationError unless generators commute pairwise and are independent."""
        if self.commutation_matrix().any():
            raise SimulationError("tableau generators do not commute")
        if self.rank() != self.n:
            raise SimulationError("tableau generators are not independent")

    def stabilizes(self, psi: sv.StateVector, tol: float = 1e-9) -> bool:
        """Dense oracle check: every generator fixes ``psi``."""
        for g in self.generators():
            if not np.allclose(g.to_matrix() @ psi.amplitudes, psi.amplitudes, atol=tol):
                return False
        return True


def rank_mod_p(m: np.ndarray, d: int) -> int:
    m = np.asarray(m, np.int64) % d
    m = m.copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nz = np.nonzero(m[rank:, c])[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        m[rank] = (m[rank] * mod_inverse(int(m[rank, c]), d)) % d
        below = rank + 1 + np.nonzero(m[rank + 1 :, c])[0]
        if below.size:
            m[below] = (m[below] - np.outer(m[below, c], m[rank])) % d
        rank += 1
    return rank


def zero_tableau(n: int, d: int) -> StabilizerTableau:
    """|0...0>, stabilised by Z_i for every qudit."""
    return StabilizerTableau(n, d, np.zeros(n, np.int64), np.zeros((n, n), np.int64), np.eye(n, dtype=np.int64))


def ghz_tableau(n: int, d: int) -> StabilizerTableau:
    """Generators X^{(x)n} and Z_i Z_{i+1}^{-1} of (1/sqrt d) sum_j |j>^{(x)n}."""
    require_odd_prime(d)
    if n < 1:
        raise DomainError("GHZ state needs at least one qudit")
    x = np.zeros((n, n), np.int64)
    z = np.zeros((n, n), np.int64)
    x[0, :] = 1
    for i in range(n - 1):
        z[i + 1, i] = 1
        z[i + 1, i + 1] = d - 1
    return StabilizerTableau(n, d, np.zeros(n, np.int64), x, z)


def apply_h(t: StabilizerTableau, target: int, inverse: bool = False) -> StabilizerTableau:
    t._check_target(target)
    conjugate_rows(t.phase, t.x, t.z, "h_dag" if inverse else "h", [target], t.d)
    return t


def apply_cx(t: StabilizerTableau, control: int, target: int, inverse: bool = False) -> StabilizerTableau:
    t._check_target(control)
    t._check_target(target)
    if control == target:
        raise DomainError("control and target must differ")
    conjugate_rows(t.phase, t.x, t.z, "cx_dag" if inverse else "cx", [control, target], t.d)
    return t


def apply_z_pow(t: StabilizerTableau, target: int, a: int = 1) -> StabilizerTableau:
    # Z^a P Z^-a = omega^(a * x_target) P
    t._check_target(target)
    t.phase = (t.phase + (int(a) % t.d) * t.x[:, target]) % t.d
    return t


def apply_x_pow(t: StabilizerTableau, target: int, a: int = 1) -> StabilizerTableau:
    # X^a P X^-a = omega^(-a * z_target) P
    t._check_target(target)
    t.phase = (t.phase - (int(a) % t.d) * t.z[:, target]) % t.d
    return t


def _deterministic_outcome(t: StabilizerTableau, target: int) -> int:
    """Outcome of Z_target when it lies in the stabilizer group up to phase.

    Row-reduces a copy of the generators with Pauli products (so phases stay
    exact), then builds omega**phi Z_target from the echelon rows; the state is
    then a Z_target eigenstate with eigenvalue omega**(-phi).
    """
    d, n = t.d, t.n
    p = t.phase.copy()
    m = np.hstack([t.x, t.z])
    pivots: list[tuple[int, int]] = []
    rank = 0
    for c in range(2 * n):
        if rank == n:
            break
        nz = np.nonzero(m[rank:, c])[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
            p[[rank, piv]] = p[[piv, rank]]
        below = rank + 1 + np.nonzero(m[rank + 1 :, c])[0]
        if below.size:
            inv = mod_inverse(int(m[rank, c]), d)
            coef = (-m[below, c] * inv) % d
            r_p = np.full(below.size, p[rank])
            r_m = np.broadcast_to(m[rank], (below.size, 2 * n))
            gp, gx, gz = rows_power(r_p, r_m[:, :n], r_m[:, n:], coef, d)
            np_, nx, nz_ = rows_multiply(p[below], m[below, :n], m[below, n:], gp, gx, gz, d)
            p[below] = np_
            m[below, :n] = nx
            m[below, n:] = nz_
        pivots.append((rank, c))
        rank += 1
    v = np.zeros(2 * n, np.int64)
    v[n + target] = 1
    acc_p = np.zeros(1, np.int64)
    acc = np.zeros((1, 2 * n), np.int64)
    for row, c in pivots:
        if v[c] == 0:
            continue
        k = (v[c] * mod_inverse(int(m[row, c]), d)) % d
        gp, gx, gz = rows_power(p[row : row + 1], m[row : row + 1, :n], m[row : row + 1, n:], np.array([k]), d)
        acc_p, ax, az = rows_multiply(acc_p, acc[:, :n], acc[:, n:], gp, gx, gz, d)
        acc = np.hstack([ax, az])
        v = (v - k * m[row]) % d
    if v.any():
        raise SimulationError("Z_target commutes with the stabilizer but is not in the group")
    return int(-acc_p[0]) % d


def is_deterministic(t: StabilizerTableau, target: int) -> bool:
    t._check_target(target)
    return not t.x[:, target].any()


def measure_z(t: StabilizerTableau, target: int, rng: np.random.Generator, *, outcome: int | None = None):
    """Computational-basis measurement of ``target``; returns ``(outcome, t)`` with ``t`` updated."""
    t._check_target(target)
    d = t.d
    anti = np.nonzero(t.x[:, target])[0]
    if anti.size == 0:
        value = _deterministic_outcome(t, target)
        if outcome is not None and int(outcome) % d != value:
            raise DomainError(f"forced outcome {outcome} has probability zero (deterministic {value})")
        return value, t
    value = int(rng.integers(d)) if outcome is None else int(outcome) % d
    piv = int(anti[0])
    others = anti[1:]
    if others.size:
        inv = mod_inverse(int(t.x[piv, target]), d)
        coef = (-t.x[others, target] * inv) % d
        k = others.size
        gp, gx, gz = rows_power(
            np.full(k, t.phase[piv]),
            np.broadcast_to(t.x[piv], (k, t.n)),
            np.broadcast_to(t.z[piv], (k, t.n)),
            coef,
            d,
        )
        t.phase[others], t.x[others], t.z[others] = rows_multiply(
            t.phase[others], t.x[others], t.z[others], gp, gx, gz, d
        )
    t.phase[piv] = (-value) % d
    t.x[piv] = 0
    t.z[piv] = 0
    t.z[piv, target] = 1
    return value, t
