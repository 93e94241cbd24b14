"""Qudit surface code: generators, logical operators, noise and syndromes.

Layout. Vertices sit at (row r, column c) with r = 0..L and c = 0..L-1, row 0 at
the bottom. Data qudits live on edges:

* horizontal edge ``h(r, c)`` for r = 0..L, c = 0..L joins vertex (r, c-1) to
  (r, c); the c = 0 and c = L edges dangle off the left and right boundaries;
* vertical edge ``v(r, c)`` for r = 0..L-1, c = 0..L-1 joins (r, c) to (r+1, c).

Faces are indexed (r, c) with r = 0..L-1, c = 0..L: face (r, c) is bounded by
``h(r+1, c)`` above, ``v(r, c-1)`` on the left, ``v(r, c)`` on the right and
``h(r, c)`` below (missing sides dropped at the left and right boundary).

Vertex operator A_s = X_e X_f^-1 X_g^-1 X_h with e = left, f = up, g = right,
h = down. Face operator B_p = Z_a Z_b Z_c^-1 Z_d^-1 with a = top, b = left,
c = right, d = bottom. With this orientation every shared edge pair cancels;
the top and bottom vertex rows lose their vertical edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from qshuffle.arith import require_prime
from qshuffle.errors import DomainError
from qshuffle.tableau import PauliOperator, require_odd_prime


class OperatorKind(str, Enum):
    VERTEX = "vertex"
    FACE = "face"
    LOGICAL_X = "logical_x"
    LOGICAL_Z = "logical_z"


@dataclass(frozen=True)
class CodeOperator:
    kind: OperatorKind
    site: tuple[int, int] | None
    op: PauliOperator

    @property
    def support(self) -> frozenset[int]:
        return frozenset(np.nonzero(self.op.x | self.op.z)[0].tolist())


@dataclass(frozen=True)
class SurfaceCodeLattice:
    L: int
    d: int

    def __post_init__(self):
        if self.L < 2:
            raise DomainError(f"lattice side must be >= 2, got {self.L}")
        require_prime(self.d)
        require_odd_prime(self.d)

    # -- indexing -------------------------------------------------------------
    @property
    def n_horizontal(self) -> int:
        return (self.L + 1) ** 2

    @property
    def n_qudits(self) -> int:
        return (self.L + 1) ** 2 + self.L**2

    def h(self, r: int, c: int) -> int:
        if not (0 <= r <= self.L and 0 <= c <= self.L):
            raise DomainError(f"no horizontal edge at ({r}, {c})")
        return r * (self.L + 1) + c

    def v(self, r: int, c: int) -> int:
        if not (0 <= r < self.L and 0 <= c < self.L):
            raise DomainError(f"no vertical edge at ({r}, {c})")
        return self.n_horizontal + r * self.L + c

    @property
    def vertices(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.L + 1) for c in range(self.L)]

    @property
    def faces(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.L) for c in range(self.L + 1)]

    def edge_endpoints(self, q: int) -> list[tuple[int, int]]:
        """Vertices an edge touches (one for a dangling edge)."""
        if q < self.n_horizontal:
            r, c = divmod(q, self.L + 1)
            return [(r, cc) for cc in (c - 1, c) if 0 <= cc < self.L]
        r, c = divmod(q - self.n_horizontal, self.L)
        return [(r, c), (r + 1, c)]

    def edge_faces(self, q: int) -> list[tuple[int, int]]:
        """Faces whose boundary contains the edge."""
        if q < self.n_horizontal:
            r, c = divmod(q, self.L + 1)
            return [(rr, c) for rr in (r - 1, r) if 0 <= rr < self.L]
        r, c = divmod(q - self.n_horizontal, self.L)
        return [(r, c), (r, c + 1)]

    # -- operators ---------------------------------------------------------------
    def _op(self, xs: dict[int, int], zs: dict[int, int]) -> PauliOperator:
        x = np.zeros(self.n_qudits, np.int64)
        z = np.zeros(self.n_qudits, np.int64)
        for q, e in xs.items():
            x[q] += e
        for q, e in zs.items():
            z[q] += e
        return PauliOperator(self.d, 0, x, z)

    def vertex_operator(self, r: int, c: int) -> CodeOperator:
        xs = {self.h(r, c): 1, self.h(r, c + 1): -1}
        if r < self.L:
            xs[self.v(r, c)] = -1
        if r > 0:
            xs[self.v(r - 1, c)] = 1
        return CodeOperator(OperatorKind.VERTEX, (r, c), self._op(xs, {}))

    def face_operator(self, r: int, c: int) -> CodeOperator:
        zs = {self.h(r + 1, c): 1, self.h(r, c): -1}
        if c >= 1:
            zs[self.v(r, c - 1)] = 1
        if c <= self.L - 1:
            zs[self.v(r, c)] = -1
        return CodeOperator(OperatorKind.FACE, (r, c), self._op({}, zs))

    @cached_property
    def generators(self) -> tuple[CodeOperator, ...]:
        return tuple(self.vertex_operator(*s) for s in self.vertices) + tuple(
            self.face_operator(*p) for p in self.faces
        )

    @cached_property
    def _generator_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.stack([g.op.x for g in self.generators]),
            np.stack([g.op.z for g in self.generators]),
        )


def build_generators(L: int, d: int) -> list[CodeOperator]:
    """One A_s per vertex followed by one B_p per face."""
    return list(SurfaceCodeLattice(L, d).generators)


def build_logicals(L: int, d: int, j: int, k: int) -> tuple[CodeOperator, CodeOperator]:
    """X^j down the column of horizontal edges h(., 1); Z^k across the row h(1, .).

    The two lines cross on the single qudit h(1, 1).
    """
    lat = SurfaceCodeLattice(L, d)
    xbar = lat._op({lat.h(r, 1): j for r in range(L + 1)}, {})
    zbar = lat._op({}, {lat.h(1, c): k for c in range(L + 1)})
    return CodeOperator(OperatorKind.LOGICAL_X, None, xbar), CodeOperator(OperatorKind.LOGICAL_Z, None, zbar)


@dataclass(frozen=True)
class CommutationReport:
    pairs_checked: int
    violations: tuple[tuple[int, int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def symplectic_matrix(ops: list[CodeOperator]) -> np.ndarray:
    """Pairwise <x_i, z_j> - <x_j, z_i> mod d."""
    if not ops:
        return np.zeros((0, 0), np.int64)
    d = ops[0].op.d
    x = np.stack([o.op.x for o in ops])
    z = np.stack([o.op.z for o in ops])
    return (x @ z.T - z @ x.T) % d


def check_commutation(ops: list[CodeOperator]) -> CommutationReport:
    """Symplectic check over every unordered pair; violations are (i, j, form)."""
    form = symplectic_matrix(ops)
    i, j = np.nonzero(np.triu(form, k=1))
    n = len(ops)
    return CommutationReport(n * (n - 1) // 2, tuple((int(a), int(b), int(form[a, b])) for a, b in zip(i, j)))


def sample_noise(lattice: SurfaceCodeLattice, p: float, rng: np.random.Generator) -> PauliOperator:
    """Independent X and Z errors per qudit: probability p each, power uniform on 1..d-1."""
    if not 0 <= p <= 1:
        raise DomainError(f"error probability must lie in [0, 1], got {p}")
    n, d = lattice.n_qudits, lattice.d
    hit = rng.random((2, n)) < p
    power = rng.integers(1, d, size=(2, n))
    exps = np.where(hit, power, 0)
    return PauliOperator(d, 0, exps[0], exps[1])


def syndrome(lattice: SurfaceCodeLattice, error: PauliOperator) -> np.ndarray:
    """j per generator g with g E = omega**j E g, in generator order."""
    if error.n != lattice.n_qudits or error.d != lattice.d:
        raise DomainError("error operator does not live on this lattice")
    gx, gz = lattice._generator_matrices
    return (gz @ error.x - gx @ error.z) % lattice.d
