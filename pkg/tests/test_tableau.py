import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qshuffle import statevec as sv
from qshuffle import tableau as tb
from qshuffle.errors import DomainError, SimulationError, UnsupportedDimensionError

from conftest import ODD_PRIMES

TOL = 1e-9


def pauli(d, phase, x, z):
    return tb.PauliOperator(d, phase, np.array(x), np.array(z))


def random_pauli(n, d, rng):
    return tb.PauliOperator(d, int(rng.integers(d)), rng.integers(d, size=n), rng.integers(d, size=n))


def embed(u, qudits, n, d):
    """Dense n-qudit operator acting as ``u`` on ``qudits`` (in that order)."""
    k = len(qudits)
    full = np.zeros((d**n, d**n), complex)
    for col in range(d**n):
        digits = np.array(np.unravel_index(col, (d,) * n))
        local_in = sv.basis_index(digits[list(qudits)], d)
        for local_out in range(d**k):
            amp = u[local_out, local_in]
            if amp == 0:
                continue
            out = digits.copy()
            out[list(qudits)] = np.unravel_index(local_out, (d,) * k)
            full[sv.basis_index(out, d), col] += amp
    return full


class TestPauliAlgebra:
    def test_x_times_z_is_ordered(self):
        p = pauli(3, 0, [1], [0]) * pauli(3, 0, [0], [1])
        assert p == pauli(3, 0, [1], [1])

    def test_z_times_x_phase_matches_dense(self):
        # ZX = omega XZ as matrices, so the product carries phase +1
        p = pauli(3, 0, [0], [1]) * pauli(3, 0, [1], [0])
        z, x = sv.pauli_matrix(3, 0, 1), sv.pauli_matrix(3, 1, 0)
        assert p.phase == 1
        np.testing.assert_allclose(p.to_matrix(), z @ x, atol=TOL)

    @pytest.mark.parametrize("d", ODD_PRIMES)
    def test_product_matches_dense(self, d, rng):
        for _ in range(20):
            a, b = random_pauli(2, d, rng), random_pauli(2, d, rng)
            np.testing.assert_allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=TOL)

    @pytest.mark.parametrize("d", ODD_PRIMES)
    def test_power_matches_dense(self, d, rng):
        for _ in range(10):
            p = random_pauli(2, d, rng)
            k = int(rng.integers(d + 3))
            np.testing.assert_allclose((p**k).to_matrix(), np.linalg.matrix_power(p.to_matrix(), k), atol=TOL)

    def test_inverse_power_gives_identity(self, rng):
        for _ in range(20):
            p = random_pauli(3, 5, rng)
            assert (p * p ** 4).is_identity()

    @pytest.mark.parametrize("d", ODD_PRIMES)
    def test_commutation_phase_matches_dense(self, d, rng):
        for _ in range(20):
            a, b = random_pauli(2, d, rng), random_pauli(2, d, rng)
            j = a.commutation_phase(b)
            lhs = a.to_matrix() @ b.to_matrix()
            rhs = np.exp(2j * np.pi * j / d) * b.to_matrix() @ a.to_matrix()
            np.testing.assert_allclose(lhs, rhs, atol=TOL)
            assert a.commutes_with(b) == (j == 0)

    def test_mismatch_rejected(self):
        with pytest.raises(DomainError):
            pauli(3, 0, [1], [0]) * pauli(3, 0, [1, 0], [0, 0])
        with pytest.raises(DomainError):
            pauli(3, 0, [1], [0]) * pauli(5, 0, [1], [0])

    def test_qubits_unsupported(self):
        with pytest.raises(UnsupportedDimensionError):
            pauli(2, 0, [1], [0])
        with pytest.raises(UnsupportedDimensionError):
            tb.ghz_tableau(2, 2)
        assert tb.SUPPORTS_QUBITS is False


class TestConjugation:
    def test_hadamard_examples(self):
        x = tb.PauliOperator.single(1, 3, 0, x=1)
        z = tb.PauliOperator.single(1, 3, 0, z=1)
        assert tb.conjugate_h(x, 0) == tb.PauliOperator.single(1, 3, 0, z=1)
        assert tb.conjugate_h(z, 0) == tb.PauliOperator.single(1, 3, 0, x=2)
        assert tb.conjugate_h(tb.PauliOperator.identity(1, 3), 0).is_identity()

    def test_cx_examples(self):
        xc = tb.PauliOperator.single(2, 3, 0, x=1)
        zt = tb.PauliOperator.single(2, 3, 1, z=1)
        zc = tb.PauliOperator.single(2, 3, 0, z=1)
        assert tb.conjugate_cx(xc, 0, 1) == pauli(3, 0, [1, 1], [0, 0])
        assert tb.conjugate_cx(zt, 0, 1) == pauli(3, 0, [0, 0], [2, 1])
        assert tb.conjugate_cx(zc, 0, 1) == zc

    def test_cx_same_qudit(self):
        with pytest.raises(DomainError):
            tb.conjugate_cx(tb.PauliOperator.identity(2, 3), 1, 1)

    @pytest.mark.parametrize("d", (3, 5))
    def test_every_rule_matches_dense_conjugation(self, d):
        h = sv.hadamard_matrix(d)
        cx = sv.cx_matrix(d)
        n = 2
        for xs in itertools.product(range(d), repeat=n):
            for zs in itertools.product(range(d), repeat=n):
                p = pauli(d, 1, xs, zs)
                m = p.to_matrix()
                for q in range(n):
                    u = embed(h, [q], n, d)
                    np.testing.assert_allclose(tb.conjugate_h(p, q).to_matrix(), u @ m @ u.conj().T, atol=TOL)
                    np.testing.assert_allclose(tb.conjugate_h(p, q, inverse=True).to_matrix(), u.conj().T @ m @ u, atol=TOL)
                for c, t in ((0, 1), (1, 0)):
                    u = embed(cx, [c, t], n, d)
                    np.testing.assert_allclose(tb.conjugate_cx(p, c, t).to_matrix(), u @ m @ u.conj().T, atol=TOL)
                    np.testing.assert_allclose(
                        tb.conjugate_cx(p, c, t, inverse=True).to_matrix(), u.conj().T @ m @ u, atol=TOL
                    )

    @pytest.mark.parametrize("d", (3, 5, 7, 11, 13))
    def test_tables_validate_at_runtime_dimension(self, d):
        assert tb.validate_tables(d)

    def test_tables_use_signed_exponents(self):
        for images in tb.GATE_IMAGES.values():
            for img in images:
                assert set(img.xs) | set(img.zs) <= {-1, 0, 1}


def ghz_vector(n, d):
    psi = sv.apply_h(sv.zero_state(n, d), 0)
    for t in range(1, n):
        sv.apply_cx(psi, 0, t)
    return psi


class TestTableau:
    def test_ghz_examples(self):
        t = tb.ghz_tableau(2, 3)
        assert t.generators()[0] == pauli(3, 0, [1, 1], [0, 0])
        assert t.generators()[1] == pauli(3, 0, [0, 0], [1, 2])
        assert t.stabilizes(ghz_vector(2, 3))
        assert tb.ghz_tableau(1, 3).generators() == [pauli(3, 0, [1], [0])]
        t = tb.ghz_tableau(3, 5)
        assert not t.commutation_matrix().any()
        t.check_invariants()

    @pytest.mark.parametrize("n,d", [(2, 3), (3, 3), (3, 5), (2, 7)])
    def test_ghz_stabilizes_dense_state(self, n, d):
        assert tb.ghz_tableau(n, d).stabilizes(ghz_vector(n, d))

    def test_invariant_violation_detected(self):
        bad = tb.StabilizerTableau.from_generators([pauli(3, 0, [1], [0])])
        bad.check_invariants()
        with pytest.raises(SimulationError):
            tb.StabilizerTableau.from_generators([pauli(3, 0, [1, 0], [0, 0]), pauli(3, 0, [0, 0], [1, 0])]).check_invariants()
        with pytest.raises(SimulationError):
            tb.StabilizerTableau.from_generators([pauli(3, 0, [1, 0], [0, 0]), pauli(3, 0, [2, 0], [0, 0])]).check_invariants()

    def test_zero_state_measures_zero(self, rng):
        t = tb.zero_tableau(4, 5)
        for q in range(4):
            assert tb.is_deterministic(t, q)
            assert tb.measure_z(t, q, rng)[0] == 0

    def test_bell_outcomes_equal(self, rng):
        for _ in range(20):
            t = tb.ghz_tableau(2, 3)
            a, _ = tb.measure_z(t, 0, rng)
            assert tb.is_deterministic(t, 1)
            b, _ = tb.measure_z(t, 1, rng)
            assert a == b

    def test_forced_deterministic_mismatch(self, rng):
        with pytest.raises(DomainError):
            tb.measure_z(tb.zero_tableau(1, 3), 0, rng, outcome=1)

    def test_post_hadamard_outcomes_uniform(self, rng):
        from scipy import stats

        counts = np.zeros(5)
        for _ in range(2000):
            t = tb.ghz_tableau(3, 5)
            for q in range(3):
                tb.apply_h(t, q)
            counts[tb.measure_z(t, 0, rng)[0]] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from((3, 5)), st.integers(0, 2**32 - 1))
    def test_random_circuits_track_dense_state(self, d, seed):
        """Random Clifford circuits with measurements: the tableau stabilizes the dense state."""
        rng = np.random.default_rng(seed)
        n = 3
        t = tb.zero_tableau(n, d)
        psi = sv.zero_state(n, d)
        for _ in range(12):
            op = int(rng.integers(6))
            q = int(rng.integers(n))
            if op == 0:
                tb.apply_h(t, q)
                sv.apply_h(psi, q)
            elif op == 1:
                tb.apply_h(t, q, inverse=True)
                sv.apply_h(psi, q, inverse=True)
            elif op == 2:
                c = int((q + 1 + rng.integers(n - 1)) % n)
                inv = bool(rng.integers(2))
                tb.apply_cx(t, c, q, inverse=inv)
                sv.apply_cx(psi, c, q, inverse=inv)
            elif op == 3:
                a = int(rng.integers(d))
                tb.apply_z_pow(t, q, a)
                sv.apply_z_pow(psi, q, a)
            elif op == 4:
                a = int(rng.integers(d))
                tb.apply_x_pow(t, q, a)
                sv.apply_x_pow(psi, q, a)
            else:
                probs = sv.branch_probabilities(psi, q)
                if tb.is_deterministic(t, q):
                    j, _ = tb.measure_z(t, q, rng)
                    assert abs(probs[j] - 1) < TOL
                else:
                    np.testing.assert_allclose(probs, np.full(d, 1 / d), atol=TOL)
                    j, _ = tb.measure_z(t, q, rng)
                sv.measure_z(psi, q, rng, outcome=j)
            t.check_invariants()
            assert t.stabilizes(psi)

    def test_rank_mod_p(self):
        assert tb.rank_mod_p(np.array([[1, 2], [2, 4]]), 5) == 1
        assert tb.rank_mod_p(np.array([[1, 2], [2, 3]]), 5) == 2


def test_protocol_steps_scale_to_a_thousand_clients():
    n, d = 1000, 10007
    rng = np.random.default_rng(7)
    ys = rng.integers(10, size=n)
    start = time.perf_counter()
    t = tb.ghz_tableau(n, d)
    for i, y in enumerate(ys):
        tb.apply_z_pow(t, i, int(y))
    zs = []
    for i in range(n):
        tb.apply_h(t, i)
        zs.append(tb.measure_z(t, i, rng)[0])
    assert time.perf_counter() - start < 10
    assert (-sum(zs)) % d == ys.sum()
