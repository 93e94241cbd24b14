import numpy as np
import pytest
from scipy import stats as sps

from qshuffle import surface_code as sc
from qshuffle import tableau as tb
from qshuffle.errors import DomainError

LATTICES = [(L, d) for L in (2, 3, 4, 5) for d in (3, 5, 7)]


def exponents(op, which):
    vec = op.op.x if which == "x" else op.op.z
    d = op.op.d
    return sorted(int(v) if v <= d // 2 else int(v) - d for v in vec[vec != 0])


class TestGenerators:
    def test_small_lattice_fixture(self):
        lat = sc.SurfaceCodeLattice(2, 3)
        assert lat.n_qudits == 13
        assert len(lat.vertices) == 6 and len(lat.faces) == 6
        gens = sc.build_generators(2, 3)
        assert len(gens) == 12
        # frozen supports for the 2x2 layout: (kind, site) -> sorted qudit indices
        supports = {(g.kind.value, g.site): sorted(g.support) for g in gens}
        assert supports[("vertex", (0, 0))] == [0, 1, 9]
        assert supports[("vertex", (1, 1))] == [4, 5, 10, 12]
        assert supports[("vertex", (2, 1))] == [7, 8, 12]
        assert supports[("face", (0, 0))] == [0, 3, 9]
        assert supports[("face", (0, 1))] == [1, 4, 9, 10]
        assert supports[("face", (1, 2))] == [5, 8, 12]

    @pytest.mark.parametrize("L,d", LATTICES)
    def test_weights_and_exponent_patterns(self, L, d):
        lat = sc.SurfaceCodeLattice(L, d)
        for g in lat.generators:
            assert 3 <= len(g.support) <= 4
            if g.kind is sc.OperatorKind.VERTEX:
                assert not g.op.z.any()
                if len(g.support) == 4:
                    assert exponents(g, "x") == [-1, -1, 1, 1]
            else:
                assert not g.op.x.any()
                if len(g.support) == 4:
                    assert exponents(g, "z") == [-1, -1, 1, 1]

    def test_face_zigzag_order(self):
        lat = sc.SurfaceCodeLattice(3, 5)
        r, c = 1, 1
        op = lat.face_operator(r, c).op
        a, b, cc, dd = lat.h(r + 1, c), lat.v(r, c - 1), lat.v(r, c), lat.h(r, c)
        assert [op.z[q] for q in (a, b, cc, dd)] == [1, 1, 4, 4]

    def test_vertex_order(self):
        lat = sc.SurfaceCodeLattice(3, 5)
        r, c = 1, 1
        op = lat.vertex_operator(r, c).op
        e, f, g, h = lat.h(r, c), lat.v(r, c), lat.h(r, c + 1), lat.v(r - 1, c)
        assert [op.x[q] for q in (e, f, g, h)] == [1, 4, 4, 1]

    @pytest.mark.parametrize("L,d", LATTICES)
    def test_all_pairs_commute(self, L, d):
        report = sc.check_commutation(sc.build_generators(L, d))
        assert report.ok, report.violations
        n = len(sc.build_generators(L, d))
        assert report.pairs_checked == n * (n - 1) // 2

    def test_violation_reported(self):
        x = tb.PauliOperator.single(2, 3, 0, x=1)
        z = tb.PauliOperator.single(2, 3, 0, z=1)
        ops = [sc.CodeOperator(sc.OperatorKind.VERTEX, None, x), sc.CodeOperator(sc.OperatorKind.FACE, None, z)]
        report = sc.check_commutation(ops)
        assert not report.ok and report.violations == ((0, 1, 1),)

    @pytest.mark.parametrize("d", (3, 5))
    def test_generators_independent(self, d):
        # only the all-vertex and all-face products could be dependencies; neither is
        lat = sc.SurfaceCodeLattice(3, d)
        gens = np.stack([np.concatenate([g.op.x, g.op.z]) for g in lat.generators])
        assert tb.rank_mod_p(gens, d) == len(lat.generators)

    def test_rejects_small_lattice(self):
        with pytest.raises(DomainError):
            sc.SurfaceCodeLattice(1, 3)


class TestLogicals:
    def test_zero_power_is_identity(self):
        xbar, zbar = sc.build_logicals(3, 3, 0, 0)
        assert xbar.op.is_identity() and zbar.op.is_identity()

    @pytest.mark.parametrize("L,d", LATTICES)
    def test_commute_with_generators(self, L, d):
        lat = sc.SurfaceCodeLattice(L, d)
        for j in range(d):
            xbar, zbar = sc.build_logicals(L, d, j, (j + 1) % d)
            assert not sc.syndrome(lat, xbar.op).any()
            assert not sc.syndrome(lat, zbar.op).any()

    @pytest.mark.parametrize("L,d", LATTICES)
    def test_logical_pair_commutation(self, L, d):
        xbar, zbar = sc.build_logicals(L, d, 1, 1)
        assert len(xbar.support & zbar.support) == 1
        assert xbar.op.symplectic_form(zbar.op) in (1, d - 1)
        # Xbar Zbar = omega^-1 Zbar Xbar
        assert xbar.op.commutation_phase(zbar.op) == d - 1
        lhs, rhs = xbar.op * zbar.op, zbar.op * xbar.op
        assert (lhs.phase - rhs.phase) % d in (1, d - 1)

    def test_logicals_not_generated(self):
        lat = sc.SurfaceCodeLattice(3, 3)
        gens = np.stack([np.concatenate([g.op.x, g.op.z]) for g in lat.generators])
        xbar, _ = sc.build_logicals(3, 3, 1, 1)
        extended = np.vstack([gens, np.concatenate([xbar.op.x, xbar.op.z])])
        assert tb.rank_mod_p(extended, 3) == tb.rank_mod_p(gens, 3) + 1


class TestNoiseAndSyndromes:
    def test_zero_noise(self, rng):
        assert sc.sample_noise(sc.SurfaceCodeLattice(3, 5), 0.0, rng).is_identity()

    def test_noise_rates(self, rng):
        lat = sc.SurfaceCodeLattice(2, 5)
        p = 0.3
        samples = [sc.sample_noise(lat, p, rng) for _ in range(8000)]
        xs = np.stack([e.x for e in samples])
        zs = np.stack([e.z for e in samples])
        for arr in (xs, zs):
            rate = np.mean(arr != 0)
            sigma = np.sqrt(p * (1 - p) / arr.size)
            assert abs(rate - p) < 4 * sigma
            powers = np.bincount(arr[arr != 0], minlength=5)[1:]
            assert sps.chisquare(powers).pvalue > 0.01

    def test_invalid_probability(self, rng):
        with pytest.raises(DomainError):
            sc.sample_noise(sc.SurfaceCodeLattice(2, 3), 1.5, rng)

    def test_trivial_syndromes(self):
        lat = sc.SurfaceCodeLattice(3, 3)
        assert not sc.syndrome(lat, tb.PauliOperator.identity(lat.n_qudits, 3)).any()
        for g in lat.generators:
            assert not sc.syndrome(lat, g.op).any()

    def test_bulk_x_error_fires_two_faces(self):
        lat = sc.SurfaceCodeLattice(3, 5)
        q = lat.h(1, 1)
        fired = np.nonzero(sc.syndrome(lat, tb.PauliOperator.single(lat.n_qudits, 5, q, x=2)))[0]
        assert [lat.generators[i].site for i in fired] == [(0, 1), (1, 1)]
        assert all(lat.generators[i].kind is sc.OperatorKind.FACE for i in fired)

    @pytest.mark.parametrize("L,d", [(2, 3), (3, 5), (4, 3)])
    def test_single_errors_fire_adjacent_generators(self, L, d):
        lat = sc.SurfaceCodeLattice(L, d)
        vidx = {s: i for i, s in enumerate(lat.vertices)}
        fidx = {p: len(lat.vertices) + i for i, p in enumerate(lat.faces)}
        for q in range(lat.n_qudits):
            for a in range(1, d):
                sx = sc.syndrome(lat, tb.PauliOperator.single(lat.n_qudits, d, q, x=a))
                sz = sc.syndrome(lat, tb.PauliOperator.single(lat.n_qudits, d, q, z=a))
                assert set(np.nonzero(sx)[0]) == {fidx[p] for p in lat.edge_faces(q)}
                assert set(np.nonzero(sz)[0]) == {vidx[s] for s in lat.edge_endpoints(q)}

    @pytest.mark.parametrize("L,d", [(2, 3), (4, 5)])
    def test_syndrome_linear(self, L, d, rng):
        lat = sc.SurfaceCodeLattice(L, d)
        for _ in range(300):
            e1, e2 = sc.sample_noise(lat, 0.2, rng), sc.sample_noise(lat, 0.2, rng)
            np.testing.assert_array_equal(
                sc.syndrome(lat, e1 * e2), (sc.syndrome(lat, e1) + sc.syndrome(lat, e2)) % d
            )

    def test_syndrome_matches_commutation_phase(self, rng):
        lat = sc.SurfaceCodeLattice(2, 3)
        e = sc.sample_noise(lat, 0.5, rng)
        expected = [g.op.commutation_phase(e) for g in lat.generators]
        np.testing.assert_array_equal(sc.syndrome(lat, e), expected)
