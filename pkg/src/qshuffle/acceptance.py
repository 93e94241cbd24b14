"""Acceptance checks A1-A11, shared by ``qshuffle verify`` and the test suite.

Each check returns a :class:`CriterionResult` carrying a measured value so a
failure says how far off it was. Seeds are fixed so results are reproducible.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from qshuffle import dp, stats
from qshuffle import protocol as pr
from qshuffle import statevec as sv
from qshuffle import surface_code as sc
from qshuffle import tableau as tb
from qshuffle.errors import ConfigError
from qshuffle.experiment import ExperimentSpec, run_experiment

ALPHA = 0.01

OUT_OF_SCOPE_NOTES = (
    "eps0 ~ 1.0032 shuffle amplification figure (kappa=10, n=100, delta=1e-6, eps=0.1): "
    "needs an external amplification-bound script; eps0 is accepted as an input instead",
    "8.3% surface-code threshold: requires a decoder, which is not implemented",
)


@dataclass(frozen=True)
class CriterionResult:
    criterion: str
    title: str
    passed: bool
    measured: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.criterion:<4} {status}  {self.title}: {self.measured} ({self.seconds:.1f}s)"


def _rng(tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(20261018, spawn_key=(tag,)))


# -- A1 ----------------------------------------------------------------------


def check_a1(trials: int = 1000) -> CriterionResult:
    """Exact decoding for every (n, d) in {2,3,4} x {3,5,7,11}, kappa = 2.

    Noiseless runs (gamma = 0) so y = x and every tuple of {0,1}^n is hit,
    cycling through tuples over ``trials`` runs per (n, d). Where d <= n the
    full protocol must refuse the config; the quantum engine is then checked
    on the tuples whose sum is below d.
    """
    kappa = 2
    rng = _rng(1)
    failures = []
    runs = 0
    rejected = []
    for n, d in itertools.product((2, 3, 4), (3, 5, 7, 11)):
        tuples = list(itertools.product(range(kappa), repeat=n))
        valid = d > (kappa - 1) * n
        if valid:
            config = pr.ProtocolConfig.create(n, kappa, d=d, gamma=0.0, backend="statevector")
        else:
            try:
                pr.ProtocolConfig.create(n, kappa, d=d, gamma=0.0, backend="statevector")
                failures.append(f"(n={n},d={d}) config accepted")
            except ConfigError:
                rejected.append((n, d))
            tuples = [t for t in tuples if sum(t) < d]
        for k in range(trials):
            ys = tuples[k % len(tuples)]
            if valid:
                t = pr.run_protocol(config, ys, rng)
                m, target = t.z, t.y_sum
            else:
                m = pr.server_decode(pr.simulate_reports(ys, d, "statevector", rng), d)
                target = sum(ys)
            runs += 1
            if m != target:
                failures.append(f"(n={n},d={d},y={ys}) m={m}")
    passed = not failures
    measured = f"{runs - len(failures)}/{runs} exact; configs with d<=(kappa-1)n rejected: {rejected}"
    if failures:
        measured += f"; first failures {failures[:3]}"
    return CriterionResult("A1", "decoded m equals sum y", passed, measured)


# -- A2 ----------------------------------------------------------------------


def check_a2() -> CriterionResult:
    """Once outputs are encoded, every client's reduced state is I/d for every m."""
    rng = _rng(2)
    worst = 0.0
    cases = 0
    for n, d in itertools.product((2, 3), (3, 5, 7)):
        base, _ = pr.distribute_ghz(n, d, "statevector", rng)
        for m in range(d):
            ys = [m] + [0] * (n - 1)
            psi = base.copy()
            for i, y in enumerate(ys):
                pr.encode_output(psi, i, y)
            for i in range(n):
                rho = sv.reduced_density(psi, [i]).matrix
                worst = max(worst, float(np.abs(rho - np.eye(d) / d).max()))
                cases += 1
    return CriterionResult("A2", "client reduced state is I/d", worst <= 1e-10, f"max |rho - I/d| = {worst:.2e} over {cases} states")


# -- A3 ----------------------------------------------------------------------


def check_a3(runs: int = 10_000) -> CriterionResult:
    """Per-client and pairwise outcome uniformity over full statevector runs."""
    n, kappa, d = 3, 2, 5
    config = pr.ProtocolConfig.create(n, kappa, d=d, gamma=0.5, backend="statevector")
    rng = _rng(3)
    inputs = (1, 0, 1)
    z = np.array([[c.z for c in pr.run_protocol(config, inputs, rng).clients] for _ in range(runs)])
    ps = [stats.chi_square_uniform(stats.histogram(z[:, i], d)).pvalue for i in range(n)]
    pair_ps = [
        stats.chi_square_uniform(stats.joint_counts(z[:, [i, j]], d)).pvalue for i, j in itertools.combinations(range(n), 2)
    ]
    passed = min(ps) > ALPHA and min(pair_ps) > ALPHA
    freq = np.bincount(z[:, 0], minlength=d) / runs
    return CriterionResult(
        "A3",
        "client outcomes uniform",
        passed,
        f"min per-client p = {min(ps):.3f}, min pairwise p = {min(pair_ps):.3f}, client1 freq {np.round(freq, 3).tolist()} vs 1/d = {1 / d:.3f}",
    )


# -- A4 ----------------------------------------------------------------------


def _random_state(n: int, d: int, rng) -> sv.StateVector:
    amps = rng.normal(size=d**n) + 1j * rng.normal(size=d**n)
    return sv.StateVector(amps / np.linalg.norm(amps), n, d)


def check_a4() -> CriterionResult:
    rng = _rng(4)
    worst = 0.0
    cases = 0
    for d in (3, 5):
        targets = [pr.prepare_ghz(3, d), _random_state(2, d, rng)]
        for psi0 in targets:
            for share in range(psi0.n):
                for l, s in itertools.product(range(d), repeat=2):
                    corr, psi = pr.teleport_share(psi0.copy(), share, rng, outcome=(l, s))
                    pr.apply_correction(psi, share, corr)
                    worst = max(worst, 1.0 - abs(sv.inner(psi0, psi)))
                    cases += 1
    return CriterionResult("A4", "teleportation restores the state", worst <= 1e-9, f"min |<psi0|psi>| = {1 - worst:.12f} over {cases} forced branches")


# -- A5 ----------------------------------------------------------------------


def check_a5(trials: int = 100_000) -> CriterionResult:
    kappa, gamma, n = 3, 0.5, 50
    rng = _rng(5)
    x = rng.integers(kappa, size=n)
    true_sum = int(x.sum())
    config = dp.RandomizerConfig(kappa, gamma)
    y = dp.randomize_batch(np.broadcast_to(x, (trials, n)), config, rng)
    est = np.array([dp.debias(s, n, kappa, gamma) for s in y.sum(axis=1)])
    se = est.std(ddof=1) / math.sqrt(trials)
    dev = abs(est.mean() - true_sum) / se
    return CriterionResult("A5", "de-biased sum is unbiased", dev <= 3.0, f"mean {est.mean():.3f} vs T={true_sum}, {dev:.2f} SE")


# -- A6 ----------------------------------------------------------------------


def check_a6(samples: int = 100_000) -> CriterionResult:
    rng = _rng(6)
    worst_sigma = 0.0
    worst_ratio_gap = -math.inf
    for kappa in (2, 3, 4, 5):
        for eps in (0.5, 1.0, 2.0):
            config = dp.RandomizerConfig.from_epsilon(kappa, eps)
            ratio = dp.max_privacy_ratio(config)
            worst_ratio_gap = max(worst_ratio_gap, ratio - math.exp(eps))
            for x in range(kappa):
                p = config.keep_probability
                y = dp.randomize_batch(np.full(samples, x), config, rng)
                sigma = math.sqrt(p * (1 - p) / samples)
                worst_sigma = max(worst_sigma, abs(float(np.mean(y == x)) - p) / sigma)
    passed = worst_sigma <= 4.0 and worst_ratio_gap <= 1e-9
    return CriterionResult(
        "A6",
        "randomizer law and LDP bound",
        passed,
        f"max |Pr[y=x] dev| = {worst_sigma:.2f} sigma; max ratio - e^eps = {worst_ratio_gap:.1e}",
    )


# -- A7 ----------------------------------------------------------------------


def check_a7(samples: int = 100_000) -> CriterionResult:
    kappa, gamma, d = 3, 0.6, 11
    rng = _rng(7)
    config = dp.RandomizerConfig(kappa, gamma)
    worst_tv = 0.0
    high_j = 0
    for x in range(kappa):
        j, _, yq = pr.quantum_randomize_batch(x, kappa, d, gamma, rng, samples)
        yc = dp.randomize_batch(np.full(samples, x), config, rng)
        high_j += int(np.count_nonzero(j >= kappa))
        worst_tv = max(worst_tv, stats.total_variation(stats.histogram(yq, kappa), stats.histogram(yc, kappa)))
    passed = worst_tv < 0.01 and high_j == 0
    return CriterionResult("A7", "dit flip channel matches randomize", passed, f"max TV = {worst_tv:.4f}; j >= kappa seen {high_j} times")


# -- A8 ----------------------------------------------------------------------


def tableau_encode_and_decode(n: int, d: int, ys, rng) -> int:
    state = tb.ghz_tableau(n, d)
    reports = pr.run_local_phase(state, ys, rng)
    return pr.server_decode(reports, d)


def check_a8(samples: int = 10_000, big_n: int = 1000, big_d: int = 10007) -> CriterionResult:
    n, d = 3, 5
    ys = (1, 0, 1)
    rng = _rng(8)
    z_sv = np.array([pr.simulate_reports(ys, d, "statevector", rng) for _ in range(samples)])
    z_tb = np.array([pr.simulate_reports(ys, d, "tableau", rng) for _ in range(samples)])
    test = stats.chi_square_two_sample(stats.joint_counts(z_sv, d), stats.joint_counts(z_tb, d))

    kappa = 10
    big_rng = _rng(80)
    big_ys = big_rng.integers(kappa, size=big_n)
    start = time.perf_counter()
    m = tableau_encode_and_decode(big_n, big_d, big_ys, big_rng)
    elapsed = time.perf_counter() - start
    exact = m == int(big_ys.sum())
    passed = test.pvalue > ALPHA and elapsed < 10.0 and exact
    return CriterionResult(
        "A8",
        "tableau matches statevector and scales",
        passed,
        f"two-sample p = {test.pvalue:.3f} (dof {test.dof}); n={big_n}, d={big_d} took {elapsed:.2f}s, m==sum y: {exact}",
    )


# -- A9 ----------------------------------------------------------------------


def check_a9(samples: int = 10_000, draws: int = 1_000_000) -> CriterionResult:
    n, d = 3, 3
    ys = (1, 0, 1)
    m = sum(ys) % d
    rng = _rng(9)
    z_sv = np.array([pr.simulate_reports(ys, d, "statevector", rng) for _ in range(samples)])
    z_an = pr.analytic_sample_batch(m, n, d, rng, samples)
    test = stats.chi_square_two_sample(stats.joint_counts(z_sv, d), stats.joint_counts(z_an, d))

    ms = rng.integers(d, size=draws)
    big = pr.analytic_sample_batch(ms, n, d, rng, draws)
    ok = int(np.count_nonzero((big.sum(axis=1) + ms) % d == 0))
    passed = test.pvalue > ALPHA and ok == draws
    return CriterionResult("A9", "analytic oracle matches", passed, f"two-sample p = {test.pvalue:.3f}; ||z|| = -m in {ok}/{draws}")


# -- A10 ---------------------------------------------------------------------


def check_a10(pairs: int = 1000) -> CriterionResult:
    rng = _rng(10)
    problems = []
    for L, d in itertools.product((2, 3, 4), (3, 5)):
        lat = sc.SurfaceCodeLattice(L, d)
        gens = list(lat.generators)
        if not sc.check_commutation(gens).ok:
            problems.append(f"L={L},d={d}: generators fail to commute")
        for j, k in [(1, 1)] + [tuple(int(v) for v in rng.integers(1, d, size=2)) for _ in range(3)]:
            xbar, zbar = sc.build_logicals(L, d, j, k)
            if sc.syndrome(lat, xbar.op).any() or sc.syndrome(lat, zbar.op).any():
                problems.append(f"L={L},d={d}: logical fails to commute")
        xbar, zbar = sc.build_logicals(L, d, 1, 1)
        form = xbar.op.symplectic_form(zbar.op)
        if form not in (1, d - 1):
            problems.append(f"L={L},d={d}: logical form {form}")
        for _ in range(pairs):
            e1 = sc.sample_noise(lat, 0.2, rng)
            e2 = sc.sample_noise(lat, 0.2, rng)
            lhs = sc.syndrome(lat, e1 * e2)
            rhs = (sc.syndrome(lat, e1) + sc.syndrome(lat, e2)) % d
            if not np.array_equal(lhs, rhs):
                problems.append(f"L={L},d={d}: syndrome not linear")
                break
        vertex_index = {s: i for i, s in enumerate(lat.vertices)}
        face_index = {p: len(lat.vertices) + i for i, p in enumerate(lat.faces)}
        for q in range(lat.n_qudits):
            for a in range(1, d):
                xerr = tb.PauliOperator.single(lat.n_qudits, d, q, x=a)
                zerr = tb.PauliOperator.single(lat.n_qudits, d, q, z=a)
                fired_x = set(np.nonzero(sc.syndrome(lat, xerr))[0].tolist())
                fired_z = set(np.nonzero(sc.syndrome(lat, zerr))[0].tolist())
                if fired_x != {face_index[p] for p in lat.edge_faces(q)}:
                    problems.append(f"L={L},d={d}: X^{a} on qudit {q} fired {sorted(fired_x)}")
                if fired_z != {vertex_index[s] for s in lat.edge_endpoints(q)}:
                    problems.append(f"L={L},d={d}: Z^{a} on qudit {q} fired {sorted(fired_z)}")
    measured = "all lattices consistent" if not problems else "; ".join(problems[:3])
    return CriterionResult("A10", "surface code algebra", not problems, measured)


# -- A11 ---------------------------------------------------------------------


def check_a11() -> CriterionResult:
    spec_kwargs = dict(n=3, kappa=2, trials=50, gamma=0.3, backends=("statevector", "tableau", "analytic"), seed=11)
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in ("a", "b"):
            out = Path(tmp) / run
            run_experiment(ExperimentSpec(out=out, **spec_kwargs))
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = blobs[0] == blobs[1]
    return CriterionResult("A11", "same seed gives identical reports", same, f"{len(blobs[0])} files, identical: {same}")


CHECKS: dict[str, Callable[[], CriterionResult]] = {
    "A1": check_a1,
    "A2": check_a2,
    "A3": check_a3,
    "A4": check_a4,
    "A5": check_a5,
    "A6": check_a6,
    "A7": check_a7,
    "A8": check_a8,
    "A9": check_a9,
    "A10": check_a10,
    "A11": check_a11,
}


def run_check(key: str) -> CriterionResult:
    start = time.perf_counter()
    res = CHECKS[key]()
    return CriterionResult(res.criterion, res.title, res.passed, res.measured, time.perf_counter() - start)


def verify_suite(keys=None, echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    results = []
    for key in keys or CHECKS:
        res = run_check(key)
        if echo:
            echo(res.line())
        results.append(res)
    return results
