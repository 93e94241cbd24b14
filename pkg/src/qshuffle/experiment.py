"""Batch experiments: many protocol runs, per-trial records and a summary table.

Randomness is split with ``numpy.random.SeedSequence``: the client inputs come
from ``spawn_key=(0,)`` and trial ``i`` uses ``spawn_key=(1, i)`` for every
backend, so trial streams do not depend on worker count or backend order.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qshuffle import stats
from qshuffle.arith import next_prime
from qshuffle.errors import ConfigError
from qshuffle.protocol import BACKENDS, ProtocolConfig, ProtocolTranscript, run_protocol

FORMATS = ("jsonl", "json")
INPUT_STREAM = 0
TRIAL_STREAM = 1


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    kappa: int
    trials: int
    d: int | None = None
    epsilon: float | None = None
    gamma: float | None = None
    backends: tuple[str, ...] = ("statevector",)
    seed: int = 0
    out: Path | None = None
    format: str = "jsonl"
    inputs: tuple[int, ...] | None = None
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        if (self.epsilon is None) == (self.gamma is None):
            raise ConfigError("supply exactly one of --epsilon and --gamma")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if not self.backends:
            raise ConfigError("at least one backend is required")
        for b in self.backends:
            if b not in BACKENDS:
                raise ConfigError(f"unknown backend {b!r}; choose from {', '.join(BACKENDS)}")
        if len(set(self.backends)) != len(self.backends):
            raise ConfigError("backends must be distinct")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}; choose from {', '.join(FORMATS)}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.inputs is not None and len(self.inputs) != self.n:
            raise ConfigError(f"expected {self.n} inputs, got {len(self.inputs)}")

    @property
    def resolved_d(self) -> int:
        return self.d if self.d is not None else next_prime((self.kappa - 1) * self.n)

    def config(self, backend: str) -> ProtocolConfig:
        return ProtocolConfig.create(
            self.n,
            self.kappa,
            d=self.resolved_d,
            gamma=self.gamma,
            epsilon=self.epsilon,
            backend=backend,
            seed=self.seed,
        )

    def client_inputs(self) -> tuple[int, ...]:
        if self.inputs is not None:
            return tuple(int(x) for x in self.inputs)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(INPUT_STREAM,)))
        return tuple(int(x) for x in rng.integers(self.kappa, size=self.n))


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(TRIAL_STREAM, index)))


def _run_trial(args) -> tuple[dict, int]:
    config, inputs, index = args
    start = time.perf_counter_ns()
    transcript = run_protocol(config, inputs, trial_rng(config.seed, index))
    elapsed = time.perf_counter_ns() - start
    return transcript.to_dict(), elapsed


def run_trials(spec: ExperimentSpec, backend: str) -> list[dict]:
    """One record per trial: transcript fields plus trial_index and elapsed_ns.

    elapsed_ns is null unless ``spec.timing`` is set, keeping reports reproducible.
    """
    config = spec.config(backend)
    inputs = spec.client_inputs()
    jobs = [(config, inputs, i) for i in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=max(1, spec.trials // (4 * spec.workers))))
    else:
        results = [_run_trial(j) for j in jobs]
    records = []
    for i, (record, elapsed) in enumerate(results):
        record["trial_index"] = i
        record["elapsed_ns"] = elapsed if spec.timing else None
        records.append(record)
    return records


def record_to_transcript(record: dict) -> ProtocolTranscript:
    return ProtocolTranscript.from_dict({k: v for k, v in record.items() if k not in ("trial_index", "elapsed_ns")})


@dataclass
class BackendSummary:
    backend: str
    trials: int
    true_sum: int
    mean_estimate: float | None
    exact_match_rate: float
    histograms: np.ndarray
    uniformity: list[stats.TestResult]
    joint: np.ndarray
    mean_elapsed_ns: float | None = None


def summarize(records: list[dict], backend: str, d: int, timing: bool) -> BackendSummary:
    reports = np.array([[c["z"] for c in r["clients"]] for r in records], dtype=np.int64)
    ysum = np.array([sum(c["y"] for c in r["clients"]) for r in records])
    decoded = np.array([r["z"] for r in records])
    estimates = [r["estimate"] for r in records if r["estimate"] is not None]
    hist = np.stack([stats.histogram(reports[:, i], d) for i in range(reports.shape[1])])
    return BackendSummary(
        backend=backend,
        trials=len(records),
        true_sum=sum(c["x"] for c in records[0]["clients"]),
        mean_estimate=float(np.mean(estimates)) if estimates else None,
        exact_match_rate=float(np.mean(decoded == ysum)),
        histograms=hist,
        uniformity=[stats.chi_square_uniform(h) for h in hist],
        joint=stats.joint_counts(reports, d),
        mean_elapsed_ns=float(np.mean([r["elapsed_ns"] for r in records])) if timing else None,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_rows(summaries: list[BackendSummary]) -> list[tuple]:
    rows: list[tuple] = []
    for s in summaries:
        rows.append((s.backend, "trials", "", "", s.trials))
        rows.append((s.backend, "true_sum", "", "", s.true_sum))
        rows.append((s.backend, "mean_estimate", "", "", s.mean_estimate))
        rows.append((s.backend, "exact_match_rate", "", "", s.exact_match_rate))
        if s.mean_elapsed_ns is not None:
            rows.append((s.backend, "mean_elapsed_ns", "", "", s.mean_elapsed_ns))
        for i, (hist, test) in enumerate(zip(s.histograms, s.uniformity), start=1):
            for k, count in enumerate(hist):
                rows.append((s.backend, "histogram", i, k, int(count)))
            rows.append((s.backend, "uniformity_chi2", i, "", test.statistic))
            rows.append((s.backend, "uniformity_p", i, "", test.pvalue))
    for a in range(len(summaries)):
        for b in range(a + 1, len(summaries)):
            sa, sb = summaries[a], summaries[b]
            test = stats.chi_square_two_sample(sa.joint, sb.joint)
            pair = f"{sa.backend}|{sb.backend}"
            rows.append((pair, "joint_chi2", "", "", test.statistic))
            rows.append((pair, "joint_chi2_dof", "", "", test.dof))
            rows.append((pair, "joint_chi2_p", "", "", test.pvalue))
    return rows


def render_summary(rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("backend", "metric", "client", "outcome", "value"))
    for row in rows:
        writer.writerow(tuple(_fmt(v) for v in row))
    return buf.getvalue()


def render_records(records: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records)
    return json.dumps(records, indent=1) + "\n"


@dataclass
class ExperimentResult:
    records: dict[str, list[dict]]
    summaries: list[BackendSummary]
    summary_csv: str
    files: list[Path] = field(default_factory=list)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every backend, then write ``trials-<backend>.<fmt>`` and ``summary.csv`` under ``spec.out``."""
    d = spec.resolved_d
    for b in spec.backends:
        spec.config(b)  # fail on any invalid backend before running the others
    records = {b: run_trials(spec, b) for b in spec.backends}
    summaries = [summarize(records[b], b, d, spec.timing) for b in spec.backends]
    result = ExperimentResult(records, summaries, render_summary(summary_rows(summaries)))
    if spec.out is not None:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        for b in spec.backends:
            path = out / f"trials-{b}.{spec.format}"
            path.write_text(render_records(records[b], spec.format))
            result.files.append(path)
        path = out / "summary.csv"
        path.write_text(result.summary_csv)
        result.files.append(path)
    return result
