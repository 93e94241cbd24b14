import json

import pytest

from qshuffle import cli
from qshuffle.errors import ConfigError
from qshuffle.experiment import ExperimentSpec, record_to_transcript, run_experiment


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExperimentSpec:
    def test_default_dimension(self):
        assert ExperimentSpec(n=4, kappa=3, trials=1, gamma=0.1).resolved_d == 11

    def test_exactly_one_privacy_parameter(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(n=2, kappa=2, trials=1)
        with pytest.raises(ConfigError):
            ExperimentSpec(n=2, kappa=2, trials=1, gamma=0.1, epsilon=1.0)

    def test_unknown_backend(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(n=2, kappa=2, trials=1, gamma=0.1, backends=("gpu",))


class TestRunExperiment:
    def test_noiseless_records(self, tmp_path):
        spec = ExperimentSpec(n=3, kappa=2, trials=100, gamma=0.0, seed=4, out=tmp_path, inputs=(1, 0, 1))
        result = run_experiment(spec)
        records = result.records["statevector"]
        assert len(records) == 100
        assert all(r["estimate"] == 2.0 for r in records)
        assert result.summaries[0].exact_match_rate == 1.0
        lines = (tmp_path / "trials-statevector.jsonl").read_text().splitlines()
        assert [json.loads(line)["trial_index"] for line in lines] == list(range(100))

    def test_records_round_trip(self, tmp_path):
        spec = ExperimentSpec(n=3, kappa=2, trials=10, gamma=0.4, backends=("tableau",), out=tmp_path, format="json")
        run_experiment(spec)
        records = json.loads((tmp_path / "trials-tableau.json").read_text())
        for r in records:
            t = record_to_transcript(r)
            t.check_invariants()
            assert {**t.to_dict(), "trial_index": r["trial_index"], "elapsed_ns": None} == r

    def test_backend_comparison_emitted(self):
        spec = ExperimentSpec(n=3, kappa=2, trials=300, gamma=0.0, backends=("analytic", "statevector"), inputs=(1, 1, 0))
        csv_text = run_experiment(spec).summary_csv
        rows = [line.split(",") for line in csv_text.splitlines()]
        p = [float(r[4]) for r in rows if r[0] == "analytic|statevector" and r[1] == "joint_chi2_p"]
        assert len(p) == 1 and p[0] > 0.01

    def test_same_seed_identical_bytes(self, tmp_path):
        kw = dict(n=3, kappa=3, trials=20, epsilon=1.0, backends=("statevector", "analytic"), seed=5)
        run_experiment(ExperimentSpec(out=tmp_path / "a", **kw))
        run_experiment(ExperimentSpec(out=tmp_path / "b", **kw))
        for name in ("trials-statevector.jsonl", "trials-analytic.jsonl", "summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_worker_pool_matches_serial(self, tmp_path):
        kw = dict(n=2, kappa=2, trials=12, gamma=0.5, backends=("statevector",), seed=2)
        serial = run_experiment(ExperimentSpec(**kw)).records
        pooled = run_experiment(ExperimentSpec(workers=2, **kw)).records
        assert serial == pooled

    def test_timing_opt_in(self):
        spec = ExperimentSpec(n=2, kappa=2, trials=3, gamma=0.5, timing=True)
        result = run_experiment(spec)
        assert all(r["elapsed_ns"] > 0 for r in result.records["statevector"])
        assert "mean_elapsed_ns" in result.summary_csv


class TestCli:
    def test_run_to_stdout(self, capsys):
        code, out, _ = run_cli(["run", "--n", "2", "--kappa", "2", "--gamma", "0", "--trials", "5"], capsys)
        assert code == cli.EXIT_OK
        assert out.startswith("backend,metric,client,outcome,value")
        assert "statevector,exact_match_rate,,,1.0" in out

    def test_run_to_directory(self, tmp_path, capsys):
        argv = ["run", "--n", "3", "--kappa", "2", "--epsilon", "1", "--trials", "4", "--backend",
                "tableau,analytic", "--seed", "7", "--out", str(tmp_path), "--format", "jsonl"]
        code, out, _ = run_cli(argv, capsys)
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.csv", "trials-analytic.jsonl", "trials-tableau.jsonl"]

    def test_composite_dimension(self, capsys):
        code, _, err = run_cli(["run", "--n", "2", "--kappa", "2", "--gamma", "0", "--d", "4"], capsys)
        assert code == cli.EXIT_CONFIG
        assert "prime" in err

    def test_dimension_too_small(self, capsys):
        code, _, err = run_cli(["run", "--n", "4", "--kappa", "2", "--gamma", "0", "--d", "3"], capsys)
        assert code == cli.EXIT_CONFIG
        assert "(kappa-1)*n" in err

    def test_usage_error_is_config_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--kappa", "2"])
        assert exc.value.code == cli.EXIT_CONFIG

    def test_verify_subset(self, capsys):
        code, out, _ = run_cli(["verify", "--only", "A2,A4"], capsys)
        assert code == cli.EXIT_OK
        assert "A2   PASS" in out and "A4   PASS" in out
        assert out.count("out of scope:") == 2

    def test_verify_reports_failure(self, capsys, monkeypatch):
        from qshuffle import acceptance, dp

        # perturb the de-bias constant: A5 must notice
        real = dp.debias
        monkeypatch.setattr(dp, "debias", lambda s, n, k, g: real(s, n, k, g) + 0.5)
        assert acceptance.dp.debias is not real
        code, out, _ = run_cli(["verify", "--only", "A5"], capsys)
        assert code == cli.EXIT_VERIFY
        assert "A5   FAIL" in out

    def test_verify_unknown_criterion(self, capsys):
        code, _, _ = run_cli(["verify", "--only", "A99"], capsys)
        assert code == cli.EXIT_CONFIG
