"""Campaign harness: configs, determinism, sweeps, CLI."""

import copy
import json

import pytest

from feistellab.cli import main
from feistellab.errors import ConfigurationError
from feistellab.harness import (
    ExperimentConfig,
    census_csv,
    classical_csv,
    config_from_text,
    make_config,
    run_campaign,
    run_census,
    run_classical,
    sweep,
    sweep_csv,
    wilson_interval,
)


def strip_timestamp(report):
    data = copy.deepcopy(report.data)
    data["metadata"].pop("generated_at")
    return data


class TestConfig:
    def test_text_roundtrip_is_byte_identical(self):
        cfg = ExperimentConfig(alg="alg1", n=6, epsilon=1 / 27, trials=5, seed=9,
                               measure_reg=2, mode="stacked", out="results")
        text = cfg.to_text()
        again = config_from_text(text)
        assert again == cfg
        assert again.to_text() == text

    def test_parse_skips_comments_and_blanks(self):
        cfg = config_from_text("# campaign\n\nalg=alg2\nn=4\nq=5\n")
        assert cfg.alg == "alg2" and cfg.q == 5

    def test_bad_lines_rejected(self):
        with pytest.raises(ConfigurationError):
            config_from_text("alg alg2\n")
        with pytest.raises(ConfigurationError):
            config_from_text("color=red\n")
        with pytest.raises(ConfigurationError):
            make_config(alg="alg1", n="six", q=1)

    def test_nested_invariants_enforced(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(alg="alg1", n=4, epsilon=2.0)
        with pytest.raises(ConfigurationError):
            ExperimentConfig(alg="alg1", n=4, q=1, trials=0)
        with pytest.raises(ConfigurationError):
            ExperimentConfig(alg="gk", n=4, k=3, q=1)

    def test_capacity_surfaced_before_any_work(self):
        from feistellab.errors import CapacityError

        with pytest.raises(CapacityError):
            ExperimentConfig(alg="alg2", n=13, q=1, trials=500)

    def test_default_k_per_algorithm(self):
        assert ExperimentConfig(alg="alg3", n=4, q=1).resolved_k == 3
        assert ExperimentConfig(alg="gk", n=4, q=1).resolved_k == 4
        assert ExperimentConfig(alg="alg1", n=4, q=1).resolved_k == 2


class TestWilson:
    def test_known_value(self):
        low, high = wilson_interval(50, 100)
        assert low == pytest.approx(0.4038, abs=2e-4)
        assert high == pytest.approx(0.5962, abs=2e-4)

    def test_edges(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)
        low, high = wilson_interval(0, 20)
        assert low == 0.0 and high < 0.2
        low, high = wilson_interval(20, 20)
        assert high == 1.0 and low > 0.8


class TestCampaign:
    def test_smoke_single_trial(self):
        cfg = ExperimentConfig(alg="alg1", n=4, epsilon=1 / 27, trials=1, seed=3)
        report = run_campaign(cfg)
        assert len(report.data["runs"]) == 2
        assert report.data["config"]["alg"] == "alg1"
        assert report.data["q"] == 3
        cells = report.data["confusion"]["stacked"]
        assert sum(cells["vfs"].values()) == 1
        assert sum(cells["rp"].values()) == 1
        assert report.data["summary"]["queries_per_run"] == 2 * 3 * 9
        assert "per_coset" in report.data["confusion"]

    def test_deterministic_reports(self):
        cfg = ExperimentConfig(alg="alg2", n=4, q=3, trials=3, seed=11)
        one = run_campaign(cfg)
        two = run_campaign(cfg)
        assert strip_timestamp(one) == strip_timestamp(two)

    def test_schedule_independence(self):
        cfg = ExperimentConfig(alg="alg1", n=4, epsilon=1 / 9, trials=4, seed=13)
        serial = run_campaign(cfg, jobs=1)
        pooled = run_campaign(cfg, jobs=2)
        assert strip_timestamp(serial) == strip_timestamp(pooled)

    def test_report_files(self, tmp_path):
        cfg = ExperimentConfig(alg="alg1", n=4, q=1, trials=2, seed=5)
        report = run_campaign(cfg)
        outdir = tmp_path / "out"
        report.save(str(outdir))
        loaded = json.loads((outdir / "report.json").read_text())
        assert loaded["q"] == 1
        lines = (outdir / "trials.jsonl").read_text().strip().split("\n")
        assert len(lines) == 4  # 2 classes x 2 runs x q=1
        first = json.loads(lines[0])
        assert {"class", "run", "trial", "y_samples", "x_bit"} <= set(first)
        header = (outdir / "summary.csv").read_text().split("\n")[0]
        assert header.startswith("alg,n,k,q,mode")

    def test_metadata_pins_reproduction(self):
        cfg = ExperimentConfig(alg="alg1", n=4, q=1, trials=1, seed=5)
        meta = run_campaign(cfg).data["metadata"]
        assert meta["prng"] == "pcg64"
        assert meta["mixer"] == "splitmix64"
        assert meta["config_text"] == cfg.to_text()
        assert len(meta["config_hash"]) == 64


class TestSweep:
    def test_query_growth_across_n(self):
        cfg = ExperimentConfig(alg="alg1", n=4, epsilon=1 / 27, trials=1, seed=7)
        results = sweep(cfg, "n", [4, 6, 8])
        per_trial = [r.data["summary"]["queries_per_trial"] for _, r in results]
        assert per_trial == [18, 22, 26]

    def test_budget_across_epsilon(self):
        cfg = ExperimentConfig(alg="alg1", n=4, epsilon=1 / 3, trials=1, seed=7)
        results = sweep(cfg, "epsilon", [1 / 3, 1 / 9, 1 / 27])
        assert [r.data["q"] for _, r in results] == [1, 2, 3]

    def test_empty_values_rejected_before_running(self):
        cfg = ExperimentConfig(alg="alg1", n=4, q=1, trials=1)
        with pytest.raises(ConfigurationError):
            sweep(cfg, "n", [])
        with pytest.raises(ConfigurationError):
            sweep(cfg, "rounds", [1])
        with pytest.raises(Exception):
            sweep(cfg, "n", [4, 0])  # one invalid value kills the whole sweep

    def test_csv(self):
        cfg = ExperimentConfig(alg="alg1", n=4, q=1, trials=1)
        results = sweep(cfg, "q", [1, 2])
        text = sweep_csv(results, "q")
        lines = text.strip().split("\n")
        assert lines[0].startswith("q,q,queries_per_trial")
        assert len(lines) == 3


class TestClassicalCampaign:
    def test_alg2_baseline(self):
        cfg = ExperimentConfig(alg="alg2", n=6, q=1, trials=5, seed=21)
        result = run_classical(cfg)
        assert result["statistic"] == "fs4"
        assert result["m"] == 64
        assert len(result["rows"]) == 10
        assert set(result["aggregates"]) == {"fs", "rp"}
        assert result["aggregates"]["fs"]["empirical_std"] is not None
        text = classical_csv(result)
        assert text.startswith("statistic,n,k,seed,m,N,expected_rp,expected_scheme,verdict")

    def test_alg1_has_no_baseline(self):
        cfg = ExperimentConfig(alg="alg1", n=6, q=1, trials=1)
        with pytest.raises(ConfigurationError):
            run_classical(cfg)


class TestCensusCampaign:
    def test_injective_register(self):
        cfg = ExperimentConfig(alg="alg1", n=5, q=1, trials=2, seed=31, measure_reg=2)
        result = run_census(cfg, seeds=2)
        assert result["classes"]["vfs"]["histogram"] == {"1": 64}
        assert result["classes"]["vfs"]["mean_fiber_size"] == 1.0
        text = census_csv(result)
        assert text.startswith("class,multiplicity,fibers")


class TestCli:
    def test_run_subcommand(self, tmp_path, capsys):
        out = tmp_path / "camp"
        code = main(["run", "--alg", "alg1", "--n", "4", "--epsilon", "0.1",
                     "--trials", "2", "--seed", "3", "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "trials.jsonl").exists()
        assert (out / "summary.csv").exists()
        stdout = capsys.readouterr().out
        assert "claimed_bound" in stdout

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("alg=alg1\nn=4\nepsilon=0.1\ntrials=1\nseed=4\n")
        out = tmp_path / "camp"
        code = main(["run", "--config", str(cfg_file), "--trials", "2",
                     "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["trials"] == 2
        assert report["config"]["n"] == 4

    def test_missing_algorithm_is_config_error(self, capsys):
        assert main(["run", "--n", "4", "--epsilon", "0.1"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_capacity_guard_exit_code(self, capsys):
        code = main(["gen-oracle", "--kind", "rp", "--n", "13", "--seed", "1"])
        assert code == 3
        assert "capacity guard" in capsys.readouterr().err

    def test_gen_oracle_roundtrip(self, tmp_path):
        path = tmp_path / "oracle.json"
        code = main(["gen-oracle", "--kind", "vfs", "--n", "4", "--seed", "9",
                     "--tables", "--out", str(path)])
        assert code == 0
        from feistellab.oracles import load_oracle

        oracle = load_oracle(path)
        assert oracle.kind == "vfs" and oracle.params.d == 3

    def test_sweep_subcommand(self, tmp_path):
        out = tmp_path / "sw"
        code = main(["sweep", "--alg", "alg1", "--n", "4", "--epsilon", "0.1",
                     "--trials", "1", "--axis", "n", "--values", "4,5",
                     "--out", str(out)])
        assert code == 0
        assert (out / "sweep.csv").exists()
        assert (out / "n-4" / "report.json").exists()

    def test_census_subcommand(self, tmp_path):
        out = tmp_path / "cen"
        code = main(["census", "--alg", "alg2", "--n", "4", "--trials", "2",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        assert (out / "census.csv").exists()

    def test_classical_subcommand(self, tmp_path):
        out = tmp_path / "cls"
        code = main(["classical", "--alg", "alg2", "--n", "5", "--trials", "3",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        text = (out / "classical.csv").read_text()
        assert len(text.strip().split("\n")) == 7  # header + 2 classes x 3
