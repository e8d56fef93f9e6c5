import json
import subprocess
import sys
from pathlib import Path

import pytest

CLI = [sys.executable, "-m", "cafegb"]

# desk-scale pipeline settings reused across CLI tests
FAST = ["--chunk-size", "300", "--gbdt-rounds", "15", "--gbdt-min-samples-leaf", "5",
        "--seeds", "42,52", "--budget", "8", "--k-grid", "4,8,16",
        "--test-fraction", "0.25"]


def cli(*args, **kwargs):
    return subprocess.run(CLI + list(args), capture_output=True, text=True, **kwargs)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    res = cli("synth", "--n", "900", "--m", "24", "--d", "5", "--seed", "3",
              "--noise", "0.05", "--out", str(out))
    assert res.returncode == 0, res.stderr
    return out


@pytest.fixture(scope="module")
def selected_dir(synth_dir):
    res = cli("select", "--data", str(synth_dir / "synthetic.csv"),
              "--out", str(synth_dir), *FAST)
    assert res.returncode == 0, res.stderr
    return synth_dir


class TestSynth:
    def test_shape(self, tmp_path):
        res = cli("synth", "--n", "1000", "--m", "50", "--d", "5", "--seed", "7",
                  "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        lines = (tmp_path / "synthetic.csv").read_text().splitlines()
        assert len(lines) == 1001
        assert len(lines[0].split(",")) == 51
        planted = json.loads((tmp_path / "planted.json").read_text())["planted"]
        assert len(planted) == 5

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            res = cli("synth", "--n", "200", "--m", "10", "--d", "3", "--seed", "5",
                      "--out", str(out))
            assert res.returncode == 0
        assert (a / "synthetic.csv").read_bytes() == (b / "synthetic.csv").read_bytes()

    def test_invalid_spec_is_data_error(self, tmp_path):
        res = cli("synth", "--n", "100", "--m", "50", "--d", "60", "--out", str(tmp_path))
        assert res.returncode == 3
        assert res.stderr.strip().count("\n") == 0  # single-line diagnostic

    def test_unknown_flag_is_usage_error(self):
        res = cli("synth", "--frobnicate", "1")
        assert res.returncode == 2


class TestSelect:
    def test_ranking_shape(self, selected_dir):
        records = json.loads((selected_dir / "ranking.json").read_text())
        assert len(records) == 24
        assert [r["rank"] for r in records] == list(range(1, 25))
        assert all(r["aggregated_gain"] >= 0 for r in records)

    def test_oversized_chunk_warns_but_succeeds(self, synth_dir, tmp_path):
        res = cli("select", "--data", str(synth_dir / "synthetic.csv"),
                  "--out", str(tmp_path), "--chunk-size", "100000",
                  "--gbdt-rounds", "5", "--gbdt-min-samples-leaf", "5")
        assert res.returncode == 0, res.stderr
        assert "single chunk" in res.stderr
        assert (tmp_path / "ranking.json").exists()

    def test_rerun_is_byte_identical(self, synth_dir, tmp_path):
        args = ["select", "--data", str(synth_dir / "synthetic.csv"), *FAST]
        outs = []
        for sub in ("r1", "r2"):
            out = tmp_path / sub
            res = cli(*args, "--out", str(out))
            assert res.returncode == 0, res.stderr
            outs.append((out / "ranking.json").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_data_flag(self, tmp_path):
        res = cli("select", "--out", str(tmp_path))
        assert res.returncode == 2

    def test_missing_file_is_data_error(self, tmp_path):
        res = cli("select", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path))
        assert res.returncode in (3, 4)


class TestPipeline:
    def test_full_pipeline_artifacts(self, selected_dir):
        data = str(selected_dir / "synthetic.csv")
        for command in ("kscan", "evaluate", "redundancy", "stats", "shap", "report"):
            res = cli(command, "--data", data, "--out", str(selected_dir), *FAST,
                      *(["--shap-sample", "40"] if command == "shap" else []))
            assert res.returncode == 0, f"{command}: {res.stderr}"
        for name in ("ranking.json", "kscan.csv", "metrics.csv", "redundancy.csv",
                     "stats.csv", "shap_summary.csv", "profile.csv", "report.md",
                     "config.effective", "metrics_seeds.json"):
            assert (selected_dir / name).exists(), name

    def test_report_mentions_artifacts(self, selected_dir):
        text = (selected_dir / "report.md").read_text()
        assert "Feature ranking" in text
        assert "path-dependent" in text

    def test_metrics_csv_layout(self, selected_dir):
        header = (selected_dir / "metrics.csv").read_text().splitlines()[0].split(",")
        assert header[:3] == ["dataset", "method", "classifier"]
        assert "accuracy_mean" in header and "pr_auc_std" in header

    def test_redundancy_requires_ranking(self, synth_dir, tmp_path):
        res = cli("redundancy", "--data", str(synth_dir / "synthetic.csv"),
                  "--out", str(tmp_path), *FAST)
        assert res.returncode == 3
        assert "cafegb select" in res.stderr

    def test_stats_requires_metrics(self, synth_dir, tmp_path):
        res = cli("stats", "--data", str(synth_dir / "synthetic.csv"),
                  "--out", str(tmp_path), *FAST)
        assert res.returncode == 3
        assert "cafegb evaluate" in res.stderr


class TestStatsFixture:
    def test_same_sign_fixture_gives_exact_p(self, tmp_path):
        # five seeds, selected-features consistently (barely) below baseline:
        # every metric must report the exact minimum two-sided p for n = 5
        seeds = [42, 52, 62, 72, 82]
        rows = []
        for i, seed in enumerate(seeds):
            jitter = i * 1e-5
            # selected-feature jitter grows twice as fast, so the per-seed
            # differences stay same-signed but have distinct magnitudes
            rows.append({"seed": seed, "classifier": "gbdt", "feature_set": "baseline",
                         "accuracy": 0.9977 + jitter, "f1": 0.9973 + jitter,
                         "mcc": 0.9953 + jitter, "roc_auc": 0.9999 - jitter,
                         "pr_auc": 0.9999 - jitter})
            rows.append({"seed": seed, "classifier": "gbdt", "feature_set": "cafegb-100",
                         "accuracy": 0.9972 + 2 * jitter, "f1": 0.9967 + 2 * jitter,
                         "mcc": 0.9943 + 2 * jitter, "roc_auc": 0.9998 - 2 * jitter,
                         "pr_auc": 0.9998 - 2 * jitter})
        (tmp_path / "metrics_seeds.json").write_text(
            json.dumps({"dataset": "fixture", "budget": 100, "rows": rows}))
        res = cli("stats", "--out", str(tmp_path), "--budget", "100",
                  "--classifiers", "gbdt")
        assert res.returncode == 0, res.stderr
        lines = (tmp_path / "stats.csv").read_text().splitlines()
        header = lines[0].split(",")
        p_idx = header.index("p_value")
        method_idx = header.index("method")
        assert len(lines) == 6  # header + five metrics
        for line in lines[1:]:
            cells = line.split(",")
            assert float(cells[p_idx]) == 0.0625
            assert cells[method_idx] == "exact"


class TestBudgetFootnote:
    def test_report_names_k100_on_recorded_scan(self, tmp_path):
        # replay a recorded budget scan through the report pipeline
        scan = ("k,accuracy_mean,accuracy_std,jaccard_stability\n"
                "50,0.99526,0.00017,0.97647\n"
                "100,0.99659,0.00011,0.99208\n"
                "200,0.99694,9e-05,0.94557\n"
                "300,0.99695,0.00014,0.93988\n")
        (tmp_path / "kscan.csv").write_text(scan)
        res = cli("report", "--out", str(tmp_path), "--delta", "0.001")
        assert res.returncode == 0, res.stderr
        text = (tmp_path / "report.md").read_text()
        assert "**k = 100**" in text

    def test_kscan_csv_round_trips_through_report(self, tmp_path):
        scan = ("k,accuracy_mean,accuracy_std,jaccard_stability\n"
                "100,0.99659,0.00011,0.99208\n")
        (tmp_path / "kscan.csv").write_text(scan)
        res = cli("report", "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        text = (tmp_path / "report.md").read_text()
        assert "| 100 | 0.99659 | 0.00011 | 0.99208 |" in text


class TestConfigHandling:
    def test_config_file_and_flag_precedence(self, tmp_path):
        (tmp_path / "run.cfg").write_text(
            "# comment line\nchunk_size = 123\nbudget = 9\nseeds = 1,2\n")
        res = cli("synth", "--n", "50", "--m", "6", "--d", "2",
                  "--config", str(tmp_path / "run.cfg"), "--out", str(tmp_path))
        assert res.returncode == 0, res.stderr
        effective = (tmp_path / "config.effective").read_text()
        assert "chunk_size = 123" in effective
        assert "budget = 9" in effective

    def test_flag_overrides_config(self, tmp_path):
        (tmp_path / "run.cfg").write_text("budget = 9\n")
        res = cli("report", "--config", str(tmp_path / "run.cfg"),
                  "--out", str(tmp_path), "--budget", "77")
        assert res.returncode == 0, res.stderr
        assert "budget = 77" in (tmp_path / "config.effective").read_text()

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        (tmp_path / "run.cfg").write_text("no_such_key = 1\n")
        res = cli("report", "--config", str(tmp_path / "run.cfg"), "--out", str(tmp_path))
        assert res.returncode == 2

    def test_env_overrides_out_dir(self, tmp_path, monkeypatch):
        import os
        env = dict(os.environ, CAFEGB_OUT=str(tmp_path / "envout"))
        res = subprocess.run(CLI + ["synth", "--n", "40", "--m", "5", "--d", "2"],
                             capture_output=True, text=True, env=env)
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "envout" / "synthetic.csv").exists()


class TestHelp:
    @pytest.mark.parametrize("command", ["synth", "select", "kscan", "evaluate",
                                         "redundancy", "stats", "shap", "report"])
    def test_help_lists_defaults(self, command):
        res = cli(command, "--help")
        assert res.returncode == 0
        assert "default:" in res.stdout

    def test_select_help_names_paper_defaults(self):
        res = cli("select", "--help")
        assert "15000" in res.stdout  # chunk size default
        assert "0.1" in res.stdout    # overlap default
        assert "42,52,62,72,82" in res.stdout

    def test_cache_round_trip(self, synth_dir, tmp_path):
        cache = tmp_path / "data.cafe"
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        for out in (out1, out2):
            res = cli("select", "--data", str(synth_dir / "synthetic.csv"),
                      "--cache", str(cache), "--out", str(out), *FAST)
            assert res.returncode == 0, res.stderr
        assert cache.exists()
        assert ((out1 / "ranking.json").read_bytes()
                == (out2 / "ranking.json").read_bytes())
