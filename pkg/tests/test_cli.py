import json

import numpy as np
import pytest

from evecg.cli import main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(out), "--records", "3",
                 "--beats", "150", "--seed", "7"]) == 0
    return out / "corpus"


def run_ok(argv):
    assert main(argv) == 0


class TestSynthAndIngest:
    def test_synth_wrote_wfdb_files(self, corpus):
        for ext in (".hea", ".dat", ".atr"):
            assert (corpus / f"s100{ext}").exists()

    def test_ingest_writes_manifest_and_counts(self, corpus, tmp_path):
        run_ok(["ingest", "--corpus", str(corpus), "--per-class", "40",
                "--out", str(tmp_path), "--seed", "1"])
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["per_class"] == 40
        assert (tmp_path / "class_counts.csv").exists()
        assert (tmp_path / "ingest_config.json").exists()

    def test_ingest_insufficient_without_allow_partial(self, corpus, tmp_path):
        with pytest.raises(Exception):
            main(["ingest", "--corpus", str(corpus), "--per-class", "100000",
                  "--out", str(tmp_path)])

    def test_allow_partial_caps_at_available(self, corpus, tmp_path):
        run_ok(["ingest", "--corpus", str(corpus), "--per-class", "100000",
                "--allow-partial", "--out", str(tmp_path)])
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["train_size"] > 0

    def test_empty_corpus_dir_fails(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        with pytest.raises(FileNotFoundError):
            main(["ingest", "--corpus", str(empty), "--out",
                  str(tmp_path / "o")])


class TestCompress:
    def test_reduction_monotone_in_bits(self, corpus, tmp_path):
        run_ok(["compress", "--corpus", str(corpus), "--bits", "5,6,7",
                "--out", str(tmp_path)])
        report = json.loads((tmp_path / "compression.json").read_text())
        reds = [r["reduction"] for r in report["aggregate"]]
        assert reds == sorted(reds, reverse=True)
        assert all(0.0 <= r <= 1.0 for r in reds)

    def test_rerun_is_byte_identical(self, corpus, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run_ok(["compress", "--corpus", str(corpus), "--bits", "5,6",
                    "--out", str(out)])
        for name in ("compression.csv", "compression_aggregate.csv",
                     "compression.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestTrainEval:
    def test_train_then_eval_roundtrip(self, corpus, tmp_path):
        argv = ["train", "--corpus", str(corpus), "--per-class", "40",
                "--bin", "16", "--epochs", "1", "--out", str(tmp_path),
                "--seed", "0"]
        run_ok(argv)
        ckpt = tmp_path / "scnn_checkpoint.bin"
        assert ckpt.exists()
        metrics = json.loads((tmp_path / "scnn_metrics.json").read_text())
        assert 0.0 <= metrics["test_accuracy"] <= 1.0
        assert np.array(metrics["confusion"]).shape == (4, 4)

        run_ok(["eval", "--corpus", str(corpus), "--per-class", "40",
                "--bin", "16", "--checkpoint", str(ckpt),
                "--out", str(tmp_path / "ev")])
        ev = json.loads((tmp_path / "ev" / "eval_metrics.json").read_text())
        # same split, same weights -> identical accuracy
        assert ev["test_accuracy"] == metrics["test_accuracy"]

    def test_training_log_csv_written(self, corpus, tmp_path):
        run_ok(["train", "--corpus", str(corpus), "--per-class", "40",
                "--bin", "16", "--epochs", "1", "--model", "cnn",
                "--out", str(tmp_path)])
        text = (tmp_path / "cnn_training_log.csv").read_text()
        assert "test_accuracy" in text and "# model=cnn" in text


class TestComplexity:
    def test_report_and_summary(self, tmp_path):
        run_ok(["complexity", "--input-length", "80", "--t-max", "30",
                "--out", str(tmp_path)])
        summary = json.loads(
            (tmp_path / "complexity_summary.json").read_text())
        assert abs(summary["closest_to_968"]["reduction"] - 0.968) <= 0.02
        assert summary["modes"] == ["decomposition", "literal"]

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run_ok(["complexity", "--input-length", "64", "--out", str(out)])
        assert (a / "complexity.csv").read_bytes() == \
            (b / "complexity.csv").read_bytes()


class TestConfigHandling:
    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"input-length": 64, "t-max": 5}))
        run_ok(["complexity", "--config", str(cfg), "--out", str(tmp_path)])
        echo = json.loads((tmp_path / "complexity_config.json").read_text())
        assert echo["args"]["input_length"] == 64
        assert echo["args"]["t_max"] == 5

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"no-such-flag": 1}))
        with pytest.raises(SystemExit):
            main(["complexity", "--config", str(cfg), "--out", str(tmp_path)])

    def test_missing_subcommand_exits(self):
        with pytest.raises(SystemExit):
            main([])


class TestReport:
    def test_indexes_artifacts(self, tmp_path):
        run_ok(["complexity", "--input-length", "64", "--out", str(tmp_path)])
        run_ok(["report", "--out", str(tmp_path)])
        report = json.loads((tmp_path / "report.json").read_text())
        assert "complexity.csv" in report["artifacts"]
        assert "complexity_summary.json" in report["artifacts"]
