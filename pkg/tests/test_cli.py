"""End-to-end checks of the command-line interface and its exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from metanet.cli import run
from metanet.core import read_field
from metanet.dataset import load_split
from metanet.evaluation import evaluate
from metanet.fabricate import TWO_PI, save_table, synthetic_linear_table
from metanet.network import load_model

from helpers import write_idx_dir


@pytest.fixture(scope="module")
def idx_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("idx")
    write_idx_dir(path, train_count=120, test_count=40, seed=11)
    return path


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, idx_dir):
    out = tmp_path_factory.mktemp("trained")
    rc = run([
        "train", "--mnist-dir", str(idx_dir), "--out", str(out),
        "--epochs", "2", "--batch", "32", "--lr", "0.05", "--seed", "5",
    ])
    assert rc == 0
    return out


def _model_path(trained_dir) -> str:
    return str(trained_dir / "model.json")


class TestUsage:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            run(["--version"])
        assert info.value.code == 0
        assert "metanet" in capsys.readouterr().out

    def test_no_command_is_usage_error(self, capsys):
        assert run([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 1

    def test_missing_required_flag_is_usage_error(self, tmp_path):
        assert run(["train", "--out", str(tmp_path)]) == 1

    def test_bad_flag_value_is_usage_error(self, idx_dir, tmp_path):
        assert run([
            "train", "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
            "--epochs", "two",
        ]) == 1


class TestTrain:
    def test_writes_model_history_manifest(self, trained_dir, idx_dir):
        model = load_model(_model_path(trained_dir))
        assert model.num_layers == 2
        history = (trained_dir / "history.csv").read_text()
        assert history.splitlines()[0] == "epoch,train_loss,val_accuracy"
        assert len(history.strip().splitlines()) == 3
        manifest = json.loads((trained_dir / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["seed"] == 5
        assert manifest["hyperparams"]["batch_size"] == 32
        assert manifest["config"]["grid_n"] == 28
        assert manifest["epochs_run"] == 2

    def test_prints_progress_and_summary(self, idx_dir, tmp_path, capsys):
        rc = run([
            "train", "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
            "--epochs", "1", "--batch", "64", "--seed", "3",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert "epoch   1" in out
        assert "best validation accuracy" in out

    def test_layers_override(self, idx_dir, tmp_path):
        rc = run([
            "train", "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
            "--epochs", "1", "--layers", "1", "--seed", "3",
        ])
        assert rc == 0
        doc = json.loads((tmp_path / "model.json").read_text())
        assert len(doc["layers"]) == 1

    def test_deterministic_across_runs_and_threads(self, idx_dir, tmp_path):
        outs = [tmp_path / name for name in ("a", "b", "c")]
        for out, threads in zip(outs, (None, None, "2")):
            argv = [
                "train", "--mnist-dir", str(idx_dir), "--out", str(out),
                "--epochs", "1", "--batch", "32", "--seed", "9",
            ]
            if threads is None:
                argv += ["--threads", "1"]
            else:
                argv += ["--threads", threads]
            assert run(argv) == 0
        ref_model = (outs[0] / "model.json").read_bytes()
        ref_history = (outs[0] / "history.csv").read_bytes()
        for out in outs[1:]:
            assert (out / "model.json").read_bytes() == ref_model
            assert (out / "history.csv").read_bytes() == ref_history

    def test_undersized_grid_config_is_internal_error(self, idx_dir, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "frequency": 3000.0, "sound_speed": 343.0, "grid_n": 12,
            "pitch": 0.02, "layer_gap": 0.175, "num_layers": 2,
            "object_gap": 0.175, "detector_gap": 0.175,
        }))
        rc = run([
            "train", "--mnist-dir", str(idx_dir), "--out", str(tmp_path / "out"),
            "--config", str(config), "--epochs", "1",
        ])
        assert rc == 3
        assert "internal error" in capsys.readouterr().err

    def test_unknown_config_key_is_data_error(self, idx_dir, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text('{"grid_m": 28}')
        rc = run([
            "train", "--mnist-dir", str(idx_dir), "--out", str(tmp_path / "out"),
            "--config", str(config), "--epochs", "1",
        ])
        assert rc == 2
        assert "data error" in capsys.readouterr().err

    def test_missing_mnist_dir_is_data_error(self, tmp_path):
        rc = run([
            "train", "--mnist-dir", str(tmp_path / "nowhere"), "--out",
            str(tmp_path / "out"), "--epochs", "1",
        ])
        assert rc == 2


class TestEval:
    def test_accuracy_matches_library(self, trained_dir, idx_dir, tmp_path, capsys):
        rc = run([
            "eval", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        net = load_model(_model_path(trained_dir))
        expected = evaluate(net, load_split(idx_dir).test)
        assert f"test accuracy {expected.accuracy:.4f} on 40 samples" in out

        confusion = [
            [int(v) for v in line.split(",")]
            for line in (tmp_path / "confusion.csv").read_text().strip().splitlines()
        ]
        assert np.array_equal(np.array(confusion), expected.confusion)
        energy_lines = (tmp_path / "energy_matrix.csv").read_text().strip().splitlines()
        assert len(energy_lines) == 10
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["accuracy"] == expected.accuracy

    def test_stdout_only_without_out(self, trained_dir, idx_dir, tmp_path, capsys):
        rc = run([
            "eval", "--model", _model_path(trained_dir), "--mnist-dir", str(idx_dir),
        ])
        assert rc == 0
        assert "test accuracy" in capsys.readouterr().out

    def test_missing_model_is_data_error(self, idx_dir, tmp_path, capsys):
        rc = run([
            "eval", "--model", str(tmp_path / "missing.json"),
            "--mnist-dir", str(idx_dir),
        ])
        assert rc == 2
        assert "data error" in capsys.readouterr().err

    def test_corrupt_model_is_data_error(self, idx_dir, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("this is not json")
        assert run(["eval", "--model", str(bad), "--mnist-dir", str(idx_dir)]) == 2


class TestInfer:
    def test_prints_digit_and_distribution(self, trained_dir, idx_dir, capsys):
        rc = run([
            "infer", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--image-index", "3",
        ])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("predicted digit: ")
        probs = [float(line.split("=")[1]) for line in lines[1:]]
        assert len(probs) == 10
        assert sum(probs) == pytest.approx(1.0, abs=1e-3)

    def test_out_writes_prediction_record(self, trained_dir, idx_dir, tmp_path):
        rc = run([
            "infer", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--image-index", "0",
            "--split", "validation", "--out", str(tmp_path),
        ])
        assert rc == 0
        record = json.loads((tmp_path / "manifest.json").read_text())
        assert record["command"] == "infer"
        assert record["split"] == "validation"
        assert 0 <= record["predicted"] <= 9
        assert len(record["probabilities"]) == 10

    def test_index_out_of_range_is_usage_error(self, trained_dir, idx_dir):
        rc = run([
            "infer", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--image-index", "100000",
        ])
        assert rc == 1


class TestSweepLayers:
    def test_writes_sweep_csv(self, idx_dir, tmp_path):
        rc = run([
            "sweep-layers", "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
            "--layers", "2", "--epochs", "1", "--batch", "32", "--seed", "4",
        ])
        assert rc == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "layer_count,accuracy,epochs,seed"
        assert [line.split(",")[0] for line in lines[1:]] == ["1", "2"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["layer_counts"] == [1, 2]

    def test_zero_layers_is_usage_error(self, idx_dir, tmp_path):
        rc = run([
            "sweep-layers", "--mnist-dir", str(idx_dir), "--out", str(tmp_path),
            "--layers", "0",
        ])
        assert rc == 1


class TestQuantize:
    def test_writes_snapped_model(self, trained_dir, tmp_path):
        rc = run([
            "quantize", "--model", _model_path(trained_dir),
            "--levels", "4", "--out", str(tmp_path),
        ])
        assert rc == 0
        qnet = load_model(tmp_path / "model.json")
        step = TWO_PI / 4
        for layer in qnet.layers:
            assert np.allclose(np.mod(layer.phases, step), 0.0, atol=1e-12)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["levels"] == 4

    def test_reevaluates_when_data_given(self, trained_dir, idx_dir, tmp_path, capsys):
        rc = run([
            "quantize", "--model", _model_path(trained_dir), "--levels", "8",
            "--out", str(tmp_path), "--mnist-dir", str(idx_dir),
        ])
        assert rc == 0
        assert "->" in capsys.readouterr().out
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "accuracy_before" in manifest
        assert "accuracy_after" in manifest

    def test_one_level_is_usage_error(self, trained_dir, tmp_path):
        rc = run([
            "quantize", "--model", _model_path(trained_dir),
            "--levels", "1", "--out", str(tmp_path),
        ])
        assert rc == 1


class TestExportGeometry:
    def test_synthetic_table_by_default(self, trained_dir, tmp_path, capsys):
        rc = run([
            "export-geometry", "--model", _model_path(trained_dir),
            "--out", str(tmp_path),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "synthetic linear calibration table" in out
        assert "wrote 1568 records" in out
        lines = (tmp_path / "geometry.csv").read_text().strip().splitlines()
        assert lines[0] == "layer,row,col,phase_rad,height_m"
        assert len(lines) == 1 + 2 * 28 * 28
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["records"] == 1568
        assert manifest["synthetic_table"] is True

    def test_accepts_calibration_csv(self, trained_dir, tmp_path, capsys):
        table_path = tmp_path / "cal.csv"
        save_table(synthetic_linear_table(h_max=0.05, samples=33), table_path)
        rc = run([
            "export-geometry", "--model", _model_path(trained_dir),
            "--table", str(table_path), "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        assert "synthetic" not in capsys.readouterr().out
        heights = [
            float(line.split(",")[4])
            for line in (tmp_path / "out" / "geometry.csv").read_text().strip().splitlines()[1:]
        ]
        assert max(heights) <= 0.05 + 1e-12


class TestBench:
    def test_stdout_csv_schema(self, capsys):
        rc = run(["bench"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "method,n,pad_factor,z_m,wall_time_us_median,rel_err_vs_direct"
        assert len(lines) == 7
        methods = {line.split(",")[0] for line in lines[1:]}
        assert methods == {"direct", "spectral"}
        direct_pads = [line.split(",")[2] for line in lines[1:] if line.startswith("direct")]
        assert set(direct_pads) == {""}

    def test_out_writes_bench_csv(self, tmp_path):
        rc = run(["bench", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "bench.csv").exists()
        assert (tmp_path / "manifest.json").exists()


class TestDumpField:
    def test_writes_binary_png_and_csv(self, trained_dir, idx_dir, tmp_path):
        rc = run([
            "dump-field", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--image-index", "1",
            "--out", str(tmp_path),
        ])
        assert rc == 0
        field = read_field(tmp_path / "detector.mnnf")
        assert field.n == 28
        assert (tmp_path / "detector.png").exists()
        assert (tmp_path / "detector.csv").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "dump-field"
        assert 0 <= manifest["true_label"] <= 9

    def test_index_out_of_range_is_usage_error(self, trained_dir, idx_dir, tmp_path):
        rc = run([
            "dump-field", "--model", _model_path(trained_dir),
            "--mnist-dir", str(idx_dir), "--image-index", "100000",
            "--out", str(tmp_path),
        ])
        assert rc == 1


class TestSubprocess:
    def test_module_entry_point(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "metanet.cli", "--version"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "metanet" in result.stdout

        result = subprocess.run(
            [sys.executable, "-m", "metanet.cli"], capture_output=True, text=True
        )
        assert result.returncode == 1
