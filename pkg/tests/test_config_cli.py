"""Config schema and CLI behavior tests, driven through `main` in-process."""

import json
import math

import numpy as np
import pytest

from pnflows.checkpoint import load_checkpoint, save_checkpoint
from pnflows.cli import main
from pnflows.config import load_experiment_config
from pnflows.errors import ConfigError
from pnflows.flows import FlowModel
from pnflows.bases import GaussianBase
from pnflows.maps import sphere_forward


def write_config(path, **overrides):
    cfg = {
        "schema_version": 1,
        "dataset": "two_moons(n=240, noise=0.05, seed=7)",
        "base": "gaussian",
        "levels": 1,
        "steps": 2,
        "coupling_width": 16,
        "epochs": 2,
        "warmup_epochs": 1,
        "batch_size": 64,
        "seed": 3,
        "output_dir": str(path.parent / "run"),
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


class TestConfig:
    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        cfg = write_config(path)
        cfg["learning_rte"] = 0.1  # typo must be fatal
        path.write_text(json.dumps(cfg))
        with pytest.raises(ConfigError, match="learning_rte"):
            load_experiment_config(path)

    def test_exactly_one_base_spec(self, tmp_path):
        path = tmp_path / "c.json"
        write_config(path, base="vmf", vmf_kappa_mult=1.5, dirichlet_alpha=2.0)
        with pytest.raises(ConfigError, match="exactly one base spec"):
            load_experiment_config(path)

    def test_all_violations_reported_together(self, tmp_path):
        path = tmp_path / "c.json"
        write_config(path, epochs=-1, steps=0, base="banana")
        with pytest.raises(ConfigError) as info:
            load_experiment_config(path)
        assert len(info.value.violations) >= 3

    def test_missing_required_keys(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"schema_version": 1}))
        with pytest.raises(ConfigError) as info:
            load_experiment_config(path)
        assert any("dataset" in v for v in info.value.violations)

    def test_kappa_multiple_of_dimension(self, tmp_path):
        path = tmp_path / "c.json"
        write_config(path, base="vmf", vmf_kappa_mult=2.0)
        cfg = load_experiment_config(path)
        assert cfg.build_base(10).kappa == pytest.approx(20.0)


class TestCliTrain:
    def test_artifacts_written(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path)
        assert main(["train", "--config", str(cfg_path)]) == 0
        run = tmp_path / "run"
        assert (run / "model.ckpt").exists()
        loss = (run / "loss.csv").read_text().splitlines()
        assert loss[0] == "epoch,nll,bpd"
        assert len(loss) == 3  # header + 2 epochs
        manifest = json.loads((run / "run.json").read_text())
        assert manifest["schema_version"] == 1
        assert manifest["simplex_underflow_events"] == 0
        assert manifest["n_params"] > 0

    def test_invalid_config_exits_one(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path, base="vmf", dirichlet_alpha=2.0)
        assert main(["train", "--config", str(cfg_path)]) == 1

    def test_seeded_runs_are_byte_identical(self, tmp_path):
        blobs = []
        for name in ("a", "b"):
            cfg_path = tmp_path / f"{name}.json"
            write_config(cfg_path, output_dir=str(tmp_path / name))
            assert main(["train", "--config", str(cfg_path)]) == 0
            blobs.append((tmp_path / name / "model.ckpt").read_bytes())
        assert blobs[0] == blobs[1]

    def test_zero_epoch_checkpoint_equals_initialization(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path, epochs=0, warmup_epochs=0)
        assert main(["train", "--config", str(cfg_path)]) == 0
        trained = load_checkpoint(tmp_path / "run" / "model.ckpt")
        cfg = load_experiment_config(cfg_path)
        fresh = cfg.build_model(2)
        np.testing.assert_array_equal(trained.get_flat_params(),
                                      fresh.get_flat_params())

    def test_divergent_run_exits_two(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path, learning_rate=1e160, epochs=2, warmup_epochs=0)
        with np.errstate(over="ignore"):
            assert main(["train", "--config", str(cfg_path)]) == 2


class TestCliSample:
    @pytest.fixture
    def checkpoint(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path, base="vmf", vmf_kappa_mult=2.0)
        main(["train", "--config", str(cfg_path)])
        return str(tmp_path / "run" / "model.ckpt")

    def test_zero_samples_succeed_with_empty_output(self, checkpoint, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sample", "--checkpoint", checkpoint, "--n", "0",
                     "--out", str(out)]) == 0
        assert out.read_text().strip() == "x0,x1"

    def test_vmf_samples_reencode_to_unit_norm(self, checkpoint, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sample", "--checkpoint", checkpoint, "--n", "100",
                     "--seed", "5", "--out", str(out)]) == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        model = load_checkpoint(checkpoint)
        z, _ = model.forward(rows)
        s = model.to_manifold(z).point
        np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-8)

    def test_gaussian_temperature_law_through_cli(self, tmp_path):
        # empty-chain d=100 checkpoint: latents are the emitted samples
        model = FlowModel(100, [], GaussianBase(100))
        ckpt = tmp_path / "g.ckpt"
        save_checkpoint(ckpt, model)
        out = tmp_path / "s.csv"
        assert main(["sample", "--checkpoint", str(ckpt), "--n", "20000",
                     "--temperature", "0.5", "--seed", "1", "--out", str(out)]) == 0
        z = np.loadtxt(out, delimiter=",", skiprows=1)
        assert (z ** 2).sum(axis=1).mean() == pytest.approx(25.0, rel=0.02)

    def test_pgm_grid_output(self, tmp_path):
        model = FlowModel(4, [], GaussianBase(4))  # 2x2 "images"
        ckpt = tmp_path / "g.ckpt"
        save_checkpoint(ckpt, model)
        out = tmp_path / "s.pgm"
        assert main(["sample", "--checkpoint", str(ckpt), "--n", "3",
                     "--seed", "0", "--out", str(out), "--format", "pgm"]) == 0
        blob = out.read_bytes()
        assert blob.startswith(b"P5\n4 4\n255\n")
        assert len(blob) == len(b"P5\n4 4\n255\n") + 16


class TestCliInterpolate:
    @pytest.fixture
    def checkpoint(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path, base="vmf", vmf_kappa_mult=1.0)
        main(["train", "--config", str(cfg_path)])
        return str(tmp_path / "run" / "model.ckpt")

    def test_protocol_outputs(self, checkpoint, tmp_path):
        out = tmp_path / "interp"
        assert main(["interpolate", "--checkpoint", checkpoint,
                     "--data", "two_moons(n=50, noise=0.05, seed=1)",
                     "--k", "5", "--seed", "2", "--out", str(out)]) == 0
        rows = (out / "interpolants.csv").read_text().splitlines()
        assert len(rows) == 51  # header + n interpolants
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_pairs"] == 10
        assert summary["n_interpolants"] == 50
        diag = (out / "diagnostics.csv").read_text().splitlines()
        assert diag[0].startswith("pair,")
        assert len(diag) == 11
        paths = (out / "paths.csv").read_text().splitlines()
        assert paths[0].startswith("pair,lambda,norm")
        assert len(paths) == 1 + 10 * 7  # k+2 rows per pair

    def test_incompatible_rule_exits_one(self, checkpoint, tmp_path):
        assert main(["interpolate", "--checkpoint", checkpoint,
                     "--data", "two_moons(n=50, noise=0.05, seed=1)",
                     "--rule", "nclerp", "--seed", "0",
                     "--out", str(tmp_path / "x")]) == 1

    def test_within_class_without_labels_exits_one(self, checkpoint, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("\n".join(f"{x},{y}" for x, y in
                                  np.random.default_rng(0).normal(size=(20, 2))))
        assert main(["interpolate", "--checkpoint", checkpoint,
                     "--data", str(data), "--within-class", "--seed", "0",
                     "--out", str(tmp_path / "y")]) == 1


class TestCliEvaluate:
    def test_report_contents_and_byte_stability(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        write_config(cfg_path)
        main(["train", "--config", str(cfg_path)])
        out = tmp_path / "report.json"
        assert main(["evaluate", "--checkpoint", str(tmp_path / "run" / "model.ckpt"),
                     "--train", "two_moons(n=100, noise=0.05, seed=2)",
                     "--test", "two_moons(n=60, noise=0.05, seed=3)",
                     "--seed", "4", "--out", str(out)]) == 0
        text = out.read_text()
        report = json.loads(text)
        assert json.dumps(report, sort_keys=True, indent=2) == text
        assert report["counts"] == {"n_train": 100, "n_test": 60,
                                    "n_generated": 100, "n_interpolated": 100}
        assert math.isfinite(report["bpd_test"])
        assert report["generated_vs_train"]["kid_stderr"] >= 0.0
        norms = (tmp_path / "report_norms.csv").read_text().splitlines()
        assert norms[0] == "set,reference,sq_norm"
        assert len(norms) == 1 + 60 + 100  # test latents + generated latents

    def test_empty_chain_gaussian_bpd_anchor(self, tmp_path):
        model = FlowModel(2, [], GaussianBase(2))
        ckpt = tmp_path / "g.ckpt"
        save_checkpoint(ckpt, model)
        zeros = tmp_path / "zeros.csv"
        zeros.write_text("\n".join(["0.0,0.0"] * 20) + "\n")
        train_csv = tmp_path / "train.csv"
        rng = np.random.default_rng(0)
        train_csv.write_text("\n".join(f"{x},{y}" for x, y in rng.normal(size=(50, 2))))
        out = tmp_path / "r.json"
        assert main(["evaluate", "--checkpoint", str(ckpt), "--train", str(train_csv),
                     "--test", str(zeros), "--seed", "0", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["bpd_test"] == pytest.approx(1.32575, abs=1e-5)

    def test_corrupt_checkpoint_exits_one(self, tmp_path):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage")
        assert main(["evaluate", "--checkpoint", str(bad),
                     "--train", "two_moons(n=20, noise=0.05, seed=0)",
                     "--test", "two_moons(n=20, noise=0.05, seed=1)",
                     "--seed", "0", "--out", str(tmp_path / "r.json")]) == 1