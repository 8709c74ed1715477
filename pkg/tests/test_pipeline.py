"""End-to-end pipeline runs on a tiny scenario, plus manifest contracts."""

import hashlib
import json
from dataclasses import replace

import pytest

import tsecert
from tsecert import (
    Environment,
    Grid,
    PiecewiseConstantProfile,
    RunConfig,
    cmd_certify,
    cmd_generate,
    cmd_report,
    cmd_train,
    default_config,
    emit_config,
    run_pipeline,
)
from tsecert.pipeline import dataset_filename, stage_seed


def _tiny_config(out, **kw):
    base = default_config()
    cfg = RunConfig(
        env=Environment(v_f=25.0, rho_m=0.15),
        grid=Grid(x_min=0.0, x_max=200.0, dx=10.0, t_max=10.0, dt=0.5),
        profile=PiecewiseConstantProfile((0.0, 80.0, 200.0), (0.12, 0.04)),
        sample_count=200,
        train=replace(base.train, adam_iterations=150, lbfgs_iterations=60,
                      hidden_layers=2, hidden_width=8),
        sweep_v_f=(15.0, 25.0, 35.0),
        thresholds=base.thresholds,
        metric="data_mismatch",
        output_dir=str(out),
        seed=3,
    )
    return replace(cfg, **kw) if kw else cfg


def test_stage_seed_derivation():
    assert stage_seed(0, "sample") == stage_seed(0, "sample")
    seeds = {stage_seed(0, s) for s in ("sample", "init", "certify")}
    assert len(seeds) == 3
    assert stage_seed(0, "sample") != stage_seed(1, "sample")
    assert all(isinstance(stage_seed(k, "init"), int) for k in range(3))
    with pytest.raises(KeyError):
        stage_seed(0, "nonsense")


def test_dataset_filename_formatting():
    assert dataset_filename(5.0) == "dataset_vf5.tsed"
    assert dataset_filename(12.5) == "dataset_vf12.5.tsed"


def test_full_pipeline_artifacts_and_manifest(tmp_path):
    cfg = _tiny_config(tmp_path / "run")
    paths = run_pipeline(cfg)
    assert len(paths["datasets"]) == 3
    for p in list(paths["datasets"]) + [paths["model"], paths["train_report"],
                                        paths["report_csv"], paths["report_text"],
                                        paths["summary"], paths["npl_curve"]]:
        assert p.exists()

    out = tmp_path / "run"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool_version"] == tsecert.__version__
    assert manifest["config"] == emit_config(cfg)
    assert set(manifest["stages"]) == {"generate", "train", "certify", "report"}
    for stage in manifest["stages"].values():
        assert stage["wall_time"] >= 0.0
        for name, digest in stage["files"].items():
            blob = (out / name).read_bytes()
            assert hashlib.sha256(blob).hexdigest() == digest

    gen = manifest["stages"]["generate"]
    assert set(gen["godunov_cross_check_l1"]) == {"15", "25", "35"}
    assert all(0.0 < v < 0.01 for v in gen["godunov_cross_check_l1"].values())

    cert = manifest["stages"]["certify"]
    assert cert["categories"]["25"] == "C"
    assert cert["regenerated_datasets"] == []

    curve = paths["npl_curve"].read_text().splitlines()
    assert curve[0] == "v_f,npl,category"
    assert len(curve) == 4
    assert curve[2].startswith("25,1,")

    summary = paths["summary"].read_text()
    assert "verdicts:" in summary and "reuse" in summary
    assert "model final_mse:" in summary


def test_pipeline_runs_are_byte_deterministic(tmp_path):
    d1, d2 = tmp_path / "one", tmp_path / "two"
    p1 = run_pipeline(_tiny_config(d1))
    p2 = run_pipeline(_tiny_config(d2))

    names = [dataset_filename(v) for v in (15.0, 25.0, 35.0)]
    names += ["model.tsem", "train_report.txt", "report.csv", "report.txt",
              "npl_curve.csv", "summary.txt"]
    for name in names:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    # config snapshots differ only in their output directory
    def strip_dir(p):
        return [ln for ln in (p / "config.txt").read_text().splitlines()
                if not ln.startswith("output_dir")]
    assert strip_dir(d1) == strip_dir(d2)

    # manifests differ only in wall times and the output directory
    def canonical(p):
        m = json.loads((p / "manifest.json").read_text())
        for stage in m["stages"].values():
            stage.pop("wall_time", None)
            stage.pop("train_wall_time", None)
            # the snapshot embeds output_dir, checked above modulo that line
            stage.get("files", {}).pop("config.txt", None)
        m["config"] = [ln for ln in m["config"].splitlines()
                       if not ln.startswith("output_dir")]
        return m
    assert canonical(d1) == canonical(d2)
    assert p1["model"] != p2["model"]


def test_cmd_train_requires_a_dataset(tmp_path):
    cfg = _tiny_config(tmp_path / "empty")
    with pytest.raises(FileNotFoundError, match="run generate first"):
        cmd_train(cfg)


def test_cmd_report_requires_prior_stages(tmp_path):
    with pytest.raises(FileNotFoundError, match="no manifest"):
        cmd_report(tmp_path / "void")
    cfg = _tiny_config(tmp_path / "gen_only")
    cmd_generate(cfg)
    with pytest.raises(FileNotFoundError, match="run certify first"):
        cmd_report(cfg.output_dir)


def test_cmd_certify_regenerates_missing_datasets(tmp_path):
    cfg = _tiny_config(tmp_path / "run")
    cmd_generate(cfg)
    cmd_train(cfg)
    (tmp_path / "run" / dataset_filename(15.0)).unlink()
    cmd_certify(cfg)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    cert = manifest["stages"]["certify"]
    assert cert["regenerated_datasets"] == ["15"]
    assert cert["categories"]["25"] == "C"
    # the missing file is restored byte-identically and re-hashed
    restored = tmp_path / "run" / dataset_filename(15.0)
    assert restored.exists()
    assert cert["files"][dataset_filename(15.0)] \
        == manifest["stages"]["generate"]["files"][dataset_filename(15.0)]


def test_certify_sample_count_restricts_the_metric(tmp_path):
    cfg = _tiny_config(tmp_path / "sub", certify_sample_count=60)
    run_pipeline(cfg)
    out = tmp_path / "sub"
    lines = (out / "report.csv").read_text().splitlines()
    row25 = [ln for ln in lines if ln.startswith("25,")][0]
    assert row25.split(",")[2] == "1"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["stages"]["certify"]["categories"]["25"] == "C"


def test_progress_callback_reaches_the_training_loop(tmp_path):
    cfg = _tiny_config(tmp_path / "run")
    cmd_generate(cfg)
    seen = []
    cmd_train(cfg, progress=lambda ph, it, mse: seen.append(ph))
    assert "adam" in seen and "lbfgs" in seen
