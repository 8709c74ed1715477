"""The four pipeline stages and the run manifest.

generate   ground-truth dataset per environment (exact solver), with a
           finite-volume cross-check logged per environment
train      sparse sampling + two-phase fit, persisted as a model file
certify    sweep the model across environments, emit the report
report     consolidated summary and plot-ready NPL curve

Every stage rewrites the manifest with the files it produced and their
content hashes. All artifact files are byte-deterministic for a fixed
config; the manifest itself carries wall times and is the one exception.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certification import certification_sweep
from .dataio import (
    read_dataset,
    read_model,
    write_dataset,
    write_model,
    write_report_csv,
    write_report_text,
    write_train_report,
)
from .godunov import godunov_solve
from .lax_hopf import lax_hopf_solve
from .metrics import rel_l2_error
from .network import InputNormalization
from .runconfig import RunConfig, emit_config
from .training import TrainConfig, sample_dataset, train

__all__ = [
    "stage_seed",
    "dataset_filename",
    "cmd_generate",
    "cmd_train",
    "cmd_certify",
    "cmd_report",
    "run_pipeline",
]

# counter-based split of the master seed, one stream per consumer
_SEED_STREAMS = {"sample": 1, "init": 2, "certify": 3}

MANIFEST_NAME = "manifest.json"
MODEL_NAME = "model.tsem"
TRAIN_REPORT_NAME = "train_report.txt"
REPORT_CSV_NAME = "report.csv"
REPORT_TEXT_NAME = "report.txt"
CURVE_NAME = "npl_curve.csv"
SUMMARY_NAME = "summary.txt"
CONFIG_SNAPSHOT_NAME = "config.txt"


def stage_seed(master_seed: int, stream: str) -> int:
    """Independent per-stage seed derived from the single config seed."""
    ss = np.random.SeedSequence((master_seed, _SEED_STREAMS[stream]))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def dataset_filename(v_f: float) -> str:
    return f"dataset_vf{v_f:g}.tsed"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_manifest(out: Path) -> dict:
    p = out / MANIFEST_NAME
    if p.exists():
        return json.loads(p.read_text())
    return {"tool_version": __version__, "stages": {}}


def _write_manifest(out: Path, manifest: dict, config: RunConfig):
    manifest["tool_version"] = __version__
    manifest["config"] = emit_config(config)
    for stage in manifest["stages"].values():
        for name in stage.get("files", {}):
            if not (out / name).exists():
                raise RuntimeError(f"manifest lists missing file {name}")
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _snapshot_config(out: Path, config: RunConfig):
    (out / CONFIG_SNAPSHOT_NAME).write_text(emit_config(config))


def _all_v_f(config: RunConfig) -> list:
    vs = {float(v) for v in config.sweep_v_f}
    vs.add(float(config.env.v_f))
    return sorted(vs)


def cmd_generate(config: RunConfig) -> list:
    """Write one ground-truth dataset per environment; cross-check each."""
    out = _out_dir(config)
    t0 = time.perf_counter()
    files = {}
    cross = {}
    dataset_paths = []
    for v in _all_v_f(config):
        env = config.env.with_v_f(v)
        _, truth = lax_hopf_solve(config.profile, env, config.grid)
        fv = godunov_solve(config.profile, env, config.grid)
        cross[f"{v:g}"] = float(np.mean(np.abs(truth.rho - fv.rho)))
        name = dataset_filename(v)
        dataset_paths.append(write_dataset(out / name, truth))
        files[name] = _sha256(out / name)
    _snapshot_config(out, config)
    files[CONFIG_SNAPSHOT_NAME] = _sha256(out / CONFIG_SNAPSHOT_NAME)
    manifest = _load_manifest(out)
    manifest["stages"]["generate"] = {
        "wall_time": time.perf_counter() - t0,
        "files": files,
        "godunov_cross_check_l1": cross,
    }
    _write_manifest(out, manifest, config)
    return dataset_paths


def cmd_train(config: RunConfig, dataset_path=None, progress=None) -> tuple:
    """Sample the training dataset, fit the model, persist both outputs."""
    out = _out_dir(config)
    t0 = time.perf_counter()
    if dataset_path is None:
        dataset_path = out / dataset_filename(config.env.v_f)
        if not dataset_path.exists():
            raise FileNotFoundError(
                f"{dataset_path} not found; run generate first or pass a dataset")
    truth = read_dataset(dataset_path)
    samples = sample_dataset(truth, config.sample_count,
                             seed=stage_seed(config.seed, "sample"))
    train_cfg = TrainConfig(
        adam_iterations=config.train.adam_iterations,
        adam_learning_rate=config.train.adam_learning_rate,
        adam_betas=config.train.adam_betas,
        adam_epsilon=config.train.adam_epsilon,
        lbfgs_iterations=config.train.lbfgs_iterations,
        lbfgs_memory=config.train.lbfgs_memory,
        lbfgs_tolerance=config.train.lbfgs_tolerance,
        hidden_layers=config.train.hidden_layers,
        hidden_width=config.train.hidden_width,
        seed=stage_seed(config.seed, "init"),
        input_normalization=InputNormalization.from_grid(truth.grid))
    params, report = train(samples, train_cfg, progress=progress)

    model_path = write_model(out / MODEL_NAME, params)
    report_path = write_train_report(out / TRAIN_REPORT_NAME, report)
    _snapshot_config(out, config)
    manifest = _load_manifest(out)
    manifest["stages"]["train"] = {
        "wall_time": time.perf_counter() - t0,
        "train_wall_time": report.wall_time,
        "files": {MODEL_NAME: _sha256(model_path),
                  TRAIN_REPORT_NAME: _sha256(report_path)},
        "final_mse": report.final_mse,
        "iterations_run": report.iterations_run,
        "lbfgs_stop_reason": report.lbfgs_stop_reason,
    }
    _write_manifest(out, manifest, config)
    return model_path, report_path


def cmd_certify(config: RunConfig, model_path=None) -> tuple:
    """Sweep the model across the configured environments, write reports.

    Verdicts are data: a D row is a successful certification run, not a
    failure. Missing datasets are regenerated on the fly and noted.
    """
    out = _out_dir(config)
    t0 = time.perf_counter()
    if model_path is None:
        model_path = out / MODEL_NAME
    model = read_model(model_path)

    truths = {}
    regenerated = []
    regenerated_files = {}
    for v in _all_v_f(config):
        p = out / dataset_filename(v)
        if p.exists():
            truths[v] = read_dataset(p)
        else:
            env = config.env.with_v_f(v)
            _, truths[v] = lax_hopf_solve(config.profile, env, config.grid)
            # restore the file: earlier stages may list it in the manifest
            write_dataset(p, truths[v])
            regenerated.append(f"{v:g}")
            regenerated_files[p.name] = _sha256(p)

    node_subset = None
    if config.certify_sample_count:
        rng = np.random.default_rng(stage_seed(config.seed, "certify"))
        node_subset = np.sort(rng.choice(
            config.grid.n_nodes, size=config.certify_sample_count,
            replace=False))

    report = certification_sweep(
        model, config.env, config.sweep_v_f, rho_m=config.env.rho_m,
        grid=config.grid, profile=config.profile, kind=config.metric,
        thresholds=config.thresholds, truths=truths, node_subset=node_subset)

    csv_path = write_report_csv(out / REPORT_CSV_NAME, report)
    text_path = write_report_text(out / REPORT_TEXT_NAME, report)
    _snapshot_config(out, config)
    manifest = _load_manifest(out)
    manifest["stages"]["certify"] = {
        "wall_time": time.perf_counter() - t0,
        "files": {REPORT_CSV_NAME: _sha256(csv_path),
                  REPORT_TEXT_NAME: _sha256(text_path),
                  **regenerated_files},
        "regenerated_datasets": regenerated,
        "normalization_constant": report.normalization_constant,
        "categories": {f"{r.env.v_f:g}": r.category for r in report.rows},
    }
    _write_manifest(out, manifest, config)
    return csv_path, text_path


def cmd_report(run_dir) -> tuple:
    """Consolidate a finished run: summary text plus plot-ready NPL curve."""
    out = Path(run_dir)
    manifest_path = out / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest in {out}; run the pipeline first")
    manifest = json.loads(manifest_path.read_text())
    t0 = time.perf_counter()

    csv_path = out / REPORT_CSV_NAME
    if not csv_path.exists():
        raise FileNotFoundError(f"{csv_path} not found; run certify first")
    header = {}
    rows = []
    for line in csv_path.read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            header[key.strip()] = val.strip()
        elif line and not line.startswith("v_f,"):
            v_f, raw, npl, cat, bvr = line.split(",")
            rows.append((float(v_f), float(raw), float(npl), cat, float(bvr)))

    curve_lines = ["v_f,npl,category"]
    for v_f, _, npl, cat, _ in rows:
        curve_lines.append(f"{v_f:.9g},{npl:.9g},{cat}")
    curve_path = out / CURVE_NAME
    curve_path.write_text("\n".join(curve_lines) + "\n")

    counts = {c: sum(1 for r in rows if r[3] == c) for c in ("C", "R", "D")}
    summary_lines = [
        "Certification run summary",
        f"metric: {header.get('metric', '?')}",
        f"normalization constant: {header.get('normalization_constant', '?')}",
        f"training environment: {header.get('training_env', '?')}",
        f"environments: {len(rows)}",
        f"verdicts: {counts['C']} reuse, {counts['R']} refine, {counts['D']} discard",
        "",
        "v_f        npl  verdict  bound_violations",
    ]
    for v_f, _, npl, cat, bvr in rows:
        summary_lines.append(f"{v_f:<8g}{npl:>6.2f}  {cat:<7}  {bvr:.4g}")
    train_stage = manifest.get("stages", {}).get("train")
    if train_stage:
        summary_lines += ["", f"model final_mse: {train_stage['final_mse']:.6g}"]
    summary_path = out / SUMMARY_NAME
    summary_path.write_text("\n".join(summary_lines) + "\n")

    manifest["stages"]["report"] = {
        "wall_time": time.perf_counter() - t0,
        "files": {CURVE_NAME: _sha256(curve_path),
                  SUMMARY_NAME: _sha256(summary_path)},
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return summary_path, curve_path


def run_pipeline(config: RunConfig, progress=None) -> dict:
    """generate -> train -> certify -> report, returning all artifact paths."""
    datasets = cmd_generate(config)
    model_path, train_report_path = cmd_train(config, progress=progress)
    csv_path, text_path = cmd_certify(config)
    summary_path, curve_path = cmd_report(config.output_dir)
    return {
        "datasets": datasets,
        "model": model_path,
        "train_report": train_report_path,
        "report_csv": csv_path,
        "report_text": text_path,
        "summary": summary_path,
        "npl_curve": curve_path,
    }
