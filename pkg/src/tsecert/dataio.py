"""Binary dataset/model files, CSV export, and report emission.

Dataset files (magic TSED1) hold one environment's density field with its
grid; model files (magic TSEM1) hold the network architecture, the input
normalization, and all parameters. Both formats are little-endian,
fixed-layout, and written deterministically: identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .certification import CertificationReport
from .fundamental import Environment
from .grids import DensityField, Grid
from .network import ACTIVATIONS, InputNormalization, MlpParams
from .training import TrainReport

__all__ = [
    "DATASET_MAGIC",
    "MODEL_MAGIC",
    "FORMAT_VERSION",
    "FormatError",
    "write_dataset",
    "read_dataset",
    "write_model",
    "read_model",
    "write_field_csv",
    "write_report_csv",
    "write_report_text",
    "write_train_report",
]

DATASET_MAGIC = b"TSED1"
MODEL_MAGIC = b"TSEM1"
FORMAT_VERSION = 1

_TAG_TO_ACTIVATION = {v: k for k, v in ACTIVATIONS.items()}


class FormatError(ValueError):
    """A file is not a valid dataset/model: bad magic, version, or size."""


def _take(buf: bytes, offset: int, size: int, what: str, path) -> tuple:
    end = offset + size
    if end > len(buf):
        raise FormatError(
            f"{path}: truncated file, {what} needs bytes {offset}:{end} "
            f"but the file has {len(buf)}")
    return buf[offset:end], end


def write_dataset(path, field: DensityField) -> Path:
    """Persist a density field: magic, version, env, grid, shape, values."""
    g = field.grid
    parts = [
        DATASET_MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<2d", field.env.v_f, field.env.rho_m),
        struct.pack("<5d", g.x_min, g.x_max, g.dx, g.t_max, g.dt),
        struct.pack("<2I", g.n_x, g.n_t),
        np.ascontiguousarray(field.rho, dtype="<f8").tobytes(),
    ]
    path = Path(path)
    path.write_bytes(b"".join(parts))
    return path


def read_dataset(path) -> DensityField:
    path = Path(path)
    buf = path.read_bytes()
    raw, off = _take(buf, 0, 5, "magic", path)
    if raw != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic {raw!r}, expected {DATASET_MAGIC!r}")
    raw, off = _take(buf, off, 2, "version", path)
    version = struct.unpack("<H", raw)[0]
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    raw, off = _take(buf, off, 16, "environment", path)
    v_f, rho_m = struct.unpack("<2d", raw)
    raw, off = _take(buf, off, 40, "grid", path)
    x_min, x_max, dx, t_max, dt = struct.unpack("<5d", raw)
    raw, off = _take(buf, off, 8, "shape", path)
    n_x, n_t = struct.unpack("<2I", raw)
    grid = Grid(x_min=x_min, x_max=x_max, dx=dx, t_max=t_max, dt=dt)
    if (grid.n_x, grid.n_t) != (n_x, n_t):
        raise FormatError(
            f"{path}: stored shape ({n_x}, {n_t}) does not match the grid "
            f"({grid.n_x}, {grid.n_t})")
    raw, off = _take(buf, off, 8 * n_x * n_t, "density values", path)
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} unexpected trailing bytes")
    rho = np.frombuffer(raw, dtype="<f8").reshape(n_x, n_t)
    return DensityField(grid=grid, env=Environment(v_f=v_f, rho_m=rho_m),
                        rho=rho.astype(float))


def write_model(path, params: MlpParams) -> Path:
    """Persist network parameters with architecture and normalization."""
    sizes = params.layer_sizes
    parts = [
        MODEL_MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<H", len(sizes)),
        struct.pack(f"<{len(sizes)}I", *sizes),
        struct.pack("<B", ACTIVATIONS[params.activation]),
        struct.pack("<4d", *params.normalization.as_tuple()),
    ]
    for w, b in zip(params.weights, params.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    path = Path(path)
    path.write_bytes(b"".join(parts))
    return path


def read_model(path) -> MlpParams:
    path = Path(path)
    buf = path.read_bytes()
    raw, off = _take(buf, 0, 5, "magic", path)
    if raw != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {raw!r}, expected {MODEL_MAGIC!r}")
    raw, off = _take(buf, off, 2, "version", path)
    version = struct.unpack("<H", raw)[0]
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    raw, off = _take(buf, off, 2, "layer count", path)
    n_layers = struct.unpack("<H", raw)[0]
    if n_layers < 2:
        raise FormatError(f"{path}: need at least 2 layers, got {n_layers}")
    raw, off = _take(buf, off, 4 * n_layers, "layer sizes", path)
    sizes = struct.unpack(f"<{n_layers}I", raw)
    raw, off = _take(buf, off, 1, "activation tag", path)
    tag = raw[0]
    if tag not in _TAG_TO_ACTIVATION:
        raise FormatError(f"{path}: unknown activation tag {tag}")
    raw, off = _take(buf, off, 32, "normalization", path)
    norm = InputNormalization(*struct.unpack("<4d", raw))
    ws, bs = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        raw, off = _take(buf, off, 8 * n_in * n_out, "weights", path)
        ws.append(np.frombuffer(raw, dtype="<f8").reshape(n_out, n_in).astype(float))
        raw, off = _take(buf, off, 8 * n_out, "biases", path)
        bs.append(np.frombuffer(raw, dtype="<f8").astype(float))
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} unexpected trailing bytes")
    return MlpParams(sizes, tuple(ws), tuple(bs),
                     _TAG_TO_ACTIVATION[tag], norm)


def write_field_csv(path, field: DensityField) -> Path:
    """Plot-ready node listing: x,t,rho with 9 significant digits."""
    lines = ["x,t,rho"]
    xs = field.grid.x_nodes()
    ts = field.grid.t_nodes()
    rho = field.rho
    for i, x in enumerate(xs):
        for j, t in enumerate(ts):
            lines.append(f"{x:.9g},{t:.9g},{rho[i, j]:.9g}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _report_header(report: CertificationReport) -> list:
    return [
        f"# metric = {report.metric}",
        f"# normalization_constant = {report.normalization_constant:.9g}",
        f"# training_env = v_f={report.training_env.v_f:.9g},"
        f"rho_m={report.training_env.rho_m:.9g}",
        f"# thresholds = reuse_max={report.thresholds.reuse_max:.9g},"
        f"refine_max={report.thresholds.refine_max:.9g}",
    ]


def write_report_csv(path, report: CertificationReport) -> Path:
    """Machine-readable sweep report, one row per environment."""
    lines = _report_header(report)
    lines.append("v_f,raw_loss,npl,category,bound_violation_rate")
    for r in report.rows:
        lines.append(f"{r.env.v_f:.9g},{r.raw_loss:.9g},{r.npl:.9g},"
                     f"{r.category},{r.bound_violation_rate:.9g}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_report_text(path, report: CertificationReport) -> Path:
    """Human-readable table: environments as columns, NPL and verdict rows."""
    cells = [f"{r.env.v_f:.9g}" for r in report.rows]
    npls = [f"{r.npl:.2f}" for r in report.rows]
    cats = [r.category for r in report.rows]
    width = max(6, *(len(c) for c in cells + npls))
    def row(label, values):
        return label.ljust(10) + "  ".join(v.rjust(width) for v in values)
    lines = [
        "Certification classification",
        f"metric: {report.metric}   "
        f"normalization constant: {report.normalization_constant:.6g}",
        "",
        row("v_f", cells),
        row("NPL", npls),
        row("verdict", cats),
        "",
        "verdicts: C = reuse, R = refine, D = discard",
    ]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_train_report(path, report: TrainReport) -> Path:
    """Training summary. Wall time is deliberately left to the manifest so
    identical runs write identical bytes here."""
    lines = [
        f"final_mse = {report.final_mse:.9g}",
        f"adam_iterations = {report.iterations_run.get('adam', 0)}",
        f"lbfgs_iterations = {report.iterations_run.get('lbfgs', 0)}",
        f"lbfgs_stop_reason = {report.lbfgs_stop_reason}",
        f"lbfgs_evaluations = {report.lbfgs_evaluations}",
        "",
        "iteration,mse",
    ]
    for it, mse in report.mse_history:
        lines.append(f"{it},{mse:.9g}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
