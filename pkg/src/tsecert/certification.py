"""Normalized Physics Loss, Reuse/Refine/Discard verdicts, and refinement.

A model trained in one environment is scored against the ground truth of
every environment in a sweep; each raw loss is divided by a normalization
constant (by default the training environment's own raw loss) and the
resulting NPL is mapped onto the three certification verdicts:

    C (reuse)    npl <= reuse_max       (default 2)
    R (refine)   npl <= refine_max      (default 5)
    D (discard)  otherwise

The model itself never changes across environments: it maps (x, t) to a
density and knows nothing about v_f. Only the ground truth shifts.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .fundamental import Environment
from .grids import DensityField, Grid, PiecewiseConstantProfile
from .lax_hopf import lax_hopf_solve
from .metrics import bound_violation_rate, pde_residual_loss, rel_l2_error
from .network import MlpParams, forward, forward_field
from .training import SampleSet, TrainConfig, TrainReport, train

__all__ = [
    "METRIC_KINDS",
    "CATEGORIES",
    "NPL_FLOOR",
    "Thresholds",
    "CertRow",
    "CertificationReport",
    "classify",
    "physics_loss",
    "compute_npl",
    "certification_sweep",
    "refine",
    "default_refine_budget",
]

METRIC_KINDS = ("data_mismatch", "pde_residual")
CATEGORIES = ("C", "R", "D")
# raw losses below this floor normalize against the floor instead
NPL_FLOOR = 1e-9


def _check_metric(kind: str):
    if kind not in METRIC_KINDS:
        raise ValueError(f"metric kind must be one of {METRIC_KINDS}, got {kind!r}")


@dataclass(frozen=True)
class Thresholds:
    """Category boundaries on the NPL axis."""

    reuse_max: float = 2.0
    refine_max: float = 5.0

    def __post_init__(self):
        if not 0 < self.reuse_max < self.refine_max:
            raise ValueError(
                f"need 0 < reuse_max < refine_max, got "
                f"({self.reuse_max}, {self.refine_max})")


@dataclass(frozen=True)
class CertRow:
    """One environment's certification outcome."""

    env: Environment
    raw_loss: float
    npl: float
    category: str
    bound_violation_rate: float

    def __post_init__(self):
        if self.npl < 0:
            raise ValueError("npl must be nonnegative")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")


@dataclass(frozen=True)
class CertificationReport:
    """Sweep outcome: one row per environment, ordered by v_f."""

    training_env: Environment
    metric: str
    normalization_constant: float
    rows: tuple
    thresholds: Thresholds

    def __post_init__(self):
        _check_metric(self.metric)
        if not self.rows:
            raise ValueError("report needs at least one row")
        if self.normalization_constant <= 0:
            raise ValueError("normalization constant must be positive")
        vs = [r.env.v_f for r in self.rows]
        if vs != sorted(vs):
            raise ValueError("rows must be ordered by v_f")

    def row_for(self, v_f: float) -> CertRow:
        for r in self.rows:
            if r.env.v_f == v_f:
                return r
        raise KeyError(f"no row for v_f={v_f}")


def classify(npl: float, thresholds: Thresholds = Thresholds()) -> str:
    """Map an NPL value onto C/R/D. A perfect score of 0 counts as C."""
    if not np.isfinite(npl) or npl < 0:
        raise ValueError(f"npl must be a nonnegative number, got {npl}")
    if npl <= thresholds.reuse_max:
        return "C"
    if npl <= thresholds.refine_max:
        return "R"
    return "D"


def _model_field(model, grid: Grid, env: Environment) -> DensityField:
    """Evaluate the model on the grid; a DensityField passes through.

    Accepting a field lets solver output stand in for a trained network,
    which gives the certification machinery a training-free oracle.
    """
    if isinstance(model, DensityField):
        if not model.grid.same_nodes_as(grid):
            raise ValueError("model field lives on a different grid")
        return model
    return forward_field(model, grid, env)


def physics_loss(model, env: Environment, grid: Grid,
                 profile: PiecewiseConstantProfile,
                 kind: str = "data_mismatch",
                 truth: DensityField | None = None,
                 node_subset: np.ndarray | None = None) -> float:
    """Raw physics loss of the model under one environment.

    ``model`` is either network parameters or an already-sampled
    DensityField. data_mismatch: relative L2 error of the model field
    against the exact solver's ground truth (recomputed unless ``truth``
    is supplied). pde_residual: mean squared conservation residual of the
    model field under the environment's flux; needs no ground truth at all.

    ``node_subset`` restricts data_mismatch to the given flat node indices
    (sensor-style evaluation); the default is the full grid.
    """
    _check_metric(kind)
    predicted = _model_field(model, grid, env)
    if kind == "pde_residual":
        return pde_residual_loss(predicted, env)
    if truth is None:
        _, truth = lax_hopf_solve(profile, env, grid)
    elif not truth.grid.same_nodes_as(grid):
        raise ValueError("supplied truth lives on a different grid")
    if node_subset is None:
        return rel_l2_error(predicted, truth)
    pred = predicted.rho.ravel()[node_subset]
    ref = truth.rho.ravel()[node_subset]
    denom = np.sqrt(np.sum(ref ** 2))
    if denom == 0.0:
        raise ValueError("truth is zero on the selected nodes")
    return float(np.sqrt(np.sum((pred - ref) ** 2)) / denom)


def compute_npl(model, training_env: Environment, env_list,
                grid: Grid, profile: PiecewiseConstantProfile,
                kind: str = "data_mismatch",
                normalization_constant: float | None = None,
                truths: dict | None = None,
                node_subset: np.ndarray | None = None) -> tuple:
    """Raw and normalized losses for each environment.

    Returns (rows, constant) where rows is a list of (env, raw_loss, npl)
    in the order given and constant is the normalization actually used:
    max(raw_loss(training_env), 1e-9) unless one was supplied.
    """
    env_list = list(env_list)
    if not env_list:
        raise ValueError("env_list must be nonempty")
    truths = truths or {}
    cache = {}

    def raw(e: Environment) -> float:
        key = (e.v_f, e.rho_m)
        if key not in cache:
            cache[key] = physics_loss(model, e, grid, profile, kind,
                                      truth=truths.get(e.v_f),
                                      node_subset=node_subset)
        return cache[key]

    if normalization_constant is None:
        normalization_constant = max(raw(training_env), NPL_FLOOR)
    elif normalization_constant <= 0:
        raise ValueError("normalization constant must be positive")
    rows = [(e, raw(e), raw(e) / normalization_constant) for e in env_list]
    return rows, normalization_constant


def certification_sweep(model, training_env: Environment,
                        v_f_list, rho_m: float | None = None,
                        grid: Grid = None, profile: PiecewiseConstantProfile = None,
                        kind: str = "data_mismatch",
                        thresholds: Thresholds = Thresholds(),
                        normalization_constant: float | None = None,
                        truths: dict | None = None,
                        node_subset: np.ndarray | None = None) -> CertificationReport:
    """Certify the model across environments sharing every parameter but v_f.

    ``rho_m`` defaults to the training environment's jam density. Rows come
    out sorted by v_f regardless of input order.
    """
    if grid is None or profile is None:
        raise ValueError("grid and profile are required")
    v_fs = sorted(float(v) for v in v_f_list)
    if not v_fs:
        raise ValueError("v_f_list must be nonempty")
    if rho_m is None:
        rho_m = training_env.rho_m
    envs = [Environment(v_f=v, rho_m=rho_m) for v in v_fs]
    npl_rows, constant = compute_npl(
        model, training_env, envs, grid, profile, kind,
        normalization_constant=normalization_constant, truths=truths,
        node_subset=node_subset)
    predicted = _model_field(model, grid, training_env)
    rows = []
    for env, raw, npl in npl_rows:
        rows.append(CertRow(
            env=env, raw_loss=raw, npl=npl,
            category=classify(npl, thresholds),
            bound_violation_rate=bound_violation_rate(predicted, env)))
    return CertificationReport(training_env=training_env, metric=kind,
                               normalization_constant=constant,
                               rows=tuple(rows), thresholds=thresholds)


def default_refine_budget(seed: int = 0) -> TrainConfig:
    """Reduced two-phase budget for refinement runs."""
    return TrainConfig(adam_iterations=2000, lbfgs_iterations=5000, seed=seed)


def refine(model: MlpParams, new_env_samples: SampleSet,
           budget: TrainConfig | None = None,
           base_samples: SampleSet | None = None) -> tuple:
    """Continue training an R-verdict model on old plus new-environment data.

    Warm-starts from the given parameters on the union of ``base_samples``
    (the original training data, when available) and the new environment's
    samples. If the refined model fits the new samples worse than the
    original did, the original parameters are returned: refinement must not
    degrade the model on the environment it was asked to adapt to.
    """
    if budget is None:
        budget = default_refine_budget()
    new_pts = new_env_samples.points
    if base_samples is not None:
        pts = np.vstack([base_samples.points, new_pts])
    else:
        pts = np.array(new_pts)
    union = SimpleNamespace(points=pts)

    before = _sample_mse(model, new_pts)
    refined, report = train(union, budget, initial=model)
    after = _sample_mse(refined, new_pts)
    if after > before:
        return model, TrainReport(
            final_mse=report.final_mse, mse_history=report.mse_history,
            wall_time=report.wall_time, iterations_run=report.iterations_run,
            lbfgs_stop_reason="rejected_worse_on_new_env",
            lbfgs_evaluations=report.lbfgs_evaluations)
    return refined, report


def _sample_mse(model: MlpParams, pts: np.ndarray) -> float:
    pred = forward(model, pts[:, 0], pts[:, 1])
    return float(np.mean((pred - pts[:, 2]) ** 2))
