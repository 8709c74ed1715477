"""Sparse sampling of ground-truth fields and the two-phase training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .fundamental import Environment
from .grids import DensityField
from .network import InputNormalization, MlpEngine, MlpParams, init_params, pack_params, unpack_params
from .optimize import AdamState, adam_update, lbfgs_minimize

__all__ = ["SampleSet", "TrainConfig", "TrainReport", "sample_dataset", "train"]

_HISTORY_EVERY = 100


@dataclass(frozen=True)
class SampleSet:
    """Sparse (x, t, rho) observations drawn from one environment's field."""

    points: np.ndarray
    source_env: Environment
    seed: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, 3) array of (x, t, rho)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        rho = pts[:, 2]
        if rho.min() < 0 or rho.max() > self.source_env.rho_m:
            raise ValueError("sampled densities leave [0, rho_m]")
        if len(np.unique(pts[:, :2], axis=0)) != len(pts):
            raise ValueError("duplicate (x, t) sample locations")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n_samples(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the two-phase (Adam then L-BFGS) protocol.

    The full protocol is the default: 15,000 Adam iterations followed
    by up to 50,000 L-BFGS iterations on a [2, 40x10, 1] tanh network.
    input_normalization left as None is derived from the sample bounding
    box at train time; the pipeline passes the grid's map explicitly.
    """

    adam_iterations: int = 15000
    adam_learning_rate: float = 1e-3
    adam_betas: tuple = (0.9, 0.999)
    adam_epsilon: float = 1e-8
    lbfgs_iterations: int = 50000
    lbfgs_memory: int = 10
    lbfgs_tolerance: float = 1e-9
    hidden_layers: int = 10
    hidden_width: int = 40
    seed: int = 0
    input_normalization: InputNormalization | None = None

    def __post_init__(self):
        if self.adam_iterations < 0 or self.lbfgs_iterations < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.adam_learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("need at least one hidden layer and unit")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs memory must be >= 1")

    @property
    def layer_sizes(self) -> tuple:
        return (2,) + (self.hidden_width,) * self.hidden_layers + (1,)


@dataclass(frozen=True)
class TrainReport:
    """What happened during training; timing is informational only."""

    final_mse: float
    mse_history: tuple  # of (iteration, mse) pairs, sampled every 100
    wall_time: float
    iterations_run: dict  # {"adam": n, "lbfgs": m}
    lbfgs_stop_reason: str = "not_run"
    lbfgs_evaluations: int = 0


def sample_dataset(fld: DensityField, count: int, seed: int) -> SampleSet:
    """Uniform sample of grid nodes without replacement, deterministic per seed."""
    n_nodes = fld.grid.n_nodes
    if not 1 <= count <= n_nodes:
        raise ValueError(f"count must be in [1, {n_nodes}], got {count}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(n_nodes, size=count, replace=False)
    i, j = np.divmod(flat, fld.grid.n_t)
    x = fld.grid.x_nodes()[i]
    t = fld.grid.t_nodes()[j]
    pts = np.column_stack([x, t, fld.rho[i, j]])
    return SampleSet(points=pts, source_env=fld.env, seed=seed)


def _normalization_for(samples_xt: np.ndarray,
                       config: TrainConfig) -> InputNormalization:
    if config.input_normalization is not None:
        return config.input_normalization
    return InputNormalization(
        x_lo=float(samples_xt[:, 0].min()), x_hi=float(samples_xt[:, 0].max()),
        t_lo=float(samples_xt[:, 1].min()), t_hi=float(samples_xt[:, 1].max()))


def train(samples: SampleSet, config: TrainConfig,
          initial: MlpParams | None = None, progress=None) -> tuple:
    """Fit the density estimator: Adam phase, then L-BFGS phase.

    Fully deterministic for fixed (samples, config, initial). Passing
    ``initial`` warm-starts from existing parameters (used by refinement)
    instead of seeding fresh ones. Full-batch gradients throughout.
    ``progress``, if given, is called as progress(phase, iteration, mse)
    every 100 iterations; it has no effect on the result.
    """
    t_start = time.perf_counter()
    pts = samples.points
    norm = initial.normalization if initial is not None \
        else _normalization_for(pts, config)
    if initial is None:
        params = init_params(config.layer_sizes, config.seed, norm)
    else:
        params = initial

    engine = MlpEngine(params.layer_sizes, norm.apply(pts[:, :2]), pts[:, 2])
    theta = pack_params(params)
    history: list = []

    state = AdamState.zeros(len(theta))
    buf1, buf2 = np.empty_like(theta), np.empty_like(theta)
    for it in range(config.adam_iterations):
        loss, g = engine.value_and_grad(theta)
        if it % _HISTORY_EVERY == 0:
            history.append((it, loss))
            if progress is not None:
                progress("adam", it, loss)
        adam_update(theta, g, state, config.adam_learning_rate,
                    config.adam_betas[0], config.adam_betas[1],
                    config.adam_epsilon, buf1, buf2)

    lbfgs_info = {"iterations": 0, "stop_reason": "not_run",
                  "function_evaluations": 0}
    if config.lbfgs_iterations > 0:
        def record(i, f):
            history.append((i, f))
            if progress is not None:
                progress("lbfgs", i, f)

        theta, lbfgs_info = lbfgs_minimize(
            engine, theta, config.lbfgs_iterations, config.lbfgs_tolerance,
            config.lbfgs_memory, record=record,
            iteration_offset=config.adam_iterations)

    final_mse = engine.value(theta)
    total_it = config.adam_iterations + lbfgs_info["iterations"]
    # the lbfgs recorder may have logged this exact iteration already
    if not history or history[-1][0] != total_it:
        history.append((total_it, final_mse))
    report = TrainReport(
        final_mse=final_mse,
        mse_history=tuple(history),
        wall_time=time.perf_counter() - t_start,
        iterations_run={"adam": config.adam_iterations,
                        "lbfgs": lbfgs_info["iterations"]},
        lbfgs_stop_reason=lbfgs_info["stop_reason"],
        lbfgs_evaluations=lbfgs_info["function_evaluations"],
    )
    return unpack_params(theta, params), report
