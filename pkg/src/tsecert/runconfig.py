"""Run configuration: a small line-oriented `key = value` format.

Dotted keys group related settings (grid.dx, train.seed); unknown keys are
rejected so typos surface immediately. Any key left out falls back to the
built-in defaults, so an empty file is the reference scenario. emit/parse
round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .certification import METRIC_KINDS, Thresholds
from .fundamental import Environment
from .grids import Grid, PiecewiseConstantProfile
from .training import TrainConfig

__all__ = ["RunConfig", "CONFIG_KEYS", "default_config", "parse_config",
           "emit_config", "load_config", "with_output_dir"]


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run needs; defaults are the reference scenario."""

    env: Environment
    grid: Grid
    profile: PiecewiseConstantProfile
    sample_count: int
    train: TrainConfig
    sweep_v_f: tuple
    thresholds: Thresholds
    metric: str
    output_dir: str
    seed: int
    certify_sample_count: int = 0

    def __post_init__(self):
        if self.metric not in METRIC_KINDS:
            raise ValueError(f"metric must be one of {METRIC_KINDS}")
        if not 1 <= self.sample_count <= self.grid.n_nodes:
            raise ValueError(
                f"sample_count must be in [1, {self.grid.n_nodes}]")
        if not self.sweep_v_f:
            raise ValueError("sweep_v_f must be nonempty")
        if self.certify_sample_count < 0:
            raise ValueError("certify_sample_count must be >= 0")
        self.profile.check_against(self.env, self.grid)


def default_config() -> RunConfig:
    """The reference scenario: 1000 m road over 50 s, dx=2 m, dt=0.1 s (500x500
    nodes at the left cell edges), the three-plateau initial profile, env
    (25, 0.15), 15,000 training samples, sweep v_f = 5..45 step 5."""
    return RunConfig(
        env=Environment(v_f=25.0, rho_m=0.15),
        grid=Grid(x_min=0.0, x_max=998.0, dx=2.0, t_max=49.9, dt=0.1),
        profile=PiecewiseConstantProfile(
            breakpoints=(0.0, 200.0, 500.0, 1000.0),
            values=(0.13, 0.06, 0.03)),
        sample_count=15000,
        train=TrainConfig(),
        sweep_v_f=(5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0),
        thresholds=Thresholds(),
        metric="data_mismatch",
        output_dir="runs/reference",
        seed=0,
    )


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(","))


# key -> (parser, description); emission order follows this table
CONFIG_KEYS = {
    "seed": (int, "master seed; per-stage seeds are derived from it"),
    "output_dir": (str, "directory receiving all run artifacts"),
    "metric": (str, "physics-loss kind: data_mismatch or pde_residual"),
    "env.v_f": (float, "training environment free-flow speed (m/s)"),
    "env.rho_m": (float, "jam density shared by all environments (veh/m)"),
    "grid.x_min": (float, "left edge of the space window (m)"),
    "grid.x_max": (float, "rightmost grid node (m)"),
    "grid.dx": (float, "node spacing (m); must divide the span evenly"),
    "grid.t_max": (float, "last time node (s)"),
    "grid.dt": (float, "time step (s); must divide t_max evenly"),
    "profile.breakpoints": (_floats, "initial-density breakpoints (m), ascending"),
    "profile.values": (_floats, "density on each breakpoint interval (veh/m)"),
    "sample_count": (int, "training samples drawn from the ground truth"),
    "certify_sample_count": (int, "certification nodes (0 = full grid)"),
    "train.adam_iterations": (int, "Adam phase length"),
    "train.adam_learning_rate": (float, "Adam step size"),
    "train.adam_beta1": (float, "Adam first-moment decay"),
    "train.adam_beta2": (float, "Adam second-moment decay"),
    "train.adam_epsilon": (float, "Adam denominator guard"),
    "train.lbfgs_iterations": (int, "L-BFGS iteration cap"),
    "train.lbfgs_memory": (int, "L-BFGS history pairs"),
    "train.lbfgs_tolerance": (float, "L-BFGS gradient-norm stop"),
    "train.hidden_layers": (int, "hidden layer count"),
    "train.hidden_width": (int, "units per hidden layer"),
    "sweep_v_f": (_floats, "free-flow speeds certified against (m/s)"),
    "thresholds.reuse_max": (float, "largest NPL classified C"),
    "thresholds.refine_max": (float, "largest NPL classified R"),
}


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines over the built-in defaults."""
    values = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {rawline!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        parser = CONFIG_KEYS[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc

    base = default_config()
    env = Environment(
        v_f=values.get("env.v_f", base.env.v_f),
        rho_m=values.get("env.rho_m", base.env.rho_m))
    grid = Grid(
        x_min=values.get("grid.x_min", base.grid.x_min),
        x_max=values.get("grid.x_max", base.grid.x_max),
        dx=values.get("grid.dx", base.grid.dx),
        t_max=values.get("grid.t_max", base.grid.t_max),
        dt=values.get("grid.dt", base.grid.dt))
    profile = PiecewiseConstantProfile(
        breakpoints=values.get("profile.breakpoints", base.profile.breakpoints),
        values=values.get("profile.values", base.profile.values))
    train = TrainConfig(
        adam_iterations=values.get("train.adam_iterations",
                                   base.train.adam_iterations),
        adam_learning_rate=values.get("train.adam_learning_rate",
                                      base.train.adam_learning_rate),
        adam_betas=(values.get("train.adam_beta1", base.train.adam_betas[0]),
                    values.get("train.adam_beta2", base.train.adam_betas[1])),
        adam_epsilon=values.get("train.adam_epsilon", base.train.adam_epsilon),
        lbfgs_iterations=values.get("train.lbfgs_iterations",
                                    base.train.lbfgs_iterations),
        lbfgs_memory=values.get("train.lbfgs_memory", base.train.lbfgs_memory),
        lbfgs_tolerance=values.get("train.lbfgs_tolerance",
                                   base.train.lbfgs_tolerance),
        hidden_layers=values.get("train.hidden_layers", base.train.hidden_layers),
        hidden_width=values.get("train.hidden_width", base.train.hidden_width))
    thresholds = Thresholds(
        reuse_max=values.get("thresholds.reuse_max", base.thresholds.reuse_max),
        refine_max=values.get("thresholds.refine_max", base.thresholds.refine_max))
    return RunConfig(
        env=env, grid=grid, profile=profile,
        sample_count=values.get("sample_count", base.sample_count),
        train=train,
        sweep_v_f=values.get("sweep_v_f", base.sweep_v_f),
        thresholds=thresholds,
        metric=values.get("metric", base.metric),
        output_dir=values.get("output_dir", base.output_dir),
        seed=values.get("seed", base.seed),
        certify_sample_count=values.get("certify_sample_count",
                                        base.certify_sample_count))


def _format(v) -> str:
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(config: RunConfig) -> str:
    """Write every key in canonical order; parse(emit(c)) == c."""
    c = config
    values = {
        "seed": c.seed,
        "output_dir": c.output_dir,
        "metric": c.metric,
        "env.v_f": c.env.v_f,
        "env.rho_m": c.env.rho_m,
        "grid.x_min": c.grid.x_min,
        "grid.x_max": c.grid.x_max,
        "grid.dx": c.grid.dx,
        "grid.t_max": c.grid.t_max,
        "grid.dt": c.grid.dt,
        "profile.breakpoints": c.profile.breakpoints,
        "profile.values": c.profile.values,
        "sample_count": c.sample_count,
        "certify_sample_count": c.certify_sample_count,
        "train.adam_iterations": c.train.adam_iterations,
        "train.adam_learning_rate": c.train.adam_learning_rate,
        "train.adam_beta1": c.train.adam_betas[0],
        "train.adam_beta2": c.train.adam_betas[1],
        "train.adam_epsilon": c.train.adam_epsilon,
        "train.lbfgs_iterations": c.train.lbfgs_iterations,
        "train.lbfgs_memory": c.train.lbfgs_memory,
        "train.lbfgs_tolerance": c.train.lbfgs_tolerance,
        "train.hidden_layers": c.train.hidden_layers,
        "train.hidden_width": c.train.hidden_width,
        "sweep_v_f": c.sweep_v_f,
        "thresholds.reuse_max": c.thresholds.reuse_max,
        "thresholds.refine_max": c.thresholds.refine_max,
    }
    lines = [f"{k} = {_format(values[k])}" for k in CONFIG_KEYS]
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, "r") as fh:
        return parse_config(fh.read())


def with_output_dir(config: RunConfig, output_dir: str) -> RunConfig:
    return replace(config, output_dir=output_dir)
