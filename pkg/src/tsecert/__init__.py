"""Traffic state estimation: LWR ground truth, a learned density model, and
physics-based certification of that model across operating environments."""

__version__ = "0.1.0"

from .fundamental import (
    Environment,
    flux,
    flux_derivative,
    flux_for_model,
    legendre_dual,
    velocity,
)
from .grids import (
    REFERENCE_ENV,
    DensityField,
    Grid,
    MoskowitzField,
    PiecewiseConstantProfile,
    reference_grid,
    reference_profile,
)
from .lax_hopf import initial_moskowitz, lax_hopf_solve
from .godunov import demand, godunov_flux, godunov_solve, supply
from .metrics import (
    bound_violation_rate,
    mass_balance,
    pde_residual_loss,
    rel_l2_error,
)
from .network import (
    InputNormalization,
    MlpParams,
    forward,
    forward_field,
    gradient,
    init_params,
    mse_loss,
    pack_params,
    unpack_params,
)
from .optimize import (
    AdamState,
    adam_step,
    adam_update,
    lbfgs_minimize,
    lbfgs_optimize,
)
from .training import SampleSet, TrainConfig, TrainReport, sample_dataset, train
from .certification import (
    CertificationReport,
    CertRow,
    Thresholds,
    certification_sweep,
    classify,
    compute_npl,
    default_refine_budget,
    physics_loss,
    refine,
)
from .dataio import (
    FormatError,
    read_dataset,
    read_model,
    write_dataset,
    write_field_csv,
    write_model,
    write_report_csv,
    write_report_text,
    write_train_report,
)
from .estimator import DensityMlp
from .runconfig import RunConfig, default_config, emit_config, load_config, parse_config
from .pipeline import cmd_certify, cmd_generate, cmd_report, cmd_train, run_pipeline

__all__ = [
    "Environment",
    "velocity",
    "flux",
    "flux_for_model",
    "flux_derivative",
    "legendre_dual",
    "Grid",
    "PiecewiseConstantProfile",
    "DensityField",
    "MoskowitzField",
    "reference_grid",
    "reference_profile",
    "REFERENCE_ENV",
    "initial_moskowitz",
    "lax_hopf_solve",
    "demand",
    "supply",
    "godunov_flux",
    "godunov_solve",
    "mass_balance",
    "rel_l2_error",
    "pde_residual_loss",
    "bound_violation_rate",
    "InputNormalization",
    "MlpParams",
    "init_params",
    "forward",
    "forward_field",
    "mse_loss",
    "gradient",
    "pack_params",
    "unpack_params",
    "AdamState",
    "adam_update",
    "adam_step",
    "lbfgs_minimize",
    "lbfgs_optimize",
    "SampleSet",
    "TrainConfig",
    "TrainReport",
    "sample_dataset",
    "train",
    "Thresholds",
    "CertRow",
    "CertificationReport",
    "classify",
    "physics_loss",
    "compute_npl",
    "certification_sweep",
    "refine",
    "default_refine_budget",
    "FormatError",
    "write_dataset",
    "read_dataset",
    "write_model",
    "read_model",
    "write_field_csv",
    "write_report_csv",
    "write_report_text",
    "write_train_report",
    "DensityMlp",
    "RunConfig",
    "default_config",
    "parse_config",
    "emit_config",
    "load_config",
    "cmd_generate",
    "cmd_train",
    "cmd_certify",
    "cmd_report",
    "run_pipeline",
    "__version__",
]
