"""Field-level diagnostics: conservation, error, and residual metrics."""

from __future__ import annotations

import numpy as np

from .fundamental import Environment, flux, flux_for_model
from .grids import DensityField

__all__ = [
    "mass_balance",
    "rel_l2_error",
    "pde_residual_loss",
    "bound_violation_rate",
]


def mass_balance(field: DensityField) -> float:
    """Conservation residual of a density field, in vehicles.

    residual = [int rho(x, t_max) dx - int rho(x, 0) dx]
               - int_0^t_max [Q(rho(x_min, t)) - Q(rho(x_max, t))] dt

    computed with trapezoid quadrature on the field's own grid. Exact
    solutions give a residual bounded by quadrature error near waves.
    """
    rho = field.rho
    dx, dt = field.grid.dx, field.grid.dt
    stored = np.trapezoid(rho[:, -1], dx=dx) - np.trapezoid(rho[:, 0], dx=dx)
    inflow = np.trapezoid(flux_for_model(rho[0, :], field.env), dx=dt)
    outflow = np.trapezoid(flux_for_model(rho[-1, :], field.env), dx=dt)
    return float(stored - (inflow - outflow))


def rel_l2_error(predicted: DensityField, truth: DensityField) -> float:
    """Relative L2 error between two fields on the same grid.

    sqrt(sum |rho - rho_hat|^2) / sqrt(sum |rho|^2), summed over all nodes.
    Zero iff the fields agree; invariant under scaling both fields jointly.
    """
    if not predicted.grid.same_nodes_as(truth.grid):
        raise ValueError("fields live on different grids")
    denom = np.sqrt(np.sum(truth.rho ** 2))
    if denom == 0.0:
        raise ValueError("truth field is identically zero")
    return float(np.sqrt(np.sum((predicted.rho - truth.rho) ** 2)) / denom)


def pde_residual_loss(field: DensityField, env: Environment) -> float:
    """Mean squared conservation-law residual at interior nodes.

    r = Dt[rho] + Dx[Q(rho)] with central differences in both variables;
    returns mean(r^2) over the (n_x - 2) x (n_t - 2) interior. Model fields
    may leave [0, rho_m], so the flux is evaluated without domain checks.
    """
    if field.grid.n_x < 3 or field.grid.n_t < 3:
        raise ValueError("need at least 3 nodes per axis for central differences")
    rho = field.rho
    q = flux_for_model(rho, env)
    dt_rho = (rho[1:-1, 2:] - rho[1:-1, :-2]) / (2.0 * field.grid.dt)
    dx_q = (q[2:, 1:-1] - q[:-2, 1:-1]) / (2.0 * field.grid.dx)
    r = dt_rho + dx_q
    return float(np.mean(r ** 2))


def bound_violation_rate(predicted: DensityField, env: Environment) -> float:
    """Fraction of nodes with density outside [0, rho_m]."""
    rho = predicted.rho
    bad = np.count_nonzero((rho < 0.0) | (rho > env.rho_m))
    return bad / rho.size
