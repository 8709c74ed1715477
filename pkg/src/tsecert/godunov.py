"""First-order Godunov finite-volume solver for the LWR equation.

Independent of the Lax-Hopf solver on purpose: the two are cross-checked
against each other. The scheme uses the demand/supply form of the Riemann
flux for a concave fundamental diagram and sub-steps internally to satisfy
the CFL condition regardless of the requested output step.
"""

from __future__ import annotations

import numpy as np

from .fundamental import Environment, _check_density, flux
from .grids import DensityField, Grid, PiecewiseConstantProfile

__all__ = ["demand", "supply", "godunov_flux", "godunov_solve"]

CFL_TARGET = 0.9


def demand(rho, env: Environment) -> np.ndarray:
    """Sending capacity of the upstream state: Q(rho) capped at capacity."""
    rho = _check_density(rho, env)
    return np.where(rho <= env.critical_density, flux(rho, env), env.max_flux)


def supply(rho, env: Environment) -> np.ndarray:
    """Receiving capacity of the downstream state."""
    rho = _check_density(rho, env)
    return np.where(rho <= env.critical_density, env.max_flux, flux(rho, env))


def godunov_flux(rho_left, rho_right, env: Environment) -> np.ndarray:
    """Riemann interface flux F = min(demand(rho_left), supply(rho_right))."""
    return np.minimum(demand(rho_left, env), supply(rho_right, env))


def _substeps(dt: float, dx: float, v_f: float) -> int:
    # smallest integer count with dt/n <= CFL_TARGET * dx / v_f
    return max(1, int(np.ceil(dt * v_f / (CFL_TARGET * dx))))


def godunov_solve(profile: PiecewiseConstantProfile, env: Environment,
                  grid: Grid) -> DensityField:
    """Finite-volume LWR solution resampled onto the grid nodes.

    Cells span [x_i, x_i + dx) with centers at x_min + (i + 1/2) dx, one per
    grid node; node i reports the average of the cell it borders on the
    left. Cell averages initialize exactly from the profile. Transmissive
    ghost cells realize the free whole-line evolution (waves at the window
    edges are outgoing). Each output step of dt runs an integer number of
    equal internal steps chosen so that v_f * dt_int / dx <= 0.9.
    """
    profile.check_against(env, grid)
    x = grid.x_nodes()
    edges = np.append(x, x[-1] + grid.dx)
    cells = np.asarray(profile.mean_over(edges[:-1], edges[1:]), dtype=float)

    n_sub = _substeps(grid.dt, grid.dx, env.v_f)
    lam = (grid.dt / n_sub) / grid.dx

    v_f, rho_m, rho_c, q_max = env.v_f, env.rho_m, env.critical_density, env.max_flux

    rho = np.empty((grid.n_x, grid.n_t))
    rho[:, 0] = cells
    state = np.empty(grid.n_x + 2)
    for j in range(1, grid.n_t):
        for _ in range(n_sub):
            state[1:-1] = cells
            state[0] = cells[0]
            state[-1] = cells[-1]
            q = state * v_f * (1.0 - state / rho_m)
            d = np.where(state[:-1] <= rho_c, q[:-1], q_max)
            s = np.where(state[1:] <= rho_c, q_max, q[1:])
            f = np.minimum(d, s)
            cells -= lam * (f[1:] - f[:-1])
        rho[:, j] = cells

    return DensityField(grid=grid, env=env, rho=rho)
