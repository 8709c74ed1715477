"""Exact LWR solver via the Lax-Hopf variational formula.

The Moskowitz function M(x, t) = min_{u in [-v_f, v_f]} { M0(x - t u) + t Q*(u) }
solves the Hamilton-Jacobi counterpart of the conservation law, and the
density is recovered from the minimizer. For piecewise-constant initial
density M0 is piecewise linear, so the minimum is attained on a finite
candidate set: one candidate per initial-data breakpoint (rarefaction fan)
and one stationary candidate per constant piece (characteristic). Those are
evaluated exactly; there is no discretization of u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fundamental import Environment, flux_derivative, legendre_dual
from .grids import DensityField, Grid, MoskowitzField, PiecewiseConstantProfile

__all__ = ["PiecewiseLinearFn", "initial_moskowitz", "lax_hopf_solve"]

# candidates tying within this of the minimum may all win; keep the densest
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous piecewise-linear function, extended linearly beyond the ends."""

    breakpoints: np.ndarray
    node_values: np.ndarray
    slopes: np.ndarray

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.slopes) - 1)
        return self.node_values[idx] + self.slopes[idx] * (x - self.breakpoints[idx])


def initial_moskowitz(profile: PiecewiseConstantProfile, env: Environment,
                      grid: Grid) -> PiecewiseLinearFn:
    """Initial vehicle count M0(x) = -integral of rho(y, 0) from x_min to x.

    Piecewise linear with slope -rho_i on piece i and M0(grid.x_min) = 0.
    """
    profile.check_against(env, grid)
    bp = np.asarray(profile.breakpoints)
    anchor = profile.integral_from_left(grid.x_min)
    node_values = -(profile.integral_from_left(bp) - anchor)
    slopes = -np.asarray(profile.values)
    return PiecewiseLinearFn(bp, node_values, slopes)


def lax_hopf_solve(profile: PiecewiseConstantProfile, env: Environment,
                   grid: Grid) -> tuple[MoskowitzField, DensityField]:
    """Exact entropy solution of the LWR problem on the grid.

    The initial density extends constantly beyond its breakpoint range, so
    the evolution is a free whole-line problem. Returns the Moskowitz field
    and the density field sampled at every grid node. The t=0 row copies the
    profile directly. Ties in the minimization (shock lines) resolve to the
    larger density, the entropy-consistent upstream value.
    """
    profile.check_against(env, grid)
    m0 = initial_moskowitz(profile, env, grid)
    v_f, rho_m = env.v_f, env.rho_m

    bp = m0.breakpoints
    m0_at_bp = m0.node_values
    piece_rho = np.asarray(profile.values)
    piece_u = flux_derivative(piece_rho, env)
    piece_qstar = legendre_dual(piece_u, env)
    n_pieces = len(piece_rho)

    x = grid.x_nodes()
    n_x, n_t = grid.n_x, grid.n_t
    n_cand = len(bp) + n_pieces
    values = np.empty((n_cand, n_x))
    densities = np.empty((n_cand, n_x))

    m = np.empty((n_x, n_t))
    rho = np.empty((n_x, n_t))
    m[:, 0] = m0(x)
    rho[:, 0] = profile.value_at(x)

    t_nodes = grid.t_nodes()
    for j in range(1, n_t):
        t = t_nodes[j]
        # fan candidates: characteristic through breakpoint k, speed u=(x-b_k)/t
        for k in range(len(bp)):
            u = (x - bp[k]) / t
            val = m0_at_bp[k] + t * rho_m * (v_f - u) ** 2 / (4.0 * v_f)
            val[np.abs(u) > v_f] = np.inf
            values[k] = val
            densities[k] = rho_m * (v_f - u) / (2.0 * v_f)
        # characteristic candidates: u = Q'(rho_i), valid if the foot of the
        # characteristic lands on piece i (end pieces are half-infinite)
        for i in range(n_pieces):
            y = x - t * piece_u[i]
            val = m0_at_bp[i] + piece_rho[i] * (bp[i] - y) + t * piece_qstar[i]
            invalid = np.zeros(n_x, dtype=bool)
            if i > 0:
                invalid |= y < bp[i]
            if i < n_pieces - 1:
                invalid |= y > bp[i + 1]
            val[invalid] = np.inf
            values[len(bp) + i] = val
            densities[len(bp) + i] = piece_rho[i]

        vmin = values.min(axis=0)
        near = values <= vmin + _TIE_TOL
        m[:, j] = vmin
        rho[:, j] = np.where(near, densities, -np.inf).max(axis=0)

    return (MoskowitzField(grid=grid, env=env, n=m),
            DensityField(grid=grid, env=env, rho=rho))
