"""Greenshields fundamental diagram: speed, flux, and its convex transform.

All densities are in vehicles/meter, speeds in meters/second, flows in
vehicles/second. An :class:`Environment` bundles the two parameters that
define one operational setting: free-flow speed ``v_f`` and jam density
``rho_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Environment",
    "velocity",
    "flux",
    "flux_for_model",
    "flux_derivative",
    "legendre_dual",
]


@dataclass(frozen=True)
class Environment:
    """Fundamental-diagram parameters of one operational setting.

    Attributes:
        v_f: free-flow speed (m/s), speed of vehicles on an empty road.
        rho_m: jam density (veh/m), density at which traffic halts.
    """

    v_f: float
    rho_m: float

    def __post_init__(self):
        if not (np.isfinite(self.v_f) and self.v_f > 0):
            raise ValueError(f"free-flow speed must be positive, got {self.v_f}")
        if not (np.isfinite(self.rho_m) and self.rho_m > 0):
            raise ValueError(f"jam density must be positive, got {self.rho_m}")

    @property
    def critical_density(self) -> float:
        """Density of maximum flow: rho_m / 2."""
        return 0.5 * self.rho_m

    @property
    def max_flux(self) -> float:
        """Capacity flow: v_f * rho_m / 4."""
        return 0.25 * self.v_f * self.rho_m

    def with_v_f(self, v_f: float) -> "Environment":
        """Same jam density, different free-flow speed."""
        return Environment(v_f=v_f, rho_m=self.rho_m)


def _check_density(rho, env: Environment, tol: float = 1e-12):
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise ValueError("density must be finite")
    if np.any(rho < -tol) or np.any(rho > env.rho_m + tol):
        raise ValueError(
            f"density outside [0, {env.rho_m}]: "
            f"range [{rho.min()}, {rho.max()}]"
        )
    return rho


def velocity(rho, env: Environment):
    """Greenshields speed V(rho) = v_f * (1 - rho / rho_m).

    Linear in density: v_f on an empty road, zero at jam density.
    Accepts scalars or arrays; raises on densities outside [0, rho_m].
    """
    rho = _check_density(rho, env)
    return env.v_f * (1.0 - rho / env.rho_m)


def flux(rho, env: Environment):
    """Flow rate Q(rho) = rho * v_f * (1 - rho / rho_m) in veh/s.

    Concave parabola, zero at rho = 0 and rho = rho_m, maximum
    ``env.max_flux`` at the critical density rho_m / 2.
    """
    rho = _check_density(rho, env)
    return rho * env.v_f * (1.0 - rho / env.rho_m)


def flux_for_model(rho, env: Environment):
    """flux() without the domain check, for learned fields.

    Model predictions may stray outside [0, rho_m]; residual metrics still
    need the parabola evaluated there.
    """
    rho = np.asarray(rho, dtype=float)
    return rho * env.v_f * (1.0 - rho / env.rho_m)


def flux_derivative(rho, env: Environment):
    """Characteristic speed Q'(rho) = v_f * (1 - 2 rho / rho_m) in m/s.

    Strictly decreasing from +v_f at rho = 0 to -v_f at jam density;
    zero at the critical density.
    """
    rho = _check_density(rho, env)
    return env.v_f * (1.0 - 2.0 * rho / env.rho_m)


def legendre_dual(u, env: Environment):
    """Convex transform of the flux, Q*(u) = rho_m * (v_f - u)^2 / (4 v_f).

    Defined for characteristic speeds u in [-v_f, v_f]; this is the cost
    rate paid along a characteristic of speed u in the variational
    (min-plus) solution formula. Satisfies the duality identity
    Q*(Q'(rho)) + rho * Q'(rho) = Q(rho).
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("characteristic speed must be finite")
    if np.any(np.abs(u) > env.v_f * (1.0 + 1e-12)):
        raise ValueError(f"characteristic speed outside [-{env.v_f}, {env.v_f}]")
    d = env.v_f - u
    return env.rho_m * d * d / (4.0 * env.v_f)
