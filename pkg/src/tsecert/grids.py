"""Space-time grids, initial density profiles, and sampled fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fundamental import Environment

__all__ = [
    "Grid",
    "PiecewiseConstantProfile",
    "DensityField",
    "MoskowitzField",
    "reference_grid",
    "reference_profile",
    "REFERENCE_ENV",
]

_REL_TOL = 1e-9


def _is_integral(length: float, step: float) -> bool:
    n = round(length / step)
    return n >= 1 and abs(length - n * step) <= _REL_TOL * max(abs(length), step)


@dataclass(frozen=True)
class Grid:
    """Rectangular space-time grid with nodes at x_min + i*dx, n*dt.

    Both endpoints are nodes: X_m = round((x_max - x_min)/dx) + 1 space
    nodes and T_n = round(t_max/dt) + 1 time nodes. The spans must be
    integer multiples of the steps (relative tolerance 1e-9).
    """

    x_min: float
    x_max: float
    dx: float
    t_max: float
    dt: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in
                   (self.x_min, self.x_max, self.dx, self.t_max, self.dt)):
            raise ValueError("grid parameters must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]")
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("grid steps must be positive")
        if not _is_integral(self.x_max - self.x_min, self.dx):
            raise ValueError(
                f"dx={self.dx} does not evenly divide [{self.x_min}, {self.x_max}]")
        if not _is_integral(self.t_max, self.dt):
            raise ValueError(f"dt={self.dt} does not evenly divide [0, {self.t_max}]")
        if self.n_x < 2 or self.n_t < 2:
            raise ValueError("grid needs at least 2 nodes per axis")

    @property
    def n_x(self) -> int:
        return round((self.x_max - self.x_min) / self.dx) + 1

    @property
    def n_t(self) -> int:
        return round(self.t_max / self.dt) + 1

    @property
    def n_nodes(self) -> int:
        return self.n_x * self.n_t

    def x_nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    def t_nodes(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    def node_points(self) -> np.ndarray:
        """All (x, t) node coordinates, shape (n_x * n_t, 2), x-major."""
        x, t = np.meshgrid(self.x_nodes(), self.t_nodes(), indexing="ij")
        return np.column_stack([x.ravel(), t.ravel()])

    def same_nodes_as(self, other: "Grid") -> bool:
        return (self.n_x == other.n_x and self.n_t == other.n_t
                and abs(self.x_min - other.x_min) <= _REL_TOL * max(1.0, abs(self.x_min))
                and abs(self.dx - other.dx) <= _REL_TOL * self.dx
                and abs(self.dt - other.dt) <= _REL_TOL * self.dt)


@dataclass(frozen=True)
class PiecewiseConstantProfile:
    """Initial density rho(x, 0): constant on each breakpoint interval.

    ``breakpoints`` has one more entry than ``values``; value i applies on
    [breakpoints[i], breakpoints[i+1]). Evaluation at interior breakpoints
    takes the right interval's value.
    """

    breakpoints: tuple = field()
    values: tuple = field()

    def __init__(self, breakpoints, values):
        bp = tuple(float(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if len(vals) != len(bp) - 1:
            raise ValueError(
                f"{len(bp)} breakpoints define {len(bp) - 1} intervals, "
                f"got {len(vals)} values")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        if not all(np.isfinite(v) for v in bp + vals):
            raise ValueError("profile entries must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def x_lo(self) -> float:
        return self.breakpoints[0]

    @property
    def x_hi(self) -> float:
        return self.breakpoints[-1]

    def check_against(self, env: Environment, grid: Grid | None = None):
        """Validate densities against env bounds and coverage of the grid."""
        for v in self.values:
            if v < 0 or v > env.rho_m:
                raise ValueError(f"profile density {v} outside [0, {env.rho_m}]")
        if grid is not None:
            if self.x_lo > grid.x_min + _REL_TOL or self.x_hi < grid.x_max - _REL_TOL:
                raise ValueError(
                    f"profile covers [{self.x_lo}, {self.x_hi}] but grid needs "
                    f"[{grid.x_min}, {grid.x_max}]")

    def value_at(self, x) -> np.ndarray:
        """Density at position(s) x; constant extension outside coverage."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    def integral_from_left(self, x) -> np.ndarray:
        """Integral of the density from the first breakpoint to x.

        Linear extension outside coverage (constant end densities).
        """
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(bp))])
        idx = np.clip(np.searchsorted(bp, x, side="right") - 1, 0, len(vals) - 1)
        return cum[idx] + vals[idx] * (x - bp[idx])

    def mean_over(self, a, b) -> np.ndarray:
        """Exact average density over intervals [a, b] (cell averages)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return (self.integral_from_left(b) - self.integral_from_left(a)) / (b - a)


def _check_field_array(rho: np.ndarray, grid: Grid) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.n_x, grid.n_t):
        raise ValueError(
            f"field shape {rho.shape} does not match grid ({grid.n_x}, {grid.n_t})")
    if not np.all(np.isfinite(rho)):
        raise ValueError("field values must be finite")
    return rho


@dataclass(frozen=True)
class DensityField:
    """Vehicle density rho(x, t) sampled on a grid, shape (n_x, n_t)."""

    grid: Grid
    env: Environment
    rho: np.ndarray

    def __post_init__(self):
        rho = _check_field_array(self.rho, self.grid)
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class MoskowitzField:
    """Cumulative vehicle count N(x, t) on a grid, shape (n_x, n_t).

    N is nonincreasing in x (rho = -dN/dx >= 0) and nondecreasing in t
    (flow q = dN/dt >= 0) for any physical solution.
    """

    grid: Grid
    env: Environment
    n: np.ndarray

    def __post_init__(self):
        n = _check_field_array(self.n, self.grid)
        n.flags.writeable = False
        object.__setattr__(self, "n", n)


REFERENCE_ENV = Environment(v_f=25.0, rho_m=0.15)


def reference_grid(inclusive: bool = False) -> Grid:
    """The reference configuration: dx = 2 m, dt = 0.1 s on a 1000 m / 50 s window.

    By default the grid has 500 x 500 nodes (nodes are left cell edges, so
    the last nodes sit at 998 m and 49.9 s) which makes a 15,000-point
    sample exactly 6% of the nodes. With ``inclusive=True`` both far
    endpoints are nodes as well (501 x 501).
    """
    if inclusive:
        return Grid(x_min=0.0, x_max=1000.0, dx=2.0, t_max=50.0, dt=0.1)
    return Grid(x_min=0.0, x_max=998.0, dx=2.0, t_max=49.9, dt=0.1)


def reference_profile() -> PiecewiseConstantProfile:
    """Initial condition: 0.13 veh/m on [0, 200), 0.06 on [200, 500), 0.03 on [500, 1000]."""
    return PiecewiseConstantProfile(
        breakpoints=(0.0, 200.0, 500.0, 1000.0),
        values=(0.13, 0.06, 0.03),
    )
