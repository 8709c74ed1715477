"""Grid construction, initial profiles, and field containers."""

import dataclasses

import numpy as np
import pytest

from tsecert import (
    DensityField,
    Environment,
    Grid,
    MoskowitzField,
    PiecewiseConstantProfile,
    REFERENCE_ENV,
    reference_grid,
    reference_profile,
)


def test_node_counts_on_the_reference_window():
    g = Grid(x_min=0.0, x_max=998.0, dx=2.0, t_max=49.9, dt=0.1)
    assert (g.n_x, g.n_t) == (500, 500)
    assert g.n_nodes == 250000


def test_reference_helpers():
    g = reference_grid()
    assert (g.n_x, g.n_t) == (500, 500)
    gi = reference_grid(inclusive=True)
    assert (gi.n_x, gi.n_t) == (501, 501)
    assert REFERENCE_ENV == Environment(v_f=25.0, rho_m=0.15)
    p = reference_profile()
    assert p.values == (0.13, 0.06, 0.03)
    p.check_against(REFERENCE_ENV, g)


def test_node_arrays():
    g = Grid(x_min=100.0, x_max=200.0, dx=25.0, t_max=2.0, dt=0.5)
    assert np.array_equal(g.x_nodes(), [100.0, 125.0, 150.0, 175.0, 200.0])
    assert np.array_equal(g.t_nodes(), [0.0, 0.5, 1.0, 1.5, 2.0])


def test_node_points_are_x_major():
    g = Grid(x_min=0.0, x_max=10.0, dx=5.0, t_max=1.0, dt=0.5)
    pts = g.node_points()
    assert pts.shape == (g.n_nodes, 2)
    # all times for x=0 first, then x=5, then x=10
    assert np.array_equal(pts[:3], [[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]])
    assert np.array_equal(pts[3:6, 0], [5.0, 5.0, 5.0])


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(x_min=0.0, x_max=10.0, dx=3.0, t_max=1.0, dt=0.5)  # 10/3 not integral
    with pytest.raises(ValueError):
        Grid(x_min=0.0, x_max=10.0, dx=5.0, t_max=1.0, dt=0.3)
    with pytest.raises(ValueError):
        Grid(x_min=10.0, x_max=10.0, dx=1.0, t_max=1.0, dt=0.5)
    with pytest.raises(ValueError):
        Grid(x_min=0.0, x_max=10.0, dx=-1.0, t_max=1.0, dt=0.5)
    with pytest.raises(ValueError):
        Grid(x_min=0.0, x_max=10.0, dx=5.0, t_max=0.5, dt=1.0)  # single time node


def test_grid_accepts_inexact_but_integral_spans():
    # 0.1 steps are not exact binary floats; the relative check must accept them
    g = Grid(x_min=0.0, x_max=99.9, dx=0.1, t_max=49.9, dt=0.1)
    assert (g.n_x, g.n_t) == (1000, 500)


def test_same_nodes_as():
    a = Grid(x_min=0.0, x_max=10.0, dx=1.0, t_max=2.0, dt=1.0)
    b = Grid(x_min=0.0, x_max=10.0, dx=1.0, t_max=2.0, dt=1.0)
    c = Grid(x_min=0.0, x_max=20.0, dx=2.0, t_max=2.0, dt=1.0)
    assert a.same_nodes_as(b)
    assert not a.same_nodes_as(c)


def test_profile_value_at():
    p = PiecewiseConstantProfile((0.0, 200.0, 500.0, 1000.0), (0.13, 0.06, 0.03))
    assert p.value_at(100.0) == 0.13
    assert p.value_at(200.0) == 0.06  # breakpoints belong to the right piece
    assert p.value_at(499.9) == 0.06
    assert p.value_at(999.0) == 0.03
    # constant extension outside coverage
    assert p.value_at(-50.0) == 0.13
    assert p.value_at(2000.0) == 0.03
    out = p.value_at(np.array([0.0, 300.0, 700.0]))
    assert np.array_equal(out, [0.13, 0.06, 0.03])


def test_profile_integral_from_left():
    p = PiecewiseConstantProfile((0.0, 200.0, 500.0, 1000.0), (0.13, 0.06, 0.03))
    assert p.integral_from_left(0.0) == pytest.approx(0.0)
    assert p.integral_from_left(200.0) == pytest.approx(26.0)
    assert p.integral_from_left(500.0) == pytest.approx(44.0)
    assert p.integral_from_left(1000.0) == pytest.approx(59.0)
    # linear extension with the end densities
    assert p.integral_from_left(1200.0) == pytest.approx(65.0)
    assert p.integral_from_left(-100.0) == pytest.approx(-13.0)


def test_profile_mean_over_cells():
    p = PiecewiseConstantProfile((0.0, 200.0, 500.0, 1000.0), (0.13, 0.06, 0.03))
    # cell straddling the first jump: 20 m at 0.13 plus 20 m at 0.06
    assert p.mean_over(180.0, 220.0) == pytest.approx(0.095)
    assert p.mean_over(0.0, 100.0) == pytest.approx(0.13)
    a = np.array([0.0, 450.0])
    b = np.array([100.0, 550.0])
    out = p.mean_over(a, b)
    assert out[1] == pytest.approx((0.06 * 50 + 0.03 * 50) / 100.0)


def test_profile_validation():
    with pytest.raises(ValueError):
        PiecewiseConstantProfile((0.0,), ())
    with pytest.raises(ValueError):
        PiecewiseConstantProfile((0.0, 10.0), (0.1, 0.2))
    with pytest.raises(ValueError):
        PiecewiseConstantProfile((0.0, 10.0, 5.0), (0.1, 0.2))
    with pytest.raises(ValueError):
        PiecewiseConstantProfile((0.0, 0.0, 10.0), (0.1, 0.2))


def test_profile_check_against():
    env = Environment(v_f=25.0, rho_m=0.15)
    p = PiecewiseConstantProfile((0.0, 500.0, 1000.0), (0.13, 0.03))
    p.check_against(env)
    too_dense = PiecewiseConstantProfile((0.0, 1000.0), (0.2,))
    with pytest.raises(ValueError):
        too_dense.check_against(env)
    wide_grid = Grid(x_min=0.0, x_max=1200.0, dx=100.0, t_max=1.0, dt=0.5)
    with pytest.raises(ValueError):
        p.check_against(env, wide_grid)


def test_density_field_validation(env25):
    g = Grid(x_min=0.0, x_max=10.0, dx=5.0, t_max=1.0, dt=0.5)
    rho = np.full((g.n_x, g.n_t), 0.05)
    fld = DensityField(grid=g, env=env25, rho=rho)
    assert fld.rho.shape == (3, 3)
    with pytest.raises(ValueError):
        DensityField(grid=g, env=env25, rho=np.zeros((2, 3)))
    bad = np.full((3, 3), np.nan)
    with pytest.raises(ValueError):
        DensityField(grid=g, env=env25, rho=bad)


def test_fields_are_frozen(env25):
    g = Grid(x_min=0.0, x_max=10.0, dx=5.0, t_max=1.0, dt=0.5)
    fld = DensityField(grid=g, env=env25, rho=np.full((3, 3), 0.05))
    with pytest.raises(dataclasses.FrozenInstanceError):
        fld.env = env25
    with pytest.raises(ValueError):
        fld.rho[0, 0] = 1.0
    msk = MoskowitzField(grid=g, env=env25, n=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        msk.n[0, 0] = 1.0
