"""Config parsing, canonical emission, and exact round trips."""

from dataclasses import replace

import numpy as np
import pytest

from tsecert import (
    Environment,
    Grid,
    PiecewiseConstantProfile,
    RunConfig,
    default_config,
    emit_config,
    load_config,
    parse_config,
)
from tsecert.runconfig import CONFIG_KEYS, with_output_dir


def test_default_config_is_the_reference_scenario():
    c = default_config()
    assert c.env == Environment(v_f=25.0, rho_m=0.15)
    assert (c.grid.n_x, c.grid.n_t) == (500, 500)
    assert c.profile.breakpoints == (0.0, 200.0, 500.0, 1000.0)
    assert c.profile.values == (0.13, 0.06, 0.03)
    assert c.sample_count == 15000
    assert c.sweep_v_f == (5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0)
    assert c.train.adam_iterations == 15000
    assert c.train.lbfgs_iterations == 50000
    assert c.train.layer_sizes == (2,) + (40,) * 10 + (1,)
    assert c.metric == "data_mismatch"
    assert c.seed == 0


def test_empty_config_parses_to_the_defaults():
    assert parse_config("") == default_config()
    assert parse_config("# only a comment\n\n") == default_config()


def test_emit_parse_round_trip_on_the_default():
    c = default_config()
    text = emit_config(c)
    assert parse_config(text) == c
    assert emit_config(parse_config(text)) == text


def test_emit_lists_every_key_in_canonical_order():
    lines = emit_config(default_config()).splitlines()
    assert [ln.split(" = ")[0] for ln in lines] == list(CONFIG_KEYS)


def test_round_trip_survives_randomized_configs():
    rng = np.random.default_rng(0)
    base = default_config()
    grids = [Grid(0.0, 200.0, 10.0, 10.0, 0.5), Grid(0.0, 400.0, 20.0, 20.0, 1.0)]
    for k in range(20):
        grid = grids[int(rng.integers(len(grids)))]
        rho_m = float(rng.choice([0.15, 0.2]))
        n_vals = int(rng.integers(1, 4))
        bps = (0.0,) + tuple(sorted(rng.uniform(1.0, 999.0, n_vals - 1))) + (1000.0,)
        c = RunConfig(
            env=Environment(v_f=float(rng.uniform(5.0, 45.0)), rho_m=rho_m),
            grid=grid,
            profile=PiecewiseConstantProfile(
                breakpoints=bps,
                values=tuple(rng.uniform(0.0, rho_m, n_vals))),
            sample_count=int(rng.integers(1, grid.n_nodes + 1)),
            train=replace(base.train,
                          adam_iterations=int(rng.integers(0, 500)),
                          adam_learning_rate=float(rng.uniform(1e-4, 1e-2)),
                          adam_betas=(float(rng.uniform(0.8, 0.95)),
                                      float(rng.uniform(0.99, 0.9999))),
                          lbfgs_iterations=int(rng.integers(0, 500)),
                          lbfgs_memory=int(rng.integers(1, 20)),
                          lbfgs_tolerance=float(rng.uniform(1e-12, 1e-6)),
                          hidden_layers=int(rng.integers(1, 5)),
                          hidden_width=int(rng.integers(1, 30))),
            sweep_v_f=tuple(rng.uniform(5.0, 45.0, int(rng.integers(1, 6)))),
            thresholds=base.thresholds,
            metric=str(rng.choice(["data_mismatch", "pde_residual"])),
            output_dir=f"runs/case{k}",
            seed=int(rng.integers(0, 2 ** 31)),
            certify_sample_count=int(rng.integers(0, 50)),
        )
        assert parse_config(emit_config(c)) == c


def test_overrides_apply_and_others_default():
    c = parse_config("seed = 7\nenv.v_f = 30.0\ntrain.hidden_width=16\n")
    d = default_config()
    assert c.seed == 7
    assert c.env.v_f == 30.0
    assert c.env.rho_m == d.env.rho_m
    assert c.train.hidden_width == 16
    assert c.train.hidden_layers == d.train.hidden_layers
    assert c.grid == d.grid


def test_parse_accepts_comments_and_loose_spacing():
    text = "\n".join([
        "# run settings",
        "   seed=3",
        "",
        "sweep_v_f =  15,25, 35",
        "metric\t= pde_residual",
    ])
    c = parse_config(text)
    assert c.seed == 3
    assert c.sweep_v_f == (15.0, 25.0, 35.0)
    assert c.metric == "pde_residual"


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ValueError, match="line 2: unknown config key 'velocity'"):
        parse_config("seed = 1\nvelocity = 9\n")
    with pytest.raises(ValueError, match="line 3: duplicate key 'seed'"):
        parse_config("seed = 1\n# x\nseed = 2\n")
    with pytest.raises(ValueError, match="line 1: expected 'key = value'"):
        parse_config("seed 1\n")
    with pytest.raises(ValueError, match="line 2: bad value for seed"):
        parse_config("metric = data_mismatch\nseed = one\n")


def test_invalid_combinations_are_rejected():
    with pytest.raises(ValueError, match="metric"):
        parse_config("metric = l2\n")
    with pytest.raises(ValueError, match="sample_count"):
        parse_config("sample_count = 0\n")
    with pytest.raises(ValueError, match="sample_count"):
        parse_config("sample_count = 250001\n")
    with pytest.raises(ValueError, match="sweep_v_f"):
        parse_config("sweep_v_f =\n")
    with pytest.raises(ValueError):
        parse_config("certify_sample_count = -1\n")
    # profile that stops short of the grid's right edge
    with pytest.raises(ValueError):
        parse_config("profile.breakpoints = 0,200,500\n"
                     "profile.values = 0.13,0.06\n")
    # density above the jam density
    with pytest.raises(ValueError):
        parse_config("profile.values = 0.2,0.06,0.03\n")


def test_load_config_reads_a_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 11\noutput_dir = runs/eleven\n")
    c = load_config(p)
    assert c.seed == 11
    assert c.output_dir == "runs/eleven"


def test_with_output_dir_changes_only_that_field():
    c = default_config()
    d = with_output_dir(c, "elsewhere")
    assert d.output_dir == "elsewhere"
    assert replace(d, output_dir=c.output_dir) == c
