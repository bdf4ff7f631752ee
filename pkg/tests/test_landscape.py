import numpy as np
import pytest

from recpoison.landscape import (
    grid_metadata_to_json,
    grid_to_csv,
    loss_landscape_grid,
    sharpness_score,
)


def quadratic(theta):
    return 0.5 * float(np.sum(np.asarray(theta) ** 2))


def test_degenerate_directions_constant_grid():
    theta = np.array([1.0, 2.0])
    grid = loss_landscape_grid(theta, quadratic, seed=0, points=6, degenerate=True)
    assert np.allclose(grid.grid, quadratic(theta))
    assert sharpness_score(grid) == pytest.approx(0.0)


def test_deterministic_per_seed():
    theta = np.zeros(5)
    a = loss_landscape_grid(theta, quadratic, seed=3, points=4)
    b = loss_landscape_grid(theta, quadratic, seed=3, points=4)
    assert np.array_equal(a.grid, b.grid)
    assert a.direction_checksums == b.direction_checksums


def test_different_seed_different_directions():
    theta = np.zeros(5)
    a = loss_landscape_grid(theta, quadratic, seed=3, points=4)
    b = loss_landscape_grid(theta, quadratic, seed=4, points=4)
    assert a.direction_checksums != b.direction_checksums


def test_quadratic_matches_closed_form():
    rng = np.random.default_rng(1)
    theta = rng.standard_normal(6)
    grid = loss_landscape_grid(theta, quadratic, seed=7, points=5, half_range=2.0)
    # reproduce directions from the same seed to evaluate the paraboloid
    gen = np.random.default_rng(7)
    w1 = gen.standard_normal(6)
    w2 = gen.standard_normal(6)
    coords = np.linspace(-2.0, 2.0, 5)
    for i, mv in enumerate(coords):
        for j, nv in enumerate(coords):
            assert grid.grid[i, j] == pytest.approx(quadratic(theta + mv * w1 + nv * w2))


def test_twenty_points_do_not_sample_zero():
    grid = loss_landscape_grid(np.zeros(3), quadratic, seed=0, points=20)
    assert 0.0 not in grid.m_values
    i, j = grid.center_index
    assert abs(grid.m_values[i]) == np.abs(grid.m_values).min()


def test_nonfinite_losses_marked_inf():
    def explosive(theta):
        return float("nan")

    grid = loss_landscape_grid(np.zeros(2), explosive, seed=0, points=3)
    assert np.isinf(grid.grid).all()
    assert sharpness_score(grid) == float("inf")


def test_sharpness_scales_with_grid():
    # odd point count samples 0, making the near-origin cell value exactly 0
    theta = np.zeros(4)
    grid = loss_landscape_grid(theta, quadratic, seed=2, points=5)
    doubled = loss_landscape_grid(theta, lambda t: 2 * quadratic(t), seed=2, points=5)
    assert grid.center_value == 0.0
    assert sharpness_score(doubled) == pytest.approx(2.0 * sharpness_score(grid))


def test_export_files(tmp_path):
    grid = loss_landscape_grid(np.zeros(3), quadratic, seed=5, points=4)
    grid_to_csv(grid, tmp_path / "g.csv")
    grid_metadata_to_json(grid, tmp_path / "g.json", extra={"attacker": "x"})
    lines = (tmp_path / "g.csv").read_text().strip().splitlines()
    assert lines[0] == "m,n,loss"
    assert len(lines) == 1 + 16
    import json

    meta = json.loads((tmp_path / "g.json").read_text())
    assert len(meta["direction_checksums"]) == 2
    assert meta["attacker"] == "x"
