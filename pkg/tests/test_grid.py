import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsdiag.grid import (
    Grid,
    ScalarField,
    SpectralField,
    VectorField,
    check_decay,
    curl,
    divergence,
    gradient,
    gradient_tensor,
    grad_squared,
    laplacian,
    leray_project,
    pressure_from_velocity,
    restrict_ball,
)


def _random_vector(grid, seed):
    rng = np.random.default_rng(seed)
    # band-limited so spectral identities hold to roundoff
    return VectorField(grid, _smooth(grid, rng.standard_normal((3,) + grid.shape)))


def _smooth(grid, a):
    from nsdiag.grid import _irfftn, _rfftn
    return _irfftn(_rfftn(a) * grid.dealias_mask, grid.n)


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Grid(12, 1.0)
    with pytest.raises(ValueError):
        Grid(16, 0.0)


def test_coords_and_spacing(grid16):
    x, y, z = grid16.coords()
    assert x.shape == (16, 1, 1) and z.shape == (1, 1, 16)
    assert np.isclose(grid16.dx, 2 * math.pi / 16)
    assert np.isclose(grid16.cell_volume * 16**3, (2 * math.pi) ** 3)


def test_periodic_offsets_minimum_image(grid16):
    L = grid16.box_length
    d = grid16.distance_from((0.0, 0.0, 0.0))
    assert d.max() <= math.sqrt(3) * L / 2 + 1e-12
    assert d[0, 0, 0] == 0.0
    # the last sample sits one cell away through the boundary
    assert np.isclose(d[-1, 0, 0], grid16.dx)


def test_fields_are_read_only_and_finite(grid16):
    f = ScalarField(grid16, np.ones(grid16.shape))
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 2.0
    with pytest.raises(ValueError):
        ScalarField(grid16, np.full(grid16.shape, np.nan))
    with pytest.raises(ValueError):
        VectorField(grid16, np.zeros((2,) + grid16.shape))


def test_gradient_of_sines(grid32):
    x, y, z = grid32.coords()
    f = ScalarField(grid32, np.broadcast_to(np.sin(x) * np.cos(2 * y) * np.sin(3 * z), grid32.shape))
    g = gradient(f).values
    assert np.allclose(g[0], np.cos(x) * np.cos(2 * y) * np.sin(3 * z), atol=1e-12)
    assert np.allclose(g[1], -2 * np.sin(x) * np.sin(2 * y) * np.sin(3 * z), atol=1e-12)
    assert np.allclose(laplacian(f).values, -14 * f.values, atol=1e-11)


def test_div_grad_is_laplacian(grid16, rng):
    f = ScalarField(grid16, _smooth(grid16, rng.standard_normal(grid16.shape)))
    assert np.allclose(divergence(gradient(f)).values, laplacian(f).values, atol=1e-10)


def test_grad_squared_matches_tensor(grid16):
    v = _random_vector(grid16, 3)
    G = gradient_tensor(v)
    assert np.allclose(grad_squared(v), np.sum(G**2, axis=(0, 1)))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_leray_projection_is_idempotent_and_solenoidal(seed):
    g = Grid(16, 2 * math.pi)
    v = _random_vector(g, seed)
    p = leray_project(v)
    assert np.abs(divergence(p).values).max() < 1e-10 * max(1.0, v.max_norm())
    assert np.allclose(leray_project(p).values, p.values, atol=1e-12)


def test_curl_is_divergence_free(grid16):
    w = curl(_random_vector(grid16, 5))
    assert np.abs(divergence(w).values).max() < 1e-10


def test_spectral_roundtrip(grid16, rng):
    f = ScalarField(grid16, rng.standard_normal(grid16.shape))
    assert np.allclose(SpectralField.forward(f).inverse().values, f.values)


def test_taylor_green_pressure_closed_form(grid32):
    x, y, z = grid32.coords()
    v = VectorField(grid32, np.stack(np.broadcast_arrays(
        np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0 * x * y * z)))
    q = pressure_from_velocity(v).values
    exact = (np.cos(2 * x) + np.cos(2 * y)) * (np.cos(2 * z) + 2) / 16
    assert np.abs(q - exact).max() < 1e-13


def test_pressure_rejects_divergent_velocity(grid16):
    x, y, z = grid16.coords()
    v = VectorField(grid16, np.stack(np.broadcast_arrays(np.sin(x), 0 * y, 0 * z)))
    with pytest.raises(ValueError):
        pressure_from_velocity(v)


def test_ball_volume_converges():
    g = Grid(64, 8.0)
    ball = restrict_ball(g, g.center, 1.5)
    assert abs(ball.volume / (4 * math.pi / 3 * 1.5**3) - 1) < 0.02
    assert ball.count == int(ball.mask.sum())


def test_ball_must_fit_half_box(grid16):
    with pytest.raises(ValueError):
        restrict_ball(grid16, grid16.center, grid16.box_length / 4 + 0.01)


def test_check_decay_warns_for_periodic_flow(grid16):
    x, y, z = grid16.coords()
    f = ScalarField(grid16, np.broadcast_to(np.cos(x), grid16.shape).copy())
    with pytest.warns(UserWarning):
        assert not check_decay(f)
    g = Grid(32, 20.0)
    d = g.distance_from(g.center)
    assert check_decay(ScalarField(g, np.exp(-d**2)), warn=False)
