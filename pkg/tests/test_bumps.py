import math

import numpy as np
import pytest

from nsdiag.bumps import RadialBump, TimeRamp, radial_bump, smoothstep
from nsdiag.grid import Grid


def test_smoothstep_limits_and_monotone():
    x = np.linspace(-0.5, 1.5, 401)
    S, S1, _ = smoothstep(x)
    assert np.all(S[x <= 0] == 0) and np.all(S[x >= 1] == 1)
    assert np.all(np.diff(S) >= 0) and np.all(S1 >= 0)
    assert np.isclose(smoothstep(0.5)[0], 0.5)


def test_smoothstep_derivatives_match_finite_differences():
    x = np.linspace(0.05, 0.95, 37)
    h = 1e-5
    S, S1, S2 = smoothstep(x)
    fd1 = (smoothstep(x + h)[0] - smoothstep(x - h)[0]) / (2 * h)
    fd2 = (smoothstep(x + h)[0] - 2 * S + smoothstep(x - h)[0]) / h**2
    assert np.allclose(S1, fd1, rtol=1e-6, atol=1e-8)
    assert np.allclose(S2, fd2, rtol=1e-3, atol=1e-4)


def test_radial_profile_plateau_and_support():
    b = RadialBump((0, 0, 0), outer=2.0, inner=0.5)
    r = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    psi, d1, _ = b.profile(r)
    assert psi[0] == psi[1] == 1.0 and psi[3] == psi[4] == 0.0
    assert 0 < psi[2] < 1 and d1[2] < 0
    with pytest.raises(ValueError):
        RadialBump((0, 0, 0), outer=1.0, inner=1.0)


def test_bump_gradient_and_laplacian_by_finite_differences():
    g = Grid(16, 8.0)
    b = RadialBump((4.1, 3.7, 4.3), outer=2.5, inner=0.6)
    psi, grad, lap = b.evaluate(g)
    h = 1e-4
    x, y, z = (np.broadcast_to(c, g.shape) for c in g.coords())

    def psi_at(px, py, pz):
        r = np.sqrt((px - 4.1) ** 2 + (py - 3.7) ** 2 + (pz - 4.3) ** 2)
        return b.profile(r)[0]

    fd_grad = np.stack([
        (psi_at(x + h, y, z) - psi_at(x - h, y, z)) / (2 * h),
        (psi_at(x, y + h, z) - psi_at(x, y - h, z)) / (2 * h),
        (psi_at(x, y, z + h) - psi_at(x, y, z - h)) / (2 * h),
    ])
    fd_lap = sum(
        (psi_at(*(c + h * e for c, e in zip((x, y, z), unit))) - 2 * psi
         + psi_at(*(c - h * e for c, e in zip((x, y, z), unit)))) / h**2
        for unit in np.eye(3)
    )
    assert np.allclose(grad, fd_grad, atol=1e-6)
    assert np.allclose(lap, fd_lap, atol=2e-4)


def test_bump_centred_on_sample_has_finite_laplacian():
    g = Grid(16, 8.0)
    for inner in (0.0, 0.5):
        _, _, lap = RadialBump(tuple(g.center), 2.0, inner).evaluate(g)
        assert np.all(np.isfinite(lap))


def test_support_volume_and_helper():
    g = Grid(32, 8.0)
    f = radial_bump(g, outer=1.5)
    assert f.values.max() <= 1.0
    assert math.isclose(RadialBump((0, 0, 0), 1.5).support_volume, 4 * math.pi / 3 * 1.5**3)


def test_time_ramp():
    ramp = TimeRamp(1.0, 0.5)
    chi, dchi = ramp(np.array([0.5, 1.0, 1.25, 1.5, 2.0]))
    assert chi[0] == chi[1] == 0 and chi[3] == chi[4] == 1
    assert np.isclose(chi[2], 0.5) and dchi[2] > 0
