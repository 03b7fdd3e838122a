import math

import numpy as np
import pytest
from scipy.integrate import quad

from nsdiag.generators import (
    CFLError,
    FieldSpec,
    SimSpec,
    dissipation,
    generate,
    initial_state,
    kinetic_energy,
    simulate,
    step,
)
from nsdiag.grid import ScalarField, VectorField, divergence


@pytest.mark.parametrize("kind", ["taylor_green", "abc", "single_mode", "gaussian_vortex", "random_solenoidal"])
def test_vector_kinds_are_divergence_free(kind):
    v = generate(FieldSpec(kind, n=32, seed=3, length_scale=1.0 if kind in ("gaussian_vortex", "random_solenoidal") else None))
    assert isinstance(v, VectorField)
    assert np.abs(divergence(v).values).max() < 1e-10 * max(v.max_norm(), 1.0)


def test_taylor_green_peak_speed():
    v = generate(FieldSpec("taylor_green", amplitude=2.5, n=32))
    assert v.max_norm() == pytest.approx(2.5, rel=1e-12)


def test_scalar_kinds():
    f = generate(FieldSpec("gaussian", amplitude=3.0, n=32, length_scale=1.0))
    assert isinstance(f, ScalarField)
    assert f.values.max() == pytest.approx(3.0, rel=1e-12)
    p = generate(FieldSpec("plateau", n=32, length_scale=1.0))
    assert p.values.max() == pytest.approx(1.0) and p.values.min() >= 0


def test_random_field_deterministic_and_normalised():
    a = generate(FieldSpec("random_solenoidal", seed=7, amplitude=2.0, n=32, length_scale=1.0))
    b = generate(FieldSpec("random_solenoidal", seed=7, amplitude=2.0, n=32, length_scale=1.0))
    c = generate(FieldSpec("random_solenoidal", seed=8, amplitude=2.0, n=32, length_scale=1.0))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.max_norm() == pytest.approx(2.0, rel=1e-12)
    assert np.abs(a.values.mean(axis=(1, 2, 3))).max() < 1e-12


def test_random_field_envelope_decays():
    L = 12.0
    v = generate(FieldSpec("random_solenoidal", seed=1, n=64, box_length=L, envelope=1.5))
    speed = np.sqrt((v.values**2).sum(axis=0))
    dx, dy, dz = v.grid.periodic_offsets(v.grid.center)
    r = np.sqrt(dx**2 + dy**2 + dz**2)
    # the curl of a windowed potential decays like r exp(-r^2 / (2 sigma^2))
    for R in (5.0, 6.0, 7.0):
        assert speed[r > R].max() < 2 * R * math.exp(-R**2 / (2 * 1.5**2)) * speed.max()


def test_vortex_energy_matches_radial_quadrature():
    a, ell, L = 1.3, 0.8, 2 * math.pi
    v = generate(FieldSpec("gaussian_vortex", amplitude=a, length_scale=ell, n=64, box_length=L))
    # |v|^2 = 4 a^2 rho_perp^2 / ell^2 exp(-2 r^2 / ell^2); angular average of rho_perp^2 is 2 r^2 / 3
    radial, _ = quad(lambda r: r**4 * math.exp(-2 * r**2 / ell**2), 0, np.inf)
    oracle = 4 * a**2 / ell**2 * (2 / 3) * 4 * math.pi * radial
    assert kinetic_energy(v) == pytest.approx(oracle, rel=1e-6)


def test_fieldspec_validation():
    assert FieldSpec("taylor-green").kind == "taylor_green"
    with pytest.raises(ValueError):
        FieldSpec("hurricane")
    with pytest.raises(ValueError):
        generate(FieldSpec("gaussian", n=16, length_scale=0.5))


def test_single_mode_decays_exactly():
    # a shear flow has no nonlinear term, so each step is the exact heat decay
    nu, dt, steps = 0.7, 0.002, 100
    spec = SimSpec(FieldSpec("single_mode", n=16), dt=dt, steps=steps, save_every=steps, nu=nu)
    rec = simulate(spec)
    v0, v1 = rec.snapshots[0].velocity.values, rec.snapshots[-1].velocity.values
    expected = v0 * math.exp(-nu * steps * dt)
    assert np.abs(v1 - expected).max() < 1e-8


def _run(v, nu, dt, T):
    s = initial_state(v, nu)
    for _ in range(round(T / dt)):
        s = step(s, dt)
    return s.velocity().values


def test_rk4_convergence_order():
    v = generate(FieldSpec("taylor_green", amplitude=2.0, n=16))
    nu, T = 0.1, 0.4
    ref = _run(v, nu, 0.0025, T)
    errs = [np.abs(_run(v, nu, dt, T) - ref).max() for dt in (0.04, 0.02, 0.01)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.5, (errs, orders)


def test_energy_nonincreasing_and_balanced():
    spec = SimSpec(FieldSpec("random_solenoidal", seed=2, n=32, amplitude=1.0, length_scale=1.0), dt=0.005, steps=60, nu=0.5)
    rec = simulate(spec)
    e = np.array([kinetic_energy(s.velocity) for s in rec.snapshots])
    d = np.array([dissipation(s.velocity) for s in rec.snapshots])
    assert np.all(np.diff(e) <= 1e-12 * e[0])
    # d/dt int |v|^2 = -2 nu int |grad v|^2, checked with centred differences
    lhs = (e[2:] - e[:-2]) / (2 * spec.dt)
    rhs = -2 * spec.nu * d[1:-1]
    assert np.abs(lhs - rhs).max() < 1e-3 * np.abs(rhs).max()


def test_cfl_rejections():
    with pytest.raises(CFLError, match="viscous"):
        simulate(SimSpec(FieldSpec("taylor_green", n=32), dt=0.05, steps=1, nu=1.0))
    with pytest.raises(CFLError, match="advective"):
        simulate(SimSpec(FieldSpec("taylor_green", n=32, amplitude=100.0), dt=0.005, steps=1, nu=0.01))


def test_snapshot_counts_and_times():
    init = FieldSpec("taylor_green", n=16)
    rec = simulate(SimSpec(init, dt=0.01, steps=100, save_every=10))
    assert len(rec) == 11
    assert np.allclose(rec.times, np.arange(11) * 0.1, atol=1e-14)
    assert len(simulate(SimSpec(init, dt=0.01, steps=0))) == 1


def test_simspec_validation():
    init = FieldSpec("taylor_green", n=16)
    for bad in (dict(dt=0.0, steps=1), dict(dt=0.1, steps=-1), dict(dt=0.1, steps=1, save_every=0),
                dict(dt=0.1, steps=1, dealias="3/2")):
        with pytest.raises(ValueError):
            SimSpec(init, **bad)
    with pytest.raises(ValueError):
        SimSpec(FieldSpec("gaussian", n=16), dt=0.01, steps=1).initial_field()


def test_simspec_text_roundtrip():
    spec = SimSpec(FieldSpec("random_solenoidal", seed=4, n=16, center=(1.0, 2.0, 3.0), envelope=1.0),
                   dt=0.003, steps=12, save_every=3, nu=0.25)
    back = SimSpec.from_text(spec.to_text())
    assert back == spec
    assert back.digest() == spec.digest()
    with pytest.raises(ValueError):
        SimSpec.from_text("dt = 0.1\nsteps = 1\n")
    with pytest.raises(ValueError):
        SimSpec.from_text("dt = 0.1\nsteps = 1\ninit.kind = abc\ncolour = red\n")


def test_stored_pressure_matches_velocity():
    from nsdiag.grid import pressure_from_velocity

    rec = simulate(SimSpec(FieldSpec("taylor_green", n=16), dt=0.01, steps=5, save_every=5))
    s = rec.snapshots[-1]
    assert np.allclose(s.pressure.values, pressure_from_velocity(s.velocity).values, atol=1e-13)
