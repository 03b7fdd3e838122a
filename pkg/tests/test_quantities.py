import math

import numpy as np
import pytest
from scipy import integrate

from nsdiag.grid import Grid, ScalarField, VectorField, pressure_from_velocity, restrict_ball
from nsdiag.quantities import (
    ParabolicCylinder,
    Snapshot,
    SpaceTimeRecord,
    compute_A,
    compute_C,
    compute_D,
    compute_E,
    map_cylinder,
    ns_rescale,
    scaled_quantities,
    scan_radii,
)

BALL = 4 * math.pi / 3


def _uniform_flow(g):
    return VectorField(g, np.stack([np.ones(g.shape), np.zeros(g.shape), np.zeros(g.shape)]))


def _tg(g, mode=1):
    x, y, z = g.coords()
    k = 2 * np.pi * mode / g.box_length
    return VectorField(g, np.stack(np.broadcast_arrays(
        np.sin(k * x) * np.cos(k * y) * np.cos(k * z), -np.cos(k * x) * np.sin(k * y) * np.cos(k * z),
        0 * x * y * z)))


def _decaying_record(g, times, rate=0.75, mode=1):
    v0 = _tg(g, mode)
    snaps = []
    for t in times:
        v = v0 * math.exp(-rate * t)
        snaps.append(Snapshot(v, pressure_from_velocity(v), float(t)))
    return SpaceTimeRecord(snaps)


def test_constant_record_matches_ball_volume():
    g = Grid(64, 8.0)
    rec = SpaceTimeRecord.constant(_uniform_flow(g), ScalarField(g, np.zeros(g.shape)), np.linspace(0, 2, 21))
    q = scaled_quantities(rec, ParabolicCylinder(g.center, 2.0, 1.0))
    assert q.A == pytest.approx(BALL, rel=0.02)
    assert q.C == pytest.approx(BALL, rel=0.02)
    assert q.E == pytest.approx(0.0, abs=1e-20) and q.D == 0.0
    assert q.G == max(q.A, q.E, q.C) and q.g == min(q.A, q.E, q.C)


def test_zero_record_gives_zero_rows():
    g = Grid(16, 8.0)
    z = VectorField(g, np.zeros((3,) + g.shape))
    rec = SpaceTimeRecord.constant(z, ScalarField(g, np.zeros(g.shape)), np.linspace(0, 1, 41))
    scan = scan_radii(rec, g.center, 1.0, [0.5, 1.0])
    assert not scan.errors
    assert all(v == 0 for q in scan.rows for v in (q.A, q.E, q.C, q.D))


def test_dissipation_of_single_mode_against_direct_quadrature():
    g = Grid(64, 8.0)
    x, y, z = g.coords()
    k, amp = 2 * np.pi / g.box_length, 1.3
    v = VectorField(g, np.stack(np.broadcast_arrays(amp * np.sin(k * y), 0 * x, 0 * z)))
    rec = SpaceTimeRecord.constant(v, None, np.linspace(0, 1, 11))
    x0, r = (4.1, 3.3, 4.0), 1.0
    E = compute_E(rec, ParabolicCylinder(x0, 1.0, r))
    # slab integral of cos^2 over the ball, by quadrature in the y offset
    slab, _ = integrate.quad(lambda s: math.pi * (r * r - s * s) * math.cos(k * (x0[1] + s)) ** 2, -r, r)
    assert E == pytest.approx(amp**2 * k**2 * slab * r, rel=0.02)


def test_window_interpolation_is_exact_for_linear_integrands():
    g = Grid(32, 8.0)
    base = _tg(g)
    times = np.arange(0, 1.2001, 0.03)
    snaps = [Snapshot(base * math.sqrt(1 + t), None, float(t)) for t in times]
    rec = SpaceTimeRecord(snaps)
    cyl = ParabolicCylinder((3.1, 4.2, 3.9), 0.93, 0.5)
    ball = restrict_ball(g, cyl.x0, cyl.r)
    a, b = cyl.window
    g0 = ball.integrate(snaps[0].grad_sq)
    e_exact = g0 * ((b - a) + 0.5 * (b * b - a * a)) / cyl.r
    assert compute_E(rec, cyl) == pytest.approx(e_exact, rel=1e-12)
    # A uses the interpolated window end, where 1 + t peaks
    assert compute_A(rec, cyl) == pytest.approx(ball.integrate(snaps[0].speed_sq) * (1 + b) / cyl.r, rel=1e-12)


def test_invalid_cylinders_are_rejected():
    g = Grid(16, 8.0)
    rec = SpaceTimeRecord.constant(_uniform_flow(g), None, np.linspace(0, 1, 11))
    with pytest.raises(ValueError, match="not covered"):
        compute_A(rec, ParabolicCylinder(g.center, 0.5, 1.0))
    with pytest.raises(ValueError, match="spacing"):
        compute_A(rec, ParabolicCylinder(g.center, 1.0, 0.5))
    with pytest.raises(ValueError, match="pressure"):
        compute_D(rec, ParabolicCylinder(g.center, 1.0, 0.9))
    with pytest.raises(ValueError):
        ParabolicCylinder(g.center, 1.0, 0.0)


def test_record_validation():
    g = Grid(16, 8.0)
    v = _uniform_flow(g)
    with pytest.raises(ValueError):
        SpaceTimeRecord([Snapshot(v, None, 1.0), Snapshot(v, None, 0.5)])
    with pytest.raises(ValueError):
        SpaceTimeRecord([Snapshot(v, ScalarField(g, np.ones(g.shape)), 0.0)])
    with pytest.raises(ValueError):
        SpaceTimeRecord([Snapshot(v, None, 0.0), Snapshot(_uniform_flow(Grid(8, 8.0)), None, 1.0)])


def test_scan_records_errors_and_running_sup():
    g = Grid(32, 4 * math.pi)
    rec = _decaying_record(g, np.arange(0, 1.3001, 0.02))
    radii = [0.25, 0.5, 1.0, 2.0]
    scan = scan_radii(rec, (1.1, 0.7, 2.3), 1.3, radii)
    assert set(scan.errors) == {0.25, 2.0}
    assert np.all(np.diff(scan.running_sup_G) >= 0)
    csv = scan.to_csv().splitlines()
    assert csv[0] == "r,A,E,C,D,G,g" and csv[-1].startswith("sup,")
    assert len(csv) == 1 + len(radii) + 1


def test_rescaling_identity_and_exact_box_rescaling():
    g = Grid(32, 4 * math.pi)
    rec = _decaying_record(g, np.arange(0, 1.2001, 0.025))
    cyl = ParabolicCylinder((1.1, 0.7, 2.3), 1.2, 1.0)
    base = scaled_quantities(rec, cyl)
    same = scaled_quantities(ns_rescale(rec, 1.0), cyl)
    for k in "AECD":
        assert getattr(same, k) == pytest.approx(getattr(base, k), rel=1e-10)
    for lam in (0.5, 2.0):
        resc = ns_rescale(rec, lam, same_box=False)
        q = scaled_quantities(resc, map_cylinder(cyl, lam))
        for k in "AECD":
            assert getattr(q, k) == pytest.approx(getattr(base, k), rel=1e-12)


def test_same_box_rescaling_moves_modes():
    # pressure carries mode 4, which lands on 8 < Nyquist at n = 32
    g = Grid(32, 2 * math.pi)
    rec = _decaying_record(g, [0.0, 0.1], mode=2)
    up = ns_rescale(rec, 2.0)
    assert np.allclose(up.snapshots[0].velocity.values, 2 * _tg(g, 4).values, atol=1e-12)
    assert up.times[1] == pytest.approx(0.025)
    down = ns_rescale(rec, 0.5)
    assert np.allclose(down.snapshots[0].velocity.values, 0.5 * _tg(g, 1).values, atol=1e-12)
    with pytest.raises(ValueError, match="Nyquist"):
        ns_rescale(up, 2.0)
    with pytest.raises(ValueError, match="periodic"):
        ns_rescale(_decaying_record(g, [0.0], mode=1), 1.5)


def test_map_cylinder():
    c = map_cylinder(ParabolicCylinder((2.0, 4.0, 6.0), 4.0, 1.0), 2.0)
    assert c.x0 == (1.0, 2.0, 3.0) and c.t0 == 1.0 and c.r == 0.5
