"""Default field families and solver records behind the ``verify`` suites.

Each runner returns a list of :class:`~nsdiag.report.CheckReport`.  The quick
profile shrinks the families and the record's snapshot count; tolerances and
caps are the same in both profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bumps import RadialBump
from .generators import FieldSpec, SimSpec, generate, simulate
from .grid import Grid
from .heat_besov import cutoff_commutator, forced_heat_reference, verify_cutoff_lemma
from .norms import embedding_l3_from_weak_l4
from .quantities import ParabolicCylinder, SpaceTimeRecord
from .report import CheckReport
from .verification import (
    DEFAULT_CAPS,
    check_C_bounds,
    check_interpolation,
    check_iteration_bound,
    check_iteration_sweep,
    check_local_energy,
    check_localized,
    check_main_bound,
    check_pressure_decay,
)

__all__ = ["SUITES", "RecordProfile", "solver_record", "run_suite", "family_interpolation",
           "family_cutoff", "family_embedding"]

SUITES = ("lemma21", "lemma22", "lemma23", "c-bounds", "energy", "pressure-decay",
          "iteration", "embedding", "main-bound")

# probe points for the Taylor-Green record on the 4 pi box
CENTRES = ((1.1, 0.7, 2.3), (4.0, 5.5, 1.3), (7.9, 2.2, 9.6))
RADII = (0.25, 0.35, 0.5)


def family_interpolation(per_kind: int = 10, n: int = 64, box_length: float = 12.0, seed: int = 0) -> list:
    """Gaussians, Gaussian vortices and windowed random solenoidal fields."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(per_kind):
        ell = float(rng.uniform(1.0, 1.6))
        c = tuple(box_length / 2 + rng.uniform(-1, 1, 3))
        out.append(generate(FieldSpec("gaussian", amplitude=float(rng.uniform(0.5, 3)), length_scale=ell,
                                      n=n, box_length=box_length, center=c)))
    for i in range(per_kind):
        out.append(generate(FieldSpec("gaussian_vortex", amplitude=float(rng.uniform(0.5, 3)),
                                      length_scale=float(rng.uniform(1.0, 1.6)), n=n, box_length=box_length)))
    for i in range(per_kind):
        out.append(generate(FieldSpec("random_solenoidal", seed=i, n=n, box_length=box_length,
                                      envelope=2.0)))
    return out


def family_cutoff(n_fields: int = 10, n: int = 64, box_length: float = 12.0, seed: int = 1):
    """Scalar fields and three radial cutoffs centred in the box."""
    rng = np.random.default_rng(seed)
    g = Grid(n, box_length)
    fields = []
    for i in range(n_fields):
        c = tuple(box_length / 2 + rng.uniform(-1.5, 1.5, 3))
        if i % 3 == 2:
            v = generate(FieldSpec("random_solenoidal", seed=i, n=n, box_length=box_length, envelope=2.0))
            fields.append(v.components[0])
        else:
            kind = "gaussian" if i % 3 == 0 else "plateau"
            fields.append(generate(FieldSpec(kind, amplitude=float(rng.uniform(0.5, 2)),
                                             length_scale=float(rng.uniform(0.8, 1.5)),
                                             n=n, box_length=box_length, center=c)))
    phis = [RadialBump(tuple(g.center), outer, 0.5 * outer).field(g) for outer in (1.5, 2.25, 3.0)]
    return fields, phis


def family_embedding(count: int = 100, n: int = 32, seed: int = 2) -> list:
    """``(field, centre, radius)`` triples of random solenoidal fields on balls."""
    rng = np.random.default_rng(seed)
    L = 2 * math.pi
    out = []
    for i in range(count):
        v = generate(FieldSpec("random_solenoidal", seed=1000 + i, n=n, box_length=L,
                               length_scale=float(rng.uniform(0.8, 1.3)), amplitude=float(rng.uniform(0.1, 5))))
        out.append((v, tuple(rng.uniform(0, L, 3)), float(rng.uniform(0.8, 1.5))))
    return out


@dataclass(frozen=True)
class RecordProfile:
    """Decaying Taylor-Green run on a ``4 pi`` box used by the record suites.

    The snapshot spacing ``dt`` keeps radii down to about ``sqrt(8 dt)`` valid.
    Every step is saved, so memory grows as ``steps * n^3``; ``n = 32`` keeps
    the record and its rescaled copy within a few hundred MB.
    """

    n: int = 32
    dt: float = 0.0038
    steps: int = 300

    @property
    def t_end(self) -> float:
        return self.steps * self.dt

    def spec(self) -> SimSpec:
        init = FieldSpec("taylor_green", n=self.n, box_length=4 * math.pi)
        return SimSpec(init, dt=self.dt, steps=self.steps, save_every=1, nu=1.0)


QUICK_RECORD = RecordProfile()
FULL_RECORD = RecordProfile(dt=0.0019, steps=600)

_records: dict = {}


def solver_record(profile: RecordProfile) -> SpaceTimeRecord:
    """Simulate once per profile and process."""
    if profile not in _records:
        _records[profile] = simulate(profile.spec())
    return _records[profile]


def _cap(caps, name):
    return caps.get(name, DEFAULT_CAPS[name])


def run_suite(name: str, quick: bool = False, caps: dict | None = None) -> list[CheckReport]:
    if name not in SUITES:
        raise KeyError(name)
    caps = caps or {}
    cap = _cap(caps, name)
    if name == "lemma21":
        return [check_interpolation(family_interpolation(3 if quick else 10), cap=cap)]
    if name == "lemma22":
        fields, phis = family_cutoff(3 if quick else 10)
        rep = verify_cutoff_lemma(fields, phis, cap=cap)
        g = Grid(32, 12.0)
        f = generate(FieldSpec("gaussian", n=32, box_length=12.0, length_scale=1.5))
        phi = RadialBump(tuple(g.center), 2.5, 1.0).field(g)
        ts = [0.1, 0.5]
        com = cutoff_commutator(f, phi, ts)
        ref = forced_heat_reference(f, phi, ts)
        err = max(float(np.abs(i.values + j.values - r.values).max() / max(r.max_norm(), 1e-300))
                  for i, j, r in zip(com.duhamel_I, com.duhamel_J, ref))
        rep.info["duhamel_relative_error"] = err
        # gap between phi w - w_phi and its Duhamel form, set by how well the grid resolves phi
        rep.info["sampling_gap"] = float(com.reconstruction_error.max() / max(u.max_norm() for u in com.u))
        rep.conditions["duhamel_reconstruction"] = err <= 1e-6
        return [rep]
    if name == "lemma23":
        u = generate(FieldSpec("gaussian", n=128, box_length=20.0))
        return [check_localized([u], (0.5, 1.0, 2.0), cap=cap)]
    if name == "embedding":
        rep = CheckReport("embedding_l3_weak_l4", cap)
        for i, (v, x0, r) in enumerate(family_embedding(20 if quick else 100)):
            rep.cases.append(embedding_l3_from_weak_l4(v, x0, r, label=f"v{i}/r={r:.4g}"))
        return [rep]
    if name == "iteration":
        return [check_iteration_sweep(20 if quick else 100, cap=cap)]

    profile = QUICK_RECORD if quick else FULL_RECORD
    rec = solver_record(profile)
    t0 = profile.t_end
    centres = CENTRES[:2] if quick else CENTRES
    radii = RADII[1:] if quick else RADII
    stride = max(1, len(rec) // 10)
    if name == "energy":
        cyl = ParabolicCylinder(CENTRES[0], t0, 1.0)
        return [check_local_energy(rec, cyl, tol=cap)]
    if name == "c-bounds":
        cyls = [ParabolicCylinder(c, t0, r) for c in centres for r in radii]
        return [check_C_bounds(rec, cyls, cap=cap, besov_stride=stride)]
    if name == "pressure-decay":
        parts = [check_pressure_decay(rec, c, t0, [(r, 2 * r) for r in radii], cap=cap) for c in centres]
        for extra in parts[1:]:
            parts[0].cases.extend(extra.cases)
        return parts[:1]
    # main-bound
    return [
        check_main_bound(rec, CENTRES[0], t0, 0.5, lam=2.0, cap=cap, besov_stride=stride),
        check_iteration_bound(rec, CENTRES[0], t0, 0.5, besov_stride=stride),
    ]
