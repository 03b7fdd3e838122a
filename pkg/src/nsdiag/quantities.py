"""Scale-invariant energy quantities on parabolic cylinders.

For a cylinder ``Q(z0, r) = B(x0, r) x ]t0 - r^2, t0[``::

    A = sup_t (1/r) int_B |v|^2          E = (1/r)   int_Q |grad v|^2
    C = (1/r^2) int_Q |v|^3              D = (1/r^2) int_Q |q|^{3/2}
    G = max(A, E, C)                     g = min(A, E, C)

Time integrals use the trapezoid rule over snapshots clipped to the window,
with linear interpolation at the window ends; the supremum in ``A`` is the
maximum over the same nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .grid import Grid, ScalarField, VectorField, grad_squared, restrict_ball

__all__ = [
    "Snapshot",
    "SpaceTimeRecord",
    "ParabolicCylinder",
    "ScaledQuantities",
    "RadiusScan",
    "compute_A",
    "compute_E",
    "compute_C",
    "compute_D",
    "scaled_quantities",
    "scan_radii",
    "ns_rescale",
    "map_cylinder",
]

_TIME_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class Snapshot:
    velocity: VectorField
    pressure: ScalarField | None
    t: float

    @cached_property
    def speed_sq(self) -> np.ndarray:
        v = self.velocity.values
        return np.einsum("i...,i...->...", v, v)

    @cached_property
    def grad_sq(self) -> np.ndarray:
        return grad_squared(self.velocity)

    # the two below are cheap to rebuild, so they are not cached
    @property
    def speed_cubed(self) -> np.ndarray:
        return self.speed_sq**1.5

    @property
    def pressure_32(self) -> np.ndarray:
        if self.pressure is None:
            raise ValueError(f"snapshot at t={self.t} carries no pressure")
        return np.abs(self.pressure.values) ** 1.5

    def density(self, name: str) -> np.ndarray:
        return {
            "v2": lambda: self.speed_sq,
            "grad2": lambda: self.grad_sq,
            "v3": lambda: self.speed_cubed,
            "q32": lambda: self.pressure_32,
        }[name]()


class SpaceTimeRecord:
    """Time-ordered ``(velocity, pressure, t)`` snapshots on one grid."""

    def __init__(self, snapshots: Sequence[Snapshot], viscosity: float = 1.0, metadata: dict | None = None):
        snaps = list(snapshots)
        if not snaps:
            raise ValueError("a record needs at least one snapshot")
        grid = snaps[0].velocity.grid
        times = np.array([s.t for s in snaps], dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        for s in snaps:
            if s.velocity.grid != grid or (s.pressure is not None and s.pressure.grid != grid):
                raise ValueError("all snapshots must share one grid")
            if s.pressure is not None:
                scale = max(s.pressure.max_norm(), 1e-300)
                if abs(s.pressure.mean()) > 1e-10 * scale and abs(s.pressure.mean()) > 1e-14:
                    raise ValueError(f"pressure at t={s.t} is not zero-mean")
        self.snapshots = snaps
        self.grid: Grid = grid
        self.times = times
        self.viscosity = float(viscosity)
        self.metadata = dict(metadata or {})

    def __len__(self):
        return len(self.snapshots)

    @property
    def dt_save(self) -> float:
        return float(np.max(np.diff(self.times))) if len(self.times) > 1 else math.inf

    @property
    def has_pressure(self) -> bool:
        return all(s.pressure is not None for s in self.snapshots)

    @classmethod
    def constant(cls, velocity: VectorField, pressure: ScalarField | None, times, **kw) -> "SpaceTimeRecord":
        """Time-independent record repeating one snapshot."""
        return cls([Snapshot(velocity, pressure, float(t)) for t in times], **kw)


@dataclass(frozen=True)
class ParabolicCylinder:
    x0: tuple
    t0: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r}")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    @property
    def window(self) -> tuple[float, float]:
        return self.t0 - self.r**2, self.t0


def map_cylinder(cyl: ParabolicCylinder, lam: float) -> ParabolicCylinder:
    """Image of a cylinder under ``x -> x / lam``, ``t -> t / lam^2``."""
    return ParabolicCylinder(tuple(c / lam for c in cyl.x0), cyl.t0 / lam**2, cyl.r / lam)


def _validate(rec: SpaceTimeRecord, cyl: ParabolicCylinder):
    a, b = cyl.window
    t_first, t_last = rec.times[0], rec.times[-1]
    tol = _TIME_EPS * max(1.0, abs(t_last))
    if a < t_first - tol or b > t_last + tol:
        raise ValueError(
            f"time window [{a:.6g}, {b:.6g}] is not covered by the record [{t_first:.6g}, {t_last:.6g}]"
        )
    if rec.dt_save > cyl.r**2 / 8 * (1 + 1e-9):
        raise ValueError(f"snapshot spacing {rec.dt_save:.3g} exceeds r^2/8 = {cyl.r**2 / 8:.3g}")
    inside = np.sum((rec.times > a + tol) & (rec.times < b - tol))
    if inside < 2:
        raise ValueError("fewer than two snapshots inside the time window")
    return restrict_ball(rec.grid, cyl.x0, cyl.r)


def _window_nodes(rec: SpaceTimeRecord, cyl: ParabolicCylinder, name: str, ball=None):
    """Times and ball integrals at the clipped window nodes."""
    ball = _validate(rec, cyl) if ball is None else ball
    a, b = cyl.window
    times = rec.times
    tol = _TIME_EPS * max(1.0, abs(times[-1]))
    lo = max(int(np.searchsorted(times, a + tol)) - 1, 0)
    hi = min(int(np.searchsorted(times, b - tol, side="right")) + 1, len(times))
    idx = range(lo, hi)
    ts = times[lo:hi]
    vals = np.array([ball.integrate(rec.snapshots[i].density(name)) for i in idx])
    interior = (ts > a + tol) & (ts < b - tol)
    nodes = np.concatenate([[a], ts[interior], [b]])
    # clamp ends into the sampled span so exact endpoints interpolate exactly
    node_vals = np.interp(np.clip(nodes, ts[0], ts[-1]), ts, vals)
    return nodes, node_vals


def _trapezoid(nodes, vals) -> float:
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes)))


def compute_A(rec: SpaceTimeRecord, cyl: ParabolicCylinder) -> float:
    _, vals = _window_nodes(rec, cyl, "v2")
    return float(vals.max()) / cyl.r


def compute_E(rec: SpaceTimeRecord, cyl: ParabolicCylinder) -> float:
    return _trapezoid(*_window_nodes(rec, cyl, "grad2")) / cyl.r


def compute_C(rec: SpaceTimeRecord, cyl: ParabolicCylinder) -> float:
    return _trapezoid(*_window_nodes(rec, cyl, "v3")) / cyl.r**2


def compute_D(rec: SpaceTimeRecord, cyl: ParabolicCylinder) -> float:
    if not rec.has_pressure:
        raise ValueError("record carries no pressure; D needs the stored pressure")
    return _trapezoid(*_window_nodes(rec, cyl, "q32")) / cyl.r**2


@dataclass(frozen=True)
class ScaledQuantities:
    r: float
    A: float
    E: float
    C: float
    D: float

    @property
    def G(self) -> float:
        return max(self.A, self.E, self.C)

    @property
    def g(self) -> float:
        return min(self.A, self.E, self.C)

    @property
    def energy(self) -> float:
        """``A + E + D``, the quantity driven by the radius iteration."""
        return self.A + self.E + self.D

    def as_row(self) -> dict:
        return {"r": self.r, "A": self.A, "E": self.E, "C": self.C, "D": self.D, "G": self.G, "g": self.g}


def scaled_quantities(rec: SpaceTimeRecord, cyl: ParabolicCylinder, with_pressure: bool = True) -> ScaledQuantities:
    ball = _validate(rec, cyl)
    r = cyl.r
    A = float(_window_nodes(rec, cyl, "v2", ball)[1].max()) / r
    E = _trapezoid(*_window_nodes(rec, cyl, "grad2", ball)) / r
    C = _trapezoid(*_window_nodes(rec, cyl, "v3", ball)) / r**2
    if with_pressure:
        if not rec.has_pressure:
            raise ValueError("record carries no pressure; D needs the stored pressure")
        D = _trapezoid(*_window_nodes(rec, cyl, "q32", ball)) / r**2
    else:
        D = math.nan
    return ScaledQuantities(r, A, E, C, D)


@dataclass
class RadiusScan:
    x0: tuple
    t0: float
    rows: list[ScaledQuantities] = field(default_factory=list)
    errors: dict[float, str] = field(default_factory=dict)

    @property
    def radii(self) -> np.ndarray:
        return np.array([q.r for q in self.rows])

    @property
    def running_sup_G(self) -> np.ndarray:
        """``sup_{r' <= r} G(r')`` over the successful radii, by increasing r."""
        return np.maximum.accumulate([q.G for q in sorted(self.rows, key=lambda q: q.r)]) if self.rows else np.array([])

    @property
    def running_sup_g(self) -> np.ndarray:
        return np.maximum.accumulate([q.g for q in sorted(self.rows, key=lambda q: q.r)]) if self.rows else np.array([])

    @property
    def sup_G(self) -> float:
        return float(max(q.G for q in self.rows)) if self.rows else math.nan

    @property
    def sup_g(self) -> float:
        return float(max(q.g for q in self.rows)) if self.rows else math.nan

    def to_csv(self) -> str:
        lines = ["r,A,E,C,D,G,g"]
        for q in self.rows:
            lines.append(",".join(repr(float(x)) for x in q.as_row().values()))
        for r, msg in self.errors.items():
            lines.append(f"{r!r},error,{msg.replace(',', ';')},,,,")
        lines.append(f"sup,,,,,{self.sup_G!r},{self.sup_g!r}")
        return "\n".join(lines) + "\n"


def scan_radii(rec: SpaceTimeRecord, x0, t0: float, radii, with_pressure: bool = True) -> RadiusScan:
    """Quantities at each radius; invalid radii are recorded and skipped."""
    scan = RadiusScan(tuple(float(c) for c in x0), float(t0))
    for r in radii:
        try:
            scan.rows.append(scaled_quantities(rec, ParabolicCylinder(x0, t0, float(r)), with_pressure))
        except ValueError as exc:
            scan.errors[float(r)] = str(exc)
    return scan


def _resample(values: np.ndarray, lam: float, rel_tol: float = 1e-11) -> np.ndarray:
    """Samples of ``f(lam x)`` on the same periodic grid, by moving Fourier modes."""
    n = values.shape[-1]
    fh = sfft.fftn(values, axes=(-3, -2, -1))
    scale = np.abs(fh).max()
    if scale == 0:
        return np.zeros_like(values)
    modes = np.rint(sfft.fftfreq(n, 1.0 / n)).astype(int)
    live = np.abs(fh) > rel_tol * scale
    live_any = live.any(axis=0) if values.ndim == 4 else live
    ix, iy, iz = np.nonzero(live_any)
    k = np.stack([modes[ix], modes[iy], modes[iz]])
    m = lam * k
    mi = np.rint(m).astype(int)
    if np.any(np.abs(m - mi) > 1e-9):
        raise ValueError(f"field is not periodic on the box after scaling by {lam}")
    if np.any(np.abs(mi) >= n // 2):
        raise ValueError(f"scaling by {lam} pushes modes beyond Nyquist")
    out = np.zeros_like(fh)
    tgt = tuple(mi % n)
    if values.ndim == 4:
        out[(slice(None),) + tgt] = fh[:, ix, iy, iz]
    else:
        out[tgt] = fh[ix, iy, iz]
    return sfft.ifftn(out, axes=(-3, -2, -1)).real


def ns_rescale(rec: SpaceTimeRecord, lam: float, same_box: bool = True) -> SpaceTimeRecord:
    """Navier-Stokes rescaling ``v -> lam v(lam x, lam^2 t)``, ``q -> lam^2 q(lam x, lam^2 t)``.

    With ``same_box`` the fields are resampled spectrally on the original
    grid, which needs every live mode ``k`` to map to an integer mode
    ``lam k`` below Nyquist.  Otherwise the samples are kept and the box
    shrinks to ``L / lam``, which is exact for any record.
    Cylinders map by :func:`map_cylinder`.
    """
    if not lam > 0:
        raise ValueError(f"scale factor must be positive, got {lam}")
    snaps = []
    if same_box:
        g = rec.grid
        for s in rec.snapshots:
            v = VectorField(g, lam * _resample(s.velocity.values, lam))
            q = None
            if s.pressure is not None:
                qv = lam**2 * _resample(s.pressure.values, lam)
                q = ScalarField(g, qv - qv.mean())
            snaps.append(Snapshot(v, q, s.t / lam**2))
    else:
        g = Grid(rec.grid.n, rec.grid.box_length / lam)
        for s in rec.snapshots:
            v = VectorField(g, lam * s.velocity.values)
            q = None if s.pressure is None else ScalarField(g, lam**2 * s.pressure.values)
            snaps.append(Snapshot(v, q, s.t / lam**2))
    meta = dict(rec.metadata)
    meta["rescaled_by"] = meta.get("rescaled_by", 1.0) * lam
    return SpaceTimeRecord(snaps, rec.viscosity, meta)
