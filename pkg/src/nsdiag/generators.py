"""Synthetic test fields and a pseudospectral Navier-Stokes stepper.

The stepper advances ``v_t + (v . grad) v - nu lap v = -grad q``, ``div v = 0``
in rotational form with 2/3-rule dealiasing, Leray projection at every
stage and an exact integrating factor for viscosity (Lawson RK4).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .bumps import RadialBump
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    _irfftn,
    _project_hat,
    _rfftn,
    curl,
    divergence,
    grad_squared,
    leray_project,
    pressure_from_velocity,
)
from .quantities import Snapshot, SpaceTimeRecord

__all__ = [
    "VECTOR_KINDS",
    "SCALAR_KINDS",
    "FieldSpec",
    "generate",
    "CFLError",
    "SimSpec",
    "SolverState",
    "initial_state",
    "step",
    "simulate",
    "kinetic_energy",
    "dissipation",
]

VECTOR_KINDS = ("taylor_green", "gaussian_vortex", "abc", "random_solenoidal", "single_mode")
SCALAR_KINDS = ("gaussian", "plateau")


@dataclass(frozen=True)
class FieldSpec:
    """Declarative description of a synthetic field.

    ``length_scale`` defaults per kind: the box length for the periodic
    flows, ``L/12`` for the vortex and the random field's correlation
    length, 1 for the Gaussian and the plateau radius.  ``envelope`` (random
    kind only) is the width of a Gaussian window making the field decay.
    """

    kind: str
    amplitude: float = 1.0
    length_scale: float | None = None
    seed: int = 0
    n: int = 64
    box_length: float = 2 * math.pi
    center: tuple | None = None
    envelope: float | None = None

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in VECTOR_KINDS + SCALAR_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.box_length)

    def scale(self) -> float:
        if self.length_scale is not None:
            return float(self.length_scale)
        L = self.box_length
        return {
            "taylor_green": L, "abc": L, "single_mode": L,
            "gaussian_vortex": L / 12, "random_solenoidal": L / 12,
            "gaussian": 1.0, "plateau": 1.0,
        }[self.kind]


def _stack3(grid: Grid, comps) -> np.ndarray:
    return np.stack([np.broadcast_to(c, grid.shape) for c in comps])


def _normalise(v: np.ndarray, amplitude: float) -> np.ndarray:
    mag = np.sqrt(np.einsum("i...,i...->...", v, v)).max()
    return v * (amplitude / mag) if mag > 0 else v


def generate(spec: FieldSpec):
    """Realise ``spec`` on its grid; vector kinds are divergence-free."""
    g = spec.grid
    ell = spec.scale()
    if ell < 4 * g.dx:
        raise ValueError(f"length scale {ell:g} is below 4 dx = {4 * g.dx:g}")
    a = spec.amplitude
    c = np.asarray(spec.center if spec.center is not None else g.center, dtype=float)
    x, y, z = g.coords()
    kind = spec.kind

    if kind == "taylor_green":
        k = 2 * np.pi / ell
        v = _stack3(g, (
            a * np.sin(k * x) * np.cos(k * y) * np.cos(k * z),
            -a * np.cos(k * x) * np.sin(k * y) * np.cos(k * z),
            0 * x,
        ))
        return VectorField(g, v)
    if kind == "abc":
        k = 2 * np.pi / ell
        v = _stack3(g, (
            a * (np.sin(k * z) + np.cos(k * y)),
            a * (np.sin(k * x) + np.cos(k * z)),
            a * (np.sin(k * y) + np.cos(k * x)),
        ))
        return VectorField(g, v)
    if kind == "single_mode":
        k = 2 * np.pi / ell
        v = _stack3(g, (a * np.sin(k * y), 0 * x, 0 * x))
        return VectorField(g, v)

    dx, dy, dz = g.periodic_offsets(c)
    rho2 = dx**2 + dy**2 + dz**2
    if kind == "gaussian":
        return ScalarField(g, a * np.exp(-rho2 / ell**2))
    if kind == "plateau":
        width = max(0.25 * ell, 4 * g.dx)
        return ScalarField(g, a * RadialBump(tuple(c), ell + width, ell).evaluate(g)[0])
    if kind == "gaussian_vortex":
        # v = curl(0, 0, a ell exp(-|x - c|^2 / ell^2)), a swirl about the z axis
        psi = a * ell * np.exp(-rho2 / ell**2)
        pot = VectorField(g, _stack3(g, (0 * psi, 0 * psi, psi)))
        return curl(pot)
    # random_solenoidal
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal((3,) + g.shape)
    nh = _rfftn(noise) * np.exp(-0.5 * g.k2 * ell**2)
    smooth = _irfftn(nh, g.n)
    if spec.envelope is not None:
        smooth = smooth * np.exp(-rho2 / (2 * spec.envelope**2))
        v = curl(VectorField(g, smooth)).values
    else:
        v = leray_project(VectorField(g, smooth)).values
        v = v - v.mean(axis=(1, 2, 3), keepdims=True)
    v = leray_project(VectorField(g, v)).values
    return VectorField(g, _normalise(v, a))


def kinetic_energy(v: VectorField) -> float:
    """``int |v|^2`` over the box (no factor 1/2)."""
    return float(np.sum(v.values**2) * v.grid.cell_volume)


def dissipation(v: VectorField) -> float:
    """``int |grad v|^2`` over the box."""
    return float(np.sum(grad_squared(v)) * v.grid.cell_volume)


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class SimSpec:
    """Simulation parameters; ``initial`` is a FieldSpec or a VectorField."""

    initial: object
    dt: float
    steps: int
    save_every: int = 1
    nu: float = 1.0
    dealias: str = "2/3"

    def __post_init__(self):
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not self.dt > 0 or not self.nu > 0:
            raise ValueError("dt and nu must be positive")
        if self.dealias not in ("2/3", "none"):
            raise ValueError(f"unknown dealias rule {self.dealias!r}")

    def initial_field(self) -> VectorField:
        if isinstance(self.initial, VectorField):
            return self.initial
        f = generate(self.initial)
        if not isinstance(f, VectorField):
            raise ValueError(f"initial condition must be a vector kind, got {self.initial.kind}")
        return f

    def digest(self) -> str:
        h = hashlib.sha256()
        for f_ in fields(self):
            val = getattr(self, f_.name)
            if isinstance(val, VectorField):
                h.update(f"{val.grid}".encode())
                h.update(val.values.tobytes())
            else:
                h.update(f"{f_.name}={val!r};".encode())
        return h.hexdigest()

    def to_text(self) -> str:
        """``key = value`` lines; see :meth:`from_text` for the schema."""
        lines = [f"dt = {self.dt!r}", f"steps = {self.steps}", f"save_every = {self.save_every}",
                 f"nu = {self.nu!r}", f"dealias = {self.dealias}"]
        if isinstance(self.initial, FieldSpec):
            for k, v in asdict(self.initial).items():
                if v is not None:
                    if k == "center":
                        v = ",".join(repr(c) for c in v)
                    lines.append(f"init.{k} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, initial=None) -> "SimSpec":
        """Parse ``key = value`` lines.

        Keys: ``dt``, ``steps``, ``save_every``, ``nu``, ``dealias`` and
        ``init.<FieldSpec field>`` (``kind``, ``amplitude``, ``length_scale``,
        ``seed``, ``n``, ``box_length``, ``center`` as ``x,y,z``,
        ``envelope``).  ``#`` starts a comment.
        """
        top, init = {}, {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed spec line: {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k.startswith("init."):
                init[k[5:]] = v
            else:
                top[k] = v
        conv = {"amplitude": float, "length_scale": float, "seed": int, "n": int,
                "box_length": float, "envelope": float, "kind": str,
                "center": lambda s: tuple(float(c) for c in s.split(","))}
        if initial is None:
            if "kind" not in init:
                raise ValueError("spec needs init.kind or an explicit initial field")
            unknown = set(init) - set(conv)
            if unknown:
                raise ValueError(f"unknown init keys {sorted(unknown)}")
            initial = FieldSpec(**{k: conv[k](v) for k, v in init.items()})
        unknown = set(top) - {"dt", "steps", "save_every", "nu", "dealias"}
        if unknown:
            raise ValueError(f"unknown spec keys {sorted(unknown)}")
        return cls(
            initial=initial,
            dt=float(top["dt"]),
            steps=int(top["steps"]),
            save_every=int(top.get("save_every", 1)),
            nu=float(top.get("nu", 1.0)),
            dealias=top.get("dealias", "2/3"),
        )


@dataclass
class SolverState:
    grid: Grid
    v_hat: np.ndarray
    t: float
    nu: float
    dealias: bool = True

    def velocity(self) -> VectorField:
        return VectorField(self.grid, _irfftn(self.v_hat, self.grid.n))


def initial_state(v: VectorField, nu: float = 1.0, t: float = 0.0, dealias: bool = True) -> SolverState:
    g = v.grid
    return SolverState(g, _project_hat(_rfftn(v.values), g), float(t), float(nu), dealias)


def _nonlinear(state: SolverState, v_hat: np.ndarray, dt: float | None = None) -> np.ndarray:
    """``P[(v x omega)^]`` with the 2/3 rule applied to the product."""
    g = state.grid
    kx, ky, kz = g.wavenumbers
    both = np.empty((6,) + v_hat.shape[1:], dtype=complex)
    both[:3] = v_hat
    np.multiply(1j * ky, v_hat[2], out=both[3])
    both[3] -= 1j * kz * v_hat[1]
    np.multiply(1j * kz, v_hat[0], out=both[4])
    both[4] -= 1j * kx * v_hat[2]
    np.multiply(1j * kx, v_hat[1], out=both[5])
    both[5] -= 1j * ky * v_hat[0]
    phys = _irfftn(both, g.n)
    v, w = phys[:3], phys[3:]
    if dt is not None:
        vmax = float(np.sqrt(np.einsum("i...,i...->...", v, v)).max())
        if vmax > 0 and dt > 0.5 * g.dx / vmax:
            raise CFLError(
                f"advective CFL violated at t={state.t:.6g}: dt={dt:.3g} > 0.5 dx / max|v| = {0.5 * g.dx / vmax:.3g}"
            )
    cross = np.cross(v, w, axis=0)
    nh = _rfftn(cross)
    if state.dealias:
        nh *= g.dealias_mask
    return _project_hat(nh, g)


def step(state: SolverState, dt: float) -> SolverState:
    """One integrating-factor RK4 step."""
    g = state.grid
    E = np.exp(-0.5 * state.nu * g.k2 * dt)
    v0 = state.v_hat
    k1 = dt * _nonlinear(state, v0, dt)
    k2 = dt * _nonlinear(state, E * (v0 + 0.5 * k1))
    k3 = dt * _nonlinear(state, E * v0 + 0.5 * k2)
    k4 = dt * _nonlinear(state, E * E * v0 + E * k3)
    v_new = E * E * v0 + (E * E * k1 + 2 * E * (k2 + k3) + k4) / 6
    return SolverState(g, v_new, state.t + dt, state.nu, state.dealias)


def _check_cfl(v: VectorField, dt: float, nu: float):
    g = v.grid
    vmax = v.max_norm()
    if vmax > 0 and dt > 0.5 * g.dx / vmax:
        raise CFLError(f"advective CFL violated: dt={dt:.3g} > 0.5 dx / max|v| = {0.5 * g.dx / vmax:.3g}")
    if dt > 0.25 * g.dx**2 / nu:
        raise CFLError(f"viscous CFL violated: dt={dt:.3g} > 0.25 dx^2 / nu = {0.25 * g.dx**2 / nu:.3g}")


def _snapshot(state: SolverState) -> Snapshot:
    v = state.velocity()
    return Snapshot(v, pressure_from_velocity(v), state.t)


def simulate(spec: SimSpec) -> SpaceTimeRecord:
    """Run ``spec``, saving ``t = 0`` and every ``save_every``-th step."""
    v0 = spec.initial_field()
    _check_cfl(v0, spec.dt, spec.nu)
    state = initial_state(v0, spec.nu, dealias=spec.dealias == "2/3")
    snaps = [_snapshot(state)]
    for i in range(1, spec.steps + 1):
        state = step(state, spec.dt)
        # keep time exact multiples of dt
        state.t = i * spec.dt
        if i % spec.save_every == 0:
            snaps.append(_snapshot(state))
    meta = {"spec_digest": spec.digest(), "dt": spec.dt, "steps": spec.steps,
            "save_every": spec.save_every, "nu": spec.nu}
    return SpaceTimeRecord(snaps, spec.nu, meta)
