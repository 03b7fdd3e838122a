"""Periodic 3D grids, real fields and their spectral calculus.

A cube of side ``box_length`` sampled at ``n`` points per dimension stands in
for R^3.  Samples sit at ``x_i = i * L / n``; arrays are indexed ``[ix, iy,
iz]`` and vector fields carry the component on the leading axis.  All
derivatives are spectral.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "SpectralField",
    "BallMask",
    "set_threads",
    "gradient",
    "divergence",
    "laplacian",
    "curl",
    "leray_project",
    "pressure_from_velocity",
    "restrict_ball",
    "check_decay",
]

_THREADS = None


def set_threads(n: int | None) -> None:
    """Bound the worker count used by FFTs (``None`` restores the default)."""
    global _THREADS
    _THREADS = None if n is None else max(1, int(n))


def _workers() -> int:
    if _THREADS is not None:
        return _THREADS
    env = os.environ.get("NSDIAG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _rfftn(a):
    return sfft.rfftn(a, axes=(-3, -2, -1), workers=_workers())


def _irfftn(a, n):
    return sfft.irfftn(a, s=(n, n, n), axes=(-3, -2, -1), workers=_workers())


@dataclass(frozen=True)
class Grid:
    n: int
    box_length: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays ``(x, y, z)``."""
        a = self.axis
        return a[:, None, None], a[None, :, None], a[None, None, :]

    @property
    def center(self) -> np.ndarray:
        return np.full(3, self.box_length / 2)

    def periodic_offsets(self, x0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Minimum-image displacements ``x - x0`` along each axis."""
        L = self.box_length
        x0 = np.asarray(x0, dtype=float)
        out = []
        for d, c in enumerate(self.coords()):
            out.append((c - x0[d] + L / 2) % L - L / 2)
        return tuple(out)

    def distance_from(self, x0) -> np.ndarray:
        dx, dy, dz = self.periodic_offsets(x0)
        return np.sqrt(dx**2 + dy**2 + dz**2)

    # Wavenumbers ---------------------------------------------------------
    @cached_property
    def _k1d(self):
        n, L = self.n, self.box_length
        kfull = sfft.fftfreq(n, d=1.0 / n) * (2 * np.pi / L)
        khalf = sfft.rfftfreq(n, d=1.0 / n) * (2 * np.pi / L)
        return kfull, khalf

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Derivative wavenumbers on the rfft layout, Nyquist planes zeroed."""
        kfull, khalf = self._k1d
        n = self.n
        kd = kfull.copy()
        kd[n // 2] = 0.0
        kdz = khalf.copy()
        kdz[-1] = 0.0
        return kd[:, None, None], kd[None, :, None], kdz[None, None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        """Full squared wavenumber |k|^2 (Nyquist kept), for the heat multiplier."""
        kfull, khalf = self._k1d
        return kfull[:, None, None] ** 2 + kfull[None, :, None] ** 2 + khalf[None, None, :] ** 2

    @cached_property
    def k2_deriv(self) -> np.ndarray:
        """Squared derivative wavenumber; ``-k2_deriv`` is div(grad)."""
        kx, ky, kz = self.wavenumbers
        return kx**2 + ky**2 + kz**2

    @cached_property
    def inv_k2_deriv(self) -> np.ndarray:
        """``1 / k2_deriv`` with zero where the wavenumber vanishes."""
        k2 = self.k2_deriv
        return np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    @cached_property
    def integer_modes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        kfull = np.rint(sfft.fftfreq(self.n, d=1.0 / self.n)).astype(int)
        khalf = np.rint(sfft.rfftfreq(self.n, d=1.0 / self.n)).astype(int)
        return kfull[:, None, None], kfull[None, :, None], khalf[None, None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask on the rfft layout."""
        mx, my, mz = self.integer_modes
        cut = self.n // 3
        return (np.abs(mx) <= cut) & (np.abs(my) <= cut) & (np.abs(mz) <= cut)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _frozen(v))

    ncomp = 1

    def mean(self) -> float:
        return float(self.values.mean())

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def max_norm(self) -> float:
        return float(np.abs(self.values).max())

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * a)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected shape {(3,) + self.grid.shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _frozen(v))

    ncomp = 3

    @classmethod
    def from_components(cls, fx: ScalarField, fy: ScalarField, fz: ScalarField) -> "VectorField":
        if not (fx.grid == fy.grid == fz.grid):
            raise ValueError("components live on different grids")
        return cls(fx.grid, np.stack([fx.values, fy.values, fz.values]))

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(ScalarField(self.grid, c) for c in self.values)

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(1, 2, 3))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude."""
        return np.sqrt(np.einsum("i...,i...->...", self.values, self.values))

    def max_norm(self) -> float:
        return float(self.magnitude().max())

    def with_values(self, values) -> "VectorField":
        return VectorField(self.grid, values)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.grid, self.values * a)

    __rmul__ = __mul__


Field = Union[ScalarField, VectorField]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real-to-complex Fourier coefficients of a scalar or vector field."""

    grid: Grid
    coefficients: np.ndarray

    @classmethod
    def forward(cls, f: Field) -> "SpectralField":
        return cls(f.grid, _rfftn(f.values))

    def inverse(self) -> Field:
        vals = _irfftn(self.coefficients, self.grid.n)
        if vals.ndim == 4:
            return VectorField(self.grid, vals)
        return ScalarField(self.grid, vals)


def _field_like(grid: Grid, values: np.ndarray) -> Field:
    return VectorField(grid, values) if values.ndim == 4 else ScalarField(grid, values)


def gradient(f: ScalarField) -> VectorField:
    """Spectral gradient of a scalar field."""
    g = f.grid
    fh = _rfftn(f.values)
    kx, ky, kz = g.wavenumbers
    out = np.stack([_irfftn(1j * k * fh, g.n) for k in (kx, ky, kz)])
    return VectorField(g, out)


def gradient_tensor(v: VectorField) -> np.ndarray:
    """Array ``d[i, j] = d v_i / d x_j`` of shape ``(3, 3, n, n, n)``."""
    g = v.grid
    vh = _rfftn(v.values)
    ks = g.wavenumbers
    out = np.empty((3, 3) + g.shape)
    for i in range(3):
        for j in range(3):
            out[i, j] = _irfftn(1j * ks[j] * vh[i], g.n)
    return out


def grad_squared(f: Field) -> np.ndarray:
    """Pointwise |grad f|^2 (Frobenius norm for vector fields)."""
    if isinstance(f, VectorField):
        d = gradient_tensor(f)
        return np.einsum("ij...,ij...->...", d, d)
    d = gradient(f).values
    return np.einsum("i...,i...->...", d, d)


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    vh = _rfftn(v.values)
    kx, ky, kz = g.wavenumbers
    return ScalarField(g, _irfftn(1j * (kx * vh[0] + ky * vh[1] + kz * vh[2]), g.n))


def laplacian(f: Field) -> Field:
    """Spectral Laplacian, consistent with ``divergence(gradient(f))``."""
    g = f.grid
    fh = _rfftn(f.values)
    return _field_like(g, _irfftn(-g.k2_deriv * fh, g.n))


def curl(v: VectorField) -> VectorField:
    g = v.grid
    vh = _rfftn(v.values)
    kx, ky, kz = g.wavenumbers
    wh = np.stack(
        [
            1j * (ky * vh[2] - kz * vh[1]),
            1j * (kz * vh[0] - kx * vh[2]),
            1j * (kx * vh[1] - ky * vh[0]),
        ]
    )
    return VectorField(g, _irfftn(wh, g.n))


def _project_hat(vh: np.ndarray, grid: Grid) -> np.ndarray:
    kx, ky, kz = grid.wavenumbers
    kdotv = kx * vh[0]
    kdotv += ky * vh[1]
    kdotv += kz * vh[2]
    kdotv *= grid.inv_k2_deriv
    out = np.empty_like(vh)
    for d, k in enumerate((kx, ky, kz)):
        np.subtract(vh[d], k * kdotv, out=out[d])
    return out


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields; the mean is kept."""
    g = v.grid
    return VectorField(g, _irfftn(_project_hat(_rfftn(v.values), g), g.n))


def _stress_source_hat(v: VectorField) -> np.ndarray:
    """Fourier coefficients of d_i d_j (v_i v_j)."""
    g = v.grid
    ks = g.wavenumbers
    src = np.zeros((g.n, g.n, g.n // 2 + 1), dtype=complex)
    vals = v.values
    for i in range(3):
        for j in range(i, 3):
            term = -ks[i] * ks[j] * _rfftn(vals[i] * vals[j])
            src += term if i == j else 2 * term
    return src


def pressure_from_velocity(v: VectorField, div_tol: float = 1e-8) -> ScalarField:
    """Zero-mean pressure solving ``-lap q = d_i d_j (v_i v_j)``.

    Raises ``ValueError`` when ``v`` is not solenoidal to ``div_tol``
    (relative to the largest velocity gradient).
    """
    g = v.grid
    div = divergence(v).max_norm()
    scale = max(v.max_norm() * 2 * np.pi / g.box_length * g.n / 2, 1.0)
    if div > div_tol * scale:
        raise ValueError(f"velocity is not divergence-free (max |div| = {div:.3e})")
    src = _stress_source_hat(v)
    qh = src * g.inv_k2_deriv
    return ScalarField(g, _irfftn(qh, g.n))


@dataclass(frozen=True, eq=False)
class BallMask:
    """Samples of a grid lying in the closed ball ``|x - x0| <= r``."""

    grid: Grid
    x0: np.ndarray
    r: float
    mask: np.ndarray

    @property
    def cell_volume(self) -> float:
        return self.grid.cell_volume

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> float:
        return self.count * self.cell_volume

    def samples(self, f) -> np.ndarray:
        """Ball samples of ``f`` (array or field); vector fields give ``(3, m)``."""
        vals = f.values if hasattr(f, "values") else np.asarray(f)
        if vals.ndim == 4:
            return vals[:, self.mask]
        return vals[self.mask]

    def integrate(self, density: np.ndarray) -> float:
        return float(density[self.mask].sum() * self.cell_volume)


def restrict_ball(f_or_grid, x0, r: float) -> BallMask:
    """Ball mask by sample-centre inclusion under the periodic metric.

    Requires ``2 r < L / 2`` so that no ball sees its own periodic image.
    """
    grid = f_or_grid if isinstance(f_or_grid, Grid) else f_or_grid.grid
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if not 2 * r < grid.box_length / 2:
        raise ValueError(f"ball of radius {r} does not fit a box of length {grid.box_length}")
    x0 = np.asarray(x0, dtype=float)
    dist = grid.distance_from(x0)
    # small relative slack keeps sample points exactly on the sphere inside
    mask = dist <= r * (1 + 1e-12)
    mask.setflags(write=False)
    return BallMask(grid, x0, float(r), mask)


def check_decay(f: Field, center=None, tol: float = 1e-8, warn: bool = True) -> bool:
    """Gate for fields standing in for decaying functions on R^3.

    True when ``|f| <= tol * max|f|`` at every sample at distance ``>= L/4``
    from ``center``.
    """
    g = f.grid
    center = g.center if center is None else center
    mag = f.magnitude()
    peak = mag.max()
    if peak == 0:
        return True
    far = g.distance_from(center) >= g.box_length / 4
    ok = bool(mag[far].max(initial=0.0) <= tol * peak)
    if not ok and warn:
        warnings.warn(
            f"field does not decay to {tol:g} of its peak at distance L/4; "
            "periodic images may contaminate R^3 quantities",
            stacklevel=2,
        )
    return ok
