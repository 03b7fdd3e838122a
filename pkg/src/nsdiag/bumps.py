"""Smooth compactly supported cutoffs with closed-form derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField

__all__ = ["smoothstep", "RadialBump", "TimeRamp", "radial_bump"]


def _h(x):
    """``exp(-1/x)`` for ``x > 0`` and its first two derivatives; 0 otherwise."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    h = np.where(pos, np.exp(-1.0 / xs), 0.0)
    h1 = np.where(pos, h / xs**2, 0.0)
    h2 = np.where(pos, h * (1.0 / xs**4 - 2.0 / xs**3), 0.0)
    return h, h1, h2


def smoothstep(x):
    """C-infinity step rising from 0 at ``x <= 0`` to 1 at ``x >= 1``.

    Returns ``(S, S', S'')``.
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    p, p1, p2 = _h(x)
    q, q1, q2 = _h(1.0 - x)
    q1 = -q1
    s = p + q
    num = p1 * q - p * q1
    S = p / s
    S1 = num / s**2
    S2 = (p2 * q - p * q2) / s**2 - 2 * num * (p1 + q1) / s**3
    return S, S1, S2


@dataclass(frozen=True)
class RadialBump:
    """Radial cutoff equal to 1 for ``|x - x0| <= inner`` and 0 beyond ``outer``."""

    x0: tuple
    outer: float
    inner: float = 0.0

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError("need 0 <= inner < outer")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    def profile(self, r):
        """``(psi, dpsi/dr, d2psi/dr2)`` at radii ``r``."""
        w = self.outer - self.inner
        S, S1, S2 = smoothstep((self.outer - np.asarray(r, dtype=float)) / w)
        return S, -S1 / w, S2 / w**2

    def evaluate(self, grid: Grid):
        """Samples of ``psi``, ``grad psi`` and ``lap psi`` on ``grid``."""
        dx = grid.periodic_offsets(self.x0)
        r = np.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
        psi, d1, d2 = self.profile(r)
        safe = np.where(r > 0, r, 1.0)
        over_r = np.where(r > 0, d1 / safe, 0.0)
        grad = np.stack([over_r * d for d in dx])
        # at r = 0 the profile is flat (plateau or smoothstep endpoint), so d1/r -> d2
        lap = d2 + 2 * np.where(r > 0, over_r, d2)
        return psi, grad, lap

    def field(self, grid: Grid) -> ScalarField:
        return ScalarField(grid, self.evaluate(grid)[0])

    @property
    def support_volume(self) -> float:
        return 4 * np.pi / 3 * self.outer**3


def radial_bump(grid: Grid, x0=None, outer: float = 1.0, inner: float = 0.0) -> ScalarField:
    x0 = grid.center if x0 is None else x0
    return RadialBump(tuple(x0), outer, inner).field(grid)


@dataclass(frozen=True)
class TimeRamp:
    """Smooth ramp from 0 (``t <= start``) to 1 (``t >= start + width``)."""

    start: float
    width: float

    def __call__(self, t):
        S, S1, _ = smoothstep((np.asarray(t, dtype=float) - self.start) / self.width)
        return S, S1 / self.width
