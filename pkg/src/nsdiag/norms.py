"""Lebesgue, weak-Lebesgue and Sobolev norms restricted to balls."""

from __future__ import annotations

import math

import numpy as np

from .grid import grad_squared, restrict_ball
from .report import Case, digest_array

__all__ = [
    "lp_ball",
    "weak_lp",
    "weak_l4_ball",
    "h1_ball",
    "local_norm",
    "EMBEDDING_L3_WEAK_L4",
    "embedding_l3_from_weak_l4",
]

# ||u||_{L3(B)} <= (q/(q-p))^{1/p} |B|^{1/p - 1/q} ||u||_{L^{q,inf}(B)} at p = 3, q = 4
EMBEDDING_L3_WEAK_L4 = 4 ** (1 / 3) * (4 * math.pi / 3) ** (1 / 12)


def _ball_magnitudes(u, x0, r):
    ball = restrict_ball(u, x0, r)
    vals = ball.samples(u)
    mag = np.sqrt((vals**2).sum(axis=0)) if vals.ndim == 2 else np.abs(vals)
    return ball, mag


def lp_ball(u, x0, r: float, p: float) -> float:
    """``(sum_{ball} |u|^p dx^3)^(1/p)``; vector fields use the Euclidean magnitude."""
    if p not in (2, 3, 4):
        raise ValueError(f"p must be 2, 3 or 4, got {p}")
    ball, mag = _ball_magnitudes(u, x0, r)
    if ball.count == 0:
        raise ValueError("empty ball")
    return float((np.sum(mag**p) * ball.cell_volume) ** (1 / p))


def weak_lp(magnitudes: np.ndarray, cell_volume: float, p: float = 4.0) -> float:
    """Exact weak-L^p quasi-norm of a step function with equal cells.

    ``sup_lambda lambda * |{|u| > lambda}|^(1/p)``; the supremum is reached
    as ``lambda`` rises to a sample value, where the level set holds every
    sample at least that large.
    """
    a = np.sort(np.asarray(magnitudes, dtype=float).ravel())[::-1]
    if a.size == 0 or a[0] == 0:
        return 0.0
    counts = np.arange(1, a.size + 1)
    return float(np.max(a * (counts * cell_volume) ** (1 / p)))


def weak_l4_ball(u, x0, r: float) -> float:
    ball, mag = _ball_magnitudes(u, x0, r)
    return weak_lp(mag, ball.cell_volume, 4.0)


def h1_ball(u, x0, r: float, grad_sq: np.ndarray | None = None) -> tuple[float, float, float]:
    """``(||grad u||_{L2(B)}, ||u||_{L2(B)}, ||grad u|| + ||u|| / r)``.

    The gradient is the global spectral one restricted to the ball; pass a
    precomputed ``grad_sq`` (pointwise ``|grad u|^2``) to reuse it.
    """
    ball = restrict_ball(u, x0, r)
    vals = u.values
    dens = (vals**2).sum(axis=0) if vals.ndim == 4 else vals**2
    gs = grad_squared(u) if grad_sq is None else grad_sq
    g = math.sqrt(ball.integrate(gs))
    l2 = math.sqrt(ball.integrate(dens))
    return g, l2, g + l2 / r


def local_norm(u, x0, r: float, kind: str) -> float:
    kinds = {
        "L2": lambda: lp_ball(u, x0, r, 2),
        "L3": lambda: lp_ball(u, x0, r, 3),
        "L4": lambda: lp_ball(u, x0, r, 4),
        "L4weak": lambda: weak_l4_ball(u, x0, r),
        "gradL2": lambda: h1_ball(u, x0, r)[0],
        "H1": lambda: h1_ball(u, x0, r)[2],
    }
    if kind not in kinds:
        raise ValueError(f"unknown norm kind {kind!r}")
    return kinds[kind]()


def embedding_l3_from_weak_l4(u, x0, r: float, label: str = "") -> Case:
    """Case ``||u||_{L3(B)} / (r^{1/4} ||u||_{L^{4,inf}(B)})``.

    The sharp bound for this ratio is ``EMBEDDING_L3_WEAK_L4``; a zero field
    gives a degenerate case.
    """
    lhs = lp_ball(u, x0, r, 3)
    rhs = r**0.25 * weak_l4_ball(u, x0, r)
    return Case(label or "embedding", lhs, rhs, digest_array(u, np.asarray(x0, float), np.array([r])))
