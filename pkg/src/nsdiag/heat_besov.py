"""Heat semigroup and the negative-order Besov norm it characterises.

``besov_norm(f) = sup_t sqrt(t) * ||S(t) f||_inf`` with ``S(t)`` the heat
semigroup, evaluated on a geometric time grid.  The cutoff-commutator
routines measure how multiplication by a bump interacts with ``S(t)``:
``u = phi * S(t) f - S(t)(phi f)`` solves a forced heat equation with zero
data, and is reconstructed from its Duhamel integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .grid import Grid, ScalarField, VectorField, _irfftn, _rfftn
from .report import CheckReport, digest_array, to_json

__all__ = [
    "heat_evolve",
    "default_t_grid",
    "BesovEstimate",
    "besov_norm",
    "CommutatorRecord",
    "cutoff_commutator",
    "duhamel_nodes",
    "appendix_constant_C0",
    "verify_cutoff_lemma",
    "forced_heat_reference",
]


def heat_evolve(f, t: float):
    """``S(t) f`` through the multiplier ``exp(-t |k|^2)``, componentwise."""
    if t < 0:
        raise ValueError(f"heat evolution needs t >= 0, got {t}")
    if t == 0:
        return f
    g = f.grid
    fh = _rfftn(f.values)
    return f.with_values(_irfftn(fh * np.exp(-t * g.k2), g.n))


def default_t_grid(grid: Grid, points_per_decade: int = 8, t_min=None, t_max=None) -> np.ndarray:
    t_min = grid.dx**2 / 4 if t_min is None else t_min
    t_max = (grid.box_length / 4) ** 2 if t_max is None else t_max
    if not 0 < t_min < t_max:
        raise ValueError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
    num = int(math.ceil(points_per_decade * math.log10(t_max / t_min))) + 1
    return np.geomspace(t_min, t_max, max(num, 2))


@dataclass
class BesovEstimate:
    norm_value: float
    argmax_t: float
    t_grid: np.ndarray
    profile: np.ndarray
    mean_removed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "norm_value": self.norm_value,
            "argmax_t": self.argmax_t,
            "t_grid": self.t_grid,
            "profile": self.profile,
            "mean_removed": self.mean_removed,
        }

    def to_json(self, **meta) -> str:
        return to_json({**self.to_dict(), **meta})


def _sup_norm(vals: np.ndarray) -> float:
    if vals.ndim == 4:
        return float(np.sqrt(np.einsum("i...,i...->...", vals, vals)).max())
    return float(np.abs(vals).max())


def besov_norm(
    f,
    t_min: float | None = None,
    t_max: float | None = None,
    points_per_decade: int = 8,
    remove_mean: bool = True,
    strict_mean: bool = False,
    refine: bool = True,
) -> BesovEstimate:
    """Heat-flow estimate of the homogeneous ``B^{-1}_{inf,inf}`` norm.

    The zero Fourier mode is dropped unless ``remove_mean=False``; with
    ``strict_mean=True`` a field whose mean exceeds ``1e-12 * max|f|`` is
    rejected instead.  The scan runs from ``dx^2/4`` to ``(L/4)^2`` by default.
    When ``refine`` is set the coarse maximiser is polished by a bounded
    one-dimensional search in ``log t`` and the polished point joins the grid.
    """
    g = f.grid
    fh = _rfftn(f.values)
    n3 = g.n**3
    mean = fh[..., 0, 0, 0].real / n3
    mean_mag = float(np.linalg.norm(np.atleast_1d(mean)))
    if strict_mean and mean_mag > 1e-12 * max(f.max_norm(), 1e-300):
        raise ValueError(f"field has nonzero mean {mean_mag:.3e}; remove it or allow it explicitly")
    if remove_mean:
        fh = fh.copy()
        fh[..., 0, 0, 0] = 0.0
    else:
        mean_mag = 0.0

    ts = default_t_grid(g, points_per_decade, t_min, t_max)
    k2 = g.k2

    def profile_at(t):
        return math.sqrt(t) * _sup_norm(_irfftn(fh * np.exp(-t * k2), g.n))

    prof = np.array([profile_at(t) for t in ts])
    j = int(np.argmax(prof))
    if refine and prof[j] > 0:
        lo = math.log(ts[max(j - 1, 0)])
        hi = math.log(ts[min(j + 1, len(ts) - 1)])
        res = optimize.minimize_scalar(
            lambda s: -profile_at(math.exp(s)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-4},
        )
        t_star = math.exp(res.x)
        if -res.fun > prof[j] and not np.any(np.isclose(ts, t_star, rtol=1e-12, atol=0)):
            ts = np.append(ts, t_star)
            prof = np.append(prof, -res.fun)
            order = np.argsort(ts)
            ts, prof = ts[order], prof[order]
    j = int(np.argmax(prof))
    return BesovEstimate(float(prof[j]), float(ts[j]), ts, prof, mean_removed=mean_mag)


def appendix_constant_C0(truncation: float = 12.0) -> float:
    """Radial quadrature of ``int_{R^3} exp(-|u|^2) |u| du``."""
    val, _ = integrate.quad(lambda r: 4 * np.pi * r**3 * np.exp(-r * r), 0.0, truncation,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def duhamel_nodes(t: float, panels: int = 16, order: int = 8, growth: float = 2.0):
    """Quadrature in ``s = t - tau`` over ``[0, t]``, refined towards ``s = 0``.

    Composite Gauss-Legendre on panels whose widths grow by ``growth`` from
    one panel to the next, so the finest panel is about ``t / growth^panels``
    wide and stiff modes ``exp(-|k|^2 s)`` are still integrated accurately.
    """
    w = growth ** np.arange(panels, dtype=float)
    edges = np.concatenate([[0.0], np.cumsum(w)]) * (t / w.sum())
    x, wt = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * x + 0.5 * (a + b)).ravel(), (0.5 * (b - a) * wt).ravel()


@dataclass
class CommutatorRecord:
    t_grid: np.ndarray
    w: list
    w_phi: list
    u: list
    duhamel_I: list
    duhamel_J: list
    support_volume: float
    pde_residual: np.ndarray
    sup_commutator: float = 0.0
    profile: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def reconstruction_error(self) -> np.ndarray:
        """``||u - (I + J)||_inf`` per time."""
        return np.array([np.abs(u.values - i.values - j.values).max()
                         for u, i, j in zip(self.u, self.duhamel_I, self.duhamel_J)])


def _support_ok(phi: ScalarField) -> bool:
    g = phi.grid
    nz = np.abs(phi.values) > 1e-14 * max(phi.max_norm(), 1e-300)
    if not nz.any():
        return True
    # centre of the support on the torus via circular means
    c = []
    for d, axis in enumerate(g.coords()):
        ang = 2 * np.pi * np.broadcast_to(axis, g.shape)[nz] / g.box_length
        c.append((math.atan2(np.sin(ang).mean(), np.cos(ang).mean()) % (2 * np.pi)) * g.box_length / (2 * np.pi))
    return bool(g.distance_from(c)[nz].max() <= g.box_length / 4)


def cutoff_commutator(f: ScalarField, phi: ScalarField, t_grid, panels: int = 16, order: int = 8) -> CommutatorRecord:
    """``w = S(t) f``, ``w_phi = S(t)(phi f)``, ``u = phi w - w_phi`` and its Duhamel parts.

    ``u`` solves ``u_t - lap u = -2 div(grad(phi) w) + w lap(phi)`` with
    ``u(0) = 0``; ``I`` integrates the divergence forcing and ``J`` the
    ``w lap(phi)`` forcing against the heat semigroup.
    """
    g = f.grid
    if phi.grid != g:
        raise ValueError("f and phi must share a grid")
    if not _support_ok(phi):
        raise ValueError("support of phi reaches within L/4 of its periodic images")
    ks = g.wavenumbers
    k2 = g.k2
    fh = _rfftn(f.values)
    phih = _rfftn(phi.values)
    grad_phi = np.stack([_irfftn(1j * k * phih, g.n) for k in ks])
    lap_phi = _irfftn(-g.k2_deriv * phih, g.n)
    pfh = _rfftn(phi.values * f.values)

    ts = np.asarray(t_grid, dtype=float)
    ws, wps, us, Is, Js, resid = [], [], [], [], [], []
    for t in ts:
        w = _irfftn(fh * np.exp(-t * k2), g.n)
        wp = _irfftn(pfh * np.exp(-t * k2), g.n)
        u = phi.values * w - wp
        Ih = np.zeros_like(fh)
        Jh = np.zeros_like(fh)
        if t > 0:
            s_nodes, s_w = duhamel_nodes(t, panels, order)
            for s, ws_ in zip(s_nodes, s_w):
                w_tau = _irfftn(fh * np.exp(-(t - s) * k2), g.n)
                decay = ws_ * np.exp(-s * k2)
                flux = [_rfftn(grad_phi[d] * w_tau) for d in range(3)]
                Ih += decay * (-2j) * (ks[0] * flux[0] + ks[1] * flux[1] + ks[2] * flux[2])
                Jh += decay * _rfftn(lap_phi * w_tau)
        # residual of the forced heat equation at time t, all terms exact spectrally
        wh_t = fh * np.exp(-t * k2)
        lap_w = _irfftn(-k2 * wh_t, g.n)
        ut = phi.values * lap_w - _irfftn(-k2 * pfh * np.exp(-t * k2), g.n)
        lap_u = _irfftn(-k2 * _rfftn(u), g.n)
        div_flux = _irfftn(1j * sum(ks[d] * _rfftn(grad_phi[d] * w) for d in range(3)), g.n)
        forcing = -2 * div_flux + w * lap_phi
        resid.append(float(np.abs(ut - lap_u - forcing).max()))
        ws.append(ScalarField(g, w))
        wps.append(ScalarField(g, wp))
        us.append(ScalarField(g, u))
        Is.append(ScalarField(g, _irfftn(Ih, g.n)))
        Js.append(ScalarField(g, _irfftn(Jh, g.n)))

    vol = float((np.abs(phi.values) > 0).sum() * g.cell_volume)
    prof = np.array([math.sqrt(t) * np.abs(u.values).max() for t, u in zip(ts, us)])
    return CommutatorRecord(ts, ws, wps, us, Is, Js, vol, np.array(resid),
                            sup_commutator=float(prof.max(initial=0.0)), profile=prof)


def forced_heat_reference(f: ScalarField, phi: ScalarField, t_grid, rtol: float = 1e-11) -> list:
    """Time-step the commutator's forced heat equation from zero data.

    Integrates ``u_t = lap u - 2 div(grad(phi) w) + w lap(phi)`` mode by mode
    with an adaptive Runge-Kutta method, using the same discrete operators as
    :func:`cutoff_commutator`, so the result should equal ``I + J`` up to
    quadrature error.
    """
    g = f.grid
    ks = g.wavenumbers
    fh = _rfftn(f.values)
    phih = _rfftn(phi.values)
    grad_phi = np.stack([_irfftn(1j * k * phih, g.n) for k in ks])
    lap_phi = _irfftn(-g.k2_deriv * phih, g.n)
    shape = fh.shape

    def forcing_hat(tau):
        w = _irfftn(fh * np.exp(-tau * g.k2), g.n)
        flux = [_rfftn(grad_phi[d] * w) for d in range(3)]
        return -2j * (ks[0] * flux[0] + ks[1] * flux[1] + ks[2] * flux[2]) + _rfftn(lap_phi * w)

    def rhs(tau, y):
        uh = y.view(np.complex128).reshape(shape)
        return (-g.k2 * uh + forcing_hat(tau)).ravel().view(np.float64)

    ts = np.asarray(t_grid, dtype=float)
    y0 = np.zeros(2 * fh.size)
    scale = float(np.abs(forcing_hat(0.0)).max())
    sol = integrate.solve_ivp(rhs, (0.0, float(ts.max())), y0, method="DOP853", t_eval=ts,
                              rtol=rtol, atol=rtol * scale * 1e-3)
    if not sol.success:
        raise RuntimeError(f"forced heat integration failed: {sol.message}")
    out = []
    for k in range(ts.size):
        uh = np.ascontiguousarray(sol.y[:, k]).view(np.complex128).reshape(shape)
        out.append(ScalarField(g, _irfftn(uh, g.n)))
    return out


def verify_cutoff_lemma(fields, phis, cap: float = 50.0, **besov_kw) -> CheckReport:
    """Ratio ``besov(f phi) / besov(f)`` over every pair of the two families."""
    fields, phis = list(fields), list(phis)
    if not fields or not phis:
        raise ValueError("both families must be nonempty")
    rep = CheckReport("lemma22_cutoff", cap)
    phi_vols = [float((np.abs(p.values) > 0).sum() * p.grid.cell_volume) for p in phis]
    for i, f in enumerate(fields):
        bf = besov_norm(f, **besov_kw).norm_value
        for j, phi in enumerate(phis):
            prod = f.with_values(f.values * phi.values)
            bp = besov_norm(prod, **besov_kw).norm_value
            rhs = bf if bf >= 1e-14 else 0.0
            rep.add(f"f{i}-phi{j}", bp, rhs, digest_array(f, phi), support_volume=phi_vols[j])
    rep.info["support_volumes"] = phi_vols
    return rep
