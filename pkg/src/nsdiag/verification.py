"""Empirical checks of the regularity inequalities on sampled fields.

Each inequality ``lhs <= c * rhs`` with an unspecified constant becomes a
:class:`~nsdiag.report.CheckReport` of ratios ``lhs / rhs``; a check passes
when every ratio is finite and below a configured cap.  The radius iteration
``E(theta rho) <= theta^(1/2) E(rho) + c (M^2 theta^-2 + M^6 theta^-11)`` is
run exactly and compared with its closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bumps import RadialBump, TimeRamp
from .grid import VectorField, grad_squared, restrict_ball
from .heat_besov import besov_norm
from .norms import h1_ball, lp_ball, weak_lp, weak_l4_ball
from .quantities import (
    ParabolicCylinder,
    SpaceTimeRecord,
    compute_C,
    compute_D,
    map_cylinder,
    ns_rescale,
    scaled_quantities,
    scan_radii,
)
from .report import CheckReport, digest_array

__all__ = [
    "DEFAULT_CAPS",
    "record_besov_sup",
    "check_interpolation",
    "check_localized",
    "check_C_bounds",
    "SpaceTimeTestFunction",
    "local_energy_sides",
    "check_local_energy",
    "check_pressure_decay",
    "YoungSplit",
    "young_split",
    "IterationState",
    "IterationResult",
    "admissible_theta",
    "run_iteration",
    "check_main_bound",
    "check_iteration_bound",
    "check_iteration_sweep",
]

DEFAULT_CAPS = {
    "lemma21": 10.0,
    "lemma22": 50.0,
    "lemma23": 50.0,
    "embedding": 4 ** (1 / 3) * (4 * math.pi / 3) ** (1 / 12) * 1.05,
    "c-bounds": 50.0,
    "energy": 0.02,
    "pressure-decay": 50.0,
    "young": 50.0,
    "main-bound": 50.0,
    "iteration": 1e-12,
}


def record_besov_sup(rec: SpaceTimeRecord, stride: int = 1, **besov_kw) -> float:
    """``max_t besov_norm(v(., t))`` over every ``stride``-th snapshot (always incl. the last)."""
    key = ("besov_sup", stride, tuple(sorted(besov_kw.items())))
    cache = rec.metadata.setdefault("_cache", {})
    if key not in cache:
        idx = sorted(set(range(0, len(rec), stride)) | {len(rec) - 1})
        cache[key] = max(besov_norm(rec.snapshots[i].velocity, **besov_kw).norm_value for i in idx)
    return cache[key]


def _zero_mean(u):
    vals = u.values
    if vals.ndim == 4:
        return u.with_values(vals - vals.mean(axis=(1, 2, 3), keepdims=True))
    return u.with_values(vals - vals.mean())


def _magnitude(u) -> np.ndarray:
    return u.magnitude()


def check_interpolation(fields, cap: float = DEFAULT_CAPS["lemma21"], **besov_kw) -> CheckReport:
    """``||u||_{L4} <= c ||u||_B^{1/2} ||grad u||_{L2}^{1/2}`` over the whole box.

    Fields are made zero-mean first.  Each field contributes a strong case
    (``L4`` numerator) and a weak case (``L^{4,inf}`` numerator).  Both sides
    are 1-homogeneous in amplitude and invariant under ``u -> lam u(lam x)``.
    """
    rep = CheckReport("lemma21_interpolation", cap)
    for i, u in enumerate(fields):
        u = _zero_mean(u)
        dv = u.grid.cell_volume
        mag = _magnitude(u)
        l4 = float((np.sum(mag**4) * dv) ** 0.25)
        weak = weak_lp(mag, dv, 4.0)
        b = besov_norm(u, **besov_kw).norm_value
        grad = math.sqrt(float(np.sum(grad_squared(u)) * dv))
        rhs = math.sqrt(b) * math.sqrt(grad)
        d = digest_array(u)
        rep.add(f"u{i}/L4", l4, rhs, d, besov=b, grad_l2=grad)
        rep.add(f"u{i}/L4weak", weak, rhs, d, besov=b, grad_l2=grad)
    return rep


def check_localized(fields, radii, x0=None, cap: float = DEFAULT_CAPS["lemma23"],
                    band: float = 1.25, **besov_kw) -> CheckReport:
    """Ball version: weak-L4 on ``B(x0, R)`` against H1 data on ``B(x0, 2R)``.

    Ratio ``||u||_{L^{4,inf}(B_R)} / (||u||_B^{1/2} (||grad u||_{L2(B_2R)}
    + ||u||_{L2(B_2R)} / R)^{1/2})``.  Besides the cap, each field's ratios
    across the ``R`` sweep must lie within a factor ``band`` of each other.
    """
    rep = CheckReport("lemma23_localized", cap)
    for i, u in enumerate(fields):
        xc = u.grid.center if x0 is None else np.asarray(x0, float)
        b = besov_norm(_zero_mean(u), **besov_kw).norm_value
        gs = grad_squared(u)
        ratios = []
        for R in radii:
            lhs = weak_l4_ball(u, xc, R)
            _, _, h1 = h1_ball(u, xc, 2 * R, grad_sq=gs)
            case = rep.add(f"u{i}/R={R:g}", lhs, math.sqrt(b) * math.sqrt(h1),
                           digest_array(u, xc, np.array([R])))
            if not case.degenerate:
                ratios.append(case.ratio)
        if len(ratios) > 1:
            spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
            rep.conditions[f"u{i}_radius_band"] = spread <= band
            rep.info[f"u{i}_spread"] = spread
    return rep


def check_C_bounds(rec: SpaceTimeRecord, cylinders, M: float | None = None,
                   R_over_r=(2.0,), cap: float = DEFAULT_CAPS["c-bounds"], besov_stride: int = 1) -> CheckReport:
    """``C(z0, r)`` against ``M^{3/2} (A^{3/4} + E^{3/4})`` at ``2r`` and weighted at ``R``.

    Cases labelled ``double`` use radius ``2r``; ``weighted`` cases use ``R = k r``
    for each ``k`` in ``R_over_r`` with the weight ``(R/r)^{3/4}``.
    """
    M = record_besov_sup(rec, stride=besov_stride) if M is None else M
    rep = CheckReport("c_bounds", cap)
    rep.info["M"] = M
    for cyl in cylinders:
        C = compute_C(rec, cyl)
        big = scaled_quantities(rec, ParabolicCylinder(cyl.x0, cyl.t0, 2 * cyl.r), with_pressure=False)
        rhs5 = M**1.5 * (big.A**0.75 + big.E**0.75)
        tag = f"x0={tuple(round(c, 4) for c in cyl.x0)},t0={cyl.t0:g},r={cyl.r:g}"
        rep.add(f"double/{tag}", C, rhs5, A2r=big.A, E2r=big.E)
        for k in R_over_r:
            R = k * cyl.r
            qR = big if k == 2.0 else scaled_quantities(rec, ParabolicCylinder(cyl.x0, cyl.t0, R), with_pressure=False)
            rhs6 = M**1.5 * k**0.75 * (qR.A**0.75 + qR.E**0.75)
            rep.add(f"weighted/{tag}/R={R:g}", C, rhs6, R=R)
    return rep


@dataclass(frozen=True)
class SpaceTimeTestFunction:
    """``phi(x, t) = psi(|x - x0|) chi(t)``: radial bump times a rising time ramp.

    ``chi`` vanishes for ``t <= ramp.start``; beyond the evaluation time the
    factor is understood to fall back to zero smoothly, which the energy
    balance never sees.
    """

    space: RadialBump
    ramp: TimeRamp

    def spatial(self, grid):
        return self.space.evaluate(grid)


def local_energy_sides(rec: SpaceTimeRecord, phi: SpaceTimeTestFunction, t_eval: float | None = None,
                       derivatives: str = "spectral") -> tuple[float, float]:
    """Both sides of the local energy balance at ``t_eval`` (default: last snapshot).

    ``lhs = int phi |v(t)|^2 + 2 int int phi |grad v|^2`` and
    ``rhs = int int |v|^2 (phi_t + lap phi) + v . grad phi (|v|^2 + 2 q)``.
    By default the sampled bump is differentiated spectrally, which keeps the
    discrete balance consistent with the solver's own operators;
    ``derivatives="analytic"`` uses the closed-form bump derivatives, whose
    mismatch with the sampled product shows up as an O(dx^2) floor.
    """
    g = rec.grid
    times = rec.times
    t_eval = times[-1] if t_eval is None else t_eval
    k_end = int(np.argmin(np.abs(times - t_eval)))
    if abs(times[k_end] - t_eval) > 1e-9 * max(1.0, abs(t_eval)):
        raise ValueError("t_eval must be a snapshot time")
    start = phi.ramp.start
    if start < times[0] - 1e-12:
        raise ValueError("the time ramp starts before the record")
    psi, grad_psi, lap_psi = phi.spatial(g)
    if derivatives == "spectral":
        from .grid import ScalarField, gradient, laplacian
        pf = ScalarField(g, psi)
        grad_psi = gradient(pf).values
        lap_psi = laplacian(pf).values
    elif derivatives != "analytic":
        raise ValueError(f"unknown derivative mode {derivatives!r}")
    dv = g.cell_volume
    sel = [k for k in range(k_end + 1) if times[k] >= start - 1e-12]
    ts, lhs_rate, rhs_rate = [], [], []
    for k in sel:
        s = rec.snapshots[k]
        if s.pressure is None:
            raise ValueError("local energy balance needs the stored pressure")
        chi, dchi = phi.ramp(s.t)
        v = s.velocity.values
        v2 = s.speed_sq
        flux = np.einsum("i...,i...->...", v, grad_psi) * (v2 + 2 * s.pressure.values)
        ts.append(s.t)
        lhs_rate.append(2 * chi * float(np.sum(psi * s.grad_sq)) * dv)
        rhs_rate.append(float(dchi * np.sum(psi * v2) + chi * np.sum(v2 * lap_psi + flux)) * dv)
    ts = np.array(ts)
    if ts.size == 0 or ts[0] > start + 1e-12:
        # every integrand carries chi or chi', both zero at the ramp start
        ts = np.concatenate([[start], ts])
        lhs_rate = [0.0] + lhs_rate
        rhs_rate = [0.0] + rhs_rate
    lhs_rate, rhs_rate = np.array(lhs_rate), np.array(rhs_rate)
    trap = lambda y: float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(ts))) if ts.size > 1 else 0.0
    chi_end, _ = phi.ramp(times[k_end])
    lhs = float(chi_end * np.sum(psi * rec.snapshots[k_end].speed_sq) * dv) + trap(lhs_rate)
    rhs = trap(rhs_rate)
    return lhs, rhs


def check_local_energy(rec: SpaceTimeRecord, cyl: ParabolicCylinder, phi: SpaceTimeTestFunction | None = None,
                       tol: float = DEFAULT_CAPS["energy"], derivatives: str = "spectral") -> CheckReport:
    """Relative residual ``(lhs - rhs) / max(|lhs|, |rhs|)`` of the local energy balance.

    For smooth solutions the balance is an identity, so the check passes when
    the residual magnitude is at most ``tol``.  ``phi`` defaults to a bump of
    radius ``cyl.r`` (plateau ``r/4``) with a ramp over the first half of the
    record's part of the window.
    """
    a, b = cyl.window
    start = max(a, rec.times[0])
    if phi is None:
        phi = SpaceTimeTestFunction(RadialBump(cyl.x0, cyl.r, cyl.r / 4), TimeRamp(start, 0.5 * (b - start)))
    if phi.space.outer > cyl.r * (1 + 1e-12):
        raise ValueError("test function is not supported in the cylinder's ball")
    if phi.ramp.start < a - 1e-12:
        raise ValueError("test function does not vanish at the cylinder's initial time")
    restrict_ball(rec.grid, cyl.x0, cyl.r)
    lhs, rhs = local_energy_sides(rec, phi, b, derivatives)
    rep = CheckReport("local_energy", tol)
    scale = max(abs(lhs), abs(rhs))
    label = f"x0={cyl.x0},t0={cyl.t0:g},R={cyl.r:g}"
    if scale == 0:
        rep.add(label, 0.0, 0.0)
    else:
        # ratio holds |lhs - rhs| / max(|lhs|, |rhs|)
        rep.add(label, abs(lhs - rhs), scale, lhs_value=lhs, rhs_value=rhs, residual=(lhs - rhs) / scale)
    return rep


def check_pressure_decay(rec: SpaceTimeRecord, x0, t0: float, pairs,
                         cap: float = DEFAULT_CAPS["pressure-decay"]) -> CheckReport:
    """``D(r) / ((r/R) D(R) + (R/r)^2 C(R))`` for each ``(r, R)`` with ``r < R``."""
    rep = CheckReport("pressure_decay", cap)
    for r, R in pairs:
        if not r < R:
            raise ValueError(f"need r < R, got {(r, R)}")
        small = ParabolicCylinder(x0, t0, r)
        big = ParabolicCylinder(x0, t0, R)
        Dr = compute_D(rec, small)
        DR = compute_D(rec, big)
        CR = compute_C(rec, big)
        rep.add(f"x0={tuple(round(c, 4) for c in x0)},t0={t0:g},r={r:g},R={R:g}",
                Dr, (r / R) * DR + (R / r) ** 2 * CR, D_R=DR, C_R=CR)
    return rep


@dataclass
class YoungSplit:
    delta: float
    rhs: dict
    lhs: dict
    ratios: dict

    @property
    def dominated(self) -> dict:
        return {k: r is not None and r <= 1.0 for k, r in self.ratios.items()}


def young_split(C2r: float, A_rho: float, E_rho: float, rho_over_r: float, M: float, delta: float,
                C_half_rho: float | None = None) -> YoungSplit:
    """Right sides of the three Young splittings with unit constant.

    ``C(2r)             <= delta (A + E) + delta^-3 M^6 (rho/r)^3``
    ``C(2r)^(2/3)       <= delta (A + E) + delta^-1 M^2 (rho/r)``
    ``(rho/r)^2 C(rho/2) <= delta (A + E) + delta^-3 M^6 (rho/r)^8``

    ``A``, ``E`` are taken at radius ``rho``.  Ratios ``lhs / rhs`` are the
    empirical constants; ``None`` marks a 0/0 case.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    for name, val in (("C2r", C2r), ("A_rho", A_rho), ("E_rho", E_rho), ("rho_over_r", rho_over_r), ("M", M)):
        if val < 0:
            raise ValueError(f"{name} must be nonnegative")
    base = delta * (A_rho + E_rho)
    q = rho_over_r
    rhs = {
        "C": base + delta**-3 * M**6 * q**3,
        "C23": base + delta**-1 * M**2 * q,
        "C_half": base + delta**-3 * M**6 * q**8,
    }
    lhs = {"C": C2r, "C23": C2r ** (2 / 3)}
    if C_half_rho is not None:
        lhs["C_half"] = q**2 * C_half_rho
    ratios = {}
    for k, v in lhs.items():
        ratios[k] = None if rhs[k] <= 0 else v / rhs[k]
    return YoungSplit(delta, rhs, lhs, ratios)


@dataclass
class IterationState:
    theta: float
    c_iter: float
    E0: float
    M2: float
    M6: float
    trajectory: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if min(self.c_iter, self.E0, self.M2, self.M6) < 0:
            raise ValueError("iteration inputs must be nonnegative")

    @property
    def admissible(self) -> bool:
        return 2 * self.c_iter * math.sqrt(self.theta) <= 1 * (1 + 1e-12)

    @property
    def source(self) -> float:
        return self.c_iter * (self.M2 * self.theta**-2 + self.M6 * self.theta**-11)


def admissible_theta(c_iter: float) -> float:
    """Largest ``theta <= 1/4`` with ``2 c theta^(1/2) <= 1``."""
    if not c_iter > 0:
        raise ValueError("c_iter must be positive")
    return min(0.25, 1.0 / (4 * c_iter**2))


@dataclass
class IterationResult:
    state: IterationState
    recursion: np.ndarray
    closed_form: np.ndarray
    max_rel_diff: float
    radii: np.ndarray
    c_prime: float
    bound_terms: np.ndarray

    @property
    def matches(self) -> bool:
        return self.max_rel_diff <= 1e-12


def run_iteration(state: IterationState, K: int) -> IterationResult:
    """Iterate ``E_{k+1} = theta^(1/2) E_k + c (M2 theta^-2 + M6 theta^-11)``.

    Compares the recursion with its geometric-series closed form and reports
    ``c' = max_k E_k / (theta^(k/2) E_0 + M2 + M6)``, the constant in the
    small-radius bound at radii ``theta^k``.
    """
    if not state.admissible:
        raise ValueError(f"inadmissible: 2 c theta^(1/2) = {2 * state.c_iter * math.sqrt(state.theta):.6g} > 1")
    s = math.sqrt(state.theta)
    S = state.source
    rec = np.empty(K + 1)
    rec[0] = state.E0
    for k in range(K):
        rec[k + 1] = s * rec[k] + S
    k = np.arange(K + 1)
    geo = s**k
    closed = geo * state.E0 + S * (1 - geo) / (1 - s)
    scale = np.maximum(np.abs(closed), np.finfo(float).tiny)
    diff = np.abs(rec - closed)
    max_rel = float(np.max(np.where(closed != 0, diff / scale, diff)))
    bound = geo * state.E0 + state.M2 + state.M6
    with np.errstate(divide="ignore", invalid="ignore"):
        cp = np.where(bound > 0, rec / np.where(bound > 0, bound, 1.0), 0.0)
    state.trajectory = rec.tolist()
    return IterationResult(state, rec, closed, max_rel, state.theta**k, float(cp.max()), bound)


def check_iteration_sweep(n_points: int = 100, K: int = 40, seed: int = 0,
                          cap: float = DEFAULT_CAPS["iteration"]) -> CheckReport:
    """Recursion against closed form over random admissible ``(c, theta, E0, M)``.

    Each case's ratio is the max relative deviation of the recursion from the
    closed form.  A zero-source run must decay exactly like ``theta^(k/2) E0``.
    """
    rng = np.random.default_rng(seed)
    rep = CheckReport("iteration_closed_form", cap)
    for i in range(n_points):
        c = float(rng.uniform(0.5, 20.0))
        theta = admissible_theta(c) * float(rng.uniform(0.2, 1.0))
        E0, M = float(rng.uniform(0.0, 10.0)), float(rng.uniform(0.0, 2.0))
        res = run_iteration(IterationState(theta, c, E0, M**2, M**6), K)
        rep.add(f"p{i}", res.max_rel_diff, 1.0, c_iter=c, theta=theta, E0=E0, M=M, c_prime=res.c_prime)
    res = run_iteration(IterationState(0.1, 1.0, 3.0, 0.0, 0.0), K)
    geo = 3.0 * 0.1 ** (np.arange(K + 1) / 2)
    rep.conditions["zero_source_geometric"] = bool(np.allclose(res.recursion, geo, rtol=1e-13, atol=0))
    return rep


def _main_ratio(rec, x0, t0, r0, M, radii_per_octave):
    lo = r0 / 8
    m = int(round(3 * radii_per_octave))
    radii = lo * 2 ** (np.arange(m + 1) / radii_per_octave)
    radii = radii[radii < r0 * (1 - 1e-12)]
    scan = scan_radii(rec, x0, t0, radii, with_pressure=False)
    if not scan.rows:
        raise ValueError(f"no valid radius below r0={r0}: {scan.errors}")
    lhs = scan.sup_G
    rhs = math.sqrt(r0) + M**2 + M**6
    return lhs, rhs, scan


def check_main_bound(rec: SpaceTimeRecord, x0, t0: float, r0: float, lam: float = 2.0,
                     cap: float = DEFAULT_CAPS["main-bound"], stability: float = 2.0,
                     radii_per_octave: int = 2, besov_stride: int = 1) -> CheckReport:
    """Empirical constant of ``sup_{r<r0} G <= c (r0^{1/2} + M^2 + M^6)``.

    The constant is measured at ``r0``, at ``r0/2`` and on the record rescaled
    by ``lam`` (mapped point, ``r0/lam``); the check requires each pair to
    agree within a factor ``stability``.  The unit cylinder at ``z0`` must fit,
    and its ``C``, ``D`` (on which the constant may depend) are reported.
    """
    if r0 > 0.5 * min(1.0, t0) * (1 + 1e-12):
        raise ValueError(f"need r0 <= min(1, t0)/2, got r0={r0}, t0={t0}")
    unit = ParabolicCylinder(x0, t0, 1.0)
    try:
        uq = scaled_quantities(rec, unit, with_pressure=rec.has_pressure)
    except ValueError as exc:
        raise ValueError(f"unit cylinder does not fit: {exc}") from exc
    M = record_besov_sup(rec, stride=besov_stride)
    rep = CheckReport("main_bound", cap)
    rep.info.update({"M": M, "C_unit": uq.C, "D_unit": uq.D, "E_unit": uq.energy})
    lhs, rhs, scan = _main_ratio(rec, x0, t0, r0, M, radii_per_octave)
    base = rep.add(f"r0={r0:g}", lhs, rhs)
    lhs2, rhs2, _ = _main_ratio(rec, x0, t0, r0 / 2, M, radii_per_octave)
    half = rep.add(f"r0={r0 / 2:g}", lhs2, rhs2)
    rep.info["scan"] = [q.as_row() for q in scan.rows]
    if lam is not None:
        rrec = ns_rescale(rec, lam, same_box=False)
        mapped = map_cylinder(ParabolicCylinder(x0, t0, r0), lam)
        Ml = record_besov_sup(rrec, stride=besov_stride)
        lhs3, rhs3, _ = _main_ratio(rrec, mapped.x0, mapped.t0, mapped.r, Ml, radii_per_octave)
        resc = rep.add(f"rescaled lam={lam:g}", lhs3, rhs3, M=Ml)
        rep.info["M_rescaled"] = Ml
    pairs = {"r0_halving": (base, half)}
    if lam is not None:
        pairs["rescaling"] = (base, resc)
    for name, (p, q) in pairs.items():
        if p.degenerate or q.degenerate or p.ratio == 0 or q.ratio == 0:
            continue
        f = max(p.ratio, q.ratio) / min(p.ratio, q.ratio)
        rep.info[f"{name}_factor"] = f
        rep.conditions[f"stable_{name}"] = f <= stability
    return rep


def _iteration_c_prime(res: IterationResult, r0: float) -> float:
    sel = res.radii <= r0 * (1 + 1e-12)
    if not sel.any():
        raise ValueError(f"no iteration radius below r0={r0}")
    bound = res.bound_terms[sel]
    vals = np.where(bound > 0, res.recursion[sel] / np.where(bound > 0, bound, 1.0), 0.0)
    return float(vals.max())


def check_iteration_bound(rec: SpaceTimeRecord, x0, t0: float, r0: float, c_iter: float = 2.0,
                          K: int = 12, stability: float = 2.0,
                          radii_per_octave: int = 2, besov_stride: int = 1) -> CheckReport:
    """Small-radius bound ``E(r) <= c' (r^{1/2} E(1) + M^2 + M^6)`` on measured data.

    ``E(1)`` (``A + E + D`` on the unit cylinder) and ``M`` seed the radius
    iteration at the admissible ``theta`` for ``c_iter``.  ``c'`` is read off the
    iterates at radii ``theta^k <= r0`` and again for ``r0 / 2``; the two must
    agree within ``stability``.  Each measured ``E(r)`` for ``r < r0`` is a case
    whose ratio must stay below ``theta^-2 c'`` (the factor covers radii falling
    between consecutive iterates).
    """
    if r0 > 0.5 * (1 + 1e-12):
        raise ValueError(f"need r0 <= 1/2, got {r0}")
    unit = ParabolicCylinder(x0, t0, 1.0)
    try:
        E1 = scaled_quantities(rec, unit, with_pressure=True).energy
    except ValueError as exc:
        raise ValueError(f"unit cylinder does not fit: {exc}") from exc
    M = record_besov_sup(rec, stride=besov_stride)
    theta = admissible_theta(c_iter)
    res = run_iteration(IterationState(theta, c_iter, E1, M**2, M**6), K)
    cp = _iteration_c_prime(res, r0)
    cp_half = _iteration_c_prime(res, r0 / 2)
    rep = CheckReport("iteration_bound", theta**-2 * cp)
    m = int(round(3 * radii_per_octave))
    radii = (r0 / 8) * 2 ** (np.arange(m + 1) / radii_per_octave)
    scan = scan_radii(rec, x0, t0, radii[radii < r0 * (1 - 1e-12)], with_pressure=True)
    for q in scan.rows:
        rep.add(f"r={q.r:g}", q.energy, math.sqrt(q.r) * E1 + M**2 + M**6)
    factor = max(cp, cp_half) / min(cp, cp_half) if min(cp, cp_half) > 0 else math.inf
    rep.info.update({
        "E_unit": E1, "M": M, "theta": theta, "c_iter": c_iter, "c_prime": cp,
        "c_prime_half": cp_half, "halving_factor": factor, "closed_form_rel_diff": res.max_rel_diff,
        "scan_errors": {repr(k): v for k, v in scan.errors.items()},
    })
    rep.conditions["closed_form_matches"] = res.matches
    rep.conditions["stable_r0_halving"] = factor <= stability
    rep.conditions["measured_radii"] = bool(scan.rows)
    return rep
