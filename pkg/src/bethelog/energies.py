"""Ground-state level shift by the mode-sum and self-interaction routes.

All energies are hartree. ``K2 = 2 / (3 pi c^3)`` is the common
prefactor; for a line with f = 1 it reduces to 1/(pi c^3) per unit
omega.

Nested double integrals (U_S and the direct U + U_S) are linear in
alpha_I, so they are accumulated line by line. The inner y-pass uses a
fixed composite Gauss rule built around the line, with the pole removed
by subtraction; the outer omega-pass is adaptive.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .constants import C_LIGHT, HARTREE_MHZ
from .errors import ConsistencyError, CutoffError, InvariantError, PreconditionError
from .polarizability import DampingModel, Sign, alpha_real
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    _as_omega,
    composite_gauss,
    cutoff_moment,
    integrate,
)
from .spectrum import Spectrum

K2 = 2.0 / (3.0 * math.pi * C_LIGHT**3)
NESTED_PREFACTOR = 2.0 / (math.pi**2 * C_LIGHT**3)
NESTED_CONFIG = QuadratureConfig(rel_tol=1e-9, abs_tol=1e-30)
_INNER_ORDER = 24
_INNER_CHECK_ORDER = 16


class Route(str, Enum):
    FEYNMAN = "Feynman"
    SELF_INTERACTION = "SelfInteraction"


@dataclass(frozen=True)
class EnergyBreakdown:
    u: float
    u_free: float
    u_self: float
    u_total: float
    delta_e: float
    route: Route
    omega_cutoff: float
    units: str = "hartree"

    def __post_init__(self):
        object.__setattr__(self, "route", Route(self.route))
        if not math.isfinite(self.delta_e):
            raise InvariantError("delta_e must be finite")

    @property
    def delta_e_mhz(self) -> float:
        return to_mhz(self.delta_e)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["route"] = self.route.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def to_mhz(hartree: float) -> float:
    return hartree * HARTREE_MHZ


def _cutoff(spectrum: Spectrum, Omega) -> float:
    Omega = _as_omega(Omega)
    if len(spectrum) and not Omega > spectrum.max_omega:
        raise CutoffError(f"cutoff Omega={Omega} must exceed every transition frequency (max {spectrum.max_omega})")
    return Omega


def _fsum(xs) -> float:
    return float(math.fsum(list(xs)))


# Feynman route


def u_feynman(spectrum: Spectrum, Omega=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """U = -K2 sum w d2 PV int_0^Omega w^3 / (w_m^2 - w^2)."""
    Omega = _cutoff(spectrum, Omega)
    return _fsum(
        -K2 * t.omega * t.d2 * cutoff_moment(t.omega, 3, "minus_sq", Omega, cfg) for t in spectrum.transitions
    )


def u_free(spectrum: Spectrum, Omega=None) -> float:
    Omega = _as_omega(Omega)
    return K2 * _fsum(spectrum.omegas * spectrum.d2s) * Omega**2 / 2


def delta_e_feynman(spectrum: Spectrum, Omega=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """U - U_free, subtracted inside the integrand.

    w^3/(w_m^2 - w^2) + w = w_m^2 w/(w_m^2 - w^2), so each line reduces to
    -K2 w_m^3 d2 PV int w/(w_m^2 - w^2); no large cancellation survives.
    """
    Omega = _cutoff(spectrum, Omega)
    return _fsum(
        -K2 * t.omega**3 * t.d2 * cutoff_moment(t.omega, 1, "minus_sq", Omega, cfg) for t in spectrum.transitions
    )


def line_breakpoints(omegas, gammas, upper: float, lower_gap=None, upper_gap=None) -> list:
    """Panel edges: a doubling ladder in gamma around each line, plus octaves."""
    omegas = np.asarray(omegas, float)
    gammas = np.asarray(gammas, float)
    pts = {0.0, float(upper)}
    if omegas.size == 0:
        return sorted(pts)
    order = np.argsort(omegas)
    w = omegas[order]
    g = gammas[order]
    for i, (w0, g0) in enumerate(zip(w, g)):
        left = 0.5 * (w0 - w[i - 1]) if i > 0 else 0.5 * w0
        right = 0.5 * (w[i + 1] - w0) if i + 1 < w.size else 0.5 * w0
        pts.add(float(w0))
        if g0 > 0:
            d = 0.25 * g0
            while d < left or d < right:
                if d < left:
                    pts.add(float(w0 - d))
                if d < right:
                    pts.add(float(w0 + d))
                d *= 2.0
    octave = float(w[0]) * 1e-3
    while octave < upper:
        pts.add(octave)
        octave *= 2.0
    return sorted(p for p in pts if 0.0 <= p <= upper)


def u_from_alpha(spectrum: Spectrum, damping: DampingModel, Omega=None,
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """U = -(1/(pi c^3)) int_0^Omega w^3 alpha_R(w), damped alpha_R."""
    Omega = _cutoff(spectrum, Omega)
    if len(spectrum) == 0:
        return 0.0
    damping.require_narrow(spectrum)
    damping.require_positive(spectrum)
    pts = line_breakpoints(spectrum.omegas, damping.gammas(spectrum), Omega)
    r = integrate(lambda w: w**3 * alpha_real(spectrum, damping, w), 0.0, Omega, cfg, pts)
    return -r.value / (math.pi * C_LIGHT**3)


# single-line pieces for the nested integrals


def _line_alpha_imag(y, w0, d2, g, s):
    return (d2 / 3.0) * (g / ((w0 - y) ** 2 + g * g) - s * g / ((w0 + y) ** 2 + g * g))


def _line_alpha_imag_deriv(y, w0, d2, g, s):
    a = (w0 - y) ** 2 + g * g
    b = (w0 + y) ** 2 + g * g
    return (d2 / 3.0) * (2 * g * (w0 - y) / a**2 + s * 2 * g * (w0 + y) / b**2)


def y_upper(spectrum: Spectrum, damping: DampingModel, Omega: float) -> float:
    """Inner truncation max(10 Omega, w_m + 10^3 gamma_m)."""
    if len(spectrum) == 0:
        return 10.0 * Omega
    return float(max(10.0 * Omega, np.max(spectrum.omegas + 1e3 * damping.gammas(spectrum))))


class NestedResult(NamedTuple):
    value: float
    error: float
    tail_bound: float


def _nested_line(kind: str, w0, d2, g, s, Omega, Y, cfg, order):
    breaks = line_breakpoints([w0], [g], Y)
    y, wy = composite_gauss(breaks, order)
    ay = _line_alpha_imag(y, w0, d2, g, s)
    if kind == "self":
        gy = y * y * ay

        def inner(om):
            ga = om * om * _line_alpha_imag(om, w0, d2, g, s)
            gd = 2 * om * _line_alpha_imag(om, w0, d2, g, s) + om * om * _line_alpha_imag_deriv(om, w0, d2, g, s)
            dy = y[:, None] - om[None, :]
            sy = y[:, None] + om[None, :]
            close = np.abs(dy) < 1e-6 * wy[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                q = (gy[:, None] - ga[None, :]) / (dy * sy)
            q = np.where(close, (gd / (2 * om))[None, :], q)
            pv_const = np.log((Y - om) / (Y + om)) / (2 * om)
            return wy @ q + ga * pv_const

        def tail(om):
            aY = abs(_line_alpha_imag(Y, w0, d2, g, s))
            return aY * Y * Y * np.log((Y + om) / (Y - om)) / (2 * om)

        outer_pts = line_breakpoints([w0], [g], Omega)
    else:
        gy = y * ay

        def inner(om):
            return wy @ (gy[:, None] / (y[:, None] + om[None, :]))

        def tail(om):
            aY = abs(_line_alpha_imag(Y, w0, d2, g, s))
            return aY * Y * Y * np.log1p(om / Y) / om

        outer_pts = line_breakpoints([w0], [0.0], Omega)

    r = integrate(lambda om: om * om * inner(om), 0.0, Omega, cfg, outer_pts)
    t = integrate(lambda om: om * om * tail(om), 0.0, Omega, cfg.loosened(1e3))
    return r.value, r.error, t.value


def _nested(kind, spectrum: Spectrum, damping: DampingModel, Omega, cfg) -> NestedResult:
    Omega = _cutoff(spectrum, Omega)
    if len(spectrum) == 0:
        return NestedResult(0.0, 0.0, 0.0)
    damping.require_narrow(spectrum)
    damping.require_positive(spectrum)
    Y = y_upper(spectrum, damping, Omega)
    s = damping.nonresonant_sign.factor
    vals, errs, tails = [], [], []
    for w0, d2, g in zip(spectrum.omegas, spectrum.d2s, damping.gammas(spectrum)):
        if d2 == 0:
            continue
        v, e, t = _nested_line(kind, w0, d2, g, s, Omega, Y, cfg, _INNER_ORDER)
        v2, _, _ = _nested_line(kind, w0, d2, g, s, Omega, Y, cfg, _INNER_CHECK_ORDER)
        vals.append(v)
        errs.append(e + abs(v - v2))
        tails.append(t)
    P = NESTED_PREFACTOR
    return NestedResult(P * _fsum(vals), P * _fsum(errs), P * _fsum(tails))


def u_self_detailed(spectrum, damping, Omega=None, cfg: QuadratureConfig = NESTED_CONFIG) -> NestedResult:
    return _nested("self", spectrum, damping, Omega, cfg)


def u_self(spectrum: Spectrum, damping: DampingModel, Omega=None, cfg: QuadratureConfig = NESTED_CONFIG) -> float:
    """U_S = (2/(pi^2 c^3)) int_0^Omega w^2 PV int_0^Y y^2 alpha_I(y)/(y^2 - w^2)."""
    return u_self_detailed(spectrum, damping, Omega, cfg).value


def u_total_direct(spectrum, damping, Omega=None, cfg: QuadratureConfig = NESTED_CONFIG) -> NestedResult:
    """(2/(pi^2 c^3)) int_0^Omega w^2 int_0^Y y alpha_I(y)/(y + w)."""
    return _nested("total", spectrum, damping, Omega, cfg)


def u_total_narrow(spectrum: Spectrum, Omega=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """K2 sum w d2 int_0^Omega w^2/(w_m + w)."""
    Omega = _cutoff(spectrum, Omega)
    return _fsum(K2 * t.omega * t.d2 * cutoff_moment(t.omega, 2, "plus", Omega, cfg) for t in spectrum.transitions)


class TotalResult(NamedTuple):
    direct: float
    narrow: float
    error: float
    tail_bound: float
    tolerance: float

    @property
    def relative_gap(self) -> float:
        return abs(self.direct - self.narrow) / abs(self.narrow) if self.narrow else abs(self.direct)


def consistency_tolerance(spectrum: Spectrum, damping: DampingModel) -> float:
    return max(1e-3, 10.0 * damping.max_ratio(spectrum))


def u_total(spectrum: Spectrum, damping: DampingModel, Omega=None, cfg: QuadratureConfig = NESTED_CONFIG,
            check: bool = True) -> TotalResult:
    """U + U_S by the direct y+w kernel and by the narrow-line closed form."""
    Omega = _cutoff(spectrum, Omega)
    d = u_total_direct(spectrum, damping, Omega, cfg)
    n = u_total_narrow(spectrum, Omega)
    tol = consistency_tolerance(spectrum, damping)
    res = TotalResult(d.value, n, d.error, d.tail_bound, tol)
    if check and len(spectrum) and res.relative_gap > tol:
        raise ConsistencyError(
            f"u_total routes disagree: direct {d.value:.12g} vs narrow {n:.12g} "
            f"(relative {res.relative_gap:.3g} > {tol:.3g})"
        )
    return res


class BetheResult(NamedTuple):
    value: float
    asymptotic: float

    @property
    def mhz(self) -> float:
        return to_mhz(self.value)


def delta_e_bethe_detailed(spectrum: Spectrum, damping: Optional[DampingModel] = None, Omega=None,
                           cfg: QuadratureConfig = DEFAULT_CONFIG) -> BetheResult:
    """(U + U_S - U_free) less its w_m -> 0 integrand counterpart.

    Per line the renormalized narrow-line integrand is
    w^2/(w_m + w) - w + w_m = w_m^2/(w_m + w); the damping enters only
    through the narrow-line precondition.
    """
    Omega = _cutoff(spectrum, Omega)
    if damping is not None and len(spectrum):
        damping.require_narrow(spectrum)
    val = _fsum(K2 * t.omega**3 * t.d2 * cutoff_moment(t.omega, 0, "plus", Omega, cfg) for t in spectrum.transitions)
    asym = _fsum(K2 * t.omega**3 * t.d2 * math.log(Omega / t.omega) for t in spectrum.transitions)
    return BetheResult(val, asym)


def delta_e_bethe(spectrum: Spectrum, damping: Optional[DampingModel] = None, Omega=None,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    return delta_e_bethe_detailed(spectrum, damping, Omega, cfg).value


def breakdown(spectrum: Spectrum, damping: DampingModel, route, Omega=None,
              cfg: QuadratureConfig = DEFAULT_CONFIG) -> EnergyBreakdown:
    Omega = _cutoff(spectrum, Omega)
    route = Route(route)
    u = u_feynman(spectrum, Omega, cfg)
    uf = u_free(spectrum, Omega)
    if route is Route.FEYNMAN:
        return EnergyBreakdown(u, uf, 0.0, u, delta_e_feynman(spectrum, Omega, cfg), route, Omega)
    us = u_self(spectrum, damping, Omega)
    ut = u_total(spectrum, damping, Omega)
    return EnergyBreakdown(u, uf, us, ut.direct, delta_e_bethe(spectrum, damping, Omega, cfg), route, Omega)


# correlation functions


def _correlation_breaks(spectrum, damping, tau, Y):
    pts = line_breakpoints(spectrum.omegas, damping.gammas(spectrum), Y)
    if tau > 0:
        step = math.pi / tau
        n = int(Y / step)
        if n <= 20000:
            pts = sorted(set(pts) | set((np.arange(1, n + 1) * step).tolist()))
    return [p for p in pts if 0 < p < Y]


def correlation_upper(spectrum, damping) -> float:
    return float(4.0 * spectrum.max_omega + 1e3 * np.max(damping.gammas(spectrum)))


def dipole_correlation(spectrum: Spectrum, damping: DampingModel, tau: float,
                       cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Symmetrized <d(t) d'(t')>: -(1/pi) int_0^Y y alpha_I(y) sin(y tau)."""
    if len(spectrum) == 0 or tau == 0:
        return 0.0
    damping.require_narrow(spectrum)
    from .polarizability import alpha_imag

    Y = correlation_upper(spectrum, damping)
    r = integrate(lambda y: y * alpha_imag(spectrum, damping, y) * np.sin(y * tau), 0.0, Y, cfg,
                  _correlation_breaks(spectrum, damping, abs(tau), Y))
    return -r.value / math.pi


def position_correlation(spectrum: Spectrum, damping: DampingModel, tau: float,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Full vector <d(t).d(t')> symmetrized: (3/pi) int_0^Y alpha_I(y) cos(y tau)."""
    if len(spectrum) == 0:
        return 0.0
    damping.require_narrow(spectrum)
    from .polarizability import alpha_imag

    Y = correlation_upper(spectrum, damping)
    r = integrate(lambda y: alpha_imag(spectrum, damping, y) * np.cos(y * tau), 0.0, Y, cfg,
                  _correlation_breaks(spectrum, damping, abs(tau), Y))
    return 3.0 * r.value / math.pi


# comparisons and diagnostics


class ComparisonRow(NamedTuple):
    omega_cutoff: float
    delta_e_feynman: float
    delta_e_bethe: float
    abs_gap: float
    rel_gap: float
    log_gap: float


def worker_count(default: int = 4) -> int:
    raw = os.environ.get("BETHELOG_THREADS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise PreconditionError(f"BETHELOG_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise PreconditionError(f"BETHELOG_THREADS must be >= 1, got {n}")
    return n


def _comparison_row(spectrum, damping, Omega, cfg) -> ComparisonRow:
    f = delta_e_feynman(spectrum, Omega, cfg)
    b = delta_e_bethe(spectrum, damping, Omega, cfg)
    weight = K2 * _fsum(spectrum.omegas**3 * spectrum.d2s)
    gap = f - b
    return ComparisonRow(float(Omega), f, b, abs(gap), abs(gap) / abs(b) if b else 0.0,
                         gap / weight if weight else 0.0)


def route_comparison(spectrum: Spectrum, damping: DampingModel, Omegas: Sequence[float],
                     cfg: QuadratureConfig = DEFAULT_CONFIG, workers: Optional[int] = None) -> list:
    """Feynman vs Bethe shift per cutoff; rows follow the input order."""
    Omegas = [_cutoff(spectrum, W) for W in Omegas]
    if not Omegas:
        raise PreconditionError("route_comparison needs at least one cutoff")
    n = workers or worker_count()
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda W: _comparison_row(spectrum, damping, W, cfg), Omegas))


def bethe_log_mean(spectrum: Spectrum) -> float:
    """ln(k0 / Ry): the w^3 d2 weighted mean of ln(2 w)."""
    wts = spectrum.omegas**3 * spectrum.d2s
    den = _fsum(wts)
    if den == 0:
        raise PreconditionError("spectrum has no dipole weight")
    return _fsum(wts * np.log(2.0 * spectrum.omegas)) / den


class CancellationFit(NamedTuple):
    A: float
    B: float
    C: float
    D: float
    B_expected: float

    @property
    def B_relative_error(self) -> float:
        return abs(self.B / self.B_expected - 1.0)


def cancellation_fit(spectrum: Spectrum, damping: DampingModel, Omegas: Sequence[float],
                     values: Optional[Sequence[float]] = None) -> CancellationFit:
    """Least-squares fit of u_total(Omega) to A Omega^2/2 - B Omega + C ln Omega + D."""
    W = np.asarray(Omegas, float)
    if values is None:
        values = [u_total_direct(spectrum, damping, w).value for w in W]
    y = np.asarray(values, float)
    X = np.column_stack([W**2 / 2, -W, np.log(W), np.ones_like(W)])
    scale = np.max(np.abs(X), axis=0)
    coef, *_ = np.linalg.lstsq(X / scale, y, rcond=None)
    coef = coef / scale
    expected = K2 * _fsum(spectrum.omegas**2 * spectrum.d2s)
    return CancellationFit(*map(float, coef), expected)


def sign_pair(damping: DampingModel):
    return damping.with_sign(Sign.PLUS), damping.with_sign(Sign.MINUS)
