"""Zero-point mode sums in a dilute dispersive gas.

n(w) = 1 + 2 pi N alpha_R(w). alpha_R is real-analytic on the axis; its
continuation off the axis is used along small upper semicircles that
replace the segment |w - w_m| <= 10^3 gamma_m around each line. Every
integral here runs over that same deformed path, and the real part is
taken at the end, so the calculus identities between the routes hold to
quadrature precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .constants import C_LIGHT
from .errors import ConvergenceError, InvariantError, PreconditionError, ResolutionError, SchemaError
from .polarizability import DampingModel, Sign, alpha_real
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, _as_omega, integrate
from .spectrum import Spectrum, spectrum_from_dict

EXCLUSION_WIDTHS = 1e3
DILUTE_MAX = 1e-2
TRANSPARENCY = 1e-6


def _alpha_r_analytic(spectrum: Spectrum, gammas: np.ndarray, z, deriv: bool = False):
    """Continuation of alpha_R: the mean of the +gamma and -gamma forms."""
    z = np.asarray(z, complex)
    flat = z.ravel()[:, None]
    w0 = spectrum.omegas
    g = gammas
    ig = 1j * g
    if deriv:
        t = (1 / (w0 - flat - ig) ** 2 + 1 / (w0 - flat + ig) ** 2
             - 1 / (w0 + flat + ig) ** 2 - 1 / (w0 + flat - ig) ** 2)
    else:
        t = 1 / (w0 - flat - ig) + 1 / (w0 - flat + ig) + 1 / (w0 + flat + ig) + 1 / (w0 + flat - ig)
    return (0.5 * (t @ spectrum.d2s) / 3.0).reshape(z.shape)


@dataclass(frozen=True)
class RefractiveModel:
    spectrum: Spectrum
    damping: DampingModel
    number_density: float

    def __post_init__(self):
        if not (math.isfinite(self.number_density) and self.number_density >= 0):
            raise InvariantError(f"number density must be finite and >= 0, got {self.number_density}")
        if len(self.spectrum):
            self.damping.require_positive(self.spectrum)
        peak = self.max_delta_n()
        if peak > DILUTE_MAX:
            raise InvariantError(f"max |delta n| = {peak:.3g} exceeds the dilute bound {DILUTE_MAX:g}")

    @classmethod
    def vacuum(cls) -> "RefractiveModel":
        return cls(Spectrum("vacuum", ()), DampingModel.undamped(), 0.0)

    @property
    def gammas(self) -> np.ndarray:
        return self.damping.gammas(self.spectrum)

    @property
    def is_vacuum(self) -> bool:
        return self.number_density == 0 or len(self.spectrum) == 0

    def delta_n(self, z):
        if self.is_vacuum:
            return np.zeros_like(np.asarray(z, complex))
        return 2 * math.pi * self.number_density * _alpha_r_analytic(self.spectrum, self.gammas, z)

    def delta_n_prime(self, z):
        if self.is_vacuum:
            return np.zeros_like(np.asarray(z, complex))
        return 2 * math.pi * self.number_density * _alpha_r_analytic(self.spectrum, self.gammas, z, deriv=True)

    def n(self, z):
        return 1.0 + self.delta_n(z)

    def delta_n_real(self, omega):
        """Real-axis n - 1 from the damped alpha_R, without forming n first."""
        if self.is_vacuum:
            return np.zeros_like(np.asarray(omega, float))
        return 2 * math.pi * self.number_density * alpha_real(self.spectrum, self.damping, omega)

    def n_real(self, omega):
        return 1.0 + self.delta_n_real(omega)

    def max_delta_n(self) -> float:
        if self.is_vacuum:
            return 0.0
        w0 = self.spectrum.omegas
        g = self.gammas
        cand = np.concatenate([[0.0], np.maximum(w0 - g, 0.0), w0 + g])
        return float(np.max(np.abs(self.delta_n_real(cand))))

    def excluded(self, omega, widths: float = EXCLUSION_WIDTHS) -> bool:
        if self.is_vacuum:
            return False
        return bool(np.any(np.abs(omega - self.spectrum.omegas) <= widths * self.gammas))


def model_from_dict(obj: dict) -> RefractiveModel:
    """{"N": <f>, "spectrum": {...}, "gamma": <f relative to each omega>, "sign": "plus"|"minus"}."""
    for key in ("N", "spectrum", "gamma", "sign"):
        if key not in obj:
            raise SchemaError(f"missing field {key}", field=key)
    for key in ("N", "gamma"):
        if isinstance(obj[key], bool) or not isinstance(obj[key], (int, float)):
            raise SchemaError(f"field {key} must be a number", field=key)
    if obj["sign"] not in ("plus", "minus"):
        raise SchemaError("field sign must be 'plus' or 'minus'", field="sign")
    spec = spectrum_from_dict(obj["spectrum"])
    damping = DampingModel.relative(spec, float(obj["gamma"]), Sign(obj["sign"]))
    return RefractiveModel(spec, damping, float(obj["N"]))


def load_model(path) -> RefractiveModel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})", field="") from exc
    if not isinstance(obj, dict):
        raise SchemaError("model must be a JSON object", field="")
    return model_from_dict(obj)


@dataclass(frozen=True)
class BoxGeometry:
    side_length: float

    def __post_init__(self):
        if not (math.isfinite(self.side_length) and self.side_length > 0):
            raise InvariantError(f"side length must be > 0, got {self.side_length}")

    @property
    def volume(self) -> float:
        return self.side_length**3


# deformed path


def excluded_intervals(model: RefractiveModel, Omega: float) -> list:
    """Merged [a, b] neighbourhoods bridged by semicircles, kept inside (0, Omega)."""
    if model.is_vacuum:
        return []
    spans = []
    for w0, g in sorted(zip(model.spectrum.omegas, model.gammas)):
        r = min(EXCLUSION_WIDTHS * g, 0.5 * w0, 0.5 * (Omega - w0))
        spans.append([w0 - r, w0 + r])
    merged = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(float(a), float(b)) for a, b in merged]


def path_integral(F: Callable, model: RefractiveModel, Omega: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                  points=()) -> complex:
    """int F(z) dz from 0 to Omega along the real axis, detouring over each exclusion."""
    arcs = excluded_intervals(model, Omega)
    total = 0.0 + 0.0j
    cursor = 0.0
    pieces = []
    for a, b in arcs:
        pieces.append(("line", cursor, a))
        pieces.append(("arc", a, b))
        cursor = b
    pieces.append(("line", cursor, Omega))
    for kind, a, b in pieces:
        if kind == "line":
            if b > a:
                pts = [p for p in points if a < p < b]
                total += integrate(lambda w: F(w.astype(complex)), a, b, cfg, pts).value
        else:
            c = 0.5 * (a + b)
            r = 0.5 * (b - a)

            def G(theta, c=c, r=r):
                e = np.exp(1j * theta)
                return F(c + r * e) * (1j * r * e)

            # theta runs from pi down to 0
            total -= integrate(G, 0.0, math.pi, cfg).value
    return complex(total)


def _octaves(model: RefractiveModel, Omega: float) -> list:
    if model.is_vacuum:
        return []
    pts = []
    w = float(np.min(model.spectrum.omegas)) * 1e-2
    while w < Omega:
        pts.append(w)
        w *= 2
    return pts


def _cube_minus_one(dn):
    return dn * (3 + 3 * dn + dn * dn)


def mode_energy_continuum(model: RefractiveModel, Omega=None, V: float = 1.0,
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """(V/(2 pi^2 c^3)) int_0^Omega w (n w)^2 d(n w)/dw."""
    Omega = _as_omega(Omega)

    def F(z):
        n = model.n(z)
        return z * (n * z) ** 2 * (n + z * model.delta_n_prime(z))

    val = path_integral(F, model, Omega, cfg, _octaves(model, Omega))
    return V * val.real / (2 * math.pi**2 * C_LIGHT**3)


def mode_energy_shift(model: RefractiveModel, Omega=None, V: float = 1.0,
                      cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Model minus vacuum mode energy, with the vacuum subtracted in the integrand."""
    Omega = _as_omega(Omega)

    def F(z):
        dn = model.delta_n(z)
        n = 1 + dn
        # w^3 [n^2 (n + w n') - 1]
        return z**3 * (_cube_minus_one(dn) + n * n * z * model.delta_n_prime(z))

    val = path_integral(F, model, Omega, cfg, _octaves(model, Omega))
    return V * val.real / (2 * math.pi**2 * C_LIGHT**3)


def transparency_gap(model: RefractiveModel, Omega: float) -> float:
    return float(abs(model.delta_n_real(np.array([Omega]))[0]))


def _check_transparency(model: RefractiveModel, Omega: float) -> None:
    if model.is_vacuum:
        return
    gap = transparency_gap(model, Omega)
    lim = TRANSPARENCY * model.max_delta_n()
    if gap > lim:
        raise PreconditionError(f"n(Omega) - 1 = {gap:.3g} is not below {lim:.3g}; raise Omega")


def u_dispersive(model: RefractiveModel, Omega=None, V: float = 1.0,
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """U = -(V/(6 pi^2 c^3)) int_0^Omega w^3 (n^3 - 1)."""
    Omega = _as_omega(Omega)
    if model.is_vacuum:
        return 0.0
    _check_transparency(model, Omega)
    val = path_integral(lambda z: z**3 * _cube_minus_one(model.delta_n(z)), model, Omega, cfg,
                        _octaves(model, Omega))
    return -V * val.real / (6 * math.pi**2 * C_LIGHT**3)


def u_power(model: RefractiveModel, Omega=None, V: float = 1.0, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """U_P = -(V/(2 pi^2 c^3)) int_0^Omega w^3 (n - 1)."""
    Omega = _as_omega(Omega)
    if model.is_vacuum:
        return 0.0
    _check_transparency(model, Omega)
    val = path_integral(lambda z: z**3 * model.delta_n(z), model, Omega, cfg, _octaves(model, Omega))
    return -V * val.real / (2 * math.pi**2 * C_LIGHT**3)


def boundary_term(model: RefractiveModel, Omega=None) -> float:
    """Omega^4 (n^3(Omega) - 1)."""
    Omega = _as_omega(Omega)
    dn = complex(model.delta_n(np.array([Omega + 0j]))[0]).real
    return Omega**4 * _cube_minus_one(dn)


class ResidualReport(NamedTuple):
    residual: float
    derivative_term: float
    power_term: float
    boundary: float

    @property
    def relative(self) -> float:
        scale = max(abs(self.derivative_term), abs(self.power_term))
        return abs(self.residual) / scale if scale else abs(self.residual)


def partial_integration_report(model: RefractiveModel, Omega=None,
                               cfg: QuadratureConfig = DEFAULT_CONFIG) -> ResidualReport:
    Omega = _as_omega(Omega)
    if model.is_vacuum:
        return ResidualReport(0.0, 0.0, 0.0, 0.0)
    pts = _octaves(model, Omega)

    def dn3(z):
        n = model.n(z)
        return z**4 * 3 * n * n * model.delta_n_prime(z)

    d = path_integral(dn3, model, Omega, cfg, pts).real
    p = 4 * path_integral(lambda z: z**3 * _cube_minus_one(model.delta_n(z)), model, Omega, cfg, pts).real
    b = boundary_term(model, Omega)
    return ResidualReport(d + p - b, d, p, b)


def partial_integration_residual(model: RefractiveModel, Omega=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """int w^4 d(n^3)/dw + 4 int w^3 (n^3 - 1) - Omega^4 (n^3(Omega) - 1)."""
    return partial_integration_report(model, Omega, cfg).residual


# frequency-resolved energy density


def field_variance(model: RefractiveModel, z):
    """<E_w^2> = (2/(pi c^3)) w^3 n."""
    return 2 * np.asarray(z) ** 3 * model.n(z) / (math.pi * C_LIGHT**3)


def _density(model: RefractiveModel, z):
    z = np.asarray(z, complex)
    n = model.n(z)
    npr = model.delta_n_prime(z)
    d_eps_w = n * n + 2 * n * z * npr  # d(n^2 w)/dw
    # electric plus magnetic halves: (1/8 pi) [d(eps w)/dw + n^2] <E^2>
    return (d_eps_w + n * n) * field_variance(model, z) / (8 * math.pi)


def energy_density(model: RefractiveModel, omega):
    """u_w at real, off-resonant omega (hartree per a0^3 per a.u. frequency)."""
    om = np.atleast_1d(np.asarray(omega, float))
    for w in om:
        if model.excluded(w):
            raise PreconditionError(f"omega={w} lies within {EXCLUSION_WIDTHS:g} widths of a line")
    out = _density(model, om).real
    return out[0] if np.ndim(omega) == 0 else out


def density_route_energy(model: RefractiveModel, Omega=None, V: float = 1.0,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """V int_0^Omega u_w dw along the same deformed path."""
    Omega = _as_omega(Omega)
    return V * path_integral(lambda z: _density(model, z), model, Omega, cfg, _octaves(model, Omega)).real


# discrete box


def lattice_shells(s_max: int) -> np.ndarray:
    """r3[s]: number of integer triples with |m|^2 = s, for s <= s_max."""
    M = math.isqrt(s_max)
    m = np.arange(-M, M + 1)
    s2 = (m[:, None] ** 2 + m[None, :] ** 2).ravel()
    r2 = np.bincount(s2[s2 <= s_max], minlength=s_max + 1)
    r3 = np.zeros(s_max + 1, np.int64)
    for k in m:
        kk = int(k * k)
        r3[kk:] += r2[: s_max + 1 - kk]
    return r3


def _solve_dispersion(model: RefractiveModel, kc: np.ndarray, tol: float = 1e-15, max_iter: int = 200):
    """omega n(omega) = k c by fixed-point iteration on the real axis."""
    w = kc.astype(float).copy()
    if model.is_vacuum:
        return w
    for _ in range(max_iter):
        new = kc / model.n_real(w)
        if np.all(np.abs(new - w) <= tol * np.abs(new)):
            return new
        w = new
    raise ConvergenceError("dispersion relation did not converge", estimate=float(w[-1]), error=float("nan"))


def box_shell_limit(model: RefractiveModel, box: BoxGeometry, Omega: float) -> int:
    kmax = float(model.n_real(np.array([Omega]))[0]) * Omega / C_LIGHT
    return int(math.floor((kmax * box.side_length / (2 * math.pi)) ** 2))


def discrete_box_sum(model: RefractiveModel, box: BoxGeometry, Omega=None, min_shells: int = 10**4) -> float:
    """sum over k = (2 pi / L) m, |k| <= n(Omega) Omega / c, two polarizations, of omega_k / 2."""
    Omega = _as_omega(Omega)
    s_max = box_shell_limit(model, box, Omega)
    if s_max < 1:
        return 0.0
    r3 = lattice_shells(s_max)
    r3[0] = 0
    s = np.flatnonzero(r3)
    if s.size < min_shells:
        raise ResolutionError(
            f"only {s.size} lattice shells below the cutoff (need {min_shells}); enlarge L or Omega"
        )
    kc = 2 * math.pi * C_LIGHT * np.sqrt(s.astype(float)) / box.side_length
    w = _solve_dispersion(model, kc)
    # fixed shell order and compensated summation: bit-stable
    return math.fsum((r3[s] * w).tolist())


def box_gap(model: RefractiveModel, box: BoxGeometry, Omega=None, min_shells: int = 10**4) -> float:
    Omega = _as_omega(Omega)
    cont = mode_energy_continuum(model, Omega, box.volume)
    return discrete_box_sum(model, box, Omega, min_shells) / cont - 1.0
