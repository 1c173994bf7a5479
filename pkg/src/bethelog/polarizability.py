"""Damped Kramers-Heisenberg polarizability and its dispersion relations.

alpha(w) = (1/3) sum_m d2_m [1/(w_m - w - i g_m) + 1/(w_m + w +/- i g_m)]

With the Plus sign both poles sit in the lower half plane, so alpha is
causal and Kramers-Kronig holds exactly. The Minus sign moves the
nonresonant pole upward; alpha_R is unchanged but alpha_I picks up a
nonresonant Lorentzian of the wrong sign.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .constants import C_LIGHT
from .errors import AccuracyError, InvariantError, PreconditionError, SchemaError
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate, pv_integral
from .spectrum import Spectrum, Transition

NARROW_RATIO = 1e-3
DILUTE_LIMIT = 1e-3
_CHUNK = 4096


class Sign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> float:
        return 1.0 if self is Sign.PLUS else -1.0


class DilutenessWarning(UserWarning):
    """|delta n| exceeded the dilute-gas bound."""


@dataclass(frozen=True)
class DampingModel:
    """Per-line widths keyed by transition label, plus the nonresonant sign.

    A width of exactly 0 is the undamped limit and is accepted so the
    gamma -> 0 reference values can be evaluated directly.
    """

    gamma: Mapping[str, float] = field(default_factory=dict)
    nonresonant_sign: Sign = Sign.PLUS
    default_gamma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", dict(self.gamma))
        object.__setattr__(self, "nonresonant_sign", Sign(self.nonresonant_sign))
        for k, g in self.gamma.items():
            if not (math.isfinite(g) and g >= 0):
                raise InvariantError(f"gamma[{k!r}] must be finite and >= 0, got {g}")
        if self.default_gamma is not None and not (math.isfinite(self.default_gamma) and self.default_gamma >= 0):
            raise InvariantError(f"default_gamma must be finite and >= 0, got {self.default_gamma}")

    @classmethod
    def undamped(cls, sign=Sign.PLUS) -> "DampingModel":
        return cls({}, sign, 0.0)

    @classmethod
    def relative(cls, spectrum: Spectrum, ratio: float, sign=Sign.PLUS) -> "DampingModel":
        """gamma_m = ratio * omega_m for every line."""
        return cls({t.label: ratio * t.omega for t in spectrum.transitions}, sign)

    @classmethod
    def radiative(cls, spectrum: Spectrum, sign=Sign.PLUS, scale: float = 1.0) -> "DampingModel":
        return cls({t.label: scale * radiative_width(t) for t in spectrum.transitions}, sign)

    def with_sign(self, sign) -> "DampingModel":
        return DampingModel(self.gamma, Sign(sign), self.default_gamma)

    def gammas(self, spectrum: Spectrum) -> np.ndarray:
        out = np.empty(len(spectrum))
        for i, t in enumerate(spectrum.transitions):
            g = self.gamma.get(t.label, self.default_gamma)
            if g is None:
                raise PreconditionError(f"no damping rate for transition {t.label!r}")
            out[i] = g
        return out

    def max_ratio(self, spectrum: Spectrum) -> float:
        if len(spectrum) == 0:
            return 0.0
        return float(np.max(self.gammas(spectrum) / spectrum.omegas))

    def is_narrow(self, spectrum: Spectrum) -> bool:
        return self.max_ratio(spectrum) <= NARROW_RATIO

    def require_narrow(self, spectrum: Spectrum) -> None:
        r = self.max_ratio(spectrum)
        if r > NARROW_RATIO:
            raise PreconditionError(f"narrow-line regime needs gamma/omega <= {NARROW_RATIO}, got {r:.3g}")

    def require_positive(self, spectrum: Spectrum) -> None:
        if len(spectrum) and np.any(self.gammas(spectrum) <= 0):
            raise PreconditionError("this operation needs every gamma > 0")


def _lines(spectrum: Spectrum, damping: Optional[DampingModel]):
    damping = damping or DampingModel.undamped()
    return spectrum.omegas, spectrum.d2s, damping.gammas(spectrum), damping.nonresonant_sign.factor


def _kernel(spectrum, damping, omega, deriv: bool):
    w0, d2, g, s = _lines(spectrum, damping)
    om = np.asarray(omega)
    flat = om.ravel()
    dtype = complex
    out = np.empty(flat.shape, dtype=dtype)
    for a in range(0, max(flat.size, 1), _CHUNK):
        x = flat[a:a + _CHUNK][:, None]
        if x.size == 0:
            break
        d_res = w0 - x - 1j * g
        d_non = w0 + x + s * 1j * g
        if deriv:
            terms = 1.0 / d_res**2 - 1.0 / d_non**2
        else:
            terms = 1.0 / d_res + 1.0 / d_non
        out[a:a + _CHUNK] = terms @ d2 / 3.0
    out = out.reshape(om.shape)
    return out[()] if out.ndim == 0 else out


def alpha_complex(spectrum: Spectrum, damping: Optional[DampingModel], omega):
    """Complex polarizability; ``omega`` may be real, complex, or an array."""
    om = np.asarray(omega)
    if not np.iscomplexobj(om) and np.any(om < 0):
        raise PreconditionError("omega must be >= 0")
    return _kernel(spectrum, damping, om, deriv=False)


def alpha_extended(spectrum: Spectrum, damping: Optional[DampingModel], omega):
    """The same formula without the omega >= 0 guard, for symmetry checks."""
    return _kernel(spectrum, damping, np.asarray(omega), deriv=False)


def alpha_derivative(spectrum: Spectrum, damping: Optional[DampingModel], omega):
    """d alpha / d omega, analytic in omega."""
    return _kernel(spectrum, damping, np.asarray(omega), deriv=True)


def alpha_real(spectrum, damping, omega):
    return np.real(alpha_complex(spectrum, damping, omega))


def alpha_imag(spectrum, damping, omega):
    return np.imag(alpha_complex(spectrum, damping, omega))


def resonance_points(spectrum: Spectrum, damping: Optional[DampingModel], upper: float,
                     widths: Sequence[float] = (0.0, 1.0, 10.0, 100.0)) -> list:
    """Breakpoints around each line so adaptive panels resolve the peaks."""
    w0, _, g, _ = _lines(spectrum, damping)
    pts = set()
    for w, gg in zip(w0, g):
        for k in widths:
            for p in (w - k * gg, w + k * gg):
                if 0 < p < upper:
                    pts.add(float(p))
    return sorted(pts)


# tabulated spectral functions


@dataclass(frozen=True)
class TabulatedSpectralFunction:
    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, float)
        v = np.asarray(self.values, float)
        if w.ndim != 1 or w.shape != v.shape:
            raise InvariantError("omegas and values must be 1-D arrays of equal length")
        if w.size < 2:
            raise InvariantError("need at least two samples")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
            raise InvariantError("samples must be finite")
        if w[0] < 0 or np.any(np.diff(w) <= 0):
            raise InvariantError("omegas must be nonnegative and strictly ascending")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "values", v)

    def __call__(self, omega):
        return np.interp(omega, self.omegas, self.values, left=0.0, right=0.0)

    @property
    def top(self) -> float:
        return float(self.omegas[-1])

    @classmethod
    def sample(cls, f: Callable, omegas) -> "TabulatedSpectralFunction":
        w = np.asarray(omegas, float)
        return cls(w, np.asarray(f(w), float))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("omega,value\n")
        for w, v in zip(self.omegas, self.values):
            buf.write(f"{float(w)!r},{float(v)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "TabulatedSpectralFunction":
        text = Path(source).read_text() if not isinstance(source, io.IOBase) else source.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["omega", "value"]:
            raise SchemaError("CSV header must be 'omega,value'", field="header")
        ws, vs = [], []
        for i, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"line {i}: expected 2 columns", field=f"line {i}")
            try:
                ws.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                raise SchemaError(f"line {i}: not a decimal number", field=f"line {i}") from None
        return cls(np.array(ws), np.array(vs))


class KKResult(NamedTuple):
    value: float
    tail_bound: float
    error: float


def _tail_estimate(a_top: float, Y: float, omega: float) -> float:
    # (2/pi) int_Y^inf y a(Y) (Y/y)^2 / (y^2 - w^2) dy
    x = (omega / Y) ** 2
    if x == 0:
        return a_top / math.pi
    return (2 / math.pi) * a_top * Y * Y * (-math.log1p(-x)) / (2 * omega * omega)


def _pl_segment_logs(y: np.ndarray, v: np.ndarray, omega: float) -> float:
    """Exact PV of y*a(y)/(y^2-w^2) for piecewise-linear a on the grid."""
    dy = np.diff(y)
    s = np.diff(v) / dy
    c = v[:-1] - s * y[:-1]
    lin_p = s * omega + c  # segment line extended to +omega
    lin_m = -s * omega + c  # and to -omega
    total = math.fsum((s * dy).tolist())
    # coefficients of log|y_j - w| collected per node so coincident poles cancel
    n = y.size
    coef = np.zeros(n)
    coef[1:] += lin_p
    coef[:-1] -= lin_p
    d = np.abs(y - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(d > 0, coef * np.log(np.where(d > 0, d, 1.0)), 0.0)
        if np.any((d == 0) & (np.abs(coef) > 1e-14 * (np.max(np.abs(v)) + 1e-300))):
            raise PreconditionError(f"pole at omega={omega} coincides with a grid end where the data is nonzero")
        plus = y + omega
        coefm = np.zeros(n)
        coefm[1:] += lin_m
        coefm[:-1] -= lin_m
        termm = np.where(plus > 0, coefm * np.log(np.where(plus > 0, plus, 1.0)), 0.0)
    total += 0.5 * (math.fsum(term.tolist()) + math.fsum(termm.tolist()))
    return total


def kk_real_from_imag(
    alpha_im: Union[TabulatedSpectralFunction, Callable],
    omega: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    *,
    upper: Optional[float] = None,
    points: Sequence[float] = (),
    tail_rel_tol: float = 1e-3,
) -> KKResult:
    """alpha_R(w) = (2/pi) PV int_0^Y y alpha_I(y)/(y^2 - w^2) dy.

    Tabulated input is treated as piecewise linear and transformed
    exactly; a callable is integrated adaptively up to ``upper``. The
    1/y^2 tail beyond the top is estimated and must stay below
    ``tail_rel_tol`` of the value.
    """
    omega = float(omega)
    if omega < 0:
        raise PreconditionError("omega must be >= 0")
    if isinstance(alpha_im, TabulatedSpectralFunction):
        y, v = alpha_im.omegas, alpha_im.values
        Y = alpha_im.top
        if omega >= Y:
            raise PreconditionError(f"omega={omega} is not below the grid top {Y}")
        if not np.any(v):
            return KKResult(0.0, 0.0, 0.0)
        value = (2 / math.pi) * _pl_segment_logs(y, v, omega)
        err = 0.0
        a_top = float(v[-1])
    else:
        if upper is None:
            raise PreconditionError("a callable alpha_I needs an explicit upper limit")
        Y = float(upper)
        if omega >= Y:
            raise PreconditionError(f"omega={omega} is not below the upper limit {Y}")

        def f(y):
            return y * np.asarray(alpha_im(y), float) / ((y - omega) * (y + omega))

        if omega == 0:
            r = integrate(lambda y: np.asarray(alpha_im(y), float) / y, 0.0, Y, cfg, points)
        else:
            r = pv_integral(f, omega, 0.0, Y, cfg, points)
        value = (2 / math.pi) * r.value
        err = (2 / math.pi) * r.error
        a_top = float(np.asarray(alpha_im(np.array([Y])), float)[0])
    tail = _tail_estimate(a_top, Y, omega)
    if abs(tail) > tail_rel_tol * abs(value) and abs(tail) > cfg.abs_tol:
        raise AccuracyError(
            f"KK tail bound {tail:.3g} exceeds {tail_rel_tol:g} of the value {value:.3g}; extend the grid"
        )
    return KKResult(float(value), float(tail), float(err))


# dilute gas and radiative diagnostics


def delta_n(spectrum: Spectrum, damping: Optional[DampingModel], number_density: float, omega):
    """2 pi N alpha_R(omega); warns when |delta n| leaves the dilute regime."""
    if not (number_density >= 0 and math.isfinite(number_density)):
        raise PreconditionError(f"number density must be finite and >= 0, got {number_density}")
    if number_density == 0:
        return np.zeros_like(np.asarray(omega, float))[()]
    dn = 2 * math.pi * number_density * alpha_real(spectrum, damping, omega)
    peak = float(np.max(np.abs(dn)))
    if peak > DILUTE_LIMIT:
        warnings.warn(f"|delta n| = {peak:.3g} exceeds the dilute bound {DILUTE_LIMIT:g}", DilutenessWarning,
                      stacklevel=2)
    return dn


def radiative_width(transition: Transition, c: float = C_LIGHT) -> float:
    """gamma = (2 w^3 / 3 c^3) (d2 / 3)."""
    return 2 * transition.omega**3 / (3 * c**3) * transition.d2 / 3


def optical_theorem_residual(spectrum: Spectrum, damping: Optional[DampingModel], omega, c: float = C_LIGHT):
    """alpha_I - (2 w^3 / 3 c^3) |alpha|^2."""
    om = np.asarray(omega, float)
    if np.any(om <= 0):
        raise PreconditionError("omega must be > 0")
    a = alpha_complex(spectrum, damping, om)
    return np.imag(a) - 2 * om**3 / (3 * c**3) * np.abs(a) ** 2
