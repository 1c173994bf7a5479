"""Adaptive Gauss-Kronrod quadrature with principal-value support.

The engine is vectorised: every refinement pass evaluates the integrand
once on the nodes of all panels being refined, so integrands must accept
a 1-D ndarray and return an array of the same length (real or complex).

Principal values use symmetric exclusion around the pole.  The two
sides are folded, ``g(t) = f(p + t) + f(p - t)``, so the simple-pole
parts cancel pointwise; the excluded sliver ``[0, eps]`` contributes
``eps * g(0) + O(eps**3)`` (``g`` is even), which one Richardson step in
``eps`` removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial import legendre as _leg

from .constants import DEFAULT_CUTOFF
from .errors import ConvergenceError, PreconditionError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    # half-width of the excluded pole neighbourhood, in units of the pole
    pv_exclusion: float = 1e-6
    max_subdivisions: int = 5000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("tolerances must be positive")
        if not 0 < self.pv_exclusion < 1:
            raise PreconditionError("pv_exclusion must lie in (0, 1)")
        if self.max_subdivisions < 1:
            raise PreconditionError("max_subdivisions must be >= 1")

    def loosened(self, factor: float) -> "QuadratureConfig":
        return QuadratureConfig(
            rel_tol=min(self.rel_tol * factor, 1e-2),
            abs_tol=self.abs_tol,
            pv_exclusion=self.pv_exclusion,
            max_subdivisions=self.max_subdivisions,
        )


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class Cutoff:
    """High-frequency cutoff; defaults to mc^2/hbar."""

    omega_max: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not (self.omega_max > 0 and math.isfinite(self.omega_max)):
            raise PreconditionError(f"cutoff must be positive and finite, got {self.omega_max}")


class QuadResult(NamedTuple):
    value: float
    error: float
    n_eval: int


def _as_omega(Omega) -> float:
    if isinstance(Omega, Cutoff):
        return Omega.omega_max
    if Omega is None:
        return DEFAULT_CUTOFF
    return float(Omega)


@lru_cache(maxsize=None)
def kronrod_rule(n: int = 10):
    """Nodes and weights of the (n, 2n+1) Gauss-Kronrod pair on [-1, 1].

    The n+1 extra nodes are the zeros of the Stieltjes polynomial, i.e. the
    degree n+1 polynomial orthogonal to all lower degrees under the weight
    P_n(x).  Weights follow from exactness on P_0..P_2n.

    Returns ``(x, w_kronrod, w_gauss)`` where ``w_gauss`` is zero on the
    Kronrod-only nodes.
    """
    xq, wq = _leg.leggauss(3 * n + 3)
    basis = np.eye(n + 2)
    P = np.array([_leg.legval(xq, basis[j]) for j in range(n + 2)])
    M = (P[: n + 1] * P[n] * wq) @ P.T
    coef = np.append(np.linalg.solve(M[:, : n + 1], -M[:, n + 1]), 1.0)
    ext = np.sort(_leg.legroots(coef).real)
    xg, wg = _leg.leggauss(n)
    x = np.sort(np.concatenate([xg, ext]))
    x[np.abs(x) < 1e-15] = 0.0
    V = np.array([_leg.legval(x, np.eye(2 * n + 1)[k]) for k in range(2 * n + 1)])
    rhs = np.zeros(2 * n + 1)
    rhs[0] = 2.0
    wk = np.linalg.solve(V, rhs)
    wgk = np.zeros_like(x)
    for xi, wi in zip(xg, wg):
        wgk[np.argmin(np.abs(x - xi))] = wi
    return x, wk, wgk


def _panel_estimates(f, lo, hi):
    x, wk, wg = kronrod_rule()
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    fv = np.asarray(f(nodes.ravel()))
    if fv.shape != (nodes.size,):
        fv = np.broadcast_to(fv, (nodes.size,))
    fv = fv.reshape(nodes.shape)
    if not np.all(np.isfinite(fv)):
        bad = nodes[~np.isfinite(fv)][0]
        raise PreconditionError(f"integrand is not finite at x={bad!r}")
    resk = fv @ wk
    resg = fv @ wg
    mean = 0.5 * resk
    resasc = np.abs(np.abs(fv - mean[:, None]) @ wk) * np.abs(half)
    resabs = (np.abs(fv) @ wk) * np.abs(half)
    err = np.abs((resk - resg) * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return resk * half, err, nodes.size


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    points: Sequence[float] = (),
) -> QuadResult:
    """Globally adaptive G10/K21 quadrature of ``f`` over [a, b].

    ``points`` are interior breakpoints (peaks, kinks) that panels must
    not straddle.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        r = integrate(f, b, a, cfg, points)
        return QuadResult(-r.value, r.error, r.n_eval)
    inner = [float(p) for p in points if a < p < b]
    edges = np.unique(np.array([a, *inner, b]))
    lo, hi = edges[:-1], edges[1:]
    vals, errs, n_eval = _panel_estimates(f, lo, hi)
    while True:
        total = vals.sum()
        err = errs.sum()
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if err <= tol:
            return QuadResult(total if np.iscomplexobj(total) else float(total), float(err), n_eval)
        splittable = (hi - lo) > 64 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        cand = np.flatnonzero(splittable)
        if cand.size == 0 or lo.size >= cfg.max_subdivisions:
            raise ConvergenceError(
                f"adaptive quadrature on [{a}, {b}] did not converge "
                f"({lo.size} panels)",
                estimate=complex(total) if np.iscomplexobj(total) else float(total),
                error=float(err),
            )
        order = cand[np.argsort(-errs[cand])]
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, err - 0.5 * tol)) + 1
        k = max(1, min(k, order.size, cfg.max_subdivisions - lo.size))
        pick = order[:k]
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nv, ne, ncount = _panel_estimates(f, new_lo, new_hi)
        n_eval += ncount
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


def _single_panel(f, lo, hi) -> QuadResult:
    v, e, n = _panel_estimates(f, np.array([lo]), np.array([hi]))
    return QuadResult(float(v[0]), float(e[0]), n)


def pv_integral(
    f: Callable[[np.ndarray], np.ndarray],
    pole: float,
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    points: Sequence[float] = (),
) -> QuadResult:
    """Cauchy principal value of ``f`` over [a, b] with a simple pole inside.

    ``f`` is the full integrand, pole included.  The reported error adds
    the change of the extrapolated value under halving of the exclusion
    width.
    """
    pole = float(pole)
    a = float(a)
    b = float(b)
    if not a < pole < b:
        raise PreconditionError(f"pole {pole} must lie strictly inside ({a}, {b})")
    h = 0.5 * min(pole - a, b - pole)
    eps = cfg.pv_exclusion * abs(pole)
    if eps <= 0 or eps > 0.25 * h:
        eps = 0.25 * h * cfg.pv_exclusion

    def folded(t):
        return f(pole + t) + f(pole - t)

    left_pts = [p for p in points if a < p < pole - h]
    right_pts = [p for p in points if pole + h < p < b]
    fold_pts = sorted(abs(p - pole) for p in points if eps < abs(p - pole) < h)

    left = integrate(f, a, pole - h, cfg, left_pts)
    right = integrate(f, pole + h, b, cfg, right_pts)
    j1 = integrate(folded, eps, h, cfg, fold_pts)
    # the slivers are O(eps) corrections on which the folded sum is
    # smooth but cancellation-limited: one K21 panel each, no refinement
    j2 = _single_panel(folded, 0.5 * eps, eps)
    j3 = _single_panel(folded, 0.25 * eps, 0.5 * eps)
    outer = left.value + right.value
    est = outer + j1.value + 2.0 * j2.value
    est_half = outer + j1.value + j2.value + 2.0 * j3.value
    err = left.error + right.error + j1.error + 3 * j2.error + 2 * j3.error + abs(est - est_half)
    n = left.n_eval + right.n_eval + j1.n_eval + j2.n_eval + j3.n_eval
    return QuadResult(est, float(err), n)


class Denominator(str, Enum):
    OMEGA_PLUS_OMEGA0 = "omega_plus_omega0"
    OMEGA0SQ_MINUS_OMEGASQ = "omega0sq_minus_omegasq"


def _denominator(d) -> Denominator:
    aliases = {"plus": Denominator.OMEGA_PLUS_OMEGA0, "minus_sq": Denominator.OMEGA0SQ_MINUS_OMEGASQ}
    if isinstance(d, Denominator):
        return d
    if d in aliases:
        return aliases[d]
    return Denominator(d)


def _log_breakpoints(omega0: float, Omega: float) -> list[float]:
    # decade breakpoints help the bisection when Omega/omega0 is huge
    base = omega0 if omega0 > 0 else Omega * 1e-6
    pts = [base * 10.0**k for k in range(-3, 12)]
    return [p for p in pts if 0 < p < Omega]


def cutoff_moment(
    omega0: float,
    power: int,
    denominator="plus",
    Omega=None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Integral over [0, Omega] of omega**power / D(omega).

    ``D`` is ``omega + omega0`` or ``omega0**2 - omega**2`` (principal
    value).  ``power`` 0 is accepted as well; it is the renormalised
    integrand of the level shift.
    """
    Omega = _as_omega(Omega)
    den = _denominator(denominator)
    if power not in (0, 1, 2, 3):
        raise PreconditionError(f"power must be 0..3, got {power}")
    if den is Denominator.OMEGA_PLUS_OMEGA0:
        if not (omega0 >= 0 and Omega > omega0):
            raise PreconditionError(f"need Omega > omega0 >= 0 (omega0={omega0}, Omega={Omega})")
        if omega0 == 0 and power == 0:
            raise PreconditionError("power 0 with omega0 = 0 diverges at the origin")
        p = power
        r = integrate(lambda w: w**p / (w + omega0), 0.0, Omega, cfg, _log_breakpoints(omega0, Omega))
        return float(r.value)
    if not (omega0 > 0 and Omega > omega0):
        raise PreconditionError(f"need Omega > omega0 > 0 (omega0={omega0}, Omega={Omega})")
    # pole removed by subtraction: w^p/(w0^2 - w^2) = g(w)/(w0 - w) with
    # g = w^p/(w0 + w); the folded form loses digits when Omega hugs w0
    p = power
    w0 = float(omega0)
    g0 = w0**p / (2 * w0)
    dg0 = (p * w0 ** (p - 1) * 2 * w0 - w0**p) / (2 * w0) ** 2 if p else -1.0 / (2 * w0) ** 2

    def regular(w):
        d = w0 - w
        close = np.abs(d) < 1e-9 * w0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (w**p / (w0 + w) - g0) / d
        return np.where(close, -dg0, q)

    pts = sorted(set(_log_breakpoints(w0, Omega)) | {w0})
    r = integrate(regular, 0.0, Omega, cfg, [x for x in pts if 0 < x < Omega])
    return float(r.value - g0 * math.log((Omega - w0) / w0))


class Split(NamedTuple):
    resonant: float
    nonresonant: float


def resonant_nonresonant_split(omega0: float, Omega=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Split:
    """On-shell and off-shell halves of -PV int omega/(omega0^2 - omega^2)."""
    Omega = _as_omega(Omega)
    if not (Omega > omega0 > 0):
        raise PreconditionError(f"need Omega > omega0 > 0 (omega0={omega0}, Omega={Omega})")
    pts = _log_breakpoints(omega0, Omega)
    res = pv_integral(lambda w: 1.0 / (w - omega0), omega0, 0.0, Omega, cfg, pts)
    non = integrate(lambda w: 1.0 / (w + omega0), 0.0, Omega, cfg, pts)
    return Split(0.5 * res.value, 0.5 * non.value)


# Closed forms, kept as independent oracles for the numeric engine.


def closed_moment(omega0: float, power: int, denominator, Omega: float) -> float:
    den = _denominator(denominator)
    W, w = float(Omega), float(omega0)
    if den is Denominator.OMEGA_PLUS_OMEGA0:
        L = math.log1p(W / w) if w > 0 else math.inf
        if power == 0:
            return L
        if power == 1:
            return W - (w * L if w > 0 else 0.0)
        if power == 2:
            return W * W / 2 - w * W + (w * w * L if w > 0 else 0.0)
        if power == 3:
            return W**3 / 3 - w * W * W / 2 + w * w * W - (w**3 * L if w > 0 else 0.0)
    else:
        # log((W^2 - w^2)/w^2) and log((W + w)/(W - w)), cancellation-safe
        lsq = math.log((W - w) / w) + math.log1p(W / w)
        lratio = math.log1p(2 * w / (W - w))
        if power == 0:
            return lratio / (2 * w)
        if power == 1:
            return -0.5 * lsq
        if power == 2:
            return -W + 0.5 * w * lratio
        if power == 3:
            return -W * W / 2 - 0.5 * w * w * lsq
    raise PreconditionError(f"unsupported power {power}")


def closed_split(omega0: float, Omega: float) -> Split:
    return Split(0.5 * math.log((Omega - omega0) / omega0), 0.5 * math.log1p(Omega / omega0))


@lru_cache(maxsize=16)
def _legendre(order: int):
    return _leg.leggauss(order)


def composite_gauss(breaks: Sequence[float], order: int = 16):
    """Nodes and weights of a Gauss-Legendre rule on each [breaks[i], breaks[i+1]]."""
    b = np.unique(np.asarray(breaks, float))
    t, w = _legendre(order)
    lo, hi = b[:-1], b[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
