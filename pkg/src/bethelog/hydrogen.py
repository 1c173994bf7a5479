"""Hydrogen ns -> p spectra from a radial Coulomb solver.

Bound lines use analytic radial functions integrated numerically in
length form. Continuum lines come from a Numerov march on the mapped mesh
x = r + beta ln r, regular-series start, and the acceleration-form dipole
integral, which stays accurate up to omega ~ 1e6 a.u.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_legendre

from .errors import PreconditionError
from .spectrum import ContinuumGrid, Spectrum, Transition

STATES = {"1s": 1, "2s": 2}
DEFAULT_OMEGA_MAX = 1.0e6
DEFAULT_NODES = 400


def _principal(state: str) -> int:
    try:
        return STATES[state]
    except KeyError:
        raise PreconditionError(f"state must be one of {sorted(STATES)}, got {state!r}") from None


def ionization_frequency(state: str) -> float:
    n0 = _principal(state)
    return 0.5 / n0**2


def default_grid(state: str = "1s", nodes: int = DEFAULT_NODES, omega_max: float = DEFAULT_OMEGA_MAX,
                 spacing_rule: str = "geometric") -> ContinuumGrid:
    return ContinuumGrid(ionization_frequency(state), omega_max, nodes, spacing_rule)


def radial_function(n: int, l: int, r: np.ndarray) -> np.ndarray:
    """u_nl(r) = r R_nl(r), unit-normalized."""
    x = 2.0 * r / n
    lognorm = 0.5 * (3 * math.log(2.0 / n) + gammaln(n - l) - math.log(2.0 * n) - gammaln(n + l + 1))
    return r * np.exp(lognorm - r / n) * x**l * eval_genlaguerre(n - l - 1, 2 * l + 1, x)


@lru_cache(maxsize=8)
def _gauss_mesh(r_cut: float, order: int):
    t, w = roots_legendre(order)
    return 0.5 * r_cut * (t + 1.0), 0.5 * r_cut * w


def bound_radial_integral(n0: int, n: int, order: int = 3000) -> float:
    """<n p | r | n0 s> by Gauss-Legendre on [0, 40 n0]."""
    r, w = _gauss_mesh(40.0 * n0, order)
    return float(np.sum(w * radial_function(n0, 0, r) * radial_function(n, 1, r) * r))


def bound_oscillator_strength_1s(n: int) -> float:
    """Closed-form 1s -> np oscillator strength, used as an oracle."""
    if n < 2:
        raise PreconditionError("n must be >= 2")
    if n == 2:
        return 2.0**8 * 32 / (3.0 * 3**8)
    logf = 8 * math.log(2) + 5 * math.log(n) + (2 * n - 4) * math.log(n - 1) - (2 * n + 4) * math.log(n + 1)
    return math.exp(logf) / 3.0


def continuum_df_domega_1s(omega):
    """Closed-form 1s photoionization oscillator-strength density."""
    k = np.sqrt(2.0 * np.asarray(omega, float) - 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        return 2.0**8 / 3.0 / (1 + k * k) ** 4 * np.exp(-4 * np.arctan(k) / k) / (-np.expm1(-2 * np.pi / k))


def _energy_norm(E: np.ndarray, l: int) -> np.ndarray:
    # makes u_E ~ sqrt(2/(pi k)) sin(...) at large r
    k = np.sqrt(2.0 * E)
    with np.errstate(divide="ignore"):
        N = 2.0 / np.sqrt(-np.expm1(-2 * np.pi / k))
    for j in range(1, l + 1):
        N = N * np.sqrt(1 + j * j * k * k) / (j * (2 * j + 1))
    return N


def _acceleration_integral(E: np.ndarray, n0: int, l: int, r_max: float, dx: float, r_min: float,
                           beta: float = 1.0) -> np.ndarray:
    """int u_{n0 s} u_{E l} / r^2 dr for a band of energies (Numerov + Simpson)."""
    xmin = r_min + beta * math.log(r_min)
    xmax = r_max + beta * math.log(r_max)
    n = int(math.ceil((xmax - xmin) / dx))
    n += n % 2 == 0
    x = np.linspace(xmin, xmax, n)
    h = x[1] - x[0]
    r = np.where(x < beta, np.exp(x / beta), x)
    for _ in range(100):
        r = r - (r + beta * np.log(r) - x) / (1 + beta / r)
    rx = r / (r + beta)
    rxx = rx * beta / (r + beta) ** 2
    rxxx = rx * beta * (beta - 2 * r) / (r + beta) ** 4
    A = rx**2 * (2 / r - l * (l + 1) / r**2) + 0.5 * rxxx / rx - 0.75 * (rxx / rx) ** 2
    B = 2 * rx**2
    sw = np.ones(n)
    sw[1:-1:2] = 4
    sw[2:-1:2] = 2
    g = sw * (h / 3) * radial_function(n0, 0, r) * rx**1.5 / r**2

    N = _energy_norm(E, l)

    def series(rr):
        b1 = np.ones_like(E)
        b2 = np.zeros_like(E)
        s = rr ** (l + 1) * b1
        for j in range(1, 40):
            bj = -(2 * b1 + 2 * E * b2) / (j * (j + 2 * l + 1))
            s = s + bj * rr ** (j + l + 1)
            b2, b1 = b1, bj
        return s * N

    p0 = series(r[0]) / math.sqrt(rx[0])
    p1 = series(r[1]) / math.sqrt(rx[1])
    h2 = h * h / 12
    coef = 1 + h2 * (A[:, None] + E[None, :] * B[:, None])
    tot = g[0] * p0 + g[1] * p1
    for i in range(1, n - 1):
        p2 = ((12 - 10 * coef[i]) * p1 - coef[i - 1] * p0) / coef[i + 1]
        tot += g[i + 1] * p2
        p0, p1 = p1, p2
    return tot


def continuum_radial_integral(n0: int, omega: np.ndarray, points_per_wave: float = 24.0) -> np.ndarray:
    """Length-form <E p | r | n0 s> (energy-normalized) at photon frequencies omega."""
    omega = np.asarray(omega, float)
    E = np.maximum(omega - 0.5 / n0**2, 0.0)
    out = np.empty_like(omega)
    r_max = 30.0 * n0
    order = np.argsort(E)
    # octave bands in k, each marched on the mesh its fastest member needs
    k = np.sqrt(2 * E[order])
    edges = [0]
    kref = max(k[0], 1.0)
    for i in range(1, len(k)):
        if k[i] > 2 * kref:
            edges.append(i)
            kref = k[i]
    edges.append(len(k))
    for a, b in zip(edges[:-1], edges[1:]):
        idx = order[a:b]
        kmax = float(k[b - 1])
        dx = min(0.01, 2 * math.pi / (max(kmax, 1e-12) * points_per_wave))
        r_min = min(1e-5, 0.01 / kmax) if kmax > 0 else 1e-5
        acc = _acceleration_integral(E[idx], n0, 1, r_max, dx, r_min)
        out[idx] = acc / omega[idx] ** 2
    return out


def _validate(state: str, n_max: int, grid):
    n0 = _principal(state)
    if isinstance(n_max, bool) or not isinstance(n_max, (int, np.integer)) or n_max < 2:
        raise PreconditionError(f"n_max must be an integer >= 2, got {n_max!r}")
    if n_max <= n0:
        raise PreconditionError(f"n_max must exceed the principal number of {state}")
    if grid is not None:
        thr = ionization_frequency(state)
        if not math.isclose(grid.omega_threshold, thr, rel_tol=1e-12):
            raise PreconditionError(
                f"continuum threshold must be the {state} ionization frequency {thr}, got {grid.omega_threshold}"
            )
    return n0


def build_hydrogen(state: str = "1s", n_max: int = 20, grid: ContinuumGrid | None = None) -> Spectrum:
    """ns -> n'p bound lines up to n_max, plus grid-weighted continuum lines."""
    n0 = _validate(state, n_max, grid)
    return _build(state, int(n0), int(n_max), grid)


@lru_cache(maxsize=16)
def _build(state, n0, n_max, grid):
    lines = []
    for n in range(n0 + 1, n_max + 1):
        R = bound_radial_integral(n0, n)
        omega = 0.5 * (1.0 / n0**2 - 1.0 / n**2)
        lines.append(Transition(f"{state}-{n}p", omega, R * R))
    if grid is not None:
        w = grid.frequencies()
        R = continuum_radial_integral(n0, w)
        d2 = R * R * grid.weights()
        for i, (om, dd) in enumerate(zip(w, d2)):
            lines.append(Transition(f"{state}-Ep[{i}]", float(om), float(dd)))
    return Spectrum(f"H({state})", tuple(lines), grid)


def hydrogen_table(spectrum: Spectrum) -> str:
    """CSV table of the lines: label, omega, d2, f."""
    rows = ["label,omega,d2,f"]
    for t in spectrum.transitions:
        rows.append(f"{t.label},{t.omega:.12e},{t.d2:.12e},{t.oscillator_strength:.12e}")
    return "\n".join(rows) + "\n"
