import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from bethelog.energies import bethe_log_mean
from bethelog.errors import PreconditionError
from bethelog.hydrogen import (
    bound_oscillator_strength_1s,
    bound_radial_integral,
    build_hydrogen,
    continuum_df_domega_1s,
    continuum_radial_integral,
    default_grid,
    hydrogen_table,
    radial_function,
)
from bethelog.spectrum import ContinuumGrid, static_polarizability, sum_rule_shares, trk_sum



def ln_k0_oracle(n_max=4000):
    """ln(k0/Ry) for 1s from the closed-form oscillator densities.

    Bound sums truncated at N and N/2 are Richardson-combined (1/N^2 tail).
    """
    wb = lambda n: 0.5 * (1 - 1 / n**2)
    g = lambda t: float(continuum_df_domega_1s(math.exp(t))) * math.exp(3 * t)
    kw = dict(limit=2000, epsabs=0, epsrel=1e-13)
    cn = quad(lambda t: g(t) * math.log(2 * math.exp(t)), math.log(0.5), 200, **kw)[0]
    cd = quad(g, math.log(0.5), 200, **kw)[0]

    def ratio(N):
        f = [bound_oscillator_strength_1s(n) * wb(n) ** 2 for n in range(2, N + 1)]
        num = math.fsum(fi * math.log(2 * wb(n)) for fi, n in zip(f, range(2, N + 1)))
        return (num + cn) / (math.fsum(f) + cd)

    return (4 * ratio(n_max) - ratio(n_max // 2)) / 3


def test_two_line_spectrum():
    s = build_hydrogen("1s", 2)
    assert len(s) == 1
    assert s.transitions[0].omega == pytest.approx(0.375, rel=1e-15)
    # |<2p|r|1s>|^2 summed over sublevels = 2^15 / 3^9
    assert s.transitions[0].d2 == pytest.approx(2**15 / 3**9, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 5, 12, 20])
def test_bound_f_against_closed_form(n):
    R = bound_radial_integral(1, n)
    f = (2 / 3) * 0.5 * (1 - 1 / n**2) * R * R
    assert f == pytest.approx(bound_oscillator_strength_1s(n), rel=1e-9)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_2s_bound_against_mpmath(n):
    u2s = lambda r: 2 ** -0.5 * r * (1 - r / 2) * mp.e ** (-r / 2)
    lpow = lambda r: radial_function(n, 1, np.array([float(r)]))[0]
    ref = mp.quad(lambda r: u2s(r) * lpow(r) * r, [0, 10, 40, 80])
    assert bound_radial_integral(2, n) == pytest.approx(float(ref), rel=1e-8)


def test_radial_functions_normalized():
    r = np.linspace(0, 400, 400001)
    for n, l in [(1, 0), (2, 0), (2, 1), (7, 1)]:
        u = radial_function(n, l, r)
        assert np.trapezoid(u * u, r) if hasattr(np, 'trapezoid') else np.trapz(u * u, r) == pytest.approx(1.0, rel=1e-7)


@pytest.mark.parametrize("omega", [0.55, 1.0, 7.0, 300.0, 4e4, 1e6])
def test_continuum_against_closed_form(omega):
    R = continuum_radial_integral(1, np.array([omega]))[0]
    f = (2 / 3) * omega * R * R
    assert f == pytest.approx(float(continuum_df_domega_1s(omega)), rel=5e-5)


def test_continuum_closed_form_against_mpmath_coulomb():
    # length-form integral with energy-normalized regular Coulomb function
    for E in (0.3, 2.0):
        k = math.sqrt(2 * E)
        uE = lambda r: mp.sqrt(2 / (mp.pi * k)) * mp.coulombf(1, -1 / k, k * r)
        u1s = lambda r: 2 * r * mp.e**-r
        R = mp.quad(lambda r: u1s(r) * uE(r) * r, [0, 5, 15, 40])
        f = (2 / 3) * (E + 0.5) * R**2
        assert float(continuum_df_domega_1s(E + 0.5)) == pytest.approx(float(f), rel=1e-8)


def test_closed_form_shares():
    cont = quad(lambda t: continuum_df_domega_1s(math.exp(t)) * math.exp(t), math.log(0.5), 40, limit=400)[0]
    bound = math.fsum(bound_oscillator_strength_1s(n) for n in range(2, 3000))
    assert bound == pytest.approx(0.565, abs=5e-4)
    assert cont == pytest.approx(0.435, abs=5e-4)
    assert bound + cont == pytest.approx(1.0, abs=1e-4)


def test_bound_share_large_nmax():
    s = build_hydrogen("1s", 60)
    assert trk_sum(s) == pytest.approx(0.565, abs=0.005)


def test_bound_f_decreasing():
    s = build_hydrogen("1s", 25)
    f = s.oscillator_strengths
    assert np.all(f > 0)
    assert np.all(np.diff(f) < 0)


def test_full_spectrum_sum_rules(hydrogen_1s):
    sh = sum_rule_shares(hydrogen_1s)
    assert sh["trk_total"] == pytest.approx(1.0, abs=0.01)
    assert sh["continuum"] == pytest.approx(0.435, abs=0.01)
    assert static_polarizability(hydrogen_1s) == pytest.approx(4.5, rel=0.01)


def test_ln_k0_oracle_converged():
    assert ln_k0_oracle(4000) == pytest.approx(ln_k0_oracle(2000), abs=1e-8)
    assert ln_k0_oracle() == pytest.approx(2.9841285558, abs=1e-9)


def test_bethe_log_1s(hydrogen_1s):
    assert bethe_log_mean(hydrogen_1s) == pytest.approx(ln_k0_oracle(), abs=0.06)


def test_2s_sum_rules():
    s = build_hydrogen("2s", 20, default_grid("2s", 300))
    assert trk_sum(s) == pytest.approx(1.0, abs=0.01)
    # exact 2s static polarizability is 120 a.u.
    assert static_polarizability(s) == pytest.approx(120.0, rel=0.01)


def test_preconditions():
    with pytest.raises(PreconditionError):
        build_hydrogen("1s", 1)
    with pytest.raises(PreconditionError):
        build_hydrogen("2s", 2)
    with pytest.raises(PreconditionError):
        build_hydrogen("3d", 5)
    with pytest.raises(PreconditionError):
        build_hydrogen("1s", 5, ContinuumGrid(0.4, 10.0, 10))
    with pytest.raises(PreconditionError):
        build_hydrogen("2s", 5, default_grid("1s", 10))


def test_table_lists_every_line():
    s = build_hydrogen("1s", 6)
    text = hydrogen_table(s)
    assert text.splitlines()[0] == "label,omega,d2,f"
    assert len(text.splitlines()) == 6
