import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from bethelog.constants import C_LIGHT
from bethelog.errors import AccuracyError, InvariantError, PreconditionError, SchemaError
from bethelog.polarizability import (
    DampingModel,
    DilutenessWarning,
    Sign,
    TabulatedSpectralFunction,
    alpha_complex,
    alpha_derivative,
    alpha_extended,
    alpha_imag,
    alpha_real,
    delta_n,
    kk_real_from_imag,
    optical_theorem_residual,
    radiative_width,
    resonance_points,
)
from bethelog.quadrature import QuadratureConfig
from bethelog.spectrum import Spectrum, Transition, from_lines, single_line, static_polarizability

THREE = from_lines([(0.4, 1.2), (1.0, 0.5), (2.5, 0.3)])
KK_CFG = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-14, max_subdivisions=4000)


def lorentz_imag(w, w0, d2, g, s):
    """alpha_I of one line from the two Lorentzians written out by hand."""
    return d2 / 3 * (g / ((w0 - w) ** 2 + g * g) - s * g / ((w0 + w) ** 2 + g * g))


def rel(ratio, sign=Sign.PLUS):
    return DampingModel({"line": ratio}, sign)


def test_static_limit_matches_sum(three_lines):
    a = alpha_complex(three_lines, DampingModel.undamped(), 0.0)
    assert a.real == pytest.approx(static_polarizability(three_lines), rel=1e-14)
    assert a.imag == 0.0
    for sign in Sign:
        tiny = DampingModel({}, sign, 1e-12)
        assert alpha_real(three_lines, tiny, 0.0) == pytest.approx(static_polarizability(three_lines), rel=1e-12)


def test_resonance_peak(toy):
    assert alpha_imag(toy, rel(1e-3), 1.0) == pytest.approx(500.0, rel=1e-3)


def test_far_above_real_part(toy):
    assert alpha_real(toy, DampingModel.undamped(), 100.0) == pytest.approx(-1.0001e-4, rel=1e-4)
    assert alpha_real(toy, DampingModel.undamped(), 100.0) == pytest.approx(0.5 * 2 / (1 - 1e4), rel=1e-14)


@pytest.mark.parametrize("sign", list(Sign))
@pytest.mark.parametrize("w", [0.01, 0.5, 0.999, 1.0, 2.5, 40.0])
def test_imag_matches_hand_lorentzians(toy, sign, w):
    g = 1e-3
    assert alpha_imag(toy, rel(g, sign), w) == pytest.approx(lorentz_imag(w, 1.0, 1.5, g, sign.factor), rel=1e-12)


def test_far_below_small_positive(toy):
    v = alpha_imag(toy, rel(1e-3), 1e-2)
    assert 0 < v < 1e-4


@pytest.mark.parametrize("g", [1e-4, 1e-3])
def test_lorentzian_area(toy, g):
    d = rel(g)
    pts = resonance_points(toy, d, 2.0)
    area = quad(lambda w: alpha_imag(toy, d, w), 0.0, 2.0, points=pts, limit=500, epsabs=0, epsrel=1e-11)[0]
    assert area == pytest.approx(math.pi * 1.5 / 3, rel=1e-3)


@pytest.mark.parametrize("w", [0.5, 2.0])
@pytest.mark.parametrize("g", [1e-5, 1e-4, 1e-3])
def test_sign_flip_weakness(toy, w, g):
    plus = alpha_complex(toy, rel(g, Sign.PLUS), w)
    minus = alpha_complex(toy, rel(g, Sign.MINUS), w)
    # measured against |alpha|: relative to alpha_I alone the nonresonant
    # Lorentzian is O(1) off resonance
    assert abs(plus.imag - minus.imag) / abs(plus) <= 3 * g
    assert plus.real == pytest.approx(minus.real, rel=1e-15)


@given(w=st.floats(0.01, 20.0), sign=st.sampled_from(list(Sign)))
def test_crossing_symmetry(w, sign):
    three_lines = THREE
    d = DampingModel({}, sign, 1e-3)
    a, b = alpha_extended(three_lines, d, w), alpha_extended(three_lines, d, -w)
    if sign is Sign.PLUS:
        assert b.real == pytest.approx(a.real, rel=1e-12, abs=1e-12)
        assert b.imag == pytest.approx(-a.imag, rel=1e-12, abs=1e-12)
    else:
        # with both widths entering as -i gamma the formula is simply even
        assert b == pytest.approx(a, rel=1e-12)


def test_negative_omega_rejected(toy):
    with pytest.raises(PreconditionError):
        alpha_complex(toy, None, -0.1)


def test_derivative_matches_difference(three_lines):
    d = DampingModel({}, Sign.PLUS, 1e-2)
    h = 1e-6
    for w in (0.2, 0.99, 3.0):
        fd = (alpha_complex(three_lines, d, w + h) - alpha_complex(three_lines, d, w - h)) / (2 * h)
        assert alpha_derivative(three_lines, d, w) == pytest.approx(fd, rel=1e-6)


def test_damping_invariants(toy):
    with pytest.raises(InvariantError):
        DampingModel({"line": -1e-3})
    with pytest.raises(InvariantError):
        DampingModel({"line": math.nan})
    with pytest.raises(PreconditionError):
        DampingModel({}).gammas(toy)
    with pytest.raises(PreconditionError):
        rel(2e-3).require_narrow(toy)
    rel(1e-3).require_narrow(toy)
    with pytest.raises(PreconditionError):
        DampingModel.undamped().require_positive(toy)


# Kramers-Kronig


def test_kk_zero():
    t = TabulatedSpectralFunction(np.linspace(0.0, 10.0, 11), np.zeros(11))
    assert kk_real_from_imag(t, 3.0).value == 0.0
    assert kk_real_from_imag(lambda y: 0 * y, 3.0, upper=10.0).value == 0.0


def test_kk_static_from_callable(toy):
    d = rel(1e-3)
    r = kk_real_from_imag(lambda y: alpha_imag(toy, d, y), 0.0, KK_CFG, upper=1e4,
                          points=resonance_points(toy, d, 1e4))
    assert r.value == pytest.approx(static_polarizability(toy), rel=1e-3)
    assert r.tail_bound < 1e-3 * r.value


def test_kk_two_omega0_from_callable(toy):
    d = rel(1e-3)
    r = kk_real_from_imag(lambda y: alpha_imag(toy, d, y), 2.0, KK_CFG, upper=1e4,
                          points=resonance_points(toy, d, 1e4))
    assert r.value == pytest.approx(alpha_real(toy, d, 2.0), rel=1e-3)


def _tabulate(spectrum, d, top=1e4):
    pts = resonance_points(spectrum, d, top, widths=(0, 0.5, 1, 2, 4, 8, 16, 32, 64, 128))
    grid = np.unique(np.concatenate([np.geomspace(1e-4, top, 3000), pts, [0.0]]))
    for w, g in zip(spectrum.omegas, d.gammas(spectrum)):
        grid = np.union1d(grid, w + g * np.linspace(-30, 30, 601))
    return TabulatedSpectralFunction.sample(lambda y: alpha_imag(spectrum, d, y), grid[grid >= 0])


@pytest.mark.parametrize("w", [0.0, 0.3, 2.0, 5.0])
def test_kk_tabulated(three_lines, w):
    d = DampingModel({t.label: 1e-3 * t.omega for t in three_lines.transitions})
    t = _tabulate(three_lines, d)
    assert kk_real_from_imag(t, w).value == pytest.approx(alpha_real(three_lines, d, w), rel=1e-3)


def test_kk_tail_error(toy):
    d = rel(1e-3)
    with pytest.raises(AccuracyError):
        kk_real_from_imag(lambda y: alpha_imag(toy, d, y), 0.0, upper=1.1)


def test_kk_callable_needs_upper(toy):
    with pytest.raises(PreconditionError):
        kk_real_from_imag(lambda y: y, 0.5)


def test_kk_pole_at_grid_top_rejected():
    t = TabulatedSpectralFunction(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(PreconditionError):
        kk_real_from_imag(t, 2.0)


def test_tabulated_invariants():
    with pytest.raises(InvariantError):
        TabulatedSpectralFunction(np.array([1.0, 0.5]), np.array([0.0, 0.0]))
    with pytest.raises(InvariantError):
        TabulatedSpectralFunction(np.array([0.0, 1.0]), np.array([0.0]))
    with pytest.raises(InvariantError):
        TabulatedSpectralFunction(np.array([0.0, 1.0]), np.array([0.0, math.inf]))


def test_csv_round_trip(tmp_path):
    t = TabulatedSpectralFunction(np.array([0.0, 0.1, 1 / 3]), np.array([0.0, 2.5e-9, 1 / 7]))
    p = tmp_path / "a.csv"
    t.to_csv(p)
    back = TabulatedSpectralFunction.from_csv(p)
    assert np.array_equal(back.omegas, t.omegas)
    assert np.array_equal(back.values, t.values)


@pytest.mark.parametrize("text, field", [("w,v\n1,2\n", "header"), ("omega,value\n1,x\n2,3\n", "line 2"),
                                         ("omega,value\n1,2,3\n", "line 2")])
def test_csv_schema_errors(text, field):
    with pytest.raises(SchemaError) as info:
        TabulatedSpectralFunction.from_csv(io.StringIO(text))
    assert info.value.field == field


# dilute gas and radiative diagnostics


def test_delta_n_examples(toy):
    assert delta_n(toy, DampingModel.undamped(), 0.0, 0.5) == 0.0
    N = 1e-6
    assert delta_n(toy, DampingModel.undamped(), N, 0.0) == pytest.approx(2 * math.pi * N * 1.0, rel=1e-14)
    with pytest.raises(PreconditionError):
        delta_n(toy, None, -1.0, 0.5)


def test_delta_n_warns_when_dense(toy):
    with pytest.warns(DilutenessWarning):
        delta_n(toy, rel(1e-3), 1e-3, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        delta_n(toy, rel(1e-3), 1e-9, 1.0)


def test_radiative_width_examples():
    assert radiative_width(Transition("a", 1.0, 3.0), 137.036) == pytest.approx(2.5905e-7, rel=1e-4)
    assert radiative_width(Transition("a", 1.0, 3.0)) == pytest.approx(2 / (3 * C_LIGHT**3), rel=1e-14)
    assert radiative_width(Transition("a", 1.0, 0.0)) == 0.0


def test_optical_theorem_at_line_center(toy):
    d = DampingModel.radiative(toy)
    a_i = alpha_imag(toy, d, 1.0)
    assert abs(optical_theorem_residual(toy, d, 1.0)) <= 1e-6 * a_i


def test_optical_theorem_undamped(toy):
    w = 0.7
    a_r = alpha_real(toy, DampingModel.undamped(), w)
    expect = -2 * w**3 / (3 * C_LIGHT**3) * a_r**2
    assert optical_theorem_residual(toy, DampingModel.undamped(), w) == pytest.approx(expect, rel=1e-12)


def test_optical_theorem_overdamped(toy):
    d = DampingModel.radiative(toy, scale=10.0)
    a_i = alpha_imag(toy, d, 1.0)
    assert optical_theorem_residual(toy, d, 1.0) == pytest.approx(0.9 * a_i, rel=1e-5)
    with pytest.raises(PreconditionError):
        optical_theorem_residual(toy, d, 0.0)


@given(st.lists(st.tuples(st.floats(0.05, 5.0), st.floats(1e-3, 10.0)), min_size=1, max_size=4),
       st.floats(0.0, 20.0))
def test_alpha_linear_in_lines(lines, w):
    s = from_lines(lines)
    d = DampingModel({}, Sign.PLUS, 1e-3)
    parts = [alpha_complex(Spectrum("x", (t,)), d, w) for t in s.transitions]
    assert alpha_complex(s, d, w) == pytest.approx(sum(parts), rel=1e-10, abs=1e-14)


def test_empty_spectrum_is_zero():
    s = Spectrum("none", ())
    assert alpha_complex(s, DampingModel.undamped(), 1.0) == 0
