"""Tests for the ODE module: recurrence, series solutions, termination,
and the Heun correspondence.

The recurrence coefficients are gated behind an independent oracle: the
series is substituted into the polynomial-multiplied ODE and every power's
coefficient must vanish.  That expansion is done from scratch here, using
only the ODE's published coefficient polynomials.
"""

import math

import numpy as np
import pytest

from lame3trf.scalar_kernels import InvalidParameterError, SingularValueError, jacobi_sn
from lame3trf.lame_series import (
    EvaluationPoint,
    FrobeniusSeries,
    IndicialExponent,
    LameParams,
    TerminationFamily,
    eval_series,
    eval_series_derivatives,
    heun_correspondence,
    heun_form_residual,
    indicial_exponents,
    ode_residual,
    recurrence_coeffs,
    series_coefficients,
    termination_alpha,
)


# ------------------------------------------------------------ oracle helper

def ode_power_coefficients(params, lam, c):
    """Coefficient of xi^(m+lam-1) in the polynomial-multiplied ODE residual.

    Substitutes y = sum c_n xi^(n+lam) into
    4 xi (xi-1)(xi-1/rho^2) y'' + 2 [3 xi^2 - 2(1+1/rho^2) xi + 1/rho^2] y'
      + [-alpha (alpha+1) xi + h/rho^2] y
    and collects powers.  Independent of the recurrence implementation.
    """
    r = params.rho ** -2
    al, h = params.alpha, params.h
    N = len(c) - 1
    out = []
    for m in range(N + 1):
        cm2 = c[m - 2] if m >= 2 else 0.0
        cm1 = c[m - 1] if m >= 1 else 0.0
        cm = c[m]
        e2, e1, e0 = m - 2 + lam, m - 1 + lam, m + lam
        term2 = cm2 * (4 * e2 * (e2 - 1) + 6 * e2 - al * (al + 1))
        term1 = cm1 * (-4 * (1 + r) * e1 * (e1 - 1) - 4 * (1 + r) * e1 + h * r)
        term0 = cm * (4 * r * e0 * (e0 - 1) + 2 * r * e0)
        out.append((term2 + term1 + term0, abs(term2) + abs(term1) + abs(term0)))
    return out


def find_z_for_xi(xi_target, rho):
    """Invert sn^2(z, rho) = xi_target by bisection on [0, 5]."""
    lo, hi = 0.0, 2.0
    while jacobi_sn(hi, rho) ** 2 < xi_target:
        hi += 0.5
    for _ in range(80):
        mid = (lo + hi) / 2
        if jacobi_sn(mid, rho) ** 2 < xi_target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


STD = LameParams(rho=0.5, alpha=3.0, h=1.0)


# ---------------------------------------------------------------- types

def test_lame_params_validation():
    with pytest.raises(InvalidParameterError):
        LameParams(rho=0.0, alpha=1.0, h=0.0)
    with pytest.raises(InvalidParameterError):
        LameParams(rho=1.2, alpha=1.0, h=0.0)
    LameParams(rho=0.5, alpha=-0.7, h=3.0)  # alpha unrestricted


def test_indicial_exponent_validation():
    with pytest.raises(InvalidParameterError):
        IndicialExponent(0.3)
    assert IndicialExponent(0.0).kind == "first"
    assert IndicialExponent(0.5).kind == "second"


def test_frobenius_series_rejects_zero_leading_coefficient():
    with pytest.raises(InvalidParameterError):
        FrobeniusSeries(lam=0.0, c=np.array([0.0, 1.0]), N=1)


def test_evaluation_point_consistency():
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    assert pt.mu == pytest.approx(-0.25 * 0.1)
    assert pt.eta == pytest.approx(-0.25 * 0.01)
    # rho^2 * eta = -mu^2 identity
    assert 0.25 * pt.eta == pytest.approx(-pt.mu**2, abs=1e-18)
    with pytest.raises(InvalidParameterError):
        EvaluationPoint(xi=0.1, mu=-0.025, eta=-0.01)  # inconsistent eta


def test_evaluation_point_with_z():
    z = find_z_for_xi(0.1, 0.5)
    pt = EvaluationPoint.from_xi(0.1, rho=0.5, z=z)
    assert pt.z == z
    with pytest.raises(InvalidParameterError):
        EvaluationPoint.from_xi(0.1, rho=0.5, z=z + 0.3)


# ------------------------------------------------------ indicial exponents

def test_indicial_exponents_values_and_tags():
    exps = indicial_exponents(STD)
    lams = sorted(e.lam for e in exps)
    assert lams == [0.0, 0.5]
    kinds = {e.lam: e.kind for e in exps}
    assert kinds[0.0] == "first"
    assert kinds[0.5] == "second"


# ------------------------------------------------------ recurrence_coeffs

def test_recurrence_a1_exact_value():
    rc = recurrence_coeffs(LameParams(rho=0.5, alpha=0.0, h=0.0), 0.0, 1)
    assert rc.A_n == pytest.approx(20.0 / 48.0, rel=0, abs=0)


def test_recurrence_b0_is_zero():
    rc = recurrence_coeffs(STD, 0.0, 0)
    assert rc.B_n == 0.0


def test_recurrence_denominator_positive():
    for lam in (0.0, 0.5):
        for n in range(0, 12):
            rc = recurrence_coeffs(STD, lam, n)
            assert np.isfinite(rc.A_n) and np.isfinite(rc.B_n)


def test_recurrence_b_zero_at_both_termination_roots():
    # numerator alpha(alpha+1) - 2(n-1+lam)(2(n+lam)-1) vanishes at
    # alpha = 2(n-1+lam) and alpha = -2(n-1+lam)-1
    for lam in (0.0, 0.5):
        for n in range(1, 11):
            for alpha in (2 * (n - 1 + lam), -2 * (n - 1 + lam) - 1):
                p = LameParams(rho=0.5, alpha=alpha, h=1.0)
                rc = recurrence_coeffs(p, lam, n)
                scale = max(abs(alpha * (alpha + 1)), 1.0)
                assert abs(rc.B_n) * abs(rc.D_n) < 1e-14 * scale


def test_recurrence_residual_oracle():
    # the gate: coefficients built from the recurrence must kill every
    # power of the independently expanded ODE polynomial
    rng = np.random.default_rng(41)
    for _ in range(8):
        p = LameParams(
            rho=float(rng.uniform(0.2, 0.9)),
            alpha=float(rng.uniform(-2, 5)),
            h=float(rng.uniform(-3, 3)),
        )
        for lam in (0.0, 0.5):
            ser = series_coefficients(p, lam, 1.0, 25)
            for m, (coef, scale) in enumerate(ode_power_coefficients(p, lam, ser.c)):
                assert abs(coef) <= 1e-12 * max(scale, 1.0), (p, lam, m)


# ---------------------------------------------------- series_coefficients

def test_series_n_zero():
    ser = series_coefficients(STD, 0.0, 2.0, 0)
    assert list(ser.c) == [2.0]
    assert ser.N == 0


def test_series_first_coefficient_ratio():
    ser = series_coefficients(STD, 0.0, 1.5, 3)
    rc = recurrence_coeffs(STD, 0.0, 0)
    assert ser.c[1] / ser.c[0] == pytest.approx(rc.A_n, rel=1e-15)


def test_series_epsilon_lambda_accepts_indicial_object():
    a = series_coefficients(STD, IndicialExponent(0.5), 1.0, 5)
    b = series_coefficients(STD, 0.5, 1.0, 5)
    assert np.allclose(a.c, b.c, rtol=0, atol=0)


# ------------------------------------------------------------ eval_series

def test_eval_series_at_origin():
    pt0 = EvaluationPoint.from_xi(0.0, rho=0.5)
    s0 = series_coefficients(STD, 0.0, 1.0, 10)
    s1 = series_coefficients(STD, 0.5, 1.0, 10)
    assert eval_series(s0, pt0) == 1.0
    assert eval_series(s1, pt0) == 0.0


def test_eval_series_linearity():
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    s = series_coefficients(STD, 0.0, 1.0, 10)
    s2 = series_coefficients(STD, 0.0, 2.0, 10)
    assert eval_series(s2, pt) == pytest.approx(2 * eval_series(s, pt), rel=1e-15)


def test_eval_series_warns_outside_radius():
    pt = EvaluationPoint.from_xi(0.6, rho=0.5)
    s = series_coefficients(STD, 0.0, 1.0, 10)
    with pytest.warns(RuntimeWarning):
        eval_series(s, pt)


def test_eval_series_derivatives_match_finite_differences():
    s = series_coefficients(STD, 0.5, 1.0, 20)
    xi = 0.12
    y, yp, ypp = eval_series_derivatives(s, xi)
    d = 1e-6
    yd = [eval_series(s, EvaluationPoint.from_xi(xi + k * d, rho=0.5)) for k in (-1, 0, 1)]
    assert y == pytest.approx(yd[1], rel=1e-12)
    assert yp == pytest.approx((yd[2] - yd[0]) / (2 * d), rel=1e-8)
    assert ypp == pytest.approx((yd[2] - 2 * yd[1] + yd[0]) / d**2, rel=1e-3)


# ------------------------------------------------------------ ode_residual

def test_ode_residual_zero_function():
    ser = series_coefficients(STD, 0.0, 1.0, 10)
    ser.c[:] = 0.0  # inject y == 0 past the c0 != 0 construction guard
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    assert ode_residual(STD, ser, pt, "algebraic") == 0.0


def test_ode_residual_algebraic_example():
    ser = series_coefficients(STD, 0.0, 1.0, 40)
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    assert abs(ode_residual(STD, ser, pt, "algebraic")) < 1e-12


def test_ode_residual_algebraic_grid():
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    for h in (0.0, 1.0):
        for alpha in (0.0, 3.0, 7.0):
            for lam in (0.0, 0.5):
                p = LameParams(rho=0.5, alpha=alpha, h=h)
                ser = series_coefficients(p, lam, 1.0, 40)
                res = ode_residual(p, ser, pt, "algebraic")
                y, yp, ypp = eval_series_derivatives(ser, 0.1)
                scale = max(abs(ypp), abs(yp), abs(y), 1e-30)
                assert abs(res) < 1e-12 * scale, (h, alpha, lam)


def test_ode_residual_weierstrass_form():
    z = find_z_for_xi(0.1, 0.5)
    pt = EvaluationPoint.from_xi(0.1, rho=0.5, z=z)
    ser = series_coefficients(STD, 0.0, 1.0, 40)
    assert abs(ode_residual(STD, ser, pt, "weierstrass")) < 1e-8


def test_ode_residual_weierstrass_requires_z():
    ser = series_coefficients(STD, 0.0, 1.0, 10)
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    with pytest.raises(InvalidParameterError):
        ode_residual(STD, ser, pt, "weierstrass")


def test_ode_residual_singular_points_raise():
    ser = series_coefficients(STD, 0.0, 1.0, 10)
    for xi in (0.0, 1.0, 4.0):  # rho^-2 = 4
        pt = EvaluationPoint.from_xi(xi, rho=0.5)
        with pytest.raises(SingularValueError):
            ode_residual(STD, ser, pt, "algebraic")


def test_ode_residual_decay_with_order():
    pt = EvaluationPoint.from_xi(0.1, rho=0.5)
    p = LameParams(rho=0.5, alpha=2.3, h=1.7)
    res = []
    for N in (10, 20, 40):
        ser = series_coefficients(p, 0.0, 1.0, N)
        res.append(abs(ode_residual(p, ser, pt, "algebraic")))
    assert res[0] > 10 * res[1] > 100 * res[2] or res[2] < 1e-14


def test_kind_independence_wronskian():
    rng = np.random.default_rng(43)
    for _ in range(5):
        p = LameParams(
            rho=float(rng.uniform(0.3, 0.8)),
            alpha=float(rng.uniform(0, 4)),
            h=float(rng.uniform(-2, 2)),
        )
        s0 = series_coefficients(p, 0.0, 1.0, 40)
        s1 = series_coefficients(p, 0.5, 1.0, 40)
        y0, y0p, _ = eval_series_derivatives(s0, 0.1)
        y1, y1p, _ = eval_series_derivatives(s1, 0.1)
        wron = y0 * y1p - y0p * y1
        assert abs(wron) > 1e-6


# -------------------------------------------------------- termination_alpha

def test_termination_alpha_examples():
    assert termination_alpha(TerminationFamily(0, 0, "plus"), 0.0) == 0.0
    assert termination_alpha(TerminationFamily(1, 1, "plus"), 0.5) == 7.0
    assert termination_alpha(TerminationFamily(0, 0, "minus"), 0.0) == -1.0


def test_termination_family_validation():
    with pytest.raises(InvalidParameterError):
        TerminationFamily(-1, 0, "plus")
    with pytest.raises(InvalidParameterError):
        TerminationFamily(0, 0, "up")


def test_termination_alpha_kills_b_at_predicted_index():
    for lam in (0.0, 0.5):
        for i in range(0, 4):
            for alpha_i in range(0, 4):
                for branch in ("plus", "minus"):
                    alpha = termination_alpha(
                        TerminationFamily(i, alpha_i, branch), lam
                    )
                    n_stop = 2 * alpha_i + i + 1
                    p = LameParams(rho=0.5, alpha=alpha, h=1.0)
                    rc = recurrence_coeffs(p, lam, n_stop)
                    scale = max(abs(alpha * (alpha + 1)), 1.0)
                    assert abs(rc.B_n * rc.D_n) < 1e-13 * scale, (
                        lam, i, alpha_i, branch,
                    )


# ---------------------------------------------------- heun_correspondence

def test_heun_correspondence_exact_values():
    hp = heun_correspondence(LameParams(rho=0.5, alpha=3.0, h=2.0))
    assert (hp.gamma, hp.delta, hp.epsilon) == (0.5, 0.5, 0.5)
    assert hp.a == pytest.approx(4.0, rel=0, abs=0)
    assert hp.q == pytest.approx(-2.0, rel=0, abs=0)
    assert hp.alpha_h == pytest.approx(2.0)
    assert hp.beta_h == pytest.approx(-1.5)


def test_heun_fuchs_relation():
    # alpha_h + beta_h + 1 = gamma + delta + epsilon for any params
    for alpha in (-0.7, 0.0, 2.5, 7.0):
        hp = heun_correspondence(LameParams(rho=0.6, alpha=alpha, h=1.0))
        assert hp.alpha_h + hp.beta_h + 1 == pytest.approx(
            hp.gamma + hp.delta + hp.epsilon, rel=1e-15
        )


def test_heun_residual_proportionality():
    # polynomial-multiplied residual forms of the two equations differ by
    # exactly 1/4 on any test function; probe with y = cos at 10 points
    p = LameParams(rho=0.5, alpha=3.0, h=2.0)
    hp = heun_correspondence(p)
    r = p.rho ** -2
    for x in np.linspace(0.05, 0.5, 10):
        y, yp, ypp = math.cos(x), -math.sin(x), -math.cos(x)
        heun_poly = heun_form_residual(hp, y, yp, ypp, x)
        lame_poly = (
            4 * x * (x - 1) * (x - r) * ypp
            + 2 * (3 * x**2 - 2 * (1 + r) * x + r) * yp
            + (-p.alpha * (p.alpha + 1) * x + p.h * r) * y
        )
        assert heun_poly / lame_poly == pytest.approx(0.25, rel=1e-10)
