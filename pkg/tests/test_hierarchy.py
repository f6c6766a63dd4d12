from fractions import Fraction

import numpy as np
import pytest

from mkdvh.hierarchy import (
    D, DiffPoly, JetTooShort, NotExactDerivative, U, diff, evaluate, formal_integrate,
    lax_matrices, lenard_mkdv, mkdv_rhs, pii_lhs, residual_is_zero, to_latex, to_text,
    zero_curvature_residual,
)

MKDV1 = "6*u^2*u^(1) - u^(3)"
MKDV2 = "40*u*u^(1)*u^(2) + 10*u^2*u^(3) - 30*u^4*u^(1) + 10*u^(1)^3 - u^(5)"
PII1 = "-2*u^3 + u^(2)"
PII2 = "-10*u*u^(1)^2 - 10*u^2*u^(2) + 6*u^5 + u^(4)"


def test_leibniz():
    assert diff(U * U) == 2 * U * D(1)
    assert diff(DiffPoly.const(Fraction(1, 2))).is_zero()
    assert diff(U * D(2)) == D(1) * D(2) + U * D(3)


def test_formal_integration_examples():
    assert formal_integrate(D(1)) == U
    assert formal_integrate(2 * U * D(1)) == U * U
    with pytest.raises(NotExactDerivative):
        formal_integrate(U)


def test_lenard_low_orders():
    assert lenard_mkdv(0) == DiffPoly.const(Fraction(1, 2))
    assert lenard_mkdv(1) == D(1) - U * U


def test_flows_match_the_printed_members():
    assert to_text(mkdv_rhs(1)) == MKDV1
    assert to_text(mkdv_rhs(2)) == MKDV2
    assert to_text(pii_lhs(1)) == PII1
    assert to_text(pii_lhs(2)) == PII2


def test_hand_written_second_member():
    u, u1, u2, u3, u5 = U, D(1), D(2), D(3), D(5)
    expected = 10 * u * u * u3 + 40 * u * u1 * u2 + 10 * u1**3 - 30 * u**4 * u1 - u5
    assert mkdv_rhs(2) == expected


@pytest.mark.parametrize("n", [1, 2, 3])
def test_linear_parts(n):
    assert mkdv_rhs(n).linear_part() == -D(2 * n + 1)
    assert pii_lhs(n).linear_part() == D(2 * n)
    assert pii_lhs(n).coeff({2 * n: 1}) == 1


@pytest.mark.parametrize("j", range(5))
def test_lenard_recursion_identity(j):
    f = D(1) - U * U
    Lj = lenard_mkdv(j)
    rhs = diff(diff(diff(Lj))) + 4 * f * diff(Lj) + 2 * diff(f) * Lj
    assert (diff(lenard_mkdv(j + 1)) - rhs).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lax_coefficients(n):
    lax = lax_matrices(n)
    assert lax.a_coeffs[2 * n + 1] == DiffPoly.const(4**n)
    for k, (b, d) in enumerate(zip(lax.b_coeffs, lax.d_coeffs)):
        assert d == (-1) ** k * b


def test_b2_for_first_member():
    assert lax_matrices(1).b_coeffs[2] == -4 * U


@pytest.mark.parametrize("n", [1, 2, 3])
def test_zero_curvature(n):
    assert residual_is_zero(zero_curvature_residual(n))


def test_zero_curvature_negative_control():
    assert not residual_is_zero(zero_curvature_residual(1, u_t=DiffPoly()))


def test_evaluate():
    assert evaluate(D(2) - 2 * U**3, (1.0, 0.0, 2.0)) == 0.0
    assert evaluate(DiffPoly.const(Fraction(1, 2)), ()) == 0.5
    assert evaluate(mkdv_rhs(1), (0.3, 0.1, -0.2, 0.05)) == pytest.approx(0.004, abs=1e-15)
    with pytest.raises(JetTooShort):
        evaluate(mkdv_rhs(1), (0.3, 0.1))


def test_evaluate_arrays():
    jet = [np.linspace(-1, 1, 5) * (k + 1) for k in range(4)]
    got = evaluate(mkdv_rhs(1), jet)
    assert np.allclose(got, 6 * jet[0] ** 2 * jet[1] - jet[3])


def test_latex():
    assert to_latex(mkdv_rhs(1)) == "6u^{2} u^{(1)} - u^{(3)}"
