import cmath
import math

import numpy as np
import pytest

from nambuflow.polycore import (PolyError, SymConstants, UniPoly, cubic_roots, d_formula, discriminant,
                                discriminant_in_W, elementary_symmetric, h_from_x, poly_from_h,
                                poly_from_roots, reduced_coefficients, resultant, root_product_discriminant,
                                sylvester_matrix, w_degree_bound, w_denominator_power)

import oracles


def test_unipoly_strips_trailing_zeros():
    p = UniPoly([1.0, 2.0, 0.0, 0.0])
    assert p.coeffs == (1.0, 2.0)
    assert p.degree == 1 and p.lead == 2.0
    assert UniPoly([]).is_zero() and UniPoly([0.0, 0.0]).is_zero()


def test_unipoly_arithmetic():
    p, q = UniPoly([1, 1]), UniPoly([-1, 1])
    assert (p * q).coeffs == (-1.0, 0.0, 1.0)
    assert (p - p).is_zero()
    assert (p + q).coeffs == (0.0, 2.0)
    assert UniPoly([1, 2, 3]).derivative().coeffs == (2.0, 6.0)
    Q, rem = UniPoly([-6, 11, -6, 1]).divide_root(2.0)
    assert rem == 0.0 and Q.coeffs == (3.0, -4.0, 1.0)


@pytest.mark.parametrize("roots, want", [
    ([1, 2], (2.0, -3.0, 1.0)),
    ([], (1.0,)),
    ([0, 1, 2], (0.0, 2.0, -3.0, 1.0)),
])
def test_poly_from_roots(roots, want):
    assert poly_from_roots(roots).coeffs == want


def test_elementary_symmetric_examples():
    np.testing.assert_array_equal(elementary_symmetric([1, 1, 1]), [3, 3, 1])
    np.testing.assert_array_equal(elementary_symmetric([0, 5]), [5, 0])
    s3 = math.sqrt(3.0)
    e = elementary_symmetric([(3 + 2 * s3) / 3, (3 - s3) / 3, (3 - s3) / 3])
    np.testing.assert_allclose(e[:2], [3.0, 2.0], atol=1e-9)


def test_resultant_conventions():
    # Res(X - a, X - b) = a - b, the 2x2 Sylvester determinant
    assert resultant(UniPoly([-2, 1]), UniPoly([-5, 1])) == pytest.approx(oracles.sylvester_det_2x2(2, 5))
    # Res(p, q) = lc(q)^deg p * prod p(roots of q) = p(0) = -1
    assert resultant(UniPoly([-1, 0, 1]), UniPoly([0, 1])) == pytest.approx(-1.0)
    p = UniPoly([2, -3, 1])
    assert resultant(p, p) == pytest.approx(0.0, abs=1e-12)
    assert sylvester_matrix(p, UniPoly([0, 1])).shape == (3, 3)


def test_resultant_rejects_zero():
    with pytest.raises(PolyError, match="undefined resultant"):
        resultant(UniPoly([0.0]), UniPoly([1, 1]))


@pytest.mark.parametrize("roots", list(oracles.DISC_FROZEN))
def test_discriminant_frozen(roots):
    want = oracles.DISC_FROZEN[roots]
    assert discriminant(poly_from_roots(roots)) == pytest.approx(want, rel=1e-12)
    assert root_product_discriminant(roots) == pytest.approx(want, rel=1e-12)


def test_discriminant_quadratic_and_errors():
    assert discriminant(UniPoly([2, -3, 1])) == pytest.approx(1.0)
    with pytest.raises(PolyError):
        discriminant(UniPoly([1, 1]))


def test_discriminant_non_monic_is_classical():
    # lc^(2d-2) prod (r_k - r_l)^2
    p = UniPoly([2 * 2, 2 * -3, 2 * 1])
    assert discriminant(p) == pytest.approx(4.0)


@pytest.mark.parametrize("n, h, want", [
    (3, (1, 3, 2), 1.0),
    (4, (1, 3, 2, 0), 4.0),
    (5, (1, 6, 11, 6, 0), 144.0),
])
def test_d_formula_examples(n, h, want):
    assert d_formula(n, h) == pytest.approx(want)


def test_d_formula_unsupported():
    with pytest.raises(PolyError, match="no printed formula"):
        d_formula(6, [1] * 6)


def test_poly_from_h_sign_pattern():
    # h0 X^2 - h1 X + h2
    assert poly_from_h([1, 3, 2]).coeffs == (2.0, -3.0, 1.0)


def test_h_from_x_examples():
    x = SymConstants.free_last([3, 2])
    np.testing.assert_array_equal(h_from_x(x, 0.0), [3, 2])
    np.testing.assert_array_equal(h_from_x(x, 1.0), [2, 0])
    h = h_from_x(x, 2.0)
    np.testing.assert_array_equal(h, [1, 0])
    # P_2 = X^2 - X has roots {0, 1}; with W=2 the triple {0,1,2} has e1=3, e2=2
    np.testing.assert_allclose(elementary_symmetric([0, 1, 2])[:2], [3, 2])


def test_reduced_coefficients_free_middle():
    # n=3, x2 free: h'_1 = x1 - W, h'_2 = x3 / W
    x = SymConstants([3.0, None, 0.5])
    h = reduced_coefficients(x, 2.0)
    np.testing.assert_allclose(h, [1.0, 1.0, 0.25])


def test_symconstants_validation():
    with pytest.raises(PolyError):
        SymConstants([1, 2, 3])
    with pytest.raises(PolyError):
        SymConstants([None, 2, None])
    x = SymConstants([1.0, None, 2.0])
    assert x.n == 3 and x.free_index == 2 and x.get(0) == 1.0 and x.get(5) == 0.0
    with pytest.raises(PolyError, match="free"):
        x.get(2)


@pytest.mark.parametrize("fixed", list(oracles.DW_FROZEN))
def test_discriminant_in_W_frozen(fixed):
    D = discriminant_in_W(SymConstants.free_last(fixed))
    want = oracles.DW_FROZEN[fixed]
    n = len(fixed) + 1
    assert D.degree == (n - 1) * (n - 2)
    np.testing.assert_allclose(D.coeffs, want, rtol=1e-9, atol=1e-9 * max(map(abs, want)))


def test_discriminant_in_W_large_W_sign():
    # the sign at large W follows the leading coefficient
    for fixed in oracles.DW_FROZEN:
        D = discriminant_in_W(SymConstants.free_last(fixed))
        assert math.copysign(1, D(1e3)) == math.copysign(1, D.lead)


def test_discriminant_in_W_free_x2_matches_cubic():
    # W * disc = W^3 - 2 x1 W^2 + x1^2 W - 4 x3
    x1, x3 = 3.0, 0.5
    D = discriminant_in_W(SymConstants([x1, None, x3]))
    np.testing.assert_allclose(D.coeffs, [-4 * x3, x1**2, -2 * x1, 1.0], atol=1e-10)


def test_free_xi_degree_bounds():
    assert w_degree_bound(4, 4) == 6 and w_degree_bound(4, 2) == 8
    assert w_denominator_power(3, 2) == 1 and w_denominator_power(5, 5) == 0
    for i, want in [(1, 8), (2, 8), (3, 8), (4, 6)]:
        x = [0.7, -1.2, 0.4, 2.0]
        x[i - 1] = None
        assert discriminant_in_W(SymConstants(x)).degree == want


def test_degree_bound_violation_detected():
    with pytest.raises(PolyError, match="degree bound violated"):
        discriminant_in_W(SymConstants([3.0, None, 0.5]), degree=2)


def test_free_index_mismatch():
    with pytest.raises(PolyError):
        discriminant_in_W(SymConstants.free_last([3, 2]), free_index=2)


def _sorted_c(z):
    return sorted(z, key=lambda c: (round(c.real, 9), round(c.imag, 9)))


@pytest.mark.parametrize("coeffs, want", [
    ([-6, 11, -6, 1], [1, 2, 3]),
    ([-1, 0, 0, 1], [1, cmath.exp(2j * math.pi / 3), cmath.exp(-2j * math.pi / 3)]),
    ([-4, 9, -6, 1], [1, 1, 4]),
])
def test_cubic_roots(coeffs, want):
    got = _sorted_c(cubic_roots(UniPoly(coeffs)))
    for g, w in zip(got, _sorted_c([complex(v) for v in want])):
        assert abs(g - w) <= 1e-7 * max(1.0, abs(w))


def test_cubic_roots_relative_accuracy_distinct():
    got = sorted(z.real for z in cubic_roots(UniPoly([-6, 11, -6, 1])))
    np.testing.assert_allclose(got, [1, 2, 3], rtol=1e-12)
