from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocurvelab.algebra import (
    CartesianPolynomial,
    DimensionError,
    PoissonSeries,
    QSqrt2,
    cartesian_to_complex,
    complex_to_cartesian,
    from_action_angle,
    poisson_bracket,
    to_action_angle,
)

from .helpers import variables

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def polys(draw, n=2, max_degree=4, max_terms=5):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        d = draw(st.integers(0, max_degree))
        e = [0] * (2 * n)
        for _ in range(d):
            e[draw(st.integers(0, 2 * n - 1))] += 1
        terms[tuple(e)] = draw(coeffs)
    return CartesianPolynomial(n, terms)


def zero(n=2):
    return CartesianPolynomial.zero(n)


class TestBracket:
    @settings(max_examples=60, deadline=None)
    @given(polys(), polys())
    def test_antisymmetric(self, f, g):
        assert poisson_bracket(f, g) == -poisson_bracket(g, f)

    @settings(max_examples=40, deadline=None)
    @given(polys(max_degree=3), polys(max_degree=3), polys(max_degree=3))
    def test_jacobi(self, f, g, h):
        total = (poisson_bracket(f, poisson_bracket(g, h)) + poisson_bracket(g, poisson_bracket(h, f))
                 + poisson_bracket(h, poisson_bracket(f, g)))
        assert total == zero()

    @settings(max_examples=40, deadline=None)
    @given(polys(max_degree=3), polys(max_degree=3), polys(max_degree=3))
    def test_leibniz(self, f, g, h):
        assert poisson_bracket(f, g * h) == poisson_bracket(f, g) * h + g * poisson_bracket(f, h)

    def test_canonical_pairs(self):
        n = 3
        x = variables(n)
        one = CartesianPolynomial.constant(n, 1)
        for i in range(2 * n):
            for j in range(2 * n):
                expected = one if j == i + n else -one if i == j + n else zero(n)
                assert poisson_bracket(x[i], x[j]) == expected

    def test_truncated_bracket(self):
        x = variables(2)
        f, g = x[0] ** 3, x[2] ** 3
        assert poisson_bracket(f, g, max_degree=3) == zero()
        assert poisson_bracket(f, g).degree() == 4

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            poisson_bracket(zero(1), zero(2))


class TestActionAngle:
    @settings(max_examples=60, deadline=None)
    @given(polys(), polys())
    def test_homomorphism(self, p, q):
        assert to_action_angle(p + q) == to_action_angle(p) + to_action_angle(q)
        assert to_action_angle(p * q) == to_action_angle(p) * to_action_angle(q)

    @settings(max_examples=60, deadline=None)
    @given(polys(n=3, max_degree=5))
    def test_round_trip(self, p):
        assert from_action_angle(to_action_angle(p)) == p
        assert complex_to_cartesian(cartesian_to_complex(p), p.n) == p

    @settings(max_examples=30, deadline=None)
    @given(polys(), st.lists(st.floats(0.01, 2.0), min_size=2, max_size=2),
           st.lists(st.floats(-4, 4), min_size=2, max_size=2))
    def test_evaluation_agrees(self, p, I, th):
        I, th = np.array(I), np.array(th)
        x = np.concatenate([np.sqrt(2 * I) * np.cos(th), np.sqrt(2 * I) * np.sin(th)])
        assert to_action_angle(p)(I, th) == pytest.approx(float(p(x)), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(polys())
    def test_canonical_is_idempotent(self, p):
        s = to_action_angle(p)
        assert s.canonical() == s
        assert s.canonical().canonical() == s.canonical()

    def test_quadratic_is_action(self):
        x = variables(2)
        s = to_action_angle(x[0] * x[0] + x[2] * x[2])
        assert dict(s.items()) == {((2, 0), (0, 0), "cos"): 2}

    def test_cubic_resonant_term(self):
        # x1 x2^2 - x1 x4^2 - 2 x2 x3 x4 = 2^(3/2) I1^(1/2) I2 cos(theta1 + 2 theta2)
        x = variables(2)
        s = to_action_angle(x[0] * x[1] ** 2 - x[0] * x[3] ** 2 - 2 * x[1] * x[2] * x[3])
        assert dict(s.items()) == {((1, 2), (1, 2), "cos"): QSqrt2(0, 2)}

    def test_sign_normalization(self):
        s = PoissonSeries(2, [(1, (2, 2), (-1, 2), "sin")])
        assert dict(s.items()) == {((2, 2), (1, -2), "sin"): -1}
        assert not PoissonSeries(1, [(3, (2,), (0,), "sin")])

    def test_negative_action_rejected(self):
        with pytest.raises(ValueError):
            to_action_angle(variables(1)[0] ** 2)(np.array([-1.0]), np.array([0.0]))


class TestQSqrt2:
    @given(coeffs, coeffs, coeffs, coeffs)
    def test_field_operations(self, a, b, c, d):
        x, y = QSqrt2(a, b), QSqrt2(c, d)
        assert x * y == y * x
        assert (x + y) - y == x
        if y:
            assert (x / y) * y == x
        assert float(x * y) == pytest.approx(float(x) * float(y), abs=1e-9)

    def test_powers(self):
        assert QSqrt2.sqrt2_power(3) == QSqrt2(0, 2)
        assert QSqrt2.sqrt2_power(2) * QSqrt2.sqrt2_power(1) == QSqrt2.sqrt2_power(3)
        with pytest.raises(ValueError):
            QSqrt2.sqrt2_power(-1)

    def test_rational_collapse(self):
        assert QSqrt2(F(1, 3)).is_rational()
        assert QSqrt2(0, 1) * QSqrt2(0, 1) == 2


class TestPolynomial:
    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            CartesianPolynomial(2, {(1, 0, 0): 1})
        with pytest.raises(ValueError):
            CartesianPolynomial(0)

    def test_zero_terms_dropped(self):
        p = CartesianPolynomial(1, {(1, 0): 1}) - CartesianPolynomial(1, {(1, 0): 1})
        assert not p and len(p) == 0

    @settings(max_examples=30, deadline=None)
    @given(polys(max_degree=3), polys(max_degree=2), polys(max_degree=2))
    def test_compose_with_identity_and_eval(self, p, a, b):
        x = variables(2)
        assert p.compose(x) == p
        subs = [a, b, x[2], x[3]]
        pt = np.array([0.3, -0.7, 0.2, 0.5])
        inner = np.array([float(s(pt)) for s in subs])
        assert float(p.compose(subs)(pt)) == pytest.approx(float(p(inner)), rel=1e-9, abs=1e-9)

    def test_derivative(self):
        x = variables(1)
        assert (x[0] ** 3 * x[1]).derivative(0) == 3 * x[0] ** 2 * x[1]
