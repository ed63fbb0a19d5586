"""Exact-series layer: recurrences checked against independent oracles.

The oracle for every recurrence here is direct substitution into the
h-equation with sympy, which shares no code with the production recurrences.
"""

from fractions import Fraction

import mpmath as mp
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from boutroux.series import (
    EQP_COEFF,
    FormalSeries,
    borel_transform,
    h0_coefficients,
    h0_series,
    level_series,
    transseries_level,
)

X = sp.Symbol("x")
A4 = sp.Rational(-392, 625)


def equation_residual(h):
    """The h-equation applied to a sympy expression."""
    return sp.diff(h, X, 2) + sp.diff(h, X) / X - h - h**2 / 2 + A4 * X**-4


def poly_orders(expr, nmax):
    """Coefficients of x^{-n}, n = 0..nmax, of a Laurent-type expression."""
    u = sp.Symbol("u")
    ser = sp.series(expr.subs(X, 1 / u), u, 0, nmax + 1).removeO()
    p = sp.Poly(sp.expand(ser), u)
    return [p.coeff_monomial(u**n) for n in range(nmax + 1)]


class TestH0:
    def test_leading_coefficients(self):
        c = h0_coefficients(10)
        assert c[0] == Fraction(-392, 625)
        assert c[1] == 0
        assert c[2] == 16 * Fraction(-392, 625)

    def test_odd_coefficients_vanish(self):
        c = h0_coefficients(41)
        for i, v in enumerate(c):
            if (4 + i) % 2 == 1:
                assert v == 0

    def test_residual_oracle(self):
        """Substituting the truncation into the equation leaves only tail terms."""
        N = 16
        h = sum(sp.Rational(v) * X ** -(4 + i)
                for i, v in enumerate(h0_coefficients(N)))
        res = poly_orders(equation_residual(h), N)
        assert all(r == 0 for r in res)

    def test_gevrey_one_growth(self):
        """|c_k|^{1/k}/k stays bounded: factorial, not worse, divergence."""
        c = h0_coefficients(80)
        vals = [abs(c[k - 4]) ** (1.0 / k) / k
                for k in range(40, 81, 2)]
        assert max(vals) < 1.0
        assert min(vals) > 0.05
        # c_m / c_{m-2} -> (m - 3/2)(m - 5/2): Gamma(m - 1/2) growth,
        # i.e. Borel radius exactly 1
        m = 80
        r = float(c[m - 4] / c[m - 6]) / ((m - 1.5) * (m - 2.5))
        assert abs(r - 1) < 0.01

    def test_series_evaluation(self):
        with mp.workdps(40):
            s = h0_series(12)
            x = mp.mpf(10)
            direct = sum(mp.mpf(v.numerator) / v.denominator * x ** -(4 + i)
                         for i, v in enumerate(h0_coefficients(12)))
            assert abs(s(x) - direct) < 1e-30


class TestTransseriesLevels:
    def test_level1_known_values(self):
        t1 = transseries_level(1, 6)
        assert t1.coeffs[0] == 1
        assert t1.coeffs[1] == Fraction(-1, 8)
        assert t1.coeffs[2] == Fraction(9, 128)

    def test_level2_leading(self):
        t2 = transseries_level(2, 4)
        assert t2.coeffs[0] == Fraction(1, 6)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_linearized_residual_oracle(self, k):
        """Order-eps^k terms of the substituted transseries cancel.

        Substitute h = h0 + sum_j eps^j e^{-jx} x^{-j/2} t_j into the
        h-equation with sympy and check the coefficient of eps^k e^{-kx}
        vanishes through the truncation order.
        """
        N = 8
        eps = sp.Symbol("epsilon")
        h = sum(sp.Rational(v) * X ** -(4 + i)
                for i, v in enumerate(h0_coefficients(N + 4)))
        for j in range(1, k + 1):
            tj = sp.Add(*[sp.Rational(a) * X**-i
                          for i, a in enumerate(transseries_level(j, N).coeffs)])
            h += eps**j * sp.exp(-j * X) * X ** sp.Rational(-j, 2) * tj
        res = equation_residual(h).expand()
        lvl = res.coeff(eps, k).coeff(sp.exp(-k * X))
        lvl = sp.expand(lvl * X ** sp.Rational(k, 2))
        # residual orders x^0 .. x^{-(N-1)} must cancel exactly
        for n in range(N):
            assert sp.simplify(lvl.coeff(X, -n)) == 0, (k, n)

    def test_level_series_exponent(self):
        s = level_series(3, 5)
        assert s.leading_exponent == Fraction(-3, 2)


class TestFormalSeriesAlgebra:
    fracs = st.fractions(min_value=-5, max_value=5, max_denominator=20)

    @given(st.lists(fracs, min_size=1, max_size=6),
           st.lists(fracs, min_size=1, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_product_matches_pointwise(self, a, b):
        fa = FormalSeries(0, tuple(a))
        fb = FormalSeries(0, tuple(b))
        with mp.workdps(40):
            x = mp.mpf("1.7")
            lhs = fa.multiply(fb)(x)
            rhs = fa(x) * fb(x)
            # full (untruncated) product of polynomials in 1/x is exact
            assert abs(lhs - rhs) < 1e-30

    @given(st.lists(fracs, min_size=1, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_derivative_matches_sympy(self, a):
        fs = FormalSeries(-2, tuple(a)).differentiate()
        expr = sp.diff(sum(sp.Rational(v) * X ** (-1 - i)
                           for i, v in enumerate(a)), X)
        for i, c in enumerate(fs.coeffs):
            assert sp.Rational(c) == expr.coeff(X, fs.exponent2(i) // 2)

    def test_add_aligns_lattices(self):
        a = FormalSeries(0, (Fraction(1), Fraction(2)))
        b = FormalSeries(-4, (Fraction(3),))
        s = a.add(b)
        assert s.coefficient_of(0) == 1
        assert s.coefficient_of(-2) == 2
        assert s.coefficient_of(-4) == 3

    def test_json_export(self):
        import json

        d = json.loads(h0_series(8).to_json())
        assert d["leading_exponent"] == -8
        assert d["coeffs"][0] == ["-392", "625"]


class TestBorelTransform:
    def test_h0_leading(self):
        g = borel_transform(h0_series(10))
        assert g.lead2 == 6  # germ starts at p^3
        assert g.coeffs[0] == Fraction(-196, 1875)
        assert not g.sqrtpi

    def test_level1_half_integer(self):
        g = borel_transform(level_series(1, 6))
        assert g.lead2 == -1  # p^{-1/2}
        assert g.sqrtpi
        assert g.coeffs[0] == 1
        assert g.coeffs[1] == Fraction(-1, 4)
        assert g.coeffs[2] == Fraction(3, 32)

    def test_inverts_factorials(self):
        """b_{m} relates to c_{m+1} by 1/Gamma(m+1) for the integer germ."""
        from math import factorial

        c = h0_coefficients(20)
        g = borel_transform(h0_series(20))
        for i, b in enumerate(g.coeffs):
            m = g.lead2 // 2 + i  # power of p
            assert b == c[i] / factorial(m)

    @given(st.fractions(min_value=-3, max_value=3, max_denominator=12),
           st.fractions(min_value=-3, max_value=3, max_denominator=12))
    @settings(max_examples=30, deadline=None)
    def test_linearity(self, u, v):
        s1 = h0_series(14)
        s2 = FormalSeries(-8, tuple(Fraction(i + 1, 3) for i in range(11)))
        comb = s1.scale(u).add(s2.scale(v))
        g = borel_transform(comb)
        g1 = borel_transform(s1)
        g2 = borel_transform(s2)
        for i in range(len(g.coeffs)):
            want = Fraction(0)
            if i < len(g1.coeffs):
                want += u * g1.coeffs[i]
            if i < len(g2.coeffs):
                want += v * g2.coeffs[i]
            assert g.coeffs[i] == want

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            borel_transform(FormalSeries(2, (Fraction(1),)))


def test_eqp_coefficient_is_paper_value():
    assert EQP_COEFF == Fraction(-392, 625)
