"""Exact-arithmetic formal series for the normalized equation.

The normalized equation (referred to throughout as the h-equation) is

    h'' + h'/x - h - h^2/2 - (392/625) x^{-4} = 0.

This module generates, in exact rational arithmetic,

* the unique algebraic formal solution  h0 = sum_{k>=4, k even} c_k x^{-k},
* the exponential levels t_k of the transseries
  h = h0 + sum_k C^k e^{-kx} x^{-k/2} t_k(x),
* Borel transforms of such series.

All exponents are tracked in half-integer units (stored doubled as ints) so
x^{-k/2} prefactors need no special casing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import mpmath as mp

from .germ import BorelGerm

# Coefficient of x^{-4} in the h-equation.  Everything in this module is
# parametrized by it so the integrability witness can perturb it.
EQP_COEFF = Fraction(-392, 625)

# t_1 is normalized to leading coefficient 1 (so h ~ C x^{-1/2} e^{-x}).
# The y-system normalization s_1 = (1 + 1/(8x)) e_1 differs by this factor
# through the linear change of variables back to (h, h').
Y_TO_H_LEVEL1 = Fraction(1, 2)


@dataclass(frozen=True)
class FormalSeries:
    """Truncated series sum_i coeffs[i] * x^{(lead2 - i*step2)/2}.

    Exponents descend from ``lead2/2`` in steps of ``step2/2``; coefficients
    are exact ``Fraction`` or ``complex``.
    """

    lead2: int
    coeffs: tuple = field(default_factory=tuple)
    step2: int = 2

    @property
    def leading_exponent(self):
        return Fraction(self.lead2, 2)

    def __len__(self):
        return len(self.coeffs)

    def exponent2(self, i):
        """Doubled exponent of term i."""
        return self.lead2 - i * self.step2

    def coefficient_of(self, exp2):
        """Coefficient of x^{exp2/2}, or 0 if absent."""
        num = self.lead2 - exp2
        if num % self.step2:
            return Fraction(0)
        i = num // self.step2
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Fraction(0)

    def __call__(self, x):
        """Evaluate with mpmath at complex x (Horner in x^{-step2/2})."""
        x = mp.mpmathify(x)
        u = x ** (-mp.mpf(self.step2) / 2)
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * u + _to_mp(c)
        return acc * x ** (mp.mpf(self.lead2) / 2)

    def differentiate(self):
        """Termwise d/dx."""
        return FormalSeries(
            self.lead2 - 2,
            tuple(
                c * Fraction(self.exponent2(i), 2)
                for i, c in enumerate(self.coeffs)
            ),
            self.step2,
        )

    def multiply(self, other, nmax=None):
        """Truncated product; both factors must share step2."""
        if self.step2 != other.step2:
            raise ValueError("mismatched exponent lattices")
        n = len(self.coeffs) + len(other.coeffs) - 1
        if nmax is not None:
            n = min(n, nmax)
        out = [Fraction(0)] * max(n, 0)
        for i, a in enumerate(self.coeffs):
            if i >= n:
                break
            for j, b in enumerate(other.coeffs):
                if i + j >= n:
                    break
                out[i + j] += a * b
        return FormalSeries(self.lead2 + other.lead2, tuple(out), self.step2)

    def add(self, other):
        if self.step2 != other.step2:
            raise ValueError("mismatched exponent lattices")
        lead2 = max(self.lead2, other.lead2)
        hi = min(self.exponent2(len(self) - 1) if self.coeffs else lead2,
                 other.exponent2(len(other) - 1) if other.coeffs else lead2)
        n = (lead2 - hi) // self.step2 + 1
        out = []
        for i in range(n):
            e2 = lead2 - i * self.step2
            out.append(self.coefficient_of(e2) + other.coefficient_of(e2))
        return FormalSeries(lead2, tuple(out), self.step2)

    def scale(self, c):
        return FormalSeries(self.lead2, tuple(c * a for a in self.coeffs),
                            self.step2)

    def shift(self, exp2):
        """Multiply by x^{exp2/2}."""
        return FormalSeries(self.lead2 + exp2, self.coeffs, self.step2)

    def to_json(self):
        return json.dumps(series_to_dict(self))


def _to_mp(c):
    if isinstance(c, Fraction):
        return mp.mpf(c.numerator) / mp.mpf(c.denominator)
    if isinstance(c, complex):
        return mp.mpc(c)
    return mp.mpmathify(c)


def _coeff_json(c):
    if isinstance(c, Fraction):
        return [str(c.numerator), str(c.denominator)]
    c = complex(c)
    return [c.real, c.imag]


def series_to_dict(s):
    return {"leading_exponent": s.lead2,
            "coeffs": [_coeff_json(c) for c in s.coeffs]}


@lru_cache(maxsize=None)
def h0_coefficients(N, eqp_coeff=EQP_COEFF):
    """Exact c_4..c_N of the algebraic formal solution (c_k = 0 for odd k).

    Order x^{-n} of the h-equation gives
    c_n = (n-2)^2 c_{n-2} - (1/2) sum_{i+j=n} c_i c_j - a4 * [n == 4],
    with a4 the x^{-4} coefficient of the equation.
    """
    if N < 4:
        raise ValueError("need N >= 4")
    c = {k: Fraction(0) for k in range(N + 1)}
    for n in range(4, N + 1):
        conv = sum((c[i] * c[n - i] for i in range(4, n - 3)), Fraction(0))
        val = (n - 2) ** 2 * c[n - 2] - conv / 2
        if n == 4:
            val += eqp_coeff  # h'' + ... - a4 x^{-4} = 0 forces c_4 = a4
        c[n] = val
    return tuple(c[k] for k in range(4, N + 1))


def h0_series(N, eqp_coeff=EQP_COEFF):
    """The formal solution h0 truncated at order x^{-N}, exact rationals."""
    return FormalSeries(-8, h0_coefficients(N, eqp_coeff))


@lru_cache(maxsize=None)
def transseries_level(k, N, eqp_coeff=EQP_COEFF):
    """Exact integer-power series t_k to order x^{-N} (t_k = x^{k/2} h_k).

    Collecting e^{-kx} terms of the h-equation and substituting
    h_k = x^{-k/2} t_k gives the level-k linear recurrence

      (k^2-1) a_n + [2k(n-1) + k^2 - k] a_{n-1}
      + [(n-2)(n-1) + k^2/4 - (1-k)(n-2)] a_{n-2}
      - sum_{j>=4} c_j a_{n-j}  =  R_n

    with R the coefficients of (1/2) sum_{0<i<k} t_i t_{k-i}.  For k = 1 the
    pivot k^2 - 1 vanishes and the order-n relation determines a_{n-1}
    instead, with a_0 = 1 fixing the normalization.
    """
    if k < 1:
        raise ValueError("level k must be >= 1")
    c = {4 + i: v for i, v in enumerate(h0_coefficients(N + 4, eqp_coeff)) if v}
    rhs = [Fraction(0)] * (N + 3)
    for i in range(1, k):
        ti = transseries_level(i, N, eqp_coeff)
        tj = transseries_level(k - i, N, eqp_coeff)
        for a in range(min(len(ti.coeffs), N + 3)):
            ca = ti.coeffs[a]
            if not ca:
                continue
            for b in range(min(len(tj.coeffs), N + 3 - a)):
                rhs[a + b] += ca * tj.coeffs[b] / 2

    a = [Fraction(0)] * (N + 1)

    def lhs_known(n, upto):
        """LHS terms at order n involving a_m with m <= upto."""
        total = Fraction(0)
        k2 = Fraction(k * k)
        if n <= upto:
            total += (k2 - 1) * a[n]
        if 0 <= n - 1 <= upto:
            total += (2 * k * (n - 1) + k * k - k) * a[n - 1]
        if 0 <= n - 2 <= upto:
            total += ((n - 2) * (n - 1) + k2 / 4 - (1 - k) * (n - 2)) * a[n - 2]
        for j, cj in c.items():
            if 0 <= n - j <= upto:
                total -= cj * a[n - j]
        return total

    if k == 1:
        a[0] = Fraction(1)
        for n in range(2, N + 2):
            # order-n relation; unknown is a_{n-1} with pivot 2(n-1)
            if n - 1 > N:
                break
            known = lhs_known(n, n - 2)
            r = rhs[n] if n < len(rhs) else Fraction(0)
            a[n - 1] = (r - known) / (2 * (n - 1))
    else:
        for n in range(0, N + 1):
            known = lhs_known(n, n - 1)
            r = rhs[n] if n < len(rhs) else Fraction(0)
            a[n] = (r - known) / (k * k - 1)
    return FormalSeries(0, tuple(a))


def level_series(k, N, eqp_coeff=EQP_COEFF):
    """h_k = x^{-k/2} t_k as a half-integer-exponent series."""
    return transseries_level(k, N, eqp_coeff).shift(-k)


def borel_transform(s: FormalSeries, alpha=None) -> BorelGerm:
    """Borel transform of x^{-alpha} sum c_n x^{-n} -> germ at p = 0.

    Maps c_n to c_n p^{n+alpha-1} / Gamma(n+alpha).  ``alpha`` defaults to
    minus the leading exponent of ``s`` and must be positive.  For
    half-integer alpha the rational part of 1/Gamma is kept exact and the
    common 1/sqrt(pi) factor is recorded on the germ.
    """
    if s.step2 != 2:
        raise ValueError("series must live on an integer-step lattice")
    alpha2 = -s.lead2 if alpha is None else int(2 * Fraction(alpha))
    if alpha2 != -s.lead2:
        raise ValueError("alpha must match the leading exponent of the series")
    if alpha2 <= 0:
        raise ValueError("alpha must be positive")
    half = bool(alpha2 % 2)
    out = []
    for n, cn in enumerate(s.coeffs):
        g = _gamma_rational(alpha2 + 2 * n)  # Gamma(n + alpha) [/sqrt(pi)]
        out.append(cn / g if isinstance(cn, Fraction) else cn / float(g))
    return BorelGerm(lead2=alpha2 - 2, coeffs=tuple(out), sqrtpi=half)


def _gamma_rational(m2):
    """Gamma(m2/2) as a Fraction; for odd m2 the sqrt(pi) factor is dropped.

    Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!).
    """
    if m2 % 2 == 0:
        return Fraction(factorial(m2 // 2 - 1))
    n = (m2 - 1) // 2
    if n >= 0:
        return Fraction(factorial(2 * n), 4 ** n * factorial(n))
    # Gamma(-1/2) etc. via reflection; not needed for alpha > 0 germs
    raise ValueError("negative half-integer Gamma not supported")
