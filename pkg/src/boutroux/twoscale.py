"""Two-scale expansions h ~ sum_n F_n(xi)/x^n with xi = C e^{-x} x^{-1/2}.

The functions F_n are obtained exactly by resumming the transseries in the
second scale xi: the coefficient of xi^k in F_n is the x^{-n} coefficient
of the level-k series t_k.  Each F_n is fitted (in exact rational
arithmetic, with over-determination checks) to the ansatz

    F_n(xi) = P_n(xi) / (xi - 12)^{n+2} + beta_n H_1(xi) ln(1 - xi/12)

with deg P_n <= 2n+2 and H_1 = -144 xi (xi+12)/(xi-12)^3 the homogeneous
solution of the linearized equation.  For the integrable equation
coefficient -392/625 all beta_n vanish; the first obstruction appears at
n = 6 for any other coefficient.

The module also carries the G-chart expansion of g = 3h/(3+h) (regular at
the poles, excluded point xi = -12) and the four-order pole-location
asymptotics.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import mpmath as mp
import sympy as sp

from .errors import ObstructionError, OutsideRegionError
from .series import EQP_COEFF, h0_coefficients, transseries_level

XI = sp.Symbol("xi")

#: default region parameters of the fixed-|xi| validity domain
EPSILON = 0.1
DELTA = 0.05
RADIUS = 20.0


def F0_expr():
    """F_0(xi) = 144 xi / (xi - 12)^2."""
    return 144 * XI / (XI - 12) ** 2


def H1_expr():
    """Homogeneous solution of the linearization, xi dF0/dxi."""
    return -144 * XI * (XI + 12) / (XI - 12) ** 3


def level_coefficient(n, k, eqp_coeff=EQP_COEFF):
    """Exact x^{-n} coefficient of t_k (k >= 1) or of h0 (k = 0)."""
    eqp_coeff = Fraction(eqp_coeff)
    if k == 0:
        if n < 4:
            return Fraction(0)
        return h0_coefficients(n, eqp_coeff)[n - 4]
    t = transseries_level(k, max(n, 1) + 1, eqp_coeff)
    return t.coeffs[n] if n < len(t.coeffs) else Fraction(0)


def _pole_col(i, npow, k):
    """Coefficient of xi^k in xi^i (xi - 12)^{-npow}."""
    m = k - i
    if m < 0:
        return Fraction(0)
    return Fraction((-1) ** npow * comb(m + npow - 1, npow - 1),
                    12 ** (npow + m))


def _H1_col(k):
    return -144 * (_pole_col(2, 3, k) + 12 * _pole_col(1, 3, k))


@lru_cache(maxsize=None)
def _logH1_col(k):
    """Coefficient of xi^k in H_1(xi) ln(1 - xi/12)."""
    tot = Fraction(0)
    for m in range(1, k + 1):
        tot += _H1_col(k - m) * Fraction(-1, m * 12 ** m)
    return tot


@lru_cache(maxsize=None)
def _fit_Fn(n, eqp_coeff=EQP_COEFF, verify_extra=4):
    """Exact fit of F_n; returns (numerator tuple, beta)."""
    eqp_coeff = Fraction(eqp_coeff)
    npow = n + 2
    deg = 2 * n + 2
    unknowns = deg + 2  # numerator coefficients and beta
    K = unknowns + verify_extra
    rows = [[sp.Rational(_pole_col(i, npow, k)) for i in range(deg + 1)]
            + [sp.Rational(_logH1_col(k))] for k in range(K)]
    rhs = [sp.Rational(level_coefficient(n, k, eqp_coeff)) for k in range(K)]
    A = sp.Matrix(rows[:unknowns])
    b = sp.Matrix(rhs[:unknowns])
    sol = A.solve(b)
    ok = all(sum(rows[k][i] * sol[i] for i in range(unknowns)) == rhs[k]
             for k in range(unknowns, K))
    numer = tuple(Fraction(int(v.p), int(v.q)) for v in sol[:-1])
    beta = Fraction(int(sol[-1].p), int(sol[-1].q))
    return numer, beta, ok


def compute_F(n, eqp_coeff=EQP_COEFF):
    """Exact F_n(xi) as a sympy expression.

    Raises ObstructionError when no rational F_n exists (non-integrable
    equation coefficient, n >= 6); the obstruction coefficient attached
    to the error is the resonance residue from integrability_witness.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return F0_expr()
    eqp_coeff = Fraction(eqp_coeff)
    numer, beta, ok = _fit_Fn(n, eqp_coeff)
    if not ok or beta != 0:
        raise ObstructionError(
            "no log-free two-scale function at order %d" % n,
            coefficient=integrability_witness(eqp_coeff))
    poly = sum(sp.Rational(c) * XI ** i for i, c in enumerate(numer))
    return poly / (XI - 12) ** (n + 2)


def _theta(e):
    return sp.cancel(XI * sp.diff(e, XI))


def _apply_ddx(levels):
    """One x-derivative on sum_j A_j(xi) x^{-j} with xi' = -xi (1 + 1/2x)."""
    out = {}
    for j, A in levels.items():
        th = _theta(A)
        out[j] = out.get(j, 0) - th
        out[j + 1] = out.get(j + 1, 0) - (th / 2 + j * A)
    return {j: sp.cancel(v) for j, v in out.items()}


def hierarchy_residuals(c, jmax=6):
    """Orders 0..jmax of the h-equation on the partial sum F_0..F_{jmax-1}.

    Orders 0..jmax-1 vanish identically; order jmax equals
    M F_jmax - R_jmax with F_jmax absent, i.e. -R_jmax.
    """
    c = Fraction(c)
    h = {j: compute_F(j, c) for j in range(jmax)}
    h1 = _apply_ddx(h)
    h2 = _apply_ddx(h1)
    E = {}
    cq = sp.Rational(c)
    for j in range(jmax + 1):
        e = h2.get(j, 0) + h1.get(j - 1, 0) - h.get(j, 0)
        if j == 4:
            e += cq
        conv = sum(h.get(a, 0) * h.get(j - a, 0) for a in range(j + 1))
        E[j] = sp.cancel(e - conv / 2)
    return E


def integrability_witness(c):
    """Resonance obstruction of the order-6 two-scale equation.

    The order-6 equation is M F_6 = R_6 with M = Theta^2 - 1 - F_0, which
    admits a solution free of ln(xi - 12) iff the pairing of R_6 with the
    rational homogeneous solution H_1 has no residue at the resonant
    point: witness = Res_{xi=12} H_1(xi) R_6(xi) / xi.  Exact rational in
    c; zero exactly at c = -392/625.
    """
    R6 = sp.cancel(-hierarchy_residuals(Fraction(c), 6)[6])
    res = sp.residue(sp.cancel(H1_expr() * R6 / XI), XI, 12)
    return Fraction(int(res.p), int(res.q))


@lru_cache(maxsize=None)
def compute_G(n, eqp_coeff=EQP_COEFF):
    """Exact G_n(xi) of the pole-chart expansion g ~ sum G_n(xi)/x^n.

    From g (3 + h) = 3 h order by order:
    (3 + F_0) G_n = 3 F_n - sum_{a<n} G_a F_{n-a}.
    """
    if n == 0:
        return sp.cancel(3 * F0_expr() / (3 + F0_expr()))
    acc = 3 * compute_F(n, eqp_coeff)
    for a in range(n):
        acc -= compute_G(a, eqp_coeff) * compute_F(n - a, eqp_coeff)
    return sp.cancel(acc / (3 + F0_expr()))


# ---------------------------------------------------------------------------
# Evaluation


def xi_of(x, C):
    """xi = C x^{-1/2} e^{-x}."""
    x = mp.mpc(x)
    return mp.mpc(C) * mp.exp(-x) / mp.sqrt(x)


@lru_cache(maxsize=None)
def _lambdified(n, chart):
    fn = compute_F(n) if chart == "F" else compute_G(n)
    return sp.lambdify(XI, fn, modules="mpmath")


def region_ok(xi, chart, epsilon=EPSILON):
    """|xi -+ 12| > epsilon and |xi| < 1/epsilon for the F (G) chart."""
    excl = 12 if chart == "F" else -12
    return abs(xi - excl) > epsilon and abs(xi) < 1 / epsilon


def eval_two_scale(x, C, m=1, chart=None, epsilon=EPSILON, delta=DELTA,
                   radius=RADIUS):
    """Evaluate sum_{j<=m} F_j(xi)/x^j (or the G-chart analog).

    ``chart`` is "F", "G", or None for automatic selection by maximal
    distance of xi to the chart's excluded point (12 for F, -12 for G).
    Returns (value, chart).  Raises OutsideRegionError when x is inside
    radius or neither chart's region test passes.
    """
    x = mp.mpc(x)
    if abs(x) < radius * (1 - delta):
        raise OutsideRegionError("|x| = %.3f below the validity radius"
                                 % abs(x))
    xi = xi_of(x, C)
    if chart is None:
        chart = "F" if abs(xi - 12) >= abs(xi + 12) else "G"
    if not region_ok(xi, chart, epsilon):
        other = "G" if chart == "F" else "F"
        if region_ok(xi, other, epsilon):
            chart = other
        else:
            raise OutsideRegionError(
                "xi = %s excluded from both charts" % xi)
    val = mp.mpc(0)
    for j in range(m, -1, -1):
        val = val / x + _lambdified(j, chart)(xi)
    return val, chart


# ---------------------------------------------------------------------------
# Pole prediction


@dataclass
class PolePrediction:
    """Four-order asymptotic location of the n-th pole of the first array."""

    n: int
    L: complex
    x_n: complex


def predict_pole(n, C_plus):
    """Asymptotic location of pole n of the first array, four orders.

    x_n = t + L - (109/120 + L/2)/t
          + (4699/2400 + (139/120) L + L^2/4)/t^2
          - (41402111/6480000 + (899/200) L + (77/60) L^2 + L^3/6)/t^3,
    t = 2 n pi i,  L = ln(C+ / (12 t^{1/2})) (principal branch).

    The L-dependence is exactly the inversion of
    xi(x) = 12 + w_1/x + w_2/x^2 + w_3/x^3 (constants w_j fixed by the
    L-free terms), which pins the signs of the t^{-2} and t^{-3}
    L-polynomials used here.
    """
    if n < 1:
        raise ValueError("pole index must be >= 1")
    if C_plus == 0:
        raise ValueError("C+ = 0 solutions have no first pole array")
    t = 2j * math.pi * n
    L = cmath.log(complex(C_plus) / (12 * t ** 0.5))
    x = (t + L - (109 / 120 + L / 2) / t
         + (4699 / 2400 + 139 / 120 * L + L ** 2 / 4) / t ** 2
         - (41402111 / 6480000 + 899 / 200 * L + 77 / 60 * L ** 2
            + L ** 3 / 6) / t ** 3)
    return PolePrediction(n=n, L=L, x_n=x)
