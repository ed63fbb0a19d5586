"""Cycle integrals, their ODEs, the Poincare map, and the mu equation.

The energy-like variable s = h'^2 - h^2 - h^3/3 is slow in the pole
sector; with u = h as the angle-like variable and R(u, s) =
sqrt(u^3/3 + u^2 + s) the equation becomes

    ds/du = -2 R/x + (784/625) x^-4,    dx/du = 1/R.

The cycle is the circle |u + 2| = 2 through the base point u0 = -4: for
the s of interest it encloses two roots of the cubic and excludes the
third, and it degenerates exactly at s = 0 (a root reaches the contour)
and s = -4/3 (the interior roots collide).  The period integrals

    J(s) = oint R du,    L(s) = oint du/R = 2 J'(s)

satisfy J'' + rho J / 4 = 0 with rho = 5/(3s(3s+4)).  Iterating once
around the cycle gives the Poincare map (x_n, s_n) -> (x_{n+1}, s_{n+1})
with the adiabatic invariants Q = x J(s) and K_shifted = K(s_n) +
2n/(kappa0 x0 J(s0)), K = Jhat/J.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    CycleBreakdownError,
    DegenerateCycleError,
    MatchFailureError,
    NoIntegerConsistencyError,
)

#: inhomogeneity constant 2 * 392/625 of the s-equation
S_SOURCE = 784.0 / 625.0

U_BASE = -4.0
CYCLE_CENTER = -2.0
CYCLE_RADIUS = 2.0

#: guard radius around the degenerate energies {0, -4/3}
DEGENERATE_GUARD = 0.05


def cubic_roots(s):
    """Roots of u^3/3 + u^2 + s, interior pair first, exterior root last.

    The interior pair is the two roots closest to the cycle center -2.
    """
    rts = np.roots([1.0 / 3.0, 1.0, 0.0, complex(s)])
    order = np.argsort(np.abs(rts - CYCLE_CENTER))
    return rts[order]


@dataclass
class CubicData:
    """The cubic u^3/3 + u^2 + s with roots tracked relative to the cycle."""

    s: complex
    roots: np.ndarray = field(init=False)

    def __post_init__(self):
        self.s = complex(self.s)
        self.roots = cubic_roots(self.s)

    def degenerate_distance(self):
        return min(abs(self.s), abs(self.s + 4.0 / 3.0))


@dataclass
class Cycle:
    """Closed u-contour: circle through u0 = -4 around the interior pair."""

    center: complex = CYCLE_CENTER
    radius: float = CYCLE_RADIUS
    base: complex = U_BASE

    def point(self, t):
        """Contour point at parameter t in [0, 1), starting at the base."""
        return self.center + self.radius * np.exp(
            1j * (math.pi + 2 * math.pi * np.asarray(t)))

    def validate(self, s, margin=DEGENERATE_GUARD):
        data = CubicData(s)
        if data.degenerate_distance() < DEGENERATE_GUARD:
            raise DegenerateCycleError(
                "s = %s within guard radius of a degenerate energy" % s)
        d = np.abs(np.abs(data.roots - self.center) - self.radius)
        if d.min() < margin:
            raise DegenerateCycleError(
                "cubic root within %.3g of the contour at s = %s"
                % (d.min(), s))
        inside = np.abs(data.roots - self.center) < self.radius
        if inside.sum() != 2:
            raise DegenerateCycleError(
                "contour encloses %d roots instead of 2 at s = %s"
                % (inside.sum(), s))
        return data


def _R_track(u_vals, s, R_prev=None):
    """sqrt(u^3/3 + u^2 + s) branch-tracked continuously along u_vals."""
    vals = np.sqrt(u_vals**3 / 3.0 + u_vals**2 + complex(s))
    out = np.empty_like(vals)
    for i, v in enumerate(vals):
        if R_prev is not None and abs(v - R_prev) > abs(v + R_prev):
            v = -v
        out[i] = v
        R_prev = v
    return out


def _cycle_quadrature(s, npts, cycle=None):
    """Trapezoid values of (J, L) on the contour with npts nodes."""
    cycle = cycle or Cycle()
    t = np.arange(npts) / npts
    u = cycle.point(t)
    du = 2j * math.pi * (u - cycle.center) / npts  # du/dt / npts
    R = _R_track(u, s)
    # single-valuedness check: closing the contour must restore the branch
    R_close = _R_track(u[:1], s, R_prev=R[-1])[0]
    if abs(R_close - R[0]) > 1e-8 * abs(R[0]):
        raise DegenerateCycleError(
            "R is not single-valued on the contour at s = %s" % s)
    return np.sum(R * du), np.sum(du / R)


def cycle_J(s, npts=512, cycle=None, return_error=False):
    """J(s) = oint R du over the cycle (trapezoid quadrature)."""
    cycle = cycle or Cycle()
    cycle.validate(s)
    J2, _ = _cycle_quadrature(s, npts // 2, cycle)
    J, _ = _cycle_quadrature(s, npts, cycle)
    err = abs(J - J2)
    return (J, err) if return_error else J


def cycle_L(s, npts=512, cycle=None, return_error=False):
    """L(s) = oint du/R over the cycle; equals 2 J'(s)."""
    cycle = cycle or Cycle()
    cycle.validate(s)
    _, L2 = _cycle_quadrature(s, npts // 2, cycle)
    _, L = _cycle_quadrature(s, npts, cycle)
    err = abs(L - L2)
    return (L, err) if return_error else L


def rho(s):
    """Coefficient of the period ODE J'' + rho J / 4 = 0."""
    s = complex(s)
    return 5.0 / (3.0 * s * (3.0 * s + 4.0))


# Frobenius series of the solution vanishing at s = 0 (indicial root 1),
# normalized to slope 1: Jhat = s - 5/96 s^2 + 385/27648 s^3 - ...
_JHAT_SERIES = (1.0, -5.0 / 96.0, 385.0 / 27648.0, -85085.0 / 15925248.0)
_JHAT_BASE = -0.05


def _jhat_seed(s):
    val = sum(c * s ** (k + 1) for k, c in enumerate(_JHAT_SERIES))
    der = sum((k + 1) * c * s ** k for k, c in enumerate(_JHAT_SERIES))
    return complex(val), complex(der)


def _ode_continue(s0, y0, s1, rtol=1e-12, atol=1e-14):
    """Continue (J, J') of J'' = -rho J / 4 along the segment s0 -> s1."""
    s0, s1 = complex(s0), complex(s1)
    if s1 == s0:
        return np.asarray(y0, dtype=complex)
    ds = s1 - s0

    def fun(t, y):
        s = s0 + t * ds
        return [ds * y[1], -ds * rho(s) * y[0] / 4.0]

    sol = solve_ivp(fun, (0.0, 1.0), np.asarray(y0, dtype=complex),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise MatchFailureError("period ODE continuation failed: %s"
                                % sol.message)
    return sol.y[:, -1]


@dataclass
class PeriodTable:
    """J, Jhat, and the (constant) Wronskian kappa0 on an s grid."""

    s_grid: np.ndarray
    J: np.ndarray
    J_prime: np.ndarray
    Jhat: np.ndarray
    Jhat_prime: np.ndarray

    @property
    def wronskian(self):
        return self.J * self.Jhat_prime - self.Jhat * self.J_prime

    @property
    def kappa0(self):
        return complex(np.mean(self.wronskian))

    def K(self):
        """K(s) = Jhat/J on the grid."""
        return self.Jhat / self.J


def solve_J_ode(s_grid, match_tol=1e-6):
    """Continue J (matched to quadrature) and Jhat along s_grid.

    J is seeded from cycle quadrature at the first grid point and
    re-verified against cycle_J at every grid point (MatchFailureError
    beyond ``match_tol``).  Jhat is seeded by its Frobenius series near
    s = 0 (Jhat(0) = 0, Jhat'(0) = 1) and continued along a path through
    the series base point; kappa0 is their Wronskian.
    """
    s_grid = np.asarray(s_grid, dtype=complex)
    if len(s_grid) < 2:
        raise ValueError("need at least two grid points")
    J0 = cycle_J(s_grid[0])
    L0 = cycle_L(s_grid[0])
    yJ = np.array([J0, L0 / 2.0], dtype=complex)
    yH = np.asarray(_jhat_seed(_JHAT_BASE), dtype=complex)
    yH = _ode_continue(_JHAT_BASE, yH, s_grid[0])

    Js, Jps, Hs, Hps = [], [], [], []
    for i, s in enumerate(s_grid):
        if i > 0:
            yJ = _ode_continue(s_grid[i - 1], yJ, s)
            yH = _ode_continue(s_grid[i - 1], yH, s)
        Jq = cycle_J(s)
        if abs(yJ[0] - Jq) > match_tol * max(1.0, abs(Jq)):
            raise MatchFailureError(
                "ODE-continued J deviates from quadrature at s = %s "
                "(|diff| = %.3e)" % (s, abs(yJ[0] - Jq)))
        Js.append(yJ[0]); Jps.append(yJ[1])
        Hs.append(yH[0]); Hps.append(yH[1])
    return PeriodTable(s_grid=s_grid,
                       J=np.array(Js), J_prime=np.array(Jps),
                       Jhat=np.array(Hs), Jhat_prime=np.array(Hps))


def jhat_at(s):
    """(Jhat(s), Jhat'(s)) by continuation from the Frobenius seed."""
    y = np.asarray(_jhat_seed(_JHAT_BASE), dtype=complex)
    y = _ode_continue(_JHAT_BASE, y, s)
    return complex(y[0]), complex(y[1])


# ---------------------------------------------------------------------------
# Poincare map


def poincare_step(x_n, s_n, nsteps=1024, cycle=None, source=True,
                  _rerouted=False):
    """One traversal of the cycle: (x_n, s_n) -> (x_{n+1}, s_{n+1}).

    Fixed-step RK4 in the contour parameter with continuous branch
    tracking of R.  ``source=False`` drops the 1/x terms (autonomous
    limit, s is then conserved exactly).
    """
    cycle = cycle or Cycle()
    x = complex(x_n)
    s = complex(s_n)
    R_ref = cmath.sqrt(U_BASE**3 / 3.0 + U_BASE**2 + s)

    def rhs(t, y, R_prev):
        u = complex(cycle.point(t))
        du = 2j * math.pi * (u - cycle.center)  # du/dt
        R = cmath.sqrt(u**3 / 3.0 + u**2 + y[1])
        if abs(R - R_prev) > abs(R + R_prev):
            R = -R
        if abs(R) < 1e-9:
            raise CycleBreakdownError(
                "R vanished on the contour at u = %s" % u)
        ds = -2.0 * R / y[0] if source else 0.0
        if source:
            ds += S_SOURCE / y[0] ** 4
        return np.array([du / R, du * ds]), R

    y = np.array([x, s], dtype=complex)
    htau = 1.0 / nsteps
    try:
        for i in range(nsteps):
            t = i * htau
            k1, R_ref = rhs(t, y, R_ref)
            k2, _ = rhs(t + htau / 2, y + htau * k1 / 2, R_ref)
            k3, _ = rhs(t + htau / 2, y + htau * k2 / 2, R_ref)
            k4, _ = rhs(t + htau, y + htau * k3, R_ref)
            y = y + htau * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    except CycleBreakdownError:
        if _rerouted:
            raise
        shifted = Cycle(center=cycle.center + 0.15j, radius=cycle.radius,
                        base=cycle.base)
        return poincare_step(x_n, s_n, nsteps=nsteps, cycle=shifted,
                             source=source, _rerouted=True)
    return complex(y[0]), complex(y[1])


@dataclass
class CycleState:
    """State after n cycle traversals with the two adiabatic invariants."""

    n: int
    x_n: complex
    s_n: complex
    Q: complex
    K_shifted: complex


def run_cycles(x0, s0, N, nsteps=1024, stop_arg=-math.pi + 0.1):
    """Iterate the Poincare map N times, recording Q and K_shifted.

    Terminates early when arg x_n reaches ``stop_arg`` (the last pole
    array).  Q = x_n J(s_n); K_shifted = Jhat/J (s_n) + 2n/(kappa0 x0
    J(s0)) with kappa0 the Wronskian of J and Jhat.
    """
    x0, s0 = complex(x0), complex(s0)
    J0 = cycle_J(s0)
    Jh0, Jhp0 = jhat_at(s0)
    L0 = cycle_L(s0)
    # rescale Jhat to unit Wronskian so that K' = 1/J^2 exactly; the
    # conserved combination is then K(s_n) + 2n/(kappa0 x0 J0) with
    # kappa0 = 1 in this normalization
    kappa_raw = J0 * Jhp0 - Jh0 * L0 / 2.0
    kappa0 = 1.0

    states = []
    x, s = x0, s0
    for n in range(N + 1):
        J = cycle_J(s)
        Jh, _ = jhat_at(s)
        states.append(CycleState(
            n=n, x_n=x, s_n=s, Q=x * J,
            K_shifted=Jh / (kappa_raw * J) + 2.0 * n / (kappa0 * x0 * J0)))
        if n == N or cmath.phase(x) <= stop_arg:
            break
        x, s = poincare_step(x, s, nsteps=nsteps)
    return states


def relative_drift(values):
    """max |v - v0| / |v0| over a sequence of invariant values."""
    v = np.asarray(values, dtype=complex)
    return float(np.max(np.abs(v - v[0])) / abs(v[0]))


# ---------------------------------------------------------------------------
# Closed-form mu equation


def _stok2_residual(mu, N):
    A = (6 + 6j) * (math.sqrt(3) + 1j)
    lhs = -(4 * math.sqrt(3) - 24j) / (5 * math.pi)
    rhs = 24j * N / (5 * math.pi) + (
        12 * cmath.log(A / mu) + 1j * math.pi - 4 * math.sqrt(3) * math.pi
        - 6 * math.log(240 * math.pi)) / (5 * math.pi ** 2)
    return lhs - rhs


def solve_stok2(N=None, tol=1e-10):
    """Solve the closed-form mu equation for integer N.

    The equation determines mu up to the branch of the logarithm; the
    integer N must make the principal-branch identity exact.  With
    N=None the consistent integer is searched in [-6, 6].  Returns
    (mu, residual).  Raises NoIntegerConsistencyError when the given
    (or no) integer balances the equation.
    """
    A = (6 + 6j) * (math.sqrt(3) + 1j)
    lhs = -(4 * math.sqrt(3) - 24j) / (5 * math.pi)
    candidates = range(-6, 7) if N is None else [int(N)]
    for n in candidates:
        T = (5 * math.pi ** 2 * lhs - 24j * n * math.pi - 1j * math.pi
             + 4 * math.sqrt(3) * math.pi + 6 * math.log(240 * math.pi))
        mu = A * cmath.exp(-T / 12.0)
        resid = abs(_stok2_residual(mu, n))
        if resid < tol:
            return mu, resid
    raise NoIntegerConsistencyError(
        "no integer branch balances the mu equation (N = %s)" % N)
