"""Radial profiles of the Euclidean sigma_{p,q} family.

Rotationally symmetric polar angles ``v(r)`` solve the singular ODE

    r^2 V'' + r V' = sin V,        V = 2 v,

which in ``t = log r`` is autonomous (``V_tt = sin V``); with ``x = pi - V`` it
is the pendulum ``x'' + sin x = 0``.  The solutions with ``v(0+) = 0`` lie on
the separatrix ``y = -2 cos(x/2)`` through the saddle ``(pi, 0)``.

Integrating the separatrix gives ``1/r = c (sec(x/2) + tan(x/2))`` with
``c = |q|/2``.  Writing ``a = q r / 2``, ``sec(x/2) + tan(x/2) = 1/a`` is solved
by ``V = 4 arctan(a)``, i.e.

    v_q(r) = 2 arctan(q r / 2),     v_q'(r) = q / (1 + (q r / 2)^2).

The closed form is the default; :func:`solve_shooting` integrates the ODE
from the singular point and serves as an independent check.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError


class Method(str, enum.Enum):
    CLOSED_FORM = "closed"
    SHOOTING = "shooting"


def closed_form(q: float, r):
    """Return ``(v, v')`` of the separatrix solution with slope ``q`` at the axis."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("closed form needs r > 0")
    a = 0.5 * q * r
    return 2.0 * np.arctan(a), q / (1.0 + a * a)


def closed_form_second(q: float, r):
    """``v''`` of the closed-form profile."""
    r = np.asarray(r, dtype=float)
    a = 0.5 * q * r
    return -q * q * a / (1.0 + a * a) ** 2


def starting_radius(q: float) -> float:
    return 1e-6 * max(1.0, 1.0 / abs(q))


@dataclass
class PendulumSolution:
    """Tabulated profile; ``samples`` has columns ``r, v, v'``."""

    q: float
    samples: np.ndarray
    method: Method
    max_residual: float = float("nan")
    _dense: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def c(self) -> float:
        return abs(self.q) / 2.0

    @property
    def r(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def v_prime(self) -> np.ndarray:
        return self.samples[:, 2]

    def profile(self, r):
        """Evaluate ``(v, v')`` anywhere in ``(0, r_max]``."""
        if self._dense is None:
            return closed_form(self.q, r)
        return self._dense(r)

    def axis_data(self) -> tuple[float, float, float]:
        """Extrapolate ``(v, v', v'')`` to ``r = 0`` from the two smallest samples."""
        r, v, vp = self.r, self.v, self.v_prime
        slope = (vp[1] - vp[0]) / (r[1] - r[0])
        return (v[0] - r[0] * vp[0], vp[0] - r[0] * slope, slope)


def closed_form_solution(q: float, r_grid) -> PendulumSolution:
    r = np.asarray(r_grid, dtype=float)
    v, vp = closed_form(q, r)
    sol = PendulumSolution(float(q), np.column_stack([r, v, vp]), Method.CLOSED_FORM)
    sol.max_residual = ode_residual(sol)
    return sol


def _rhs(t, y):
    return np.array([y[1], np.sin(y[0])])


def solve_shooting(q: float, r_max: float = 1e3, n: int = 400, tol: float = 1e-10,
                   max_steps: int = 200_000) -> PendulumSolution:
    """Integrate the radial ODE outward from the singular point.

    Starts at ``r0 = 1e-6 max(1, 1/|q|)`` with ``v = q r0``, ``v' = q`` and
    integrates ``V_tt = sin V`` in ``t = log r`` with an adaptive
    Dormand-Prince 5(4) pair.  Samples are log-spaced on ``[r0, r_max]``.
    Raises :class:`NumericalError` if the integrator fails, exceeds the step
    budget or leaves an interval defect above ``tol``.
    """
    if r_max <= 0 or tol <= 0:
        raise ValueError("r_max and tol must be positive")
    q = float(q)
    if q == 0.0:
        r = np.geomspace(1e-6, r_max, n)
        return PendulumSolution(0.0, np.column_stack([r, 0 * r, 0 * r]), Method.SHOOTING, 0.0)
    r0 = starting_radius(q)
    if r_max <= r0:
        raise ValueError("r_max must exceed the starting radius")
    t0, t1 = np.log(r0), np.log(r_max)
    y0 = [2.0 * q * r0, 2.0 * q * r0]
    rtol = max(tol * 1e-3, 2.5e-14)
    res = integrate.solve_ivp(_rhs, (t0, t1), y0, method="RK45", rtol=rtol, atol=rtol * 1e-2,
                              dense_output=True)
    if not res.success or res.nfev > 6 * max_steps:
        raise NumericalError(f"shooting integration failed: {res.message}")
    t_samples = np.linspace(t0, t1, n)
    Y = res.sol(t_samples)
    r = np.exp(t_samples)
    samples = np.column_stack([r, 0.5 * Y[0], 0.5 * Y[1] / r])

    def dense(rr):
        rr = np.asarray(rr, dtype=float)
        if np.any(rr <= 0) or np.any(rr > r_max * (1 + 1e-12)):
            raise DomainError(f"shooting profile covers (0, {r_max}]")
        out_v = np.empty_like(rr)
        out_vp = np.empty_like(rr)
        small = rr < r0
        qr = q * rr[small]
        out_v[small] = qr - qr**3 / 12.0
        out_vp[small] = q - q * qr**2 / 4.0
        big = ~small
        if np.any(big):
            Yb = res.sol(np.log(rr[big]))
            out_v[big] = 0.5 * Yb[0]
            out_vp[big] = 0.5 * Yb[1] / rr[big]
        return out_v, out_vp

    sol = PendulumSolution(q, samples, Method.SHOOTING, _dense=dense)
    sol.max_residual = ode_residual(sol)
    if not sol.max_residual < tol:
        raise NumericalError(f"shooting residual {sol.max_residual:.3e} exceeds tol {tol:.1e}")
    return sol


def ode_residual(sol: PendulumSolution) -> float:
    """Largest residual of the radial ODE over the samples.

    Closed-form samples are checked pointwise with the exact ``v''``.  Tabulated
    (shooting) samples are checked by their interval defect: each sample state is
    pushed to the next sample time with an independent 8th-order integrator and
    compared with the tabulated state.
    """
    if sol.q == 0.0:
        return float(np.max(np.abs(sol.v)))
    r, v, vp = sol.r, sol.v, sol.v_prime
    if sol.method is Method.CLOSED_FORM:
        vpp = closed_form_second(sol.q, r)
        res = 2 * r * r * vpp + 2 * r * vp - np.sin(2 * v)
        return float(np.max(np.abs(res)))
    t = np.log(r)
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("defect check needs log-uniform samples")
    V, W = 2 * v, 2 * r * vp
    m = len(r) - 1
    y0 = np.concatenate([V[:-1], W[:-1]])

    def rhs(s, y):
        return np.concatenate([y[m:], np.sin(y[:m])])

    out = integrate.solve_ivp(rhs, (0.0, dt[0]), y0, method="DOP853", rtol=1e-13, atol=1e-15)
    end = out.y[:, -1]
    defect = np.maximum(np.abs(end[:m] - V[1:]), np.abs(end[m:] - W[1:]))
    return float(np.max(defect))


def separatrix_residual(sol: PendulumSolution) -> float:
    """Max of ``|y + 2 cos(x/2)|`` in phase variables ``x = pi - 2v``, ``y = x_t``."""
    if sol.q == 0.0:
        raise ValueError("q = 0 sits at the equilibrium x = pi; no separatrix branch")
    x = np.pi - 2.0 * sol.v
    y = -2.0 * sol.r * sol.v_prime
    return float(np.max(np.abs(y + 2.0 * np.cos(x / 2.0))))


@functools.lru_cache(maxsize=32)
def shooting_profile(q: float, r_max: float = 1e4, tol: float = 1e-10) -> PendulumSolution:
    """Cached shooting solution used when fields evaluate in verification mode."""
    return solve_shooting(q, r_max=r_max, n=400, tol=tol)


def profile(q: float, method: Method | str = Method.CLOSED_FORM):
    """Return a callable ``r -> (v, v')`` for the chosen method."""
    method = Method(method)
    if q == 0.0:
        def flat(r):
            zero = np.zeros_like(np.asarray(r, dtype=float))
            return zero, zero.copy()
        return flat
    if method is Method.CLOSED_FORM:
        return functools.partial(closed_form, q)
    return shooting_profile(float(q)).profile


def crossing_radius(q: float, method: Method | str = Method.CLOSED_FORM) -> float:
    """Radius where ``v_q = +-pi/2``, i.e. where the field is horizontal.

    Found by bracketing root search on the chosen profile (not hard-coded).
    """
    if q == 0.0:
        raise ValueError("q = 0 has no crossing radius")
    prof = profile(q, method)
    target = np.copysign(np.pi / 2.0, q)
    lo, hi = starting_radius(q) * 2, 1.0 / abs(q)
    while prof(np.array([hi]))[0][0] * np.sign(q) < np.pi / 2.0:
        hi *= 2.0
    return float(optimize.brentq(lambda r: prof(np.array([r]))[0][0] - target, lo, hi,
                                 xtol=1e-15, rtol=1e-15, maxiter=500))


def bending(q: float, r, method: Method | str = Method.CLOSED_FORM) -> np.ndarray:
    """Bending ``v'^2 + sin^2(v)/r^2`` of sigma_{p,q} at cylindrical radius ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if q == 0.0:
        return np.zeros_like(r)
    v, vp = profile(q, method)(r)
    return vp**2 + (np.sin(v) / r) ** 2


def bending_axis_limit(q: float, method: Method | str = Method.CLOSED_FORM,
                       r_start: float | None = None) -> float:
    """Limit of the bending as ``r -> 0`` by two levels of Richardson extrapolation.

    The bending is even in ``r``, so the error expansion runs in powers of ``r^2``.
    """
    if q == 0.0:
        return 0.0
    h = r_start if r_start is not None else 1e-2 / max(1.0, abs(q))
    b1, b2, b3 = bending(q, np.array([h, h / 2, h / 4]), method)
    c1 = (4 * b2 - b1) / 3
    c2 = (4 * b3 - b2) / 3
    return float((16 * c2 - c1) / 15)


def energy_density_profile(q: float, r_grid, method: Method | str = Method.CLOSED_FORM) -> np.ndarray:
    """Rows ``(r, bending)``; the first row is the extrapolated axis value at ``r = 0``."""
    r = np.asarray(r_grid, dtype=float)
    rows = np.column_stack([r, bending(q, r, method)])
    return np.vstack([[0.0, bending_axis_limit(q, method)], rows])


def total_bending(q: float, R_outer: float, R_inner: float = 0.0) -> float:
    """Integral of the bending over the spherical shell ``R_inner <= |x| <= R_outer``.

    The field is z-independent, so the volume integral reduces to
    ``int b(r) 2 pi r L(r) dr`` with ``L`` the vertical chord length of the shell.
    """
    if q == 0.0:
        return 0.0

    def chord(r, R):
        return 2.0 * np.sqrt(np.maximum(R * R - r * r, 0.0))

    def integrand(r):
        return bending(q, np.array([r]))[0] * 2 * np.pi * r * (chord(r, R_outer) - chord(r, R_inner))

    brk = [b for b in (R_inner, 2.0 / abs(q)) if 0 < b < R_outer]
    val, _ = integrate.quad(integrand, 0.0, R_outer, points=brk or None, limit=400,
                            epsabs=0.0, epsrel=1e-10)
    return float(val)
