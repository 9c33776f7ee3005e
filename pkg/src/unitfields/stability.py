"""Second variation of the H-parallel field ``xi_3`` on hyperbolic space.

The variation is ``alpha = f xi_1`` with ``f`` radial about a base point.  After
integrating by parts the Hessian reduces to

    H = 4 pi int_0^inf (phi'(rho)^2 - phi(rho)^2) sinh^2(rho) d rho

for the radial profile ``phi``.  For the piecewise-linear bump (1 on ``[0, R]``,
linear down to 0 on ``[R, R + delta]``) this has a closed form.  Two closed
forms are provided:

``"published"``
    ``(pi/d^2)(2 - d^2) sinh d cosh(2R+d) + (pi/d) cosh 2R + (pi/d)(2Rd + 5d^2/3 - 3)``.
    Its sign structure defines the thresholds ``delta_s`` and ``delta_u``.
``"exact"``
    ``(pi/d^2) sinh d cosh(2R+d) + (pi/d) cosh 2R + (pi/d)(2Rd + 2d^2/3 - 2)``,
    which is what the shell integrals assemble to and what quadrature returns.

The two agree only on the line ``delta = 1``.  See :func:`lattice_check`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize

from . import charts
from .charts import HYPERBOLIC
from .errors import DomainError, NumericalError

PUBLISHED = "published"
EXACT = "exact"
FORMS = (PUBLISHED, EXACT)
R_SCAN = 50.0
BASE_POINT = np.array([0.0, 0.0, 1.0])   # half-space image of the ball-model origin


def _check_form(form: str) -> str:
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    return form


def _check_positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val}")


# ---------------------------------------------------------------------------
# volumes and shell integrals

def ball_volume(rho: float) -> float:
    """Volume ``pi sinh 2rho - 2 pi rho`` of a hyperbolic ball of radius ``rho``."""
    if rho < 0:
        raise DomainError("radius must be non-negative")
    if rho < 1e-2:
        # series avoids the cancellation in sinh(2 rho) - 2 rho
        x = 2.0 * rho
        return math.pi * (x**3 / 6 + x**5 / 120 + x**7 / 5040 + x**9 / 362880)
    return math.pi * math.sinh(2 * rho) - 2 * math.pi * rho


def shell_volume(R: float, delta: float) -> float:
    """Volume of the shell ``R <= rho <= R + delta``: ``2 pi cosh(2R+d) sinh d - 2 pi d``."""
    return 2 * math.pi * math.cosh(2 * R + delta) * math.sinh(delta) - 2 * math.pi * delta


def ball_volume_quadrature(rho: float) -> float:
    val, _ = integrate.quad(lambda s: math.sinh(s) ** 2, 0.0, rho, epsabs=0.0, epsrel=1e-13)
    return 4 * math.pi * val


def _i1_bracket(rho):
    return rho * math.sinh(2 * rho) - 0.5 * math.cosh(2 * rho) - rho * rho


def _i2_bracket(rho):
    return (rho * rho + 0.5) * math.sinh(2 * rho) - rho * math.cosh(2 * rho) - 2 * rho**3 / 3


@dataclass(frozen=True)
class ShellIntegrals:
    """``I1 = int rho dV`` and ``I2 = int rho^2 dV`` over the shell, with quadrature checks."""

    R: float
    delta: float
    I1: float
    I2: float
    I1_volume_form: float
    I1_quadrature: float
    I2_quadrature: float
    volume: float

    def max_rel_diff(self) -> float:
        diffs = [abs(self.I1 - self.I1_quadrature) / abs(self.I1_quadrature),
                 abs(self.I2 - self.I2_quadrature) / abs(self.I2_quadrature),
                 abs(self.I1 - self.I1_volume_form) / abs(self.I1_quadrature)]
        return float(max(diffs))


def shell_integrals(R: float, delta: float) -> ShellIntegrals:
    _check_positive(R=R, delta=delta)
    a, b = R, R + delta
    I1 = math.pi * (_i1_bracket(b) - _i1_bracket(a))
    I2 = math.pi * (_i2_bracket(b) - _i2_bracket(a))
    I1v = (b * ball_volume(b) - a * ball_volume(a) + 0.5 * math.pi * math.cosh(2 * a)
           - 0.5 * math.pi * math.cosh(2 * b) + math.pi * delta * (2 * R + delta))

    def weight(r):
        return 4 * math.pi * math.sinh(r) ** 2

    q1, _ = integrate.quad(lambda r: r * weight(r), a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    q2, _ = integrate.quad(lambda r: r * r * weight(r), a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    return ShellIntegrals(R, delta, I1, I2, I1v, q1, q2, shell_volume(R, delta))


# ---------------------------------------------------------------------------
# Hessian of the bump variation

def _hessian(R, delta, form):
    d = delta
    s = math.sinh(d) * math.cosh(2 * R + d)
    if form == PUBLISHED:
        return (math.pi / d**2) * (2 - d * d) * s + (math.pi / d) * math.cosh(2 * R) \
            + (math.pi / d) * (2 * R * d + 5 * d * d / 3 - 3)
    return (math.pi / d**2) * s + (math.pi / d) * math.cosh(2 * R) \
        + (math.pi / d) * (2 * R * d + 2 * d * d / 3 - 2)


def hessian_closed_form(R: float, delta: float, form: str = PUBLISHED) -> float:
    """Closed-form Hessian of the bump variation (see module docstring for ``form``)."""
    _check_positive(R=R, delta=delta)
    return _hessian(R, delta, _check_form(form))


def hessian_from_shell_integrals(R: float, delta: float) -> float:
    """Assemble ``V_shell/d^2 - V_R - int_shell phi^2 dV`` from ``I1``, ``I2``."""
    sh = shell_integrals(R, delta)
    b = R + delta
    phi2 = (b * b * sh.volume - 2 * b * sh.I1 + sh.I2) / delta**2
    return sh.volume / delta**2 - ball_volume(R) - phi2


def large_r_coefficient(delta: float, form: str = PUBLISHED) -> float:
    """Sign-determining factor of ``H`` as ``R -> infinity`` (``H ~ pi e^{2R} c / (2 d^2)``)."""
    _check_form(form)
    lead = math.sinh(delta) * math.exp(delta)
    if form == PUBLISHED:
        lead *= 2 - delta * delta
    return lead + delta


def small_r_limit(delta: float, form: str = PUBLISHED) -> float:
    """``H(R -> 0+, delta)``."""
    _check_positive(delta=delta)
    return _hessian(0.0, delta, _check_form(form))


class RadialProfile:
    """Radial function ``phi(rho)`` about the base point with compact support."""

    support: float = 0.0

    def value(self, rho):
        raise NotImplementedError

    def derivative(self, rho):
        raise NotImplementedError

    def second(self, rho):
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return []


class ZeroProfile(RadialProfile):
    support = 0.0

    def value(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    derivative = second = value


@dataclass(frozen=True)
class BumpProfile(RadialProfile):
    """1 on ``[0, R]``, ``1 + (R - rho)/delta`` on ``[R, R + delta]``, 0 beyond."""

    R: float
    delta: float

    def __post_init__(self):
        _check_positive(R=self.R, delta=self.delta)

    @property
    def support(self) -> float:
        return self.R + self.delta

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.clip(1.0 + (self.R - rho) / self.delta, 0.0, 1.0)

    def derivative(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = (rho > self.R) & (rho < self.R + self.delta)
        return np.where(inside, -1.0 / self.delta, 0.0)

    def second(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def breakpoints(self):
        return [self.R, self.R + self.delta]


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t * t)


def _smoothstep_d(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 30 * t * t * (1 - t) ** 2, 0.0)


def _smoothstep_int(t):
    """``int_0^t smoothstep``."""
    t = np.asarray(t, dtype=float)
    c = np.clip(t, 0.0, 1.0)
    return np.where(t >= 1, t - 0.5, c**6 - 3 * c**5 + 2.5 * c**4)


@dataclass(frozen=True)
class SmoothedBump(RadialProfile):
    """C^3 version of :class:`BumpProfile`.

    The slope ``-1/delta`` is switched on around ``R`` and off around ``R + delta``
    with quintic smoothsteps of width ``width``; the slope blend is symmetric
    about both corners, so the profile still drops from 1 to 0 over the same shell.
    """

    R: float
    delta: float
    width: float

    def __post_init__(self):
        _check_positive(R=self.R, delta=self.delta, width=self.width)
        if not self.width < min(self.delta, 2 * self.R):
            raise DomainError("smoothing width must be below delta and 2R")

    @property
    def support(self) -> float:
        return self.R + self.delta + 0.5 * self.width

    def _t(self, rho):
        rho = np.asarray(rho, dtype=float)
        w = self.width
        return (rho - self.R) / w + 0.5, (rho - self.R - self.delta) / w + 0.5

    def value(self, rho):
        t1, t2 = self._t(rho)
        drop = self.width * (_smoothstep_int(t1) - _smoothstep_int(t2)) / self.delta
        return np.clip(1.0 - drop, 0.0, 1.0)

    def derivative(self, rho):
        t1, t2 = self._t(rho)
        return -(_smoothstep(t1) - _smoothstep(t2)) / self.delta

    def second(self, rho):
        t1, t2 = self._t(rho)
        return -(_smoothstep_d(t1) - _smoothstep_d(t2)) / (self.delta * self.width)

    def breakpoints(self):
        w = 0.5 * self.width
        return [self.R - w, self.R + w, self.R + self.delta - w, self.R + self.delta + w]


def hessian_quadrature(R: float, delta: float, tol: float = 1e-12,
                       profile: RadialProfile | None = None) -> float:
    """``4 pi int (phi'^2 - phi^2) sinh^2 rho d rho`` by adaptive quadrature.

    ``profile`` defaults to the exact piecewise-linear bump for ``(R, delta)``.
    Raises :class:`NumericalError` when the quadrature does not reach ``tol``.
    """
    _check_positive(tol=tol)
    if profile is None:
        profile = BumpProfile(R, delta)
    if isinstance(profile, ZeroProfile):
        return 0.0
    knots = [0.0] + sorted(b for b in profile.breakpoints() if 0 < b < profile.support)
    knots.append(profile.support)

    def integrand(rho):
        f = float(profile.value(rho))
        fp = float(profile.derivative(rho))
        return (fp * fp - f * f) * math.sinh(rho) ** 2

    total, err_total = 0.0, 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=max(tol * 1e-2, 1e-13), limit=200)
        total += val
        err_total += err
    total *= 4 * math.pi
    if not err_total * 4 * math.pi <= tol * max(abs(total), 1e-300):
        raise NumericalError(f"quadrature error estimate {err_total:.2e} above tolerance")
    return total


@dataclass(frozen=True)
class HessianEvaluation:
    R: float
    delta: float
    form: str
    closed_form: float
    quadrature: float

    @property
    def abs_diff(self) -> float:
        return abs(self.closed_form - self.quadrature)

    @property
    def rel_diff(self) -> float:
        return self.abs_diff / abs(self.quadrature)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(abs_diff=self.abs_diff, rel_diff=self.rel_diff)
        return d


def evaluate_hessian(R: float, delta: float, form: str = PUBLISHED,
                     tol: float = 1e-12) -> HessianEvaluation:
    return HessianEvaluation(float(R), float(delta), form,
                             float(hessian_closed_form(R, delta, form)),
                             float(hessian_quadrature(R, delta, tol)))


@dataclass
class LatticeReport:
    form: str
    n: int
    max_rel_diff: float
    worst: HessianEvaluation
    evaluations: list[HessianEvaluation]

    def to_dict(self) -> dict:
        return {"form": self.form, "n": self.n, "max_rel_diff": self.max_rel_diff,
                "worst": self.worst.to_dict()}


def lattice_check(form: str = PUBLISHED, n: int = 20, R_range=(0.1, 10.0),
                  delta_range=(0.1, 5.0)) -> LatticeReport:
    """Closed form against quadrature on an ``n x n`` lattice of ``(R, delta)``."""
    evals = [evaluate_hessian(R, d, form) for R in np.linspace(*R_range, n)
             for d in np.linspace(*delta_range, n)]
    worst = max(evals, key=lambda e: e.rel_diff)
    return LatticeReport(form, n, worst.rel_diff, worst, evals)


def volume_growth_bound(R: float, delta: float) -> float:
    """``V_shell / delta^2 - V_R``: the shell-gradient term against the inner-ball mass."""
    _check_positive(R=R, delta=delta)
    return shell_volume(R, delta) / delta**2 - ball_volume(R)


def hessian_surface(R_values, delta_values, form: str = PUBLISHED) -> np.ndarray:
    """Rows ``(R, delta, H)`` over the product grid, for plotting."""
    rows = [(R, d, hessian_closed_form(R, d, form)) for R in R_values for d in delta_values]
    return np.array(rows, dtype=float)


# ---------------------------------------------------------------------------
# thresholds

@dataclass(frozen=True)
class StabilityThresholds:
    delta_s: float
    delta_u: float
    tol: float
    form: str
    r_scan: float

    def to_dict(self) -> dict:
        return asdict(self)


def _scan_grid(r_scan):
    return np.concatenate([np.geomspace(1e-6, 1e-1, 60), np.linspace(0.1, r_scan, 500)[1:]])


def _sign_change(fn, lo=0.05, hi=10.0, n=400):
    xs = np.linspace(lo, hi, n)
    vals = np.array([fn(x) for x in xs])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) != 1:
        return None
    return xs[idx[0]], xs[idx[0] + 1]


@functools.lru_cache(maxsize=16)
def find_thresholds(tol: float = 1e-6, form: str = PUBLISHED,
                    r_scan: float = R_SCAN) -> StabilityThresholds:
    """Locate ``delta_s`` (large-R sign change) and ``delta_u`` (small-R sign change).

    Each root is bracketed on a coarse delta grid and refined by Brent's method
    (bisection safeguarded by secant/inverse-quadratic steps).  The sign structure
    is then confirmed by scanning ``R`` over ``(0, r_scan]`` just outside each
    threshold and at the midpoint.  Raises :class:`NumericalError` when there is no
    unique sign change or the scan contradicts the assumed structure.
    """
    _check_positive(tol=tol)
    _check_form(form)

    def large(d):
        return large_r_coefficient(d, form)

    def small(d):
        return small_r_limit(d, form)

    roots = {}
    for name, fn in (("delta_s", large), ("delta_u", small)):
        bracket = _sign_change(fn)
        if bracket is None:
            raise NumericalError(f"{name}: no unique sign change of H for the {form} form")
        roots[name] = optimize.brentq(fn, *bracket, xtol=tol * 1e-3, rtol=4 * np.finfo(float).eps)
    ds, du = roots["delta_s"], roots["delta_u"]
    if not ds < du:
        raise NumericalError(f"scan inconsistency: delta_s={ds} is not below delta_u={du}")

    grid = _scan_grid(r_scan)
    step = 10 * tol

    def H(d):
        return np.array([_hessian(R, d, form) for R in grid])

    below, above, mid = H(ds - step), H(du + step), H(0.5 * (ds + du))
    problems = []
    if not (np.all(below > 0) and large(ds - step) > 0 and small(ds - step) > 0):
        problems.append("H not positive for all R just below delta_s")
    if not (np.all(above < 0) and large(du + step) < 0 and small(du + step) < 0):
        problems.append("H not negative for all R just above delta_u")
    if not (mid[0] > 0 and large(0.5 * (ds + du)) < 0):
        problems.append("midpoint delta lacks the positive-small-R / negative-large-R pattern")
    if problems:
        raise NumericalError("scan inconsistency: " + "; ".join(problems))
    return StabilityThresholds(float(ds), float(du), tol, form, r_scan)


@dataclass(frozen=True)
class R0Result:
    delta0: float
    R0: float
    support_radius: float
    form: str

    def to_dict(self) -> dict:
        return asdict(self)


def find_R0(delta0: float, tol: float = 1e-10, form: str = PUBLISHED) -> R0Result:
    """Largest zero of ``R -> H(R, delta0)``; beyond it ``H < 0`` for every ``R``.

    ``delta0`` must lie strictly between the thresholds.  The result is confirmed
    by sampling ``H`` beyond the root.
    """
    th = find_thresholds(form=form)
    if not th.delta_s < delta0 < th.delta_u:
        raise DomainError(f"delta0={delta0} outside ({th.delta_s:.7f}, {th.delta_u:.7f})")

    def H(R):
        return _hessian(R, delta0, form)

    r_end = R_SCAN
    while H(r_end) >= 0:
        r_end *= 2
        if r_end > 300:
            raise NumericalError("H stays non-negative up to R = 300")
    grid = np.concatenate([[0.0], np.geomspace(1e-6, r_end, 4000)])
    vals = np.array([H(R) for R in grid])
    nonneg = np.nonzero(vals >= 0)[0]
    last = nonneg[-1]
    r0 = optimize.brentq(H, grid[last], grid[last + 1], xtol=tol, rtol=4 * np.finfo(float).eps)
    beyond = np.linspace(r0, r_end, 2000)[1:]
    if not all(H(R) < 0 for R in beyond):
        raise NumericalError("H changes sign again beyond the computed R0")
    return R0Result(float(delta0), float(r0), float(r0 + delta0), form)


# ---------------------------------------------------------------------------
# direct Jacobi-operator evaluation

def _radial(profile: RadialProfile, X):
    rho = charts.halfspace_distance(X, BASE_POINT)
    return profile.value(rho)


def variation_field(profile: RadialProfile):
    """``alpha = phi(rho) xi_1`` as a frame-component callable on the half-space."""
    def field(x, y, z):
        X = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
        f = _radial(profile, X)
        zero = np.zeros_like(f)
        return np.stack([f, zero, zero], axis=-1)
    return field


def _xi3(x, y, z):
    shape = np.broadcast(x, y, z).shape
    out = np.zeros(shape + (3,))
    out[..., 2] = 1.0
    return out


def jacobi_density(profile: RadialProfile, X, h: float = charts.DEFAULT_STEP):
    """Pointwise ``<J(alpha), alpha>`` from the Jacobi operator, and ``f Delta f - f^2``.

    ``J(alpha) = nabla*nabla alpha - |nabla s|^2 alpha - 2 <nabla s, nabla alpha> s``
    with ``s = xi_3``; all derivatives are finite differences.  The second array is
    the reduced form computed from the profile's analytic derivatives.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 3)
    alpha = charts.field_jet(variation_field(profile), X, HYPERBOLIC, h)
    sigma = charts.field_jet(_xi3, X, HYPERBOLIC, h)
    bend = np.sum(sigma.covariant**2, axis=(1, 2))
    cross = np.einsum("nik,nik->n", sigma.covariant, alpha.covariant)
    J = alpha.rough_laplacian - bend[:, None] * alpha.value - 2 * cross[:, None] * sigma.value
    direct = np.einsum("nk,nk->n", J, alpha.value)
    rho = charts.halfspace_distance(X, BASE_POINT)
    f = profile.value(rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = -(profile.second(rho) + 2 * profile.derivative(rho) / np.tanh(rho))
    lap = np.where(rho > 0, lap, -3 * profile.second(rho))
    return direct, f * lap - f * f


_DIRECTIONS = ((0.5, 0.0), (0.5, np.pi), (0.5, 0.5 * np.pi), (0.5, 1.5 * np.pi),
               (0.2, 0.3), (0.8, 2.0))   # (phi / pi, theta) pairs, away from the polar axis


@dataclass(frozen=True)
class RadialGrid:
    """Radial quadrature for :func:`jacobi_quadratic_form`.

    ``rho_max`` bounds the integration; ``nodes`` Gauss-Legendre nodes are used on
    each piece between the profile's breakpoints.
    """

    rho_max: float
    nodes: int = 48


def jacobi_quadratic_form(profile: RadialProfile, grid: RadialGrid,
                          h: float = charts.DEFAULT_STEP) -> float:
    """``int <J(alpha), alpha> dV`` for ``alpha = phi xi_1``, with ``J`` by finite differences.

    The density is averaged over several directions at each radius and integrated
    against ``4 pi sinh^2 rho``.
    """
    if isinstance(profile, ZeroProfile):
        return 0.0
    if profile.support > grid.rho_max or float(profile.value(grid.rho_max)) != 0.0:
        raise DomainError("profile support is not contained in the radial grid")
    knots = sorted({0.0, profile.support, *[b for b in profile.breakpoints()
                                            if 0 < b < profile.support]})
    x, w = np.polynomial.legendre.leggauss(grid.nodes)
    rho_nodes, weights = [], []
    for a, b in zip(knots[:-1], knots[1:]):
        rho_nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    rho = np.concatenate(rho_nodes)
    wts = np.concatenate(weights)
    dens = np.zeros_like(rho)
    for phi_frac, theta in _DIRECTIONS:
        X = np.column_stack(charts.ball_polar_to_halfspace(rho, np.full_like(rho, theta),
                                                           np.full_like(rho, phi_frac * np.pi)))
        dens += jacobi_density(profile, X, h)[0]
    dens /= len(_DIRECTIONS)
    return float(4 * math.pi * np.sum(wts * dens * np.sinh(rho) ** 2))


def smoothed_hessian(R: float, delta: float, width: float = 0.01,
                     h: float = charts.DEFAULT_STEP, extrapolate: bool = True) -> float:
    """Jacobi quadratic form of the smoothed bump, optionally extrapolated to zero width.

    Smoothing the corners changes the Hessian by an amount linear in ``width``;
    one Richardson step using ``width`` and ``width / 2`` removes that term.
    """
    grid = RadialGrid(R + delta + width)
    full = jacobi_quadratic_form(SmoothedBump(R, delta, width), grid, h)
    if not extrapolate:
        return full
    half = jacobi_quadratic_form(SmoothedBump(R, delta, 0.5 * width), grid, h)
    return 2 * half - full
