"""Integral curves of unit fields and diagnostics of the pendulum-family flows.

Streamlines are integrated with the classical fourth-order Runge-Kutta method,
in Cartesian coordinates for Euclidean fields (``dx/ds = sigma``) and in
half-space coordinates for hyperbolic frame fields (``dx/ds = z a``, where ``a``
are the frame components).  Since ``|sigma| = 1`` the parameter ``s`` is arc
length.  Several starting points are integrated together as one array.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .charts import EUCLIDEAN, HYPERBOLIC, ChartId, ChartPoint
from .errors import DomainError
from .fieldlab import EuclidPendulum, FieldSpec, Frame, HParallel

DOMAIN_MARGIN = 1e-3


class Chirality(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass
class Streamline:
    """``points[k]`` is the base-chart position at arc length ``s[k] = k * step``."""

    field: FieldSpec
    start: ChartPoint
    step: float
    points: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return self.step * np.arange(len(self.points))

    def chart_points(self) -> list[ChartPoint]:
        chart = (ChartId.EUCLIDEAN_CARTESIAN if self.field.space == EUCLIDEAN
                 else ChartId.HYPERBOLIC_HALFSPACE)
        return [ChartPoint(chart, *map(float, p)) for p in self.points]

    def rows(self) -> np.ndarray:
        """Columns ``s, x, y, z``."""
        return np.column_stack([self.s, self.points])


@dataclass
class FlowDiagnostics:
    crossing_radius: float | None
    slope_profile: list[tuple[float, float]]
    chirality: Chirality | None
    invariant_surface_error: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"crossing_radius": self.crossing_radius,
                "slope_profile": [list(p) for p in self.slope_profile],
                "chirality": self.chirality.value if self.chirality else None,
                "invariant_surface_error": self.invariant_surface_error,
                "details": self.details}


def _pendulum_velocity(spec: EuclidPendulum):
    """Closed-form pendulum field on (N, 3) arrays, without the generic broadcasting."""
    q, c, s = spec.q, math.cos(spec.p), math.sin(spec.p)

    def vel(x, y, z):
        a = 0.5 * q * np.hypot(x, y)
        den = 1.0 + a * a
        sinc = q / den
        out = np.empty((len(x), 3))
        out[:, 0] = sinc * (c * x - s * y)
        out[:, 1] = sinc * (s * x + c * y)
        out[:, 2] = (1.0 - a * a) / den
        return out
    return vel


def _velocity(spec: FieldSpec):
    if isinstance(spec, EuclidPendulum) and spec.method == "closed":
        return _pendulum_velocity(spec)
    if spec.space == EUCLIDEAN:
        return spec.components
    if not isinstance(spec, (Frame, HParallel)):
        raise ValueError("hyperbolic tracing is available for frame fields and h-parallel only")

    def vel(x, y, z):
        return np.asarray(z)[..., None] * spec.components(x, y, z)
    return vel


def _rk4_step(vel, X, h):
    k1 = vel(*X.T)
    k2 = vel(*(X + 0.5 * h * k1).T)
    k3 = vel(*(X + 0.5 * h * k2).T)
    k4 = vel(*(X + h * k3).T)
    return X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _start_array(spec, starts) -> np.ndarray:
    out = []
    for p in starts:
        if not isinstance(p, ChartPoint):
            chart = ChartId.EUCLIDEAN_CARTESIAN if spec.space == EUCLIDEAN else ChartId.HYPERBOLIC_HALFSPACE
            p = ChartPoint(chart, *map(float, p))
        if p.space != spec.space:
            raise DomainError(f"{spec.family} lives in {spec.space} space, start is {p.space}")
        out.append(p.base_coords())
    return np.array(out, dtype=float).reshape(-1, 3)


def trace_many(spec: FieldSpec, starts, step: float, n: int,
               margin: float = DOMAIN_MARGIN) -> np.ndarray:
    """Integrate ``n`` RK4 steps from each start; returns an array of shape (m, n + 1, 3).

    A trajectory closer than ``max(margin, step)`` to the field's singular set
    raises :class:`DomainError`: one step cannot resolve the flow there, and a
    curve running into the set would otherwise oscillate across it unnoticed.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if n < 1:
        raise ValueError("need at least one step")
    vel = _velocity(spec)
    X = _start_array(spec, starts)
    if not np.all(spec.domain_mask(*X.T, margin=margin)):
        raise DomainError("start point lies outside the field's domain")
    out = np.empty((len(X), n + 1, 3))
    out[:, 0] = X
    margin = max(margin, step)
    for k in range(1, n + 1):
        X = _rk4_step(vel, X, step)
        out[:, k] = X
        if k % 64 == 0 or k == n:
            _check_segment(spec, out[:, max(k - 63, 1):k + 1], margin, k)
    return out


def _check_segment(spec, seg, margin, k):
    flat = seg.reshape(-1, 3)
    if not (np.all(np.isfinite(flat)) and np.all(spec.domain_mask(*flat.T, margin=margin))):
        raise DomainError(f"trajectory left the domain by step {k}")


def trace(spec: FieldSpec, start, step: float, n: int,
          margin: float = DOMAIN_MARGIN) -> Streamline:
    """Streamline of ``spec`` through ``start`` with ``n`` steps of arc length ``step``."""
    pts = trace_many(spec, [start], step, n, margin)[0]
    if not isinstance(start, ChartPoint):
        chart = ChartId.EUCLIDEAN_CARTESIAN if spec.space == EUCLIDEAN else ChartId.HYPERBOLIC_HALFSPACE
        start = ChartPoint(chart, *map(float, start))
    return Streamline(spec, start, float(step), pts)


def closed_form_streamline(spec: FieldSpec, start, s) -> np.ndarray:
    """Exact integral curves of frame fields and h-parallel, for validation."""
    x0, y0, z0 = _start_array(spec, [start])[0]
    s = np.asarray(s, dtype=float)
    one = np.ones_like(s)
    if isinstance(spec, HParallel) or (isinstance(spec, Frame) and spec.i == 3):
        if spec.space == HYPERBOLIC:
            return np.column_stack([x0 * one, y0 * one, z0 * np.exp(s)])
        return np.column_stack([x0 * one, y0 * one, z0 + s])
    if isinstance(spec, Frame):
        scale = z0 if spec.space == HYPERBOLIC else 1.0
        e = np.zeros(3)
        e[spec.i - 1] = scale
        return np.array([x0, y0, z0]) + s[:, None] * e
    raise ValueError(f"no closed-form streamline for {spec.family}")


# ---------------------------------------------------------------------------
# pendulum-family diagnostics

def _profile_crossing(spec: EuclidPendulum) -> float:
    """Root of ``cos v_q(r)``, bracketed by doubling."""
    if spec.q == 0:
        raise ValueError("q = 0 has no crossing radius")

    def cos_v(r):
        return float(np.cos(spec._profile(np.array([r]))[0][0]))

    hi = 1.0 / abs(spec.q)
    while cos_v(hi) > 0:
        hi *= 2.0
    return float(optimize.brentq(cos_v, 1e-9 / abs(spec.q), hi, xtol=1e-15, rtol=1e-15))


def _require_pendulum(spec):
    if not isinstance(spec, EuclidPendulum):
        raise ValueError("diagnostics apply to the euclid-pendulum family")


def helix_diagnostics(spec: EuclidPendulum, radii, steps_per_turn: int = 2000) -> FlowDiagnostics:
    """Helix slope ``|cot v|``, handedness and cylinder invariance for ``p = +-pi/2``.

    One full revolution is traced at each radius; ``invariant_surface_error`` is
    the largest relative radial drift ``max |r(s) - r| / r``.  Chirality is that of
    the helices inside the crossing cylinder: right-handed when the horizontal
    rotation (counter-clockwise seen from above) and the vertical motion have the
    same sign.
    """
    _require_pendulum(spec)
    if abs(math.cos(spec.p)) > 1e-12:
        raise ValueError("helix diagnostics need p = +-pi/2")
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    v, _, _ = spec._profile(radii)
    slopes = np.abs(np.cos(v) / np.sin(v))
    r_star = _profile_crossing(spec)
    angular = math.sin(spec.p) * np.sin(v)
    vertical = np.cos(v)
    hands = [Chirality.RIGHT if a * c > 0 else Chirality.LEFT for a, c in zip(angular, vertical)]
    inside = radii < r_star
    chirality = hands[int(np.argmax(inside))] if np.any(inside) else None

    drift = []
    for r, sv in zip(radii, np.sin(v)):
        length = 2 * math.pi * r / abs(sv)
        pts = trace_many(spec, [(r, 0.0, 0.0)], length / steps_per_turn, steps_per_turn)[0]
        drift.append(float(np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - r)) / r))
    vsign = float(np.sign(vertical[int(np.argmin(radii))]))
    return FlowDiagnostics(
        r_star, [(float(r), float(m)) for r, m in zip(radii, slopes)], chirality, max(drift),
        {"chirality_profile": [h.value for h in hands], "radial_drift": drift,
         "vertical_sign_near_axis": vsign})


def _crossing_on_step(spec, X, step):
    """Refine where ``sigma_z`` vanishes within one RK4 step from ``X``."""
    vel = spec.components

    def g(tau):
        Y = _rk4_step(vel, X[None, :], tau) if tau > 0 else X[None, :]
        return float(vel(*Y.T)[0, 2])

    tau = optimize.brentq(g, 0.0, step, xtol=1e-15, rtol=1e-15)
    Y = _rk4_step(vel, X[None, :], tau)[0] if tau > 0 else X
    return Y, tau


def fountain_diagnostics(spec: EuclidPendulum, starts, step: float = 1e-3,
                         n: int = 100_000) -> FlowDiagnostics:
    """Half-plane invariance and the crossing of the critical cylinder for ``p = 0``.

    ``invariant_surface_error`` is the largest drift of the azimuth ``theta`` along
    any trajectory.  The crossing is where the vertical component changes sign,
    refined to machine precision inside the bracketing step.
    """
    _require_pendulum(spec)
    if abs(math.sin(spec.p)) > 1e-12 or math.cos(spec.p) < 0:
        raise ValueError("fountain diagnostics need p = 0")
    paths = trace_many(spec, starts, step, n)
    theta_drift, crossings = [], []
    for path in paths:
        x0, y0 = path[0, 0], path[0, 1]
        if math.hypot(x0, y0) == 0:
            theta_drift.append(0.0)
            continue
        th = np.arctan2(path[:, 1], path[:, 0]) - math.atan2(y0, x0)
        th = (th + np.pi) % (2 * np.pi) - np.pi
        theta_drift.append(float(np.max(np.abs(th))))
        sz = spec.components(*path.T)[:, 2]
        flips = np.nonzero(np.sign(sz[:-1]) != np.sign(sz[1:]))[0]
        if len(flips) == 0:
            continue
        k = int(flips[0])
        Y, tau = _crossing_on_step(spec, path[k], step)
        sigma = spec.components(*Y)
        z = path[:, 2]
        rising = bool(np.all(np.sign(np.diff(z[:k + 1])) == np.sign(sz[0])))
        turning = bool(np.all(np.sign(np.diff(z[k + 1:])) == -np.sign(sz[0])))
        crossings.append({"point": Y.tolist(), "s": float(k * step + tau),
                          "radius": float(math.hypot(Y[0], Y[1])),
                          "vertical_component": float(sigma[2]),
                          "radial_component": float((sigma[0] * Y[0] + sigma[1] * Y[1])
                                                    / math.hypot(Y[0], Y[1])),
                          "monotone_before": rising, "monotone_after": turning})
    radius = float(np.mean([c["radius"] for c in crossings])) if crossings else None
    return FlowDiagnostics(radius, [], None, max(theta_drift),
                           {"crossings": crossings, "theta_drift": theta_drift,
                            "profile_crossing_radius": _profile_crossing(spec)})


def glide_symmetry_error(p: float, q: float, points) -> float:
    """``max |sigma_{p+pi,q} - sigma_{p,-q}|`` over ``points`` (shape (N, 3))."""
    X = np.asarray(points, dtype=float).reshape(-1, 3)
    a = EuclidPendulum(p + math.pi, q).components(*X.T)
    b = EuclidPendulum(p, -q).components(*X.T)
    return float(np.max(np.abs(a - b)))
