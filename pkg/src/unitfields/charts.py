"""Coordinate charts, orthonormal frames and finite-difference calculus.

Two ambient spaces are supported: Euclidean 3-space with its fixed right-handed
basis, and hyperbolic 3-space in the upper half-space model with the frame
``xi_i = z d/dx_i``.  Vector fields are always described by their components
against that frame, as functions of the *base* coordinates (Cartesian for
Euclidean space, half-space ``(x, y, z)`` for hyperbolic space).

Callables follow one convention throughout: they take three coordinate arrays
and broadcast, so ``f(x, y, z)`` returns an array of the common shape and a
vector field ``F(x, y, z)`` returns that shape with a trailing axis of length 3.

The Laplacian carries the geometer's sign, ``Delta f = -div grad f``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError

EUCLIDEAN = "euclidean"
HYPERBOLIC = "hyperbolic"

DEFAULT_STEP = 1e-4

ScalarFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
VectorFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class ChartId(str, enum.Enum):
    EUCLIDEAN_CARTESIAN = "cartesian"
    EUCLIDEAN_CYLINDRICAL = "cylindrical"
    EUCLIDEAN_SPHERICAL = "spherical"
    HYPERBOLIC_HALFSPACE = "halfspace"
    HYPERBOLIC_BALL_POLAR = "ball_polar"

    @property
    def space(self) -> str:
        if self in (ChartId.HYPERBOLIC_HALFSPACE, ChartId.HYPERBOLIC_BALL_POLAR):
            return HYPERBOLIC
        return EUCLIDEAN

    @property
    def base(self) -> "ChartId":
        """The chart whose coordinates parametrize vector fields in this space."""
        if self.space == HYPERBOLIC:
            return ChartId.HYPERBOLIC_HALFSPACE
        return ChartId.EUCLIDEAN_CARTESIAN


@dataclass(frozen=True)
class ChartPoint:
    chart: ChartId
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        chart = ChartId(self.chart)
        object.__setattr__(self, "chart", chart)
        for name in ("c1", "c2", "c3"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise DomainError(f"non-finite coordinate {name}={value}")
            object.__setattr__(self, name, value)
        if chart is ChartId.HYPERBOLIC_HALFSPACE and self.c3 <= 0:
            raise DomainError(f"half-space point needs z > 0, got z={self.c3}")
        if chart in (ChartId.EUCLIDEAN_CYLINDRICAL, ChartId.EUCLIDEAN_SPHERICAL,
                     ChartId.HYPERBOLIC_BALL_POLAR) and self.c1 < 0:
            raise DomainError(f"radial coordinate must be >= 0, got {self.c1}")
        if chart in (ChartId.EUCLIDEAN_SPHERICAL, ChartId.HYPERBOLIC_BALL_POLAR):
            if not 0.0 <= self.c3 <= np.pi:
                raise DomainError(f"polar angle must lie in [0, pi], got {self.c3}")

    @property
    def coords(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)

    @property
    def space(self) -> str:
        return self.chart.space

    def base_coords(self) -> np.ndarray:
        """Coordinates of the point in the base chart of its space."""
        return np.asarray(to_chart(self, self.chart.base).coords)


class FrameVector(NamedTuple):
    """Components against the orthonormal frame (xi_1, xi_2, xi_3)."""

    a1: float
    a2: float
    a3: float

    @classmethod
    def from_array(cls, a) -> "FrameVector":
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(self.a1**2 + self.a2**2 + self.a3**2))


# connection[i, j] holds the frame components of nabla_{xi_i} xi_j
_EUCLIDEAN_CONNECTION = np.zeros((3, 3, 3))
_HYPERBOLIC_CONNECTION = np.zeros((3, 3, 3))
_HYPERBOLIC_CONNECTION[0, 0] = (0.0, 0.0, 1.0)
_HYPERBOLIC_CONNECTION[1, 1] = (0.0, 0.0, 1.0)
_HYPERBOLIC_CONNECTION[0, 2] = (-1.0, 0.0, 0.0)
_HYPERBOLIC_CONNECTION[1, 2] = (0.0, -1.0, 0.0)


def connection_table(space: str) -> np.ndarray:
    """Return the (3, 3, 3) array of covariant derivatives of the frame."""
    if space == EUCLIDEAN:
        return _EUCLIDEAN_CONNECTION.copy()
    if space == HYPERBOLIC:
        return _HYPERBOLIC_CONNECTION.copy()
    raise ValueError(f"unknown space {space!r}")


# ---------------------------------------------------------------------------
# chart conversions (vectorized over coordinate arrays)

def cartesian_to_cylindrical(x, y, z):
    return np.hypot(x, y), np.arctan2(y, x), np.asarray(z, dtype=float)


def cylindrical_to_cartesian(r, theta, z):
    return r * np.cos(theta), r * np.sin(theta), np.asarray(z, dtype=float)


def cartesian_to_spherical(x, y, z):
    rho_xy = np.hypot(x, y)
    return np.hypot(rho_xy, z), np.arctan2(y, x), np.arctan2(rho_xy, z)


def spherical_to_cartesian(R, theta, phi):
    s = np.sin(phi)
    return R * s * np.cos(theta), R * s * np.sin(theta), R * np.cos(phi)


def halfspace_to_ball_polar(x, y, z):
    """Geodesic polar coordinates about the half-space point (0, 0, 1).

    The half-space is identified with the unit ball so that (0, 0, 1) goes to
    the centre; ball radius r and geodesic radius rho satisfy r = tanh(rho/2).
    """
    x, y, z = (np.asarray(c, dtype=float) for c in (x, y, z))
    s2 = x * x + y * y
    d = (s2 + (z - 1.0) ** 2) / (2.0 * z)
    rho = np.log1p(d + np.sqrt(d * (d + 2.0)))
    theta = np.arctan2(y, x)
    phi = np.arctan2(2.0 * np.sqrt(s2), s2 + z * z - 1.0)
    return rho, theta, phi


def ball_polar_to_halfspace(rho, theta, phi):
    rho, theta, phi = (np.asarray(c, dtype=float) for c in (rho, theta, phi))
    r = np.tanh(rho / 2.0)
    sp = np.sin(phi)
    n1, n2 = sp * np.cos(theta), sp * np.sin(theta)
    one_minus_rn3 = 2.0 / (1.0 + np.exp(rho)) + 2.0 * r * np.sin(phi / 2.0) ** 2
    den = r * r * sp * sp + one_minus_rn3**2
    one_minus_r2 = 1.0 / np.cosh(rho / 2.0) ** 2
    return 2.0 * r * n1 / den, 2.0 * r * n2 / den, one_minus_r2 / den


def ball_polar_to_ball(rho, theta, phi):
    """Cartesian coordinates in the Poincare ball model."""
    r = np.tanh(np.asarray(rho, dtype=float) / 2.0)
    return spherical_to_cartesian(r, theta, phi)


def halfspace_distance(p, q) -> np.ndarray:
    """Hyperbolic distance between half-space points (arrays of shape (..., 3))."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    d = np.sum((p - q) ** 2, axis=-1) / (2.0 * p[..., 2] * q[..., 2])
    return np.log1p(d + np.sqrt(d * (d + 2.0)))


_TO_BASE = {
    ChartId.EUCLIDEAN_CARTESIAN: lambda a, b, c: (a, b, c),
    ChartId.EUCLIDEAN_CYLINDRICAL: cylindrical_to_cartesian,
    ChartId.EUCLIDEAN_SPHERICAL: spherical_to_cartesian,
    ChartId.HYPERBOLIC_HALFSPACE: lambda a, b, c: (a, b, c),
    ChartId.HYPERBOLIC_BALL_POLAR: ball_polar_to_halfspace,
}

_FROM_BASE = {
    ChartId.EUCLIDEAN_CARTESIAN: lambda a, b, c: (a, b, c),
    ChartId.EUCLIDEAN_CYLINDRICAL: cartesian_to_cylindrical,
    ChartId.EUCLIDEAN_SPHERICAL: cartesian_to_spherical,
    ChartId.HYPERBOLIC_HALFSPACE: lambda a, b, c: (a, b, c),
    ChartId.HYPERBOLIC_BALL_POLAR: halfspace_to_ball_polar,
}


def to_base(chart: ChartId, c1, c2, c3):
    """Map chart coordinate arrays to base-chart coordinate arrays."""
    return tuple(np.asarray(c, dtype=float) for c in _TO_BASE[ChartId(chart)](c1, c2, c3))


def from_base(chart: ChartId, x, y, z):
    return tuple(np.asarray(c, dtype=float) for c in _FROM_BASE[ChartId(chart)](x, y, z))


def to_chart(p: ChartPoint, target: ChartId) -> ChartPoint:
    """Express ``p`` in ``target``; both charts must cover the same space.

    Points on the axis of a polar chart get theta = 0 (and phi = 0 or pi).
    """
    target = ChartId(target)
    if p.chart.space != target.space:
        raise DomainError(f"cannot convert a {p.chart.space} point to chart {target.value}")
    if p.chart is target:
        return p
    base = to_base(p.chart, *p.coords)
    return ChartPoint(target, *(float(c) for c in from_base(target, *base)))


# ---------------------------------------------------------------------------
# finite differences

def _steps(X: np.ndarray, space: str, h: float) -> np.ndarray:
    """Per-point coordinate step; scaled by z in the half-space."""
    if space == HYPERBOLIC:
        return h * X[:, 2]
    return np.full(len(X), float(h))


def _wrap(d):
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def _central_stencil(fn, X: np.ndarray, hv: np.ndarray, angular: bool = False):
    """First and pure second coordinate derivatives by central differences.

    Returns ``(f0, d1, d2)`` with ``d1[k]``/``d2[k]`` the derivatives along
    coordinate axis ``k``.  For ``angular`` functions the differences are
    wrapped into (-pi, pi] so that branch cuts do not pollute the stencil.
    """
    n = len(X)
    pts = np.empty((7, n, 3))
    pts[:] = X
    steps = np.empty((3, n))
    for k in range(3):
        shifted = X[:, k] + hv
        steps[k] = shifted - X[:, k]
        pts[1 + 2 * k, :, k] = shifted
        pts[2 + 2 * k, :, k] = X[:, k] - steps[k]
    vals = np.asarray(fn(pts[..., 0], pts[..., 1], pts[..., 2]), dtype=float)
    vals = np.broadcast_to(vals, (7, n) + vals.shape[2:])
    f0, fp, fm = vals[0], vals[1::2], vals[2::2]
    hs = steps.reshape((3, n) + (1,) * (vals.ndim - 2))
    if angular:
        dp, dm = _wrap(fp - f0), _wrap(f0 - fm)
    else:
        dp, dm = fp - f0, f0 - fm
    return f0, (dp + dm) / (2.0 * hs), (dp - dm) / hs**2


def _frame_derivatives(X, d1, d2, space):
    """Convert coordinate derivatives to frame derivatives xi_i and xi_i xi_i."""
    if space == EUCLIDEAN:
        return d1, d2
    z = X[:, 2].reshape((1, -1) + (1,) * (d1.ndim - 2))
    D = z * d1
    DD = z * z * d2
    DD[2] = DD[2] + z[0] * d1[2]
    return D, DD


class ScalarJet(NamedTuple):
    value: np.ndarray       # (N,)
    gradient: np.ndarray    # (N, 3) frame components
    laplacian: np.ndarray   # (N,) geometer's sign


class FieldJet(NamedTuple):
    value: np.ndarray            # (N, 3)
    covariant: np.ndarray        # (N, 3, 3): [n, i] = nabla_{xi_i} sigma
    rough_laplacian: np.ndarray  # (N, 3)


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 3)


def scalar_jet(f: ScalarFn, X, space: str, h: float = DEFAULT_STEP,
               angular: bool = False) -> ScalarJet:
    """Value, frame gradient and Laplacian of ``f`` at base-chart points ``X``."""
    X = _as_points(X)
    f0, d1, d2 = _central_stencil(f, X, _steps(X, space, h), angular)
    D, DD = _frame_derivatives(X, d1, d2, space)
    if space == EUCLIDEAN:
        lap = -(d2[0] + d2[1] + d2[2])
    else:
        z = X[:, 2]
        lap = -(z * z * (d2[0] + d2[1] + d2[2]) - z * d1[2])
    return ScalarJet(f0, D.T.copy(), lap)


def field_jet(field: VectorFn, X, space: str, h: float = DEFAULT_STEP) -> FieldJet:
    """Frame covariant derivatives and rough Laplacian of a vector field.

    Uses ``nabla*nabla s = -sum_i (nabla_i nabla_i s - nabla_{nabla_i xi_i} s)``
    with the Leibniz rule against the constant connection table of the frame.
    """
    X = _as_points(X)
    G = connection_table(space)
    a, d1, d2 = _central_stencil(field, X, _steps(X, space, h))
    Da, DDa = _frame_derivatives(X, d1, d2, space)
    B = Da + np.einsum("nj,ijk->ink", a, G)
    DB = DDa + np.einsum("inj,ijk->ink", Da, G)
    second = DB + np.einsum("inj,ijk->ink", B, G)
    Gdiag = np.einsum("iik->ik", G)
    correction = np.einsum("im,mnk->ink", Gdiag, B)
    lap = -np.sum(second - correction, axis=0)
    return FieldJet(a, np.transpose(B, (1, 0, 2)).copy(), lap)


# ---------------------------------------------------------------------------
# point-level operations

def _check_regular(p: ChartPoint):
    c = p.chart
    if c is ChartId.EUCLIDEAN_CYLINDRICAL and p.c1 == 0:
        raise DomainError("cylindrical chart is singular on the axis r = 0")
    if c in (ChartId.EUCLIDEAN_SPHERICAL, ChartId.HYPERBOLIC_BALL_POLAR):
        if p.c1 == 0 or np.sin(p.c3) == 0 or p.c3 in (0.0, np.pi):
            raise DomainError(f"{c.value} chart is singular at the origin and on the polar axis")


def _chart_partials(f: ScalarFn, p: ChartPoint, h: float):
    X = np.array([p.coords])
    f0, d1, d2 = _central_stencil(f, X, np.full(1, float(h)))
    return float(f0[0]), d1[:, 0], d2[:, 0]


def _polar_frame_in_halfspace(p: ChartPoint) -> np.ndarray:
    """Rows: unit vectors d/drho, d/dtheta, d/dphi of the ball-polar chart, in frame components."""
    eps = 1e-6
    base = np.array(to_base(p.chart, *p.coords), dtype=float)
    rows = []
    for k in range(3):
        cp, cm = list(p.coords), list(p.coords)
        cp[k] += eps
        cm[k] -= eps
        v = (np.array(to_base(p.chart, *cp)) - np.array(to_base(p.chart, *cm))) / (2 * eps)
        v = v / base[2]
        rows.append(v / np.linalg.norm(v))
    return np.array(rows)


def scalar_gradient(f: ScalarFn, p: ChartPoint, h: float = DEFAULT_STEP) -> FrameVector:
    """Gradient of ``f`` (a function of ``p``'s chart coordinates) in frame components."""
    _check_regular(p)
    c = p.chart
    if c in (ChartId.EUCLIDEAN_CARTESIAN, ChartId.HYPERBOLIC_HALFSPACE):
        jet = scalar_jet(f, np.array([p.coords]), c.space, h)
        return FrameVector.from_array(jet.gradient[0])
    _, d1, _ = _chart_partials(f, p, h)
    if c is ChartId.EUCLIDEAN_CYLINDRICAL:
        r, th, _ = p.coords
        er = np.array([np.cos(th), np.sin(th), 0.0])
        et = np.array([-np.sin(th), np.cos(th), 0.0])
        return FrameVector.from_array(d1[0] * er + d1[1] / r * et + d1[2] * np.array([0, 0, 1.0]))
    if c is ChartId.EUCLIDEAN_SPHERICAL:
        R, th, ph = p.coords
        eR = np.array([np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th), np.cos(ph)])
        et = np.array([-np.sin(th), np.cos(th), 0.0])
        ep = np.array([np.cos(ph) * np.cos(th), np.cos(ph) * np.sin(th), -np.sin(ph)])
        return FrameVector.from_array(
            d1[0] * eR + d1[1] / (R * np.sin(ph)) * et + d1[2] / R * ep)
    rho, _, ph = p.coords
    comps = np.array([d1[0], d1[1] / (np.sinh(rho) * np.sin(ph)), d1[2] / np.sinh(rho)])
    return FrameVector.from_array(comps @ _polar_frame_in_halfspace(p))


def scalar_laplacian(f: ScalarFn, p: ChartPoint, h: float = DEFAULT_STEP) -> float:
    """Laplacian ``-div grad f`` of ``f`` given in ``p``'s chart coordinates."""
    _check_regular(p)
    c = p.chart
    if c in (ChartId.EUCLIDEAN_CARTESIAN, ChartId.HYPERBOLIC_HALFSPACE):
        return float(scalar_jet(f, np.array([p.coords]), c.space, h).laplacian[0])
    _, d1, d2 = _chart_partials(f, p, h)
    if c is ChartId.EUCLIDEAN_CYLINDRICAL:
        r = p.c1
        return float(-(d2[0] + d1[0] / r + d2[1] / r**2 + d2[2]))
    if c is ChartId.EUCLIDEAN_SPHERICAL:
        R, _, ph = p.coords
        ang = d2[2] + d1[2] / np.tan(ph) + d2[1] / np.sin(ph) ** 2
        return float(-(d2[0] + 2.0 * d1[0] / R + ang / R**2))
    rho, _, ph = p.coords
    ang = d2[2] + d1[2] / np.tan(ph) + d2[1] / np.sin(ph) ** 2
    return float(-(d2[0] + 2.0 * d1[0] / np.tanh(rho) + ang / np.sinh(rho) ** 2))


def _field_at(field: VectorFn, p: ChartPoint, h: float) -> FieldJet:
    X = p.base_coords()[None, :]
    return field_jet(field, X, p.space, h)


def frame_covariant_derivative(i: int, field: VectorFn, p: ChartPoint,
                               h: float = DEFAULT_STEP) -> FrameVector:
    """``nabla_{xi_i} field`` at ``p`` for frame index ``i`` in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise ValueError(f"frame index must be 1, 2 or 3, got {i}")
    return FrameVector.from_array(_field_at(field, p, h).covariant[0, i - 1])


def rough_laplacian(field: VectorFn, p: ChartPoint, h: float = DEFAULT_STEP) -> FrameVector:
    """Second-order finite-difference approximation of ``nabla* nabla field`` at ``p``."""
    if h <= 0:
        raise ValueError("step must be positive")
    out = _field_at(field, p, h).rough_laplacian[0]
    if not np.all(np.isfinite(out)):
        raise DomainError("rough Laplacian is not finite; field singular near the point")
    return FrameVector.from_array(out)


def constant_field(a) -> VectorFn:
    """A field with constant frame components."""
    a = np.asarray(a, dtype=float)

    def field(x, y, z):
        shape = np.broadcast(x, y, z).shape
        return np.broadcast_to(a, shape + (3,)).copy()

    return field


# ---------------------------------------------------------------------------
# product and chain rules, as finite-difference defects

def product_rule_defect(f: ScalarFn, field: VectorFn, X, space: str,
                        h: float = DEFAULT_STEP) -> np.ndarray:
    """``|nabla*nabla(fX) - (f nabla*nabla X - 2 nabla_{grad f} X + (Delta f) X)|`` at ``X``."""
    X = _as_points(X)

    def product(x, y, z):
        return np.asarray(f(x, y, z))[..., None] * field(x, y, z)

    lhs = field_jet(product, X, space, h).rough_laplacian
    fj = scalar_jet(f, X, space, h)
    vj = field_jet(field, X, space, h)
    along_grad = np.einsum("ni,nik->nk", fj.gradient, vj.covariant)
    rhs = (fj.value[:, None] * vj.rough_laplacian - 2 * along_grad
           + fj.laplacian[:, None] * vj.value)
    return np.linalg.norm(lhs - rhs, axis=1)


def chain_rule_defects(f: ScalarFn, g, g1, g2, X, space: str,
                       h: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Defects of ``grad g(f) = g'(f) grad f`` and ``Delta g(f) = g'(f) Delta f - g''(f)|grad f|^2``.

    ``g1`` and ``g2`` are the first and second derivatives of ``g``.
    """
    X = _as_points(X)
    fj = scalar_jet(f, X, space, h)
    gj = scalar_jet(lambda x, y, z: g(f(x, y, z)), X, space, h)
    u = fj.value
    grad = np.linalg.norm(gj.gradient - g1(u)[:, None] * fj.gradient, axis=1)
    lap = np.abs(gj.laplacian - (g1(u) * fj.laplacian
                                 - g2(u) * np.sum(fj.gradient**2, axis=1)))
    return grad, lap
