"""Catalog of unit vector field families and their bending.

Every family is a frozen dataclass whose :meth:`~FieldSpec.components` method
returns frame components as a function of base-chart coordinates.  Angles are
never stored; families are evaluated through ``cos u`` and ``sin u`` (or the
equivalent rotation of ``(x, y)/r``) so that no branch of ``u`` is chosen.

Polar form is ``cos u sin v xi_1 + sin u sin v xi_2 + cos v xi_3``; horospherical
families use the standard form ``cos u xi_1 + sin u xi_2`` (``v = pi/2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, ClassVar, NamedTuple

import numpy as np

from . import charts, pendulum
from .charts import EUCLIDEAN, HYPERBOLIC, ChartPoint, FrameVector
from .errors import DomainError

AngleFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class PolarAngles(NamedTuple):
    u: float
    v: float


def _stack(a1, a2, a3):
    a1, a2, a3 = np.broadcast_arrays(a1, a2, a3)
    return np.stack([a1, a2, a3], axis=-1).astype(float)


def _rotate_xy(x, y, angle, norm):
    c, s = math.cos(angle), math.sin(angle)
    return (x * c - y * s) / norm, (x * s + y * c) / norm


def _const(value: float) -> AngleFn:
    def fn(x, y, z):
        return np.full(np.broadcast(x, y, z).shape, float(value))
    return fn


class FieldSpec:
    """Base class for catalog entries.

    Subclasses set ``family`` (the CLI name) and implement ``components``.
    ``declared_harmonic`` records what is known about the family: ``True`` or
    ``False``, or ``None`` for user-supplied fields.
    """

    family: ClassVar[str] = ""
    space: str = EUCLIDEAN

    def components(self, x, y, z) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, y, z) -> np.ndarray:
        return self.components(x, y, z)

    def domain_mask(self, x, y, z, margin: float = 0.0) -> np.ndarray:
        """Points where the field is defined, at least ``margin`` from its singular set."""
        return np.ones(np.broadcast(x, y, z).shape, dtype=bool)

    def bending_closed(self, x, y, z) -> np.ndarray | None:
        """Closed-form bending, or ``None`` when only the frame derivatives can give it."""
        return None

    def angle_functions(self) -> tuple[AngleFn, AngleFn]:
        """``(u, v)`` as functions of base coordinates; ``u`` may jump by 2 pi."""
        raise ValueError(f"{self.family} has no polar form")

    def rotate(self, t: float) -> "FieldSpec":
        raise ValueError(f"{self.family} has no equatorial part to rotate")

    @property
    def declared_harmonic(self) -> bool | None:
        return True

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"family": self.family, "space": self.space, "params": self.params()}


@dataclass(frozen=True)
class EuclidRadialLine(FieldSpec):
    """``u = theta + t``, ``v = pi/2``: the unit radial field about the z-axis, rotated by ``t``."""

    t: float = 0.0
    family: ClassVar[str] = "euclid-radial-line"

    def components(self, x, y, z):
        r = np.hypot(x, y)
        a1, a2 = _rotate_xy(x, y, self.t, r)
        return _stack(a1, a2, np.zeros_like(r))

    def domain_mask(self, x, y, z, margin=0.0):
        return np.broadcast_to(np.hypot(x, y) > margin, np.broadcast(x, y, z).shape)

    def bending_closed(self, x, y, z):
        return np.broadcast_to(1.0 / (x * x + y * y), np.broadcast(x, y, z).shape)

    def angle_functions(self):
        t = self.t
        return (lambda x, y, z: np.arctan2(y, x) + t), _const(np.pi / 2)

    def rotate(self, t):
        return replace(self, t=self.t + t) if t else self

    def params(self):
        return {"t": self.t}


@dataclass(frozen=True)
class EuclidRadialPoint(FieldSpec):
    """``u = theta + t``, ``v = phi``: the unit radial field about the origin, rotated by ``t``."""

    t: float = 0.0
    family: ClassVar[str] = "euclid-radial-point"

    def components(self, x, y, z):
        R = np.sqrt(x * x + y * y + z * z)
        a1, a2 = _rotate_xy(x, y, self.t, R)
        return _stack(a1, a2, z / R)

    def domain_mask(self, x, y, z, margin=0.0):
        return np.sqrt(x * x + y * y + z * z) > margin

    def bending_closed(self, x, y, z):
        return 2.0 / (x * x + y * y + z * z)

    def angle_functions(self):
        t = self.t
        return ((lambda x, y, z: np.arctan2(y, x) + t),
                (lambda x, y, z: np.arctan2(np.hypot(x, y), z)))

    def rotate(self, t):
        return replace(self, t=self.t + t) if t else self

    def params(self):
        return {"t": self.t}


@dataclass(frozen=True)
class EuclidPendulum(FieldSpec):
    """``u = theta + p``, ``v = v_q(r)``; equal to ``xi_3`` on the z-axis.

    ``sin(v_q)/r`` stays bounded as ``r -> 0``, so the components are evaluated
    as ``(sin v / r) (x, y)`` rotated by ``p`` and the axis needs no special case.
    """

    p: float = 0.0
    q: float = 1.0
    method: str = "closed"
    family: ClassVar[str] = "euclid-pendulum"

    def _profile(self, r):
        """Return ``(v, v', sin(v)/r)`` at cylindrical radius ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        q = self.q
        if q == 0.0:
            zero = np.zeros_like(r)
            return zero, zero, zero
        if self.method == "closed":
            a = 0.5 * q * r
            den = 1.0 + a * a
            return 2.0 * np.arctan(a), q / den, q / den
        safe = np.where(r > 0, r, 1.0)
        v, vp = pendulum.profile(q, "shooting")(safe)
        v = np.where(r > 0, v, 0.0)
        vp = np.where(r > 0, vp, q)
        sinc = np.where(r > 0, np.sin(v) / safe, q)
        return v, vp, sinc

    def components(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        v, _, sinc = self._profile(np.hypot(x, y))
        a1, a2 = _rotate_xy(x, y, self.p, 1.0)
        return _stack(sinc * a1, sinc * a2, np.cos(v))

    def bending_closed(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        _, vp, sinc = self._profile(np.hypot(x, y))
        return vp**2 + sinc**2

    def angle_functions(self):
        p = self.p
        return ((lambda x, y, z: np.arctan2(y, x) + p),
                (lambda x, y, z: self._profile(np.hypot(x, y))[0] + 0 * z))

    def rotate(self, t):
        return replace(self, p=self.p + t) if t else self

    def params(self):
        out = {"p": self.p, "q": self.q}
        if self.method != "closed":
            out["method"] = self.method
        return out


@dataclass(frozen=True)
class Frame(FieldSpec):
    """The coordinate frame field ``xi_i``."""

    i: int = 1
    space: str = EUCLIDEAN
    family: ClassVar[str] = "frame"

    def __post_init__(self):
        if self.i not in (1, 2, 3):
            raise ValueError(f"frame index must be 1, 2 or 3, got {self.i}")
        if self.space not in (EUCLIDEAN, HYPERBOLIC):
            raise ValueError(f"unknown space {self.space!r}")

    def components(self, x, y, z):
        e = np.zeros(3)
        e[self.i - 1] = 1.0
        return charts.constant_field(e)(x, y, z)

    def domain_mask(self, x, y, z, margin=0.0):
        shape = np.broadcast(x, y, z).shape
        if self.space == HYPERBOLIC:
            return np.broadcast_to(np.asarray(z) > 0, shape)
        return np.ones(shape, dtype=bool)

    def bending_closed(self, x, y, z):
        value = 0.0 if self.space == EUCLIDEAN else (2.0 if self.i == 3 else 1.0)
        return np.full(np.broadcast(x, y, z).shape, value)

    def angle_functions(self):
        if self.i == 3:
            return super().angle_functions()
        return _const(0.0 if self.i == 1 else np.pi / 2), _const(np.pi / 2)

    def rotate(self, t):
        if self.i == 3:
            return super().rotate(t)
        if not t:
            return self
        u0 = (0.0 if self.i == 1 else np.pi / 2) + t
        if self.space == HYPERBOLIC:
            return HoroInvariant(u0)
        return CustomPolar(_const(u0), _const(np.pi / 2), EUCLIDEAN)

    def params(self):
        return {"i": self.i, "space": self.space}


@dataclass(frozen=True)
class HoroInvariant(FieldSpec):
    """Constant angle ``u0`` in standard form: invariant under the horizontal isometries."""

    u0: float = 0.0
    space: ClassVar[str] = HYPERBOLIC
    family: ClassVar[str] = "horo-invariant"

    def components(self, x, y, z):
        return charts.constant_field([math.cos(self.u0), math.sin(self.u0), 0.0])(x, y, z)

    def domain_mask(self, x, y, z, margin=0.0):
        return np.broadcast_to(np.asarray(z) > 0, np.broadcast(x, y, z).shape)

    def bending_closed(self, x, y, z):
        return np.ones(np.broadcast(x, y, z).shape)

    def angle_functions(self):
        return _const(self.u0), _const(np.pi / 2)

    def rotate(self, t):
        return replace(self, u0=self.u0 + t) if t else self

    def params(self):
        return {"u0": self.u0}


@dataclass(frozen=True)
class HoroTheta(FieldSpec):
    """``u = theta + sign pi/2 + phase``; ``phase = 0`` gives the Killing field ``sign * theta-hat``.

    Rotating by any ``phase`` other than a multiple of pi leaves the harmonic
    fields; ``phase = -pi/2`` with ``sign = 1`` is the hyperbolic analogue of
    ``r-hat`` (see :func:`horo_radial`).
    """

    sign: int = 1
    phase: float = 0.0
    space: ClassVar[str] = HYPERBOLIC
    family: ClassVar[str] = "horo-theta"

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    def components(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        r = np.hypot(x, y)
        a1, a2 = _rotate_xy(x, y, self.sign * np.pi / 2 + self.phase, r)
        return _stack(a1, a2, np.zeros_like(r))

    def domain_mask(self, x, y, z, margin=0.0):
        return (np.hypot(x, y) > margin) & (np.asarray(z) > 0)

    def bending_closed(self, x, y, z):
        return 1.0 + z * z / (x * x + y * y)

    def angle_functions(self):
        shift = self.sign * np.pi / 2 + self.phase
        return (lambda x, y, z: np.arctan2(y, x) + shift), _const(np.pi / 2)

    def rotate(self, t):
        return replace(self, phase=self.phase + t) if t else self

    @property
    def declared_harmonic(self):
        return bool(np.isclose(math.remainder(self.phase, np.pi), 0.0, atol=1e-12))

    def params(self):
        return {"sign": self.sign, "phase": self.phase}


def horo_radial() -> HoroTheta:
    """The horospherical analogue of ``r-hat`` (``u = theta``); not harmonic."""
    return HoroTheta(sign=1, phase=-np.pi / 2)


@dataclass(frozen=True)
class HoroHolomorphic(FieldSpec):
    """``u = arg(i k zeta + alpha)`` with ``zeta = x + i y``.

    ``k = 0`` degenerates to the invariant field with ``u = arg(alpha)``.
    """

    k: float = 1.0
    a_re: float = 0.0
    a_im: float = 0.0
    space: ClassVar[str] = HYPERBOLIC
    family: ClassVar[str] = "horo-holomorphic"

    def __post_init__(self):
        if self.k == 0 and self.a_re == 0 and self.a_im == 0:
            raise ValueError("k = 0 and alpha = 0 leave the angle undefined")

    def _w(self, x, y):
        return self.a_re - self.k * y, self.a_im + self.k * x

    def components(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        if self.k == 0:
            return HoroInvariant(math.atan2(self.a_im, self.a_re)).components(x, y, z)
        wr, wi = self._w(x, y)
        m = np.hypot(wr, wi)
        return _stack(wr / m, wi / m, np.zeros_like(m))

    def domain_mask(self, x, y, z, margin=0.0):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        if self.k == 0:
            return z > 0
        wr, wi = self._w(x, y)
        # |w| = |k| * (horizontal distance to the singular vertical line)
        return (np.hypot(wr, wi) > abs(self.k) * margin) & (z > 0)

    def bending_closed(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        if self.k == 0:
            return np.ones_like(x)
        wr, wi = self._w(x, y)
        return 1.0 + z * z * self.k**2 / (wr * wr + wi * wi)

    def angle_functions(self):
        if self.k == 0:
            return _const(math.atan2(self.a_im, self.a_re)), _const(np.pi / 2)

        def u(x, y, z):
            wr, wi = self._w(x, y)
            return np.arctan2(wi, wr) + 0 * z

        return u, _const(np.pi / 2)

    def rotate(self, t):
        if not t:
            return self
        if math.isclose(math.remainder(t, 2 * np.pi), np.pi) or \
                math.isclose(math.remainder(t, 2 * np.pi), -np.pi):
            return HoroHolomorphic(-self.k, -self.a_re, -self.a_im)
        u, v = self.angle_functions()
        return CustomPolar(lambda x, y, z: u(x, y, z) + t, v, HYPERBOLIC)

    def params(self):
        return {"k": self.k, "a_re": self.a_re, "a_im": self.a_im}


@dataclass(frozen=True)
class HoroPQ(FieldSpec):
    """``u = p z^2 + q``: the horospherical family whose angle depends on height only."""

    p: float = 1.0
    q: float = 0.0
    space: ClassVar[str] = HYPERBOLIC
    family: ClassVar[str] = "horo-pq"

    def components(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        u = self.p * z * z + self.q
        return _stack(np.cos(u), np.sin(u), np.zeros_like(u))

    def domain_mask(self, x, y, z, margin=0.0):
        return np.broadcast_to(np.asarray(z) > 0, np.broadcast(x, y, z).shape)

    def bending_closed(self, x, y, z):
        z = np.broadcast_arrays(x, y, np.asarray(z, dtype=float))[2]
        return 1.0 + 4.0 * self.p**2 * z**4

    def angle_functions(self):
        p, q = self.p, self.q
        return (lambda x, y, z: p * z * z + q + 0 * x), _const(np.pi / 2)

    def rotate(self, t):
        return replace(self, q=self.q + t) if t else self

    def params(self):
        return {"p": self.p, "q": self.q}


@dataclass(frozen=True)
class HParallel(FieldSpec):
    """``xi_3``: tangent to the geodesics converging to the ideal point at infinity."""

    space: ClassVar[str] = HYPERBOLIC
    family: ClassVar[str] = "h-parallel"

    def components(self, x, y, z):
        return charts.constant_field([0.0, 0.0, 1.0])(x, y, z)

    def domain_mask(self, x, y, z, margin=0.0):
        return np.broadcast_to(np.asarray(z) > 0, np.broadcast(x, y, z).shape)

    def bending_closed(self, x, y, z):
        return np.full(np.broadcast(x, y, z).shape, 2.0)


@dataclass(frozen=True, eq=False)
class CustomPolar(FieldSpec):
    """A field given by user angle functions of the base coordinates."""

    u_fn: AngleFn
    v_fn: AngleFn
    space: str = EUCLIDEAN
    family: ClassVar[str] = "custom-polar"

    def components(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, z)))
        u = np.broadcast_to(self.u_fn(x, y, z), x.shape)
        v = np.broadcast_to(self.v_fn(x, y, z), x.shape)
        sv = np.sin(v)
        return _stack(np.cos(u) * sv, np.sin(u) * sv, np.cos(v))

    def domain_mask(self, x, y, z, margin=0.0):
        shape = np.broadcast(x, y, z).shape
        if self.space == HYPERBOLIC:
            return np.broadcast_to(np.asarray(z) > 0, shape)
        return np.ones(shape, dtype=bool)

    def angle_functions(self):
        return self.u_fn, self.v_fn

    def rotate(self, t):
        if not t:
            return self
        u = self.u_fn
        return CustomPolar(lambda x, y, z: u(x, y, z) + t, self.v_fn, self.space)

    @property
    def declared_harmonic(self):
        return None


# ---------------------------------------------------------------------------

def _base_point(spec: FieldSpec, p: ChartPoint, margin: float = 0.0) -> np.ndarray:
    if p.space != spec.space:
        raise DomainError(f"{spec.family} lives in {spec.space} space, point is {p.space}")
    X = p.base_coords()
    if not bool(np.all(spec.domain_mask(*X, margin=margin))):
        raise DomainError(f"point {tuple(X)} is outside the domain of {spec.family}")
    return X


def evaluate(spec: FieldSpec, p: ChartPoint) -> FrameVector:
    """Frame components of the field at ``p``."""
    X = _base_point(spec, p)
    return FrameVector.from_array(spec.components(*X))


def polar_decompose(w) -> PolarAngles:
    """Recover ``(u, v)`` with ``v`` in (0, pi) and ``u`` in [0, 2 pi)."""
    a = np.asarray(w, dtype=float).reshape(3)
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"polar form needs a unit vector, |w| = {norm}")
    horizontal = math.hypot(a[0], a[1])
    if horizontal < 1e-12:
        raise ValueError("w = +-xi_3: polar angle is 0 or pi and u is undefined")
    v = math.atan2(horizontal, a[2])
    u = math.atan2(a[1], a[0]) % (2 * np.pi)
    return PolarAngles(u, v)


def from_polar(u, v) -> np.ndarray:
    return np.array([math.cos(u) * math.sin(v), math.sin(u) * math.sin(v), math.cos(v)])


def bending_fd(spec: FieldSpec, p: ChartPoint, h: float = charts.DEFAULT_STEP) -> float:
    """``sum_i |nabla_{xi_i} sigma|^2`` from finite-difference frame derivatives."""
    X = _base_point(spec, p)
    jet = charts.field_jet(spec.components, X[None, :], spec.space, h)
    return float(np.sum(jet.covariant[0] ** 2))


def bending(spec: FieldSpec, p: ChartPoint, h: float = charts.DEFAULT_STEP) -> float:
    """Bending ``|nabla sigma|^2`` at ``p``.

    Uses the family's closed form when it has one.  A Euclidean custom field
    goes through ``|grad v|^2 + sin^2 v |grad u|^2`` with finite-difference
    gradients; anything else falls back to :func:`bending_fd`.
    """
    X = _base_point(spec, p)
    closed = spec.bending_closed(*X)
    if closed is not None:
        return float(closed)
    if spec.space == EUCLIDEAN:
        u_fn, v_fn = spec.angle_functions()
        gu = charts.scalar_jet(u_fn, X[None, :], EUCLIDEAN, h, angular=True)
        gv = charts.scalar_jet(v_fn, X[None, :], EUCLIDEAN, h)
        sv = math.sin(float(gv.value[0]))
        return float(np.sum(gv.gradient**2) + sv * sv * np.sum(gu.gradient**2))
    return bending_fd(spec, p, h)


def circle_action(spec: FieldSpec, t: float) -> FieldSpec:
    """Rotate the equatorial part of ``spec`` by the angle ``t`` (``u -> u + t``)."""
    return spec.rotate(float(t))


# CLI vocabulary: family name -> (constructor, {param: type})
CATALOG: dict[str, tuple[Callable[..., FieldSpec], dict[str, type]]] = {
    "euclid-radial-line": (EuclidRadialLine, {"t": float}),
    "euclid-radial-point": (EuclidRadialPoint, {"t": float}),
    "euclid-pendulum": (EuclidPendulum, {"p": float, "q": float, "method": str}),
    "frame": (Frame, {"i": int, "space": str}),
    "horo-invariant": (HoroInvariant, {"u0": float}),
    "horo-theta": (HoroTheta, {"sign": int}),
    "horo-radial": (horo_radial, {}),
    "horo-holomorphic": (HoroHolomorphic, {"k": float, "a_re": float, "a_im": float}),
    "horo-pq": (HoroPQ, {"p": float, "q": float}),
    "h-parallel": (HParallel, {}),
}


def make_field(family: str, **params) -> FieldSpec:
    """Build a catalog entry by CLI name; unknown names or parameters raise ``ValueError``."""
    try:
        ctor, accepted = CATALOG[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(CATALOG)}") from None
    extra = set(params) - set(accepted)
    if extra:
        raise ValueError(f"family {family} does not take {', '.join(sorted(extra))}")
    return ctor(**{k: accepted[k](v) for k, v in params.items()})
