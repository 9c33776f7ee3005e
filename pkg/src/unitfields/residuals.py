"""Finite-difference harmonicity checks on grids.

Every checker evaluates one or more residual *channels* pointwise on a grid
and reports their max and mean.  Each run is repeated at two coarse steps to
estimate the convergence order; a true solution shows order ~2, while a
non-solution shows a residual that does not shrink.  A verdict is PASS when
every channel is below its effective tolerance at the working step and its
order is at least ``MIN_ORDER`` (or the residual sits at round-off at both coarse
steps, which happens when finite differences are exact for the field).

The effective tolerance is ``max(tol, C h^2)``.  ``C`` is calibrated from the
finer coarse run as ``CALIBRATION_SAFETY * residual / step^2``, and only when the
observed order confirms second-order convergence; a residual that does not
shrink is therefore always held to ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import charts
from .charts import EUCLIDEAN, HYPERBOLIC, ChartId
from .errors import DomainError
from .fieldlab import (EuclidPendulum, EuclidRadialLine, EuclidRadialPoint, FieldSpec,
                       HoroHolomorphic, HoroPQ, HoroTheta)

DEFAULT_TOL = 1e-6
ORDER_STEPS = (1e-2, 5e-3)
MIN_ORDER = 1.9
ROUNDOFF_FLOOR = 1e-10
CALIBRATION_SAFETY = 2.0
SINGULAR_MARGIN = 0.05

PASS, FAIL = "PASS", "FAIL"


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid in one chart, filtered by chart validity and the field's domain.

    ``axes`` holds ``(min, max, count)`` per chart coordinate.  Points closer than
    ``margin`` to the field's singular set are dropped, as are points where the
    optional ``exclude`` predicate (on base coordinates) is true.
    """

    chart: ChartId
    axes: tuple[tuple[float, float, int], ...]
    margin: float = SINGULAR_MARGIN
    exclude: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chart", ChartId(self.chart))
        axes = tuple((float(a), float(b), int(n)) for a, b, n in self.axes)
        if len(axes) != 3:
            raise ValueError("a grid needs three axes")
        for lo, hi, n in axes:
            if n < 2 or not lo < hi:
                raise ValueError(f"bad grid axis ({lo}, {hi}, {n})")
        object.__setattr__(self, "axes", axes)

    @property
    def space(self) -> str:
        return self.chart.space

    def points(self, spec: FieldSpec | None = None) -> np.ndarray:
        """Base-chart coordinates of the admissible grid points, shape (N, 3)."""
        mesh = np.meshgrid(*(np.linspace(lo, hi, n) for lo, hi, n in self.axes), indexing="ij")
        c1, c2, c3 = (m.ravel() for m in mesh)
        ok = np.ones(c1.shape, dtype=bool)
        if self.chart is ChartId.HYPERBOLIC_HALFSPACE:
            ok &= c3 > 0
        if self.chart in (ChartId.EUCLIDEAN_CYLINDRICAL, ChartId.EUCLIDEAN_SPHERICAL,
                          ChartId.HYPERBOLIC_BALL_POLAR):
            ok &= c1 >= 0
        if self.chart in (ChartId.EUCLIDEAN_SPHERICAL, ChartId.HYPERBOLIC_BALL_POLAR):
            ok &= (c3 >= 0) & (c3 <= np.pi)
        X = np.column_stack(charts.to_base(self.chart, c1[ok], c2[ok], c3[ok]))
        keep = np.ones(len(X), dtype=bool)
        if spec is not None:
            if spec.space != self.space:
                raise DomainError(f"{spec.family} lives in {spec.space} space, grid is {self.space}")
            keep &= spec.domain_mask(X[:, 0], X[:, 1], X[:, 2], margin=self.margin)
        if self.exclude is not None:
            keep &= ~np.asarray(self.exclude(X[:, 0], X[:, 1], X[:, 2]), dtype=bool)
        X = X[keep]
        if len(X) == 0:
            raise DomainError("grid has no admissible points")
        return X

    def to_dict(self) -> dict:
        return {"chart": self.chart.value, "axes": [list(a) for a in self.axes],
                "margin": self.margin}


@dataclass
class Channel:
    name: str
    max: float
    mean: float
    order: float | None
    refinement: list[tuple[float, float]]   # (step, max residual) at the coarse steps
    effective_tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "max": self.max, "mean": self.mean, "order": self.order,
                "refinement": [list(r) for r in self.refinement],
                "effective_tol": self.effective_tol, "passed": self.passed}


@dataclass
class ResidualReport:
    check: str
    field: dict
    grid: GridSpec
    fd_step: float
    tol: float
    channels: list[Channel]
    n_points: int

    @property
    def verdict(self) -> str:
        return PASS if all(c.passed for c in self.channels) else FAIL

    def channel(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"check": self.check, "family": self.field.get("family"),
                "params": self.field.get("params", {}), "space": self.field.get("space"),
                "grid": self.grid.to_dict(), "h": self.fd_step, "tol": self.tol,
                "n_points": self.n_points, "channels": [c.to_dict() for c in self.channels],
                "verdict": self.verdict}


def convergence_order(coarse: float, fine: float, ratio: float = 2.0) -> float | None:
    """Observed order from residuals at steps ``h`` and ``h/ratio``; ``None`` at round-off."""
    if coarse < ROUNDOFF_FLOOR and fine < ROUNDOFF_FLOOR:
        return None
    if fine <= 0:
        return math.inf
    return math.log(coarse / fine) / math.log(ratio)


def _build_report(check, field_desc, grid, X, evaluate, h, tol, order_steps, min_order=MIN_ORDER,
                  converge_required=True):
    working = evaluate(h)
    coarse = [evaluate(s) for s in order_steps]
    channels = []
    for name, res in working.items():
        res = np.asarray(res, dtype=float)
        if not np.all(np.isfinite(res)):
            raise DomainError(f"channel {name} is not finite on the grid; field singular there")
        maxima = [float(np.max(c[name])) for c in coarse]
        order = convergence_order(maxima[0], maxima[1], order_steps[0] / order_steps[1])
        eff = tol
        if converge_required and order is not None and order >= min_order:
            eff = max(tol, CALIBRATION_SAFETY * maxima[1] * (h / order_steps[1]) ** 2)
        ok = float(np.max(res)) < eff
        if converge_required:
            ok = ok and (order is None or order >= min_order)
        channels.append(Channel(name, float(np.max(res)), float(np.mean(res)), order,
                                list(zip(map(float, order_steps), maxima)), float(eff), ok))
    return ResidualReport(check, field_desc, grid, float(h), float(tol), channels, len(X))


def harmonic_section_residual(spec: FieldSpec, grid: GridSpec, h: float = charts.DEFAULT_STEP,
                              tol: float = DEFAULT_TOL,
                              order_steps=ORDER_STEPS) -> ResidualReport:
    """Residual ``|nabla* nabla s - |nabla s|^2 s|`` of the harmonic-section equation.

    The bending in the residual comes from the same finite-difference frame
    derivatives, not from a closed form.
    """
    X = grid.points(spec)

    def evaluate(step):
        jet = charts.field_jet(spec.components, X, spec.space, step)
        bend = np.sum(jet.covariant**2, axis=(1, 2))
        res = jet.rough_laplacian - bend[:, None] * jet.value
        return {"harmonic_section": np.linalg.norm(res, axis=1)}

    return _build_report("harmonic", spec.describe(), grid, X, evaluate, h, tol, order_steps)


def euclidean_reduced_residual(u_fn, v_fn, grid: GridSpec, h: float = charts.DEFAULT_STEP,
                               tol: float = DEFAULT_TOL, order_steps=ORDER_STEPS,
                               field_desc: dict | None = None) -> ResidualReport:
    """Residuals of the polar-form system on a Euclidean grid.

    Channels: ``Delta u - 2 (grad u . grad v) cot v`` and
    ``Delta v + |grad u|^2 cos v sin v``.
    """
    if grid.space != EUCLIDEAN:
        raise ValueError("euclidean_reduced_residual needs a Euclidean grid")
    X = grid.points()
    v0 = np.asarray(v_fn(X[:, 0], X[:, 1], X[:, 2]), dtype=float) * np.ones(len(X))
    if np.min(np.abs(np.sin(v0))) < 1e-8:
        raise DomainError("v reaches 0 or pi on the grid; cot v is not finite")

    def evaluate(step):
        ju = charts.scalar_jet(u_fn, X, EUCLIDEAN, step, angular=True)
        jv = charts.scalar_jet(v_fn, X, EUCLIDEAN, step)
        v = jv.value
        dot = np.sum(ju.gradient * jv.gradient, axis=1)
        g2 = np.sum(ju.gradient**2, axis=1)
        return {
            "azimuthal": np.abs(ju.laplacian - 2 * dot / np.tan(v)),
            "polar": np.abs(jv.laplacian + g2 * np.cos(v) * np.sin(v)),
        }

    desc = field_desc or {"family": "custom-polar", "space": EUCLIDEAN, "params": {}}
    return _build_report("reduced", desc, grid, X, evaluate, h, tol, order_steps)


def horospherical_residual(u_fn, grid: GridSpec, h: float = charts.DEFAULT_STEP,
                           tol: float = DEFAULT_TOL, order_steps=ORDER_STEPS,
                           field_desc: dict | None = None) -> ResidualReport:
    """Residuals of the standard-form system on a half-space grid.

    Channels: the hyperbolic Laplacian of ``u`` and the constraint
    ``u_x sin u - u_y cos u`` (coordinate partials).
    """
    if grid.space != HYPERBOLIC:
        raise ValueError("horospherical_residual needs a hyperbolic grid")
    X = grid.points()
    z = X[:, 2]

    def evaluate(step):
        ju = charts.scalar_jet(u_fn, X, HYPERBOLIC, step, angular=True)
        ux, uy = ju.gradient[:, 0] / z, ju.gradient[:, 1] / z
        u = ju.value
        return {
            "laplacian": np.abs(ju.laplacian),
            "constraint": np.abs(ux * np.sin(u) - uy * np.cos(u)),
        }

    desc = field_desc or {"family": "custom-polar", "space": HYPERBOLIC, "params": {}}
    return _build_report("reduced", desc, grid, X, evaluate, h, tol, order_steps)


def reduced_residual(spec: FieldSpec, grid: GridSpec, h: float = charts.DEFAULT_STEP,
                     tol: float = DEFAULT_TOL, order_steps=ORDER_STEPS) -> ResidualReport:
    """Dispatch to the reduced system that applies to ``spec``'s space."""
    u_fn, v_fn = spec.angle_functions()
    grid.points(spec)  # domain check
    restricted = GridSpec(grid.chart, grid.axes, grid.margin,
                          _domain_exclusion(spec, grid.margin, grid.exclude))
    if spec.space == EUCLIDEAN:
        return euclidean_reduced_residual(u_fn, v_fn, restricted, h, tol, order_steps,
                                          spec.describe())
    probe = restricted.points()
    v = np.asarray(v_fn(*probe.T), dtype=float)
    if not np.allclose(v, np.pi / 2):
        raise ValueError(f"{spec.family} is not horospherical; no reduced system applies")
    return horospherical_residual(u_fn, restricted, h, tol, order_steps, spec.describe())


def _domain_exclusion(spec, margin, extra):
    def exclude(x, y, z):
        out = ~spec.domain_mask(x, y, z, margin=margin)
        if extra is not None:
            out |= np.asarray(extra(x, y, z), dtype=bool)
        return out
    return exclude


def harmonic_map_test(spec: FieldSpec, grid: GridSpec, h: float = charts.DEFAULT_STEP,
                      tol: float = DEFAULT_TOL, order_steps=ORDER_STEPS) -> ResidualReport:
    """Geodesic defect ``|nabla_s s|`` and solenoidal defect ``|div s|``.

    On a non-Euclidean space form a harmonic unit field is a harmonic map exactly
    when both vanish; the verdict is PASS only in that case.
    """
    if spec.space != HYPERBOLIC:
        raise ValueError("the geodesic + solenoidal test applies to hyperbolic fields only")
    X = grid.points(spec)

    def evaluate(step):
        jet = charts.field_jet(spec.components, X, HYPERBOLIC, step)
        geodesic = np.einsum("ni,nik->nk", jet.value, jet.covariant)
        div = np.einsum("nii->n", jet.covariant)
        return {"geodesic": np.linalg.norm(geodesic, axis=1), "solenoidal": np.abs(div)}

    return _build_report("map", spec.describe(), grid, X, evaluate, h, tol, order_steps,
                         converge_required=False)


def default_grid(spec: FieldSpec, n: int = 6) -> GridSpec:
    """A grid inside the field's domain, kept clear of its singular set."""
    angles = (-3.0, 3.0, n)
    if isinstance(spec, EuclidRadialLine):
        return GridSpec(ChartId.EUCLIDEAN_CYLINDRICAL, ((0.5, 2.0, n), angles, (-1.0, 1.0, 3)))
    if isinstance(spec, EuclidRadialPoint):
        return GridSpec(ChartId.EUCLIDEAN_SPHERICAL, ((0.7, 2.0, n), angles, (0.5, np.pi - 0.5, n)))
    if isinstance(spec, EuclidPendulum):
        return GridSpec(ChartId.EUCLIDEAN_CYLINDRICAL, ((0.3, 3.0, n), angles, (-1.0, 1.0, 3)))
    if spec.space == EUCLIDEAN:
        return GridSpec(ChartId.EUCLIDEAN_CARTESIAN, ((-1.0, 1.0, n),) * 3)
    if isinstance(spec, HoroHolomorphic) and spec.k != 0:
        x0, y0 = -spec.a_im / spec.k, spec.a_re / spec.k
        return GridSpec(ChartId.HYPERBOLIC_HALFSPACE,
                        ((x0 + 1.0, x0 + 2.5, n), (y0 - 1.0, y0 + 1.0, n), (0.2, 2.0, n)))
    if isinstance(spec, HoroPQ):
        # the field turns faster in the hyperbolic metric as z grows (bending 1 + 4 p^2 z^4)
        return GridSpec(ChartId.HYPERBOLIC_HALFSPACE,
                        ((-1.0, 1.0, n), (-1.0, 1.0, n), (0.2, 1.0, n)))
    if isinstance(spec, HoroTheta):
        return GridSpec(ChartId.HYPERBOLIC_HALFSPACE,
                        ((1.0, 2.5, n), (-1.5, 1.5, n), (0.2, 2.0, n)))
    return GridSpec(ChartId.HYPERBOLIC_HALFSPACE, ((-1.0, 1.0, n), (-1.0, 1.0, n), (0.2, 2.0, n)))
