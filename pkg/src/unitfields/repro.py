"""Executable table of the reproduction targets, run by ``unitfields repro all``.

Each check returns a :class:`CheckResult` with the measured quantities so the
table can be printed or emitted as JSON.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import charts, fieldlab, flowtrace, pendulum, residuals, stability
from .charts import EUCLIDEAN, HYPERBOLIC, ChartId, ChartPoint


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"key": self.key, "title": self.title, "passed": self.passed,
                "measured": self.measured, "seconds": round(self.seconds, 3)}


def thresholds_check() -> CheckResult:
    t0 = time.perf_counter()
    stability.find_thresholds.cache_clear()
    th = stability.find_thresholds(1e-6)
    r0 = stability.find_R0(1.471008)
    secs = time.perf_counter() - t0
    ok = (abs(th.delta_s - 1.471007) <= 5e-6 and abs(th.delta_u - 1.612195) <= 5e-6
          and r0.R0 <= 8.198206 and secs < 10)
    return CheckResult("thresholds", "delta_s, delta_u and R0(1.471008)", ok,
                       {"delta_s": th.delta_s, "delta_u": th.delta_u, "R0": r0.R0}, secs)


def hessian_check() -> list[CheckResult]:
    t0 = time.perf_counter()
    pub = stability.lattice_check(stability.PUBLISHED)
    exact = stability.lattice_check(stability.EXACT)
    lattice = np.linspace(0.1, 10, 20), np.linspace(0.1, 5, 20)
    shell = max(stability.shell_integrals(R, d).max_rel_diff() for R in lattice[0] for d in lattice[1])
    vol = max(abs(stability.ball_volume(r) - stability.ball_volume_quadrature(r))
              / stability.ball_volume_quadrature(r) for r in np.linspace(0.1, 15, 50))
    secs = time.perf_counter() - t0
    return [
        CheckResult("hessian-published", "published closed form vs quadrature (20x20, 1e-8 rel)",
                    pub.max_rel_diff < 1e-8 and secs < 30,
                    {"max_rel_diff": pub.max_rel_diff, "worst_R": pub.worst.R,
                     "worst_delta": pub.worst.delta}, secs),
        CheckResult("hessian-exact", "rederived closed form vs quadrature (20x20, 1e-8 rel)",
                    exact.max_rel_diff < 1e-8, {"max_rel_diff": exact.max_rel_diff}),
        CheckResult("shell-integrals", "I1, I2, V_rho vs quadrature (1e-10 rel)",
                    shell < 1e-10 and vol < 1e-10, {"I1_I2": shell, "V_rho": vol}),
    ]


def harmonic_cases():
    """Declared-harmonic fields, each paired with the grid it is checked on."""
    cases = []
    for t in np.linspace(0, 2 * np.pi, 4, endpoint=False):
        cases.append(fieldlab.EuclidRadialLine(float(t)))
        cases.append(fieldlab.EuclidRadialPoint(float(t)))
    for q in (0.5, 1.0, 2.0):
        for p in (0.0, math.pi / 2, 1.0):
            cases.append(fieldlab.EuclidPendulum(p, q))
    cases += [fieldlab.Frame(i, EUCLIDEAN) for i in (1, 2, 3)]
    cases += [fieldlab.Frame(i, HYPERBOLIC) for i in (1, 2)]
    cases += [fieldlab.HoroTheta(1), fieldlab.HoroTheta(-1),
              fieldlab.HoroHolomorphic(1.0, 1.0, 0.0), fieldlab.HoroHolomorphic(2.0, 0.0, 1.0),
              fieldlab.HoroPQ(1.0, 0.0), fieldlab.HoroPQ(-0.5, 1.0), fieldlab.HParallel()]
    return cases


def non_harmonic_cases():
    return [fieldlab.horo_radial(), fieldlab.HoroTheta(1).rotate(0.7),
            fieldlab.HoroTheta(-1).rotate(2.0)]


def _has_reduced(spec) -> bool:
    return not isinstance(spec, fieldlab.HParallel) and not (
        isinstance(spec, fieldlab.Frame) and spec.i == 3)


def harmonicity_check() -> CheckResult:
    t0 = time.perf_counter()
    failures, worst, worst_order = [], 0.0, math.inf
    for spec in harmonic_cases():
        grid = residuals.default_grid(spec)
        reports = [residuals.harmonic_section_residual(spec, grid)]
        if _has_reduced(spec):
            reports.append(residuals.reduced_residual(spec, grid))
        for rep in reports:
            for ch in rep.channels:
                worst = max(worst, ch.max)
                if ch.order is not None:
                    worst_order = min(worst_order, ch.order)
            if rep.verdict != residuals.PASS:
                failures.append(f"{spec.family}{spec.params()}:{rep.check}")
    floor = math.inf
    for spec in non_harmonic_cases():
        rep = residuals.harmonic_section_residual(spec, residuals.default_grid(spec))
        ch = rep.channel("harmonic_section")
        floor = min(floor, ch.max, *(m for _, m in ch.refinement))
        if rep.verdict != residuals.FAIL:
            failures.append(f"{spec.family}{spec.params()}: expected FAIL")
    secs = time.perf_counter() - t0
    return CheckResult("harmonicity", "harmonic catalog PASS, non-harmonic FAIL",
                       not failures and floor > 1e-3 and secs < 120,
                       {"worst_residual": worst, "lowest_order": worst_order,
                        "non_harmonic_floor": floor, "failures": failures}, secs)


def pendulum_check() -> CheckResult:
    t0 = time.perf_counter()
    r = np.geomspace(1e-3, 10, 2000)
    sup, sep, lim = 0.0, 0.0, 0.0
    for q in (0.5, 1.0, 2.0):
        sol = pendulum.shooting_profile(q)
        v_s, vp_s = sol.profile(r)
        v_c, vp_c = pendulum.closed_form(q, r)
        sup = max(sup, float(np.max(np.abs(v_s - v_c))), float(np.max(np.abs(vp_s - vp_c))))
        sep = max(sep, pendulum.separatrix_residual(sol))
        lim = max(lim, abs(pendulum.bending_axis_limit(q, "shooting") - 2 * q * q))
    shells = [pendulum.total_bending(1.0, R) for R in (1, 2, 4, 8, 16, 32)]
    growing = all(b > a for a, b in zip(shells, shells[1:]))
    bounded = float(np.max(pendulum.bending(1.0, r))) <= 2.0 + 1e-12
    ok = sup < 1e-8 and sep < 1e-8 and lim < 1e-6 and growing and bounded
    return CheckResult("pendulum", "closed form vs shooting, separatrix, axis limit, divergence",
                       ok, {"sup_error": sup, "separatrix": sep, "axis_limit_error": lim,
                            "total_bending": shells}, time.perf_counter() - t0)


def bending_check(n: int = 25, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    cases = [
        (fieldlab.EuclidRadialLine(0.4), ChartId.EUCLIDEAN_CYLINDRICAL,
         lambda c: 1 / c[0] ** 2, lambda: (rng.uniform(0.3, 3), rng.uniform(-3, 3), rng.uniform(-2, 2))),
        (fieldlab.EuclidRadialPoint(0.0), ChartId.EUCLIDEAN_SPHERICAL,
         lambda c: 2 / c[0] ** 2, lambda: (rng.uniform(0.3, 3), rng.uniform(-3, 3), rng.uniform(0.2, 2.9))),
        (fieldlab.Frame(1, HYPERBOLIC), ChartId.HYPERBOLIC_HALFSPACE, lambda c: 1.0, None),
        (fieldlab.Frame(2, HYPERBOLIC), ChartId.HYPERBOLIC_HALFSPACE, lambda c: 1.0, None),
        (fieldlab.HParallel(), ChartId.HYPERBOLIC_HALFSPACE, lambda c: 2.0, None),
        (fieldlab.HoroPQ(1.3, 0.2), ChartId.HYPERBOLIC_HALFSPACE,
         lambda c: 1 + 4 * 1.3**2 * c[2] ** 4, None),
    ]
    worst = 0.0
    for spec, chart, expected, sampler in cases:
        for _ in range(n):
            c = sampler() if sampler else (rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 2))
            got = fieldlab.bending_fd(spec, ChartPoint(chart, *c))
            worst = max(worst, abs(got - expected(c)) / expected(c))
    return CheckResult("bending", "closed-form bending vs frame derivatives", worst < 1e-6,
                       {"max_rel_error": worst}, time.perf_counter() - t0)


def flow_check() -> CheckResult:
    t0 = time.perf_counter()
    q = 1.0
    helix = flowtrace.helix_diagnostics(fieldlab.EuclidPendulum(math.pi / 2, q),
                                        [1e-4, 1e-2, 0.5, 1.0, 1.9, 1.999, 2.0])
    slopes = [m for _, m in helix.slope_profile]
    slope_ok = slopes[0] > 1e3 and slopes[-1] < 1e-12 and all(
        b < a for a, b in zip(slopes[:-1], slopes[1:]))
    fountain = flowtrace.fountain_diagnostics(fieldlab.EuclidPendulum(0.0, q), [(0.1, 0.0, 0.0),
                                                                               (0.3, 0.4, -1.0)])
    vert = max(abs(c["vertical_component"]) for c in fountain.details["crossings"])
    pts = np.random.default_rng(1).normal(size=(500, 3)) * 2
    glide = max(flowtrace.glide_symmetry_error(p, qq, pts) for p in (0.0, 0.7, -2.0)
                for qq in (0.5, 1.0, -2.0))
    crossing = abs(helix.crossing_radius - pendulum.crossing_radius(q))
    ok = (helix.invariant_surface_error < 1e-6 and slope_ok
          and fountain.invariant_surface_error < 1e-9 and vert < 1e-6 and glide < 1e-12
          and crossing < 1e-8)
    return CheckResult("flow", "cylinder and plane invariance, slopes, crossing, glide symmetry",
                       ok, {"radial_drift": helix.invariant_surface_error,
                            "theta_drift": fountain.invariant_surface_error,
                            "crossing_vertical_component": vert, "glide_error": glide,
                            "crossing_radius_mismatch": crossing}, time.perf_counter() - t0)


def identity_check(seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.uniform(-1, 1, 40), rng.uniform(-1, 1, 40), rng.uniform(0.5, 2, 40)])
    c = rng.normal(size=6)

    def f(x, y, z):
        return c[0] + c[1] * x * y + c[2] * z * z + c[3] * x**3 + 0.2 * np.sin(c[4] * y + z)

    def vec(x, y, z):
        return np.stack(np.broadcast_arrays(np.sin(x + c[5] * z), np.cos(y) * z, x * y + 0 * z), axis=-1)

    orders = []
    for space in (EUCLIDEAN, HYPERBOLIC):
        for fn in (lambda h: charts.product_rule_defect(f, vec, X, space, h),
                   lambda h: charts.chain_rule_defects(f, np.tanh, _dtanh, _d2tanh, X, space, h)[0],
                   lambda h: charts.chain_rule_defects(f, np.tanh, _dtanh, _d2tanh, X, space, h)[1]):
            coarse, fine = float(np.max(fn(1e-2))), float(np.max(fn(5e-3)))
            orders.append(residuals.convergence_order(coarse, fine) or math.inf)
    shell = max(abs(stability.ball_volume(R + d) - stability.ball_volume(R)
                    - stability.shell_volume(R, d)) / stability.shell_volume(R, d)
                for R in np.linspace(0.1, 10, 20) for d in np.linspace(0.1, 5, 20))
    ok = min(orders) >= 1.9 and shell < 1e-12
    return CheckResult("identities", "product and chain rules at FD order, shell-volume identity",
                       ok, {"lowest_order": min(orders), "shell_volume_rel": shell},
                       time.perf_counter() - t0)


def _dtanh(u):
    return 1 - np.tanh(u) ** 2


def _d2tanh(u):
    return -2 * np.tanh(u) * (1 - np.tanh(u) ** 2)


def run_all() -> list[CheckResult]:
    results = [thresholds_check()]
    results += hessian_check()
    results += [harmonicity_check(), pendulum_check(), bending_check(), flow_check(),
                identity_check()]
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.key) for r in results)
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.key:<{width}}  {r.title}")
    return "\n".join(lines)
