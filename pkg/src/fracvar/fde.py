"""Implicit solver for u under the bounded-kernel Caputo-type derivative,
plus the comparison principle, uniqueness probing, and sandwich bounds.

Discretization: product-trapezoid collocation. At node t_i the derivative is

    D_h u(t_i) = P_i * sum_j c_ij (u_j - u_{j-1}),
    c_ij = (H(t_i, t_{j-1}) + H(t_i, t_j)) / 2,

and the scalar equation D_h u = rhs(t_i, u_i) is solved by safeguarded Newton
per node (memory term frozen). Cost is O(n^2) with the kernel table shared
across nodes.

Initial-condition compatibility: the continuous equation at t = a forces
f(a, u0) = 0; incompatible data make the exact solution jump at a. By default
the solver subtracts H(t_i, a) f(a, u0) from the right-hand side, which
removes the jump (the Volterra regularization of exponential-kernel
equations) and restores O(h^2) accuracy for incompatible data. Pass
compat_correction=False to discretize the equation exactly as written; the
sandwich check does this internally because the enclosure of the comparison
lemma holds for the uncorrected equation (the corrected linear bounds start
with the wrong curvature and cross the solution near t = a). |f(a, u0)| is
always reported as the compatibility diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BoundViolation,
    HypothesisViolation,
    InvalidParam,
    NewtonDivergence,
)
from .grids import GridFunction, uniform_grid
from .kernel import KernelSpec
from .operators import _KernelTable, _prefactors, caputo_deriv_ns

NEWTON_TOL = 1e-10
MAX_NEWTON = 50


@dataclass(frozen=True)
class FdeProblem:
    spec: KernelSpec
    rhs: Callable[[float, float], float]
    initial: float
    grid_n: int

    def __post_init__(self):
        if self.grid_n < 16:
            raise InvalidParam(f"grid_n must be >= 16, got {self.grid_n}")
        a, b = self.spec.interval
        for t in np.linspace(a, b, 17):
            value = self.rhs(float(t), float(self.initial))
            if not math.isfinite(value):
                raise InvalidParam(f"rhs not finite at (t={t:.6g}, u={self.initial})")

    def grid(self) -> np.ndarray:
        a, b = self.spec.interval
        return uniform_grid(a, b, self.grid_n)


@dataclass(frozen=True)
class LinearBound:
    """One side of the sandwich: the comparison equation rhs lam*v + h(t)."""

    lam: float
    h: GridFunction

    def __post_init__(self):
        if not (self.lam < 0.0):
            raise InvalidParam(f"comparison rate must be negative, got {self.lam}")


@dataclass(frozen=True)
class BoundCheck:
    lower: GridFunction
    upper: GridFunction
    violations: int


@dataclass(frozen=True)
class SolveReport:
    solution: GridFunction
    newton_iters: np.ndarray
    residual_norm: float
    compat_gap: float
    corrected: bool
    bound_check: BoundCheck | None = field(default=None)

    def __post_init__(self):
        if self.residual_norm < 0.0:
            raise InvalidParam("residual_norm must be >= 0")


def _newton_step(g, gprime, start: float, tol: float,
                 node: int) -> tuple[float, int]:
    """Safeguarded scalar Newton; falls back to bisection on a grown bracket."""
    u = start
    for it in range(1, MAX_NEWTON + 1):
        gu = g(u)
        if abs(gu) <= tol:
            return u, it
        dg = gprime(u)
        if dg != 0.0 and math.isfinite(dg):
            step = gu / dg
            trial = u - step
            if math.isfinite(trial):
                u = trial
                continue
        break
    # bracket the root by geometric expansion around the start value
    width = max(1.0, abs(start))
    lo, hi = start - width, start + width
    for _ in range(64):
        glo, ghi = g(lo), g(hi)
        if math.isfinite(glo) and math.isfinite(ghi) and glo * ghi <= 0.0:
            break
        width *= 2.0
        lo, hi = start - width, start + width
    else:
        raise NewtonDivergence("no bracket for the nodal equation", node=node)
    for it2 in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol or hi - lo <= 1e-15 * max(1.0, abs(mid)):
            return mid, MAX_NEWTON + it2 + 1
        if g(lo) * gm <= 0.0:
            hi = mid
        else:
            lo = mid
    raise NewtonDivergence("bisection stalled on the nodal equation", node=node)


def solve_fde(problem: FdeProblem, *, compat_correction: bool = True,
              newton_tol: float = NEWTON_TOL,
              _rng: np.random.Generator | None = None) -> SolveReport:
    """March the implicit collocation scheme across the grid.

    _rng, when given, jitters Newton starting iterates and permutes the
    memory-sum accumulation order; the root and the analytic value are
    unchanged, only roundoff and iteration paths differ. The uniqueness
    probe uses this to stress solver determinism claims.
    """
    grid = problem.grid()
    n = grid.size - 1
    table = _KernelTable(problem.spec, grid)
    P = _prefactors(problem.spec, table.alphas)
    rhs = problem.rhs
    u = np.empty(n + 1)
    u[0] = problem.initial
    f0 = rhs(float(grid[0]), float(problem.initial))
    compat_gap = abs(f0)
    iters = np.zeros(n, dtype=int)

    for i in range(1, n + 1):
        row = table.row(i)
        c = 0.5 * (row[:-1] + row[1:])
        du = np.diff(u[: i + 1])
        contrib = c[: i - 1] * du[: i - 1]
        if _rng is not None and contrib.size > 1:
            contrib = contrib[_rng.permutation(contrib.size)]
        mem = float(np.sum(contrib))
        kii = float(c[i - 1])
        Pi = float(P[i])
        ti = float(grid[i])
        shift = row[0] * f0 if compat_correction else 0.0

        def g(x: float, _mem=mem, _kii=kii, _Pi=Pi, _ti=ti, _up=u[i - 1],
              _shift=shift) -> float:
            return _Pi * (_mem + _kii * (x - _up)) - rhs(_ti, x) + _shift

        def gprime(x: float, _kii=kii, _Pi=Pi, _ti=ti) -> float:
            delta = 1e-7 * max(1.0, abs(x))
            return _Pi * _kii - (rhs(_ti, x + delta) - rhs(_ti, x - delta)) / (2 * delta)

        start = u[i - 1] if i == 1 else 2.0 * u[i - 1] - u[i - 2]
        if _rng is not None:
            start += 0.5 * (1.0 + abs(start)) * float(_rng.standard_normal())
        tol = newton_tol * max(1.0, Pi * kii)
        u[i], iters[i - 1] = _newton_step(g, gprime, start, tol, i)

    # residual certification, independent of the Newton internals
    residual = 0.0
    worst = 0
    for i in range(1, n + 1):
        row = table.row(i)
        c = 0.5 * (row[:-1] + row[1:])
        dh = float(P[i]) * float(np.dot(c, np.diff(u[: i + 1])))
        target = rhs(float(grid[i]), float(u[i]))
        if compat_correction:
            target -= row[0] * f0
        gap = abs(dh - target)
        scale = max(1.0, abs(target), float(P[i]))
        if gap / scale > residual:
            residual = gap / scale
            worst = i
    if residual > 10.0 * newton_tol:
        raise NewtonDivergence(
            f"residual certification failed ({residual:.3e} at node {worst})",
            node=worst,
        )

    sol = GridFunction(grid=grid, values=u, label="u")
    return SolveReport(solution=sol, newton_iters=iters, residual_norm=residual,
                       compat_gap=compat_gap, corrected=compat_correction)


# --- comparison principle -------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    applicable: bool
    max_inequality: float
    violations: int
    worst_node: int | None
    tol: float


def check_comparison(spec: KernelSpec, u: GridFunction, q: GridFunction, *,
                     tol: float | None = None) -> ComparisonReport:
    """Test the comparison principle on sampled data.

    Hypotheses: q >= 0 with q(a) > 0, and D_c u + q u <= 0 on the grid.
    Conclusion checked: u <= 0 (within slack). When the inequality hypothesis
    fails the case is reported as not applicable rather than as a violation.
    """
    qv = q.values
    if np.min(qv) < 0.0:
        raise HypothesisViolation("q must be nonnegative")
    if qv[0] <= 0.0:
        raise HypothesisViolation("q(a) must be positive")
    if u.grid.shape != q.grid.shape or np.max(np.abs(u.grid - q.grid)) > 1e-12:
        raise InvalidParam("u and q must share one grid")
    if tol is None:
        tol = 1e-7 * max(1.0, float(np.max(np.abs(u.values))))
    deriv = caputo_deriv_ns(spec, u).values.values
    Q = deriv + qv * u.values
    max_q = float(np.max(Q))
    if max_q > tol:
        return ComparisonReport(applicable=False, max_inequality=max_q,
                                violations=0, worst_node=None, tol=tol)
    bad = np.nonzero(u.values > tol)[0]
    worst = int(bad[np.argmax(u.values[bad])]) if bad.size else None
    return ComparisonReport(applicable=True, max_inequality=max_q,
                            violations=int(bad.size), worst_node=worst, tol=tol)


def comparison_cases(spec: KernelSpec, n: int, count: int, seed: int):
    """Yield (u, q) grid pairs satisfying the comparison hypotheses.

    Candidates are drawn from a family biased toward decreasing negative
    profiles, then rejection-filtered on the actual discretized inequality,
    so acceptance is decided by the same operator the check uses.
    """
    a, b = spec.interval
    grid = uniform_grid(a, b, n)
    rng = np.random.default_rng(seed)
    produced = 0
    attempts = 0
    while produced < count:
        attempts += 1
        if attempts > 50 * count:
            raise InvalidParam("comparison case generator stalled")
        c0 = rng.uniform(0.2, 2.0)
        c1, c2 = 0.3 * rng.standard_normal(2)
        qv = c0 + c1 * (grid - a) + c2 * (grid - a) ** 2
        if np.min(qv) <= 1e-3:
            continue
        d = np.abs(rng.standard_normal(4)) * np.array([1.0, 0.8, 0.5, 0.4])
        w = rng.uniform(1.0, 4.0)
        s = grid - a
        uv = -(d[0] + d[1] * s + d[2] * s**2 + d[3] * (1.0 - np.cos(w * s)))
        u = GridFunction(grid=grid, values=uv, label="u_case")
        q = GridFunction(grid=grid, values=qv, label="q_case")
        Q = caputo_deriv_ns(spec, u).values.values + qv * uv
        if np.max(Q) > 0.0:
            continue
        produced += 1
        yield u, q


# --- uniqueness probe -----------------------------------------------------------


@dataclass(frozen=True)
class UniquenessReport:
    runs: int
    max_divergence: float
    max_slope: float


def uniqueness_probe(problem: FdeProblem, perturbations: int, *,
                     seed: int = 0) -> UniquenessReport:
    """Re-solve with jittered Newton starts and permuted memory sums.

    The uniqueness hypothesis (rhs non-increasing in u) is sampled over the
    trajectory envelope first; HypothesisViolation if any sampled slope is
    positive. Reports the max pairwise sup-distance between the solutions.
    """
    if perturbations < 1:
        raise InvalidParam("need at least one perturbation")
    base = solve_fde(problem)
    uv = base.solution.values
    lo, hi = float(np.min(uv)), float(np.max(uv))
    pad = 0.1 * (hi - lo + 1.0)
    grid = base.solution.grid
    max_slope = -math.inf
    for t in grid[:: max(1, grid.size // 32)]:
        for x in np.linspace(lo - pad, hi + pad, 9):
            delta = 1e-6 * max(1.0, abs(x))
            slope = (problem.rhs(float(t), float(x + delta))
                     - problem.rhs(float(t), float(x - delta))) / (2 * delta)
            max_slope = max(max_slope, slope)
    if max_slope > 1e-9:
        raise HypothesisViolation(
            f"rhs slope in u reaches {max_slope:.3e} > 0 on the envelope"
        )
    solutions = [uv]
    for k in range(perturbations):
        rng = np.random.default_rng(seed + 1 + k)
        rep = solve_fde(problem, _rng=rng)
        solutions.append(rep.solution.values)
    divergence = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            divergence = max(divergence,
                             float(np.max(np.abs(solutions[i] - solutions[j]))))
    return UniquenessReport(runs=len(solutions), max_divergence=divergence,
                            max_slope=max_slope)


# --- sandwich bounds ------------------------------------------------------------


def sandwich_check(problem: FdeProblem, lower: LinearBound, upper: LinearBound,
                   *, tol: float | None = None) -> SolveReport:
    """Solve u and the two linear comparison problems, then verify enclosure.

    All three solves run without the compatibility correction: the enclosure
    belongs to the equation as written, where incompatible linear bounds jump
    outward at t = a and stay on their side of u.
    """
    grid = problem.grid()
    hv_lo, hv_up = lower.h, upper.h
    for h in (hv_lo, hv_up):
        if h.grid.shape != grid.shape or np.max(np.abs(h.grid - grid)) > 1e-12:
            raise InvalidParam("bound data must live on the problem grid")

    report = solve_fde(problem, compat_correction=False)
    uv = report.solution.values

    # sampled hypothesis: lam2*u + h2 <= f(t,u) <= lam1*u + h1 on the envelope
    lo_env = float(np.min(uv)) - 0.1 * (np.ptp(uv) + 1.0)
    hi_env = float(np.max(uv)) + 0.1 * (np.ptp(uv) + 1.0)
    for idx in range(0, grid.size, max(1, grid.size // 64)):
        t = float(grid[idx])
        for x in np.linspace(lo_env, hi_env, 7):
            fv = problem.rhs(t, float(x))
            upper_rhs = upper.lam * x + hv_up.values[idx]
            lower_rhs = lower.lam * x + hv_lo.values[idx]
            if fv > upper_rhs + 1e-12 * max(1.0, abs(upper_rhs)):
                raise HypothesisViolation(
                    f"rhs exceeds the upper linear bound at t={t:.6g}, u={x:.6g}"
                )
            if fv < lower_rhs - 1e-12 * max(1.0, abs(lower_rhs)):
                raise HypothesisViolation(
                    f"rhs undercuts the lower linear bound at t={t:.6g}, u={x:.6g}"
                )

    def linear_problem(bound: LinearBound) -> FdeProblem:
        hvals = bound.h.values

        def rhs(t: float, v: float, _lam=bound.lam, _h=hvals, _a=grid[0],
                _hstep=grid[1] - grid[0]) -> float:
            idx = int(round((t - _a) / _hstep))
            return _lam * v + float(_h[idx])

        return FdeProblem(spec=problem.spec, rhs=rhs, initial=problem.initial,
                          grid_n=problem.grid_n)

    v_up = solve_fde(linear_problem(upper), compat_correction=False).solution.values
    v_lo = solve_fde(linear_problem(lower), compat_correction=False).solution.values

    if tol is None:
        tol = 1e-7 * max(1.0, float(np.max(np.abs(uv))))
    above = np.nonzero(uv > v_up + tol)[0]
    below = np.nonzero(uv < v_lo - tol)[0]
    bad = int(above.size + below.size)
    if bad:
        first = int(min(above[0] if above.size else grid.size,
                        below[0] if below.size else grid.size))
        raise BoundViolation(
            f"enclosure fails at {bad} nodes, first at index {first} "
            f"(t = {grid[first]:.6g})",
            node=first,
        )
    check = BoundCheck(
        lower=GridFunction(grid=grid, values=v_lo, label="v_lower"),
        upper=GridFunction(grid=grid, values=v_up, label="v_upper"),
        violations=0,
    )
    return SolveReport(solution=report.solution, newton_iters=report.newton_iters,
                       residual_norm=report.residual_norm,
                       compat_gap=report.compat_gap, corrected=False,
                       bound_check=check)
