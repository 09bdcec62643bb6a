"""Implicit solver for the bounded-kernel Caputo-type equation.

The linear oracle: with the exponential kernel (alpha constant, gamma =
beta = 1, M = 1) and compatibility correction on, the equation
D_c u = lam u collapses to the scalar ODE
(1/(1-alpha) - lam ... ) -- worked through: u' = alpha lam u /
(1 - (1-alpha) lam), so u(t) = u0 exp(alpha lam t / (1 - (1-alpha) lam)).
At alpha = 1/2, lam = -1 that is u0 exp(-t/3).
"""

import math

import numpy as np
import pytest

from fracvar import (
    FdeProblem,
    GridFunction,
    LinearBound,
    check_comparison,
    comparison_cases,
    make_special_case,
    sandwich_check,
    solve_fde,
    uniform_grid,
    uniqueness_probe,
)
from fracvar.errors import (
    BoundViolation,
    HypothesisViolation,
    InvalidParam,
    NewtonDivergence,
)

CF = make_special_case("caputo_fabrizio", alpha=0.5, interval=(0.0, 1.0))


def linear_oracle(t, u0=1.0, lam=-1.0, alpha=0.5):
    rate = alpha * lam / (1.0 - (1.0 - alpha) * lam)
    return u0 * np.exp(rate * np.asarray(t))


class TestLinearClosedForm:
    def test_decay_solution(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u, initial=1.0, grid_n=1024)
        report = solve_fde(problem)
        expected = linear_oracle(report.solution.grid)
        assert abs(report.solution.values[-1] - math.exp(-1.0 / 3.0)) < 1e-5
        assert np.max(np.abs(report.solution.values - expected)) < 1e-5
        assert report.corrected

    def test_refinement_improves_by_three(self):
        def err(n):
            problem = FdeProblem(spec=CF, rhs=lambda t, u: -u, initial=1.0, grid_n=n)
            sol = solve_fde(problem).solution
            return np.max(np.abs(sol.values - linear_oracle(sol.grid)))

        assert err(512) < err(256) / 3.0

    def test_zero_rhs_keeps_solution_constant(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: 0.0, initial=0.7, grid_n=64)
        sol = solve_fde(problem).solution
        assert np.max(np.abs(sol.values - 0.7)) < 1e-13

    def test_residual_certification_reported(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u + math.sin(t),
                             initial=0.0, grid_n=256)
        report = solve_fde(problem)
        assert report.residual_norm < 1e-9
        assert int(np.max(report.newton_iters)) <= 5

    def test_deterministic_reruns(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u ** 3 - u,
                             initial=1.0, grid_n=128)
        one = solve_fde(problem).solution.values
        two = solve_fde(problem).solution.values
        assert np.array_equal(one, two)


class TestCompatibilityCorrection:
    def test_raw_mode_jumps_on_incompatible_data(self):
        # f(a, u0) = -1 != 0: the discrete equation as written forces an
        # immediate drop toward 2/3 of u0 on the first node
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u, initial=1.0, grid_n=512)
        raw = solve_fde(problem, compat_correction=False)
        corrected = solve_fde(problem)
        assert raw.solution.values[1] < 0.75
        assert corrected.solution.values[1] > 0.95
        assert not raw.corrected
        assert raw.compat_gap == pytest.approx(1.0)

    def test_modes_agree_for_compatible_data(self):
        # u0 = 0 and f(a, 0) = 0: nothing to correct
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u + t, initial=0.0,
                             grid_n=256)
        raw = solve_fde(problem, compat_correction=False).solution.values
        cor = solve_fde(problem).solution.values
        assert np.max(np.abs(raw - cor)) < 1e-12
        assert solve_fde(problem).compat_gap == 0.0


class TestValidationAndFailure:
    def test_grid_floor(self):
        with pytest.raises(InvalidParam):
            FdeProblem(spec=CF, rhs=lambda t, u: -u, initial=1.0, grid_n=8)

    def test_rhs_must_be_finite(self):
        with pytest.raises(InvalidParam):
            FdeProblem(spec=CF, rhs=lambda t, u: float("nan"), initial=1.0,
                       grid_n=64)

    def test_discontinuous_rhs_fails_certification(self):
        # a jump in u leaves no root for the implicit step; the safeguarded
        # search lands on the jump and the residual check must refuse it
        problem = FdeProblem(spec=CF,
                             rhs=lambda t, u: 10.0 if u < 0.5 else -10.0,
                             initial=0.0, grid_n=64)
        with pytest.raises(NewtonDivergence):
            solve_fde(problem)


class TestComparison:
    def test_negative_constant_is_applicable_and_clean(self):
        grid = uniform_grid(0.0, 1.0, 128)
        u = GridFunction(grid=grid, values=np.full(grid.size, -1.0),
                         derivs=np.zeros(grid.size))
        q = GridFunction(grid=grid, values=np.ones(grid.size))
        report = check_comparison(CF, u, q)
        assert report.applicable
        assert report.violations == 0

    def test_positive_function_fails_the_inequality_hypothesis(self):
        grid = uniform_grid(0.0, 1.0, 128)
        u = GridFunction(grid=grid, values=np.ones(grid.size),
                         derivs=np.zeros(grid.size))
        q = GridFunction(grid=grid, values=np.ones(grid.size))
        report = check_comparison(CF, u, q)
        assert not report.applicable

    def test_q_hypotheses_enforced(self):
        grid = uniform_grid(0.0, 1.0, 128)
        u = GridFunction(grid=grid, values=-np.ones(grid.size),
                         derivs=np.zeros(grid.size))
        with pytest.raises(HypothesisViolation):
            check_comparison(CF, u, GridFunction(grid=grid,
                                                 values=-np.ones(grid.size)))
        q0 = np.ones(grid.size)
        q0[0] = 0.0
        with pytest.raises(HypothesisViolation):
            check_comparison(CF, u, GridFunction(grid=grid, values=q0))

    def test_generated_cases_never_violate(self):
        clean = 0
        for u, q in comparison_cases(CF, n=256, count=25, seed=3):
            report = check_comparison(CF, u, q)
            assert report.applicable
            assert report.violations == 0
            clean += 1
        assert clean == 25

    def test_generator_is_deterministic(self):
        first = [u.values.copy() for u, _ in comparison_cases(CF, n=128, count=3,
                                                              seed=11)]
        second = [u.values.copy() for u, _ in comparison_cases(CF, n=128, count=3,
                                                               seed=11)]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)


class TestUniqueness:
    def test_dissipative_rhs_reconverges(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u ** 3 - u,
                             initial=1.0, grid_n=256)
        report = uniqueness_probe(problem, perturbations=4, seed=0)
        assert report.runs == 5
        assert report.max_divergence < 1e-8
        assert report.max_slope <= 1e-9

    def test_increasing_rhs_rejected(self):
        problem = FdeProblem(spec=CF, rhs=lambda t, u: u, initial=1.0,
                             grid_n=64)
        with pytest.raises(HypothesisViolation):
            uniqueness_probe(problem, perturbations=2, seed=0)


class TestSandwich:
    def test_degenerate_bounds_pin_the_solution(self):
        # rhs is itself linear: both comparison problems are the original
        # problem, so the enclosure is equality
        grid = uniform_grid(0.0, 1.0, 256)
        h = GridFunction(grid=grid, values=0.3 * np.cos(grid))
        problem = FdeProblem(spec=CF,
                             rhs=lambda t, u: -u + 0.3 * math.cos(t),
                             initial=0.2, grid_n=256)
        report = sandwich_check(problem, LinearBound(-1.0, h), LinearBound(-1.0, h))
        assert report.bound_check.violations == 0
        gap = np.max(np.abs(report.bound_check.upper.values
                            - report.bound_check.lower.values))
        assert gap < 1e-12
        assert np.max(np.abs(report.solution.values
                             - report.bound_check.upper.values)) < 1e-9

    def test_proper_enclosure(self):
        grid = uniform_grid(0.0, 1.0, 512)
        up = GridFunction(grid=grid, values=np.full(grid.size, 0.5))
        lo = GridFunction(grid=grid, values=np.full(grid.size, -0.5))
        problem = FdeProblem(spec=CF,
                             rhs=lambda t, u: -u + 0.5 * math.sin(t),
                             initial=0.0, grid_n=512)
        report = sandwich_check(problem, LinearBound(-1.0, lo), LinearBound(-1.0, up))
        assert report.bound_check.violations == 0
        assert np.all(report.bound_check.upper.values
                      >= report.solution.values - 1e-9)

    def test_rhs_outside_the_corridor_is_a_hypothesis_violation(self):
        grid = uniform_grid(0.0, 1.0, 64)
        up = GridFunction(grid=grid, values=np.zeros(grid.size))
        lo = GridFunction(grid=grid, values=np.full(grid.size, -1.0))
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u + 1.0,
                             initial=0.0, grid_n=64)
        with pytest.raises(HypothesisViolation):
            sandwich_check(problem, LinearBound(-1.0, lo), LinearBound(-1.0, up))

    def test_lam_must_be_negative(self):
        grid = uniform_grid(0.0, 1.0, 64)
        h = GridFunction(grid=grid, values=np.zeros(grid.size))
        with pytest.raises(InvalidParam):
            LinearBound(0.0, h)

    def test_bound_grid_must_match(self):
        h = GridFunction(grid=uniform_grid(0.0, 1.0, 32),
                         values=np.zeros(33))
        problem = FdeProblem(spec=CF, rhs=lambda t, u: -u, initial=0.0,
                             grid_n=64)
        with pytest.raises(InvalidParam):
            sandwich_check(problem, LinearBound(-1.0, h), LinearBound(-1.0, h))
