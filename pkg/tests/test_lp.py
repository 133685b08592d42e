import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import vertex_enum_max
from yann.lp import (LpProblem, LpResult, LpStatus, chebyshev_center,
                     is_empty, solve_lp)
from yann.pwa import Halfspace, box_halfspaces


def H(coeffs, offset):
    return Halfspace(np.asarray(coeffs, dtype=float), offset)


class TestSolveExamples:
    def test_bounded_1d(self):
        res = solve_lp(LpProblem([1.0], [H([1.0], 3.0), H([-1.0], 0.0)]))
        assert res.status is LpStatus.OPTIMAL
        assert res.value == pytest.approx(3.0, abs=1e-8)
        assert res.point == pytest.approx([3.0], abs=1e-8)

    def test_infeasible(self):
        # x <= -1 together with x >= 2
        res = solve_lp(LpProblem([1.0], [H([1.0], -1.0), H([-1.0], -2.0)]))
        assert res.status is LpStatus.INFEASIBLE
        assert res.value is None and res.point is None

    def test_unit_box_corner(self):
        res = solve_lp(LpProblem([1.0, 1.0], box_halfspaces([0, 0], [1, 1])))
        assert res.status is LpStatus.OPTIMAL
        assert res.value == pytest.approx(2.0, abs=1e-8)

    def test_unbounded(self):
        res = solve_lp(LpProblem([1.0], [H([-1.0], 0.0)]))
        assert res.status is LpStatus.UNBOUNDED

    def test_negative_orthant_needs_phase1(self):
        # optimum at x = (-2, -3), both coordinates negative
        cons = box_halfspaces([-5, -5], [-2, -3])
        res = solve_lp(LpProblem([1.0, 1.0], cons))
        assert res.status is LpStatus.OPTIMAL
        assert res.point == pytest.approx([-2.0, -3.0], abs=1e-8)

    def test_optimal_point_feasible_and_consistent(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(1, 5))
            cons = box_halfspaces(-rng.uniform(1, 3, n), rng.uniform(1, 3, n))
            cons += [H(rng.standard_normal(n), rng.uniform(0.5, 2.0))
                     for _ in range(4)]
            c = rng.standard_normal(n)
            res = solve_lp(LpProblem(c, cons))
            if res.status is not LpStatus.OPTIMAL:
                continue
            A = np.array([h.coeffs for h in cons])
            b = np.array([h.offset for h in cons])
            assert np.all(A @ res.point <= b + 1e-8)
            assert res.value == pytest.approx(float(c @ res.point), abs=1e-8)

    def test_dantzig_matches_bland(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            cons = box_halfspaces(-np.ones(n), np.ones(n))
            cons += [H(rng.standard_normal(n), rng.uniform(0.2, 1.5))
                     for _ in range(3)]
            c = rng.standard_normal(n)
            a = solve_lp(LpProblem(c, cons), pivot_rule="bland")
            d = solve_lp(LpProblem(c, cons), pivot_rule="dantzig")
            assert a.status is d.status is LpStatus.OPTIMAL
            assert a.value == pytest.approx(d.value, abs=1e-8)


class TestVertexEnumerationOracle:
    """Duality spot-check: simplex against brute-force vertex enumeration."""

    @pytest.mark.parametrize("seed", range(8))
    def test_random_bounded_lps(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        cons = box_halfspaces(-rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n))
        cons += [H(rng.standard_normal(n), rng.uniform(0.3, 2.0))
                 for _ in range(n + 2)]
        c = rng.standard_normal(n)
        res = solve_lp(LpProblem(c, cons))
        assert res.status is LpStatus.OPTIMAL
        brute = vertex_enum_max(c, cons)
        assert brute is not None
        assert res.value == pytest.approx(brute[0], abs=1e-6)


class TestDeterminism:
    def test_identical_bits(self):
        rng = np.random.default_rng(5)
        cons = box_halfspaces(-np.ones(3), np.ones(3))
        cons += [H(rng.standard_normal(3), 0.7) for _ in range(5)]
        c = rng.standard_normal(3)
        first = solve_lp(LpProblem(c, cons))
        second = solve_lp(LpProblem(c, cons))
        assert first.value == second.value  # exact, not approx
        assert np.array_equal(first.point, second.point)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
           st.floats(0.5, 3.0))
    def test_deterministic_under_hypothesis(self, direction, half_width):
        if abs(direction[0]) + abs(direction[1]) < 1e-3:
            return
        cons = box_halfspaces([-half_width] * 2, [half_width] * 2)
        a = solve_lp(LpProblem(direction, cons))
        b = solve_lp(LpProblem(direction, cons))
        assert a.status is b.status
        assert a.value == b.value


class TestIsEmpty:
    def test_nonempty_interval(self):
        assert not is_empty([H([1.0], 1.0), H([-1.0], 0.0)])

    def test_empty_interval(self):
        # x <= 0 and x >= 1
        assert is_empty([H([1.0], 0.0), H([-1.0], -1.0)])

    def test_generated_regions_nonempty(self):
        from yann.synth import generate_max_affine
        f = generate_max_affine(7, 3, 20, (-2.0, 2.0))
        for region in f.regions:
            assert not is_empty(region.halfspaces)


class TestChebyshevCenter:
    def test_unit_box(self):
        center, radius = chebyshev_center(box_halfspaces([0, 0], [1, 1]))
        assert radius == pytest.approx(0.5, abs=1e-8)
        assert center == pytest.approx([0.5, 0.5], abs=1e-6)

    def test_empty_polytope(self):
        assert chebyshev_center([H([1.0], 0.0), H([-1.0], -1.0)]) is None

    def test_unbounded_capped(self):
        result = chebyshev_center([H([-1.0, 0.0], 0.0)], r_cap=10.0)
        assert result is not None
        assert result[1] == pytest.approx(10.0, abs=1e-6)
