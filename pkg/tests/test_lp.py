"""Simplex solver tests against hand solutions and vertex enumeration."""

import numpy as np
import pytest

from fairseal.errors import InfeasibleError, UnboundedProgramError
from fairseal.lp import solve_linear_program

from oracles import enumerate_vertices


def box_rows(dim, lo=0.0, hi=1.0):
    rows = []
    rhs = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        rows.append(-e)
        rhs.append(-lo)
        rows.append(e)
        rhs.append(hi)
    return np.array(rows), np.array(rhs)


def test_simple_maximization():
    # min -x subject to x <= 3 (and x >= 0)
    a_ub = np.array([[1.0], [-1.0]])
    b_ub = np.array([3.0, 0.0])
    x = solve_linear_program(np.array([-1.0]), np.zeros((0, 1)), np.zeros(0), a_ub, b_ub)
    assert x[0] == pytest.approx(3.0, abs=1e-12)


def test_two_variable_known_optimum():
    # min -(2x + 3y) s.t. x + y <= 4, x <= 2, y <= 3  ->  (1, 3)
    c = np.array([-2.0, -3.0])
    a_ub = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b_ub = np.array([4.0, 2.0, 3.0, 0.0, 0.0])
    x = solve_linear_program(c, np.zeros((0, 2)), np.zeros(0), a_ub, b_ub)
    assert c @ x == pytest.approx(-11.0, abs=1e-10)
    np.testing.assert_allclose(x, [1.0, 3.0], atol=1e-10)


def test_equality_constraint():
    # min x + y subject to x + y = 1 inside the unit box
    a_ub, b_ub = box_rows(2)
    x = solve_linear_program(np.array([1.0, 1.0]), np.array([[1.0, 1.0]]), np.array([1.0]), a_ub, b_ub)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)


def test_infeasible_detected():
    a_ub, b_ub = box_rows(2)
    with pytest.raises(InfeasibleError):
        solve_linear_program(
            np.zeros(2), np.array([[1.0, 1.0]]), np.array([5.0]), a_ub, b_ub
        )


def test_unbounded_detected():
    with pytest.raises(UnboundedProgramError):
        solve_linear_program(np.array([-1.0]), np.zeros((0, 1)), np.zeros(0), np.array([[-1.0]]), np.array([0.0]))


def test_degenerate_redundant_rows():
    # Duplicated constraints must not break termination (anti-cycling).
    a_ub, b_ub = box_rows(3)
    a_ub = np.vstack([a_ub, a_ub])
    b_ub = np.concatenate([b_ub, b_ub])
    a_eq = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    b_eq = np.array([1.5, 1.5])
    x = solve_linear_program(np.array([0.0, -1.0, 1.0]), a_eq, b_eq, a_ub, b_ub)
    assert x.sum() == pytest.approx(1.5, abs=1e-10)
    assert x[1] == pytest.approx(1.0, abs=1e-10)


def test_matches_vertex_enumeration_on_random_programs():
    """Simplex optimum equals the best vertex on random 4-variable programs."""
    rng = np.random.default_rng(12)
    a_ub, b_ub = box_rows(4)
    for trial in range(60):
        c = rng.normal(size=4)
        a_eq = rng.normal(size=(2, 4))
        # random feasible interior point keeps the program feasible
        x0 = rng.uniform(0.2, 0.8, size=4)
        b_eq = a_eq @ x0
        x = solve_linear_program(c, a_eq, b_eq, a_ub, b_ub)
        assert (a_ub @ x <= b_ub + 1e-9).all()
        np.testing.assert_allclose(a_eq @ x, b_eq, atol=1e-9)
        vertices = enumerate_vertices(a_eq, b_eq, a_ub, b_ub)
        assert vertices, "vertex oracle found nothing"
        best = min(v @ c for v in vertices)
        assert c @ x == pytest.approx(best, abs=1e-9)
