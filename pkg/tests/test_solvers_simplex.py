import numpy as np
import pytest

from oracles import lp_vertex_enumeration, random_bounded_lp
from toeplitz_omt.solvers.lp import DenseOperator
from toeplitz_omt.solvers.report import INFEASIBLE, OPTIMAL, UNBOUNDED
from toeplitz_omt.solvers.simplex import crossover, simplex_dense


class TestSimplex:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_vertex_enumeration(self, seed):
        rng = np.random.default_rng(100 + seed)
        c, A, b = random_bounded_lp(rng, 3, 9)
        ref, _ = lp_vertex_enumeration(c, A, b)
        res = simplex_dense(c, A, b)
        assert res.status == OPTIMAL
        assert c @ res.x == pytest.approx(ref, abs=1e-9)
        # a vertex: at most E nonzeros
        assert np.count_nonzero(res.x > 1e-12) <= 3
        assert b @ res.y == pytest.approx(ref, abs=1e-8)

    def test_negative_rhs(self):
        rng = np.random.default_rng(9)
        c, A, b = random_bounded_lp(rng, 3, 7)
        ref = simplex_dense(c, A, b)
        flip = simplex_dense(c, -A, -b)
        assert c @ flip.x == pytest.approx(c @ ref.x)
        np.testing.assert_allclose(flip.y, -ref.y, atol=1e-9)

    def test_redundant_row(self):
        rng = np.random.default_rng(10)
        c, A, b = random_bounded_lp(rng, 3, 7)
        A2, b2 = np.vstack([A, 2 * A[0]]), np.append(b, 2 * b[0])
        res = simplex_dense(c, A2, b2)
        assert res.status == OPTIMAL
        assert c @ res.x == pytest.approx(lp_vertex_enumeration(c, A, b)[0], abs=1e-9)

    def test_infeasible(self):
        assert simplex_dense([1.0, 1.0], [[1.0, 1.0]], [-1.0]).status == INFEASIBLE

    def test_unbounded(self):
        assert simplex_dense([-1.0, 0.0], [[1.0, -1.0]], [0.0]).status == UNBOUNDED

    def test_degenerate_transport(self):
        # 3x3 assignment problem, highly degenerate
        C = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
        A = np.vstack([np.kron(np.eye(3), np.ones(3)), np.kron(np.ones(3), np.eye(3))])
        res = simplex_dense(C.ravel(), A, np.ones(6))
        assert res.status == OPTIMAL
        assert C.ravel() @ res.x == pytest.approx(5.0)


class TestCrossover:
    def test_from_interior_point(self):
        rng = np.random.default_rng(12)
        c, A, b = random_bounded_lp(rng, 3, 10)
        ref, _ = lp_vertex_enumeration(c, A, b)
        # a strictly positive, slightly suboptimal starting point
        x0 = np.full(10, 0.1)
        z0 = np.full(10, 0.1)
        x, y, status = crossover(DenseOperator(A), c, b, x0, z0)
        assert status == OPTIMAL
        assert c @ x == pytest.approx(ref, abs=1e-8)
        np.testing.assert_allclose(A @ x, b, atol=1e-9)
