import numpy as np
import pytest
import scipy.optimize

from toeplitz_omt.clustering import (
    barycenter_tk,
    classify,
    comparison_barycenter,
    comparison_cost,
    kmeans,
    kmeans_comparison,
    normalized_distance_table,
    tk_distance_table,
)
from toeplitz_omt.errors import ValidationError
from toeplitz_omt.signals import rng_from_seed
from toeplitz_omt.spectral import DiscreteSpectrum, FrequencyGrid, ToeplitzCov, gamma_apply, realify_lags
from toeplitz_omt.transport import CHORDAL2, build_cost_matrix, compute_T_kappa, lag_moment_rows

GRID = FrequencyGrid(16)


def inputs(seed, L, n=2):
    """Covariances of sparse spectra on ``GRID``, so every distance is feasible there."""
    rng = rng_from_seed(seed)
    out = []
    for _ in range(L):
        m = rng.random(GRID.N) * (rng.random(GRID.N) < 0.4)
        m[rng.integers(GRID.N)] += 1.0
        out.append(gamma_apply(DiscreteSpectrum(GRID, m), n))
    return out


def highs_barycenter(Rs, grid, kappa):
    """Joint barycenter LP with exact moments, assembled densely."""
    N, L = grid.N, len(Rs)
    F = lag_moment_rows(grid, Rs[0].n)
    p = F.shape[0]
    C = build_cost_matrix(grid, CHORDAL2).ravel()
    rowsum, colsum = np.kron(F, np.ones(N)), np.kron(np.ones(N), F)
    nv = L * (N * N + 2 * N)

    def block(l, part):
        out = np.zeros((p, nv))
        base = l * (N * N + 2 * N)
        if part == "phi":
            out[:, base: base + N * N] = rowsum
            out[:, base + N * N: base + N * N + N] = F
        else:
            out[:, base: base + N * N] = colsum
            out[:, base + N * N + N: base + N * N + 2 * N] = F
        return out

    rows = [block(l, "phi") - block(0, "phi") for l in range(1, L)]
    rows += [block(l, "psi") for l in range(L)]
    b = np.concatenate([np.zeros(p * (L - 1))] + [realify_lags(R.lags) for R in Rs])
    c = np.tile(np.concatenate([C, np.full(2 * N, kappa)]), L)
    res = scipy.optimize.linprog(c, A_eq=np.vstack(rows), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


class TestBarycenter:
    def test_single_input_is_itself(self):
        (R,) = inputs(0, 1)
        res = barycenter_tk([R], GRID, kappa=5.0, feas_tol=0.0)
        assert res.objective == pytest.approx(0.0, abs=1e-8)
        np.testing.assert_allclose(res.R.lags, R.lags, atol=1e-7)

    def test_identical_inputs(self):
        (R,) = inputs(1, 1)
        res = barycenter_tk([R, R, R], GRID, kappa=5.0, feas_tol=0.0)
        assert res.objective == pytest.approx(0.0, abs=1e-7)

    @pytest.mark.parametrize("kappa", [0.5, 5.0])
    def test_against_highs(self, kappa):
        g = FrequencyGrid(8)
        Rs = inputs(2, 3)
        res = barycenter_tk(Rs, g, kappa=kappa, feas_tol=0.0)
        assert res.objective == pytest.approx(highs_barycenter(Rs, g, kappa), rel=1e-6, abs=1e-9)

    def test_objective_is_sum_of_distances(self):
        Rs = inputs(3, 3)
        res = barycenter_tk(Rs, GRID, kappa=2.0, feas_tol=0.0)
        total = sum(compute_T_kappa(res.R, R, GRID, kappa=2.0, feas_tol=0.0).value for R in Rs)
        assert res.objective == pytest.approx(total, rel=1e-6, abs=1e-8)
        # any input is a candidate barycenter
        best_input = min(sum(compute_T_kappa(Rj, R, GRID, kappa=2.0, feas_tol=0.0).value for R in Rs)
                         for Rj in Rs)
        assert res.objective <= best_input + 1e-7

    def test_barycenter_is_psd_toeplitz(self):
        res = barycenter_tk(inputs(4, 4, n=3), GRID, kappa=5.0)
        assert np.linalg.eigvalsh(res.R.matrix()).min() >= -1e-9

    def test_validation(self):
        with pytest.raises(ValidationError):
            barycenter_tk([], GRID)
        with pytest.raises(ValidationError):
            barycenter_tk([ToeplitzCov([1.0]), ToeplitzCov([1.0, 0.0])], GRID)
        with pytest.raises(ValidationError):
            barycenter_tk(inputs(5, 2), GRID, kappa=0.0)


class TestClassify:
    def test_nearest_and_ties(self):
        A, B = inputs(6, 2)
        assert classify(A, [B, A], GRID) == 1
        assert classify(A, [A, A], GRID) == 0

    def test_table_matches_pairwise(self):
        Rs = inputs(7, 3)
        D = tk_distance_table(Rs, Rs[:2], GRID, workers=1)
        assert D.shape == (3, 2)
        assert D[2, 1] == pytest.approx(compute_T_kappa(Rs[2], Rs[1], GRID).value)

    def test_needs_barycenters(self):
        with pytest.raises(ValidationError):
            classify(inputs(8, 1)[0], [], GRID)

    def test_normalized_table(self):
        D = np.array([[2.0, 4.0, 3.0], [0.0, 1.0, 2.0]])
        np.testing.assert_allclose(normalized_distance_table(D), [[1.0, 2.0, 1.5], [0.0, 1.0, 2.0]])


class TestKmeans:
    def test_one_cluster(self):
        Rs = inputs(9, 3)
        model = kmeans(Rs, 1, GRID, n_restarts=1, feas_tol=0.0)
        assert model.assignments.tolist() == [0, 0, 0]
        expected = barycenter_tk(Rs, GRID, feas_tol=0.0).objective
        assert model.total_cost == pytest.approx(expected, rel=1e-6, abs=1e-8)

    def test_every_input_own_cluster(self):
        Rs = inputs(10, 3)
        model = kmeans(Rs, 3, GRID, n_restarts=2)
        assert sorted(model.assignments.tolist()) == [0, 1, 2]
        assert model.total_cost == pytest.approx(0.0, abs=1e-6)

    def test_history_monotone_and_restart_choice(self):
        Rs = inputs(11, 5)
        model = kmeans(Rs, 2, GRID, n_restarts=3, init_seed=4)
        h = np.array(model.history)
        assert np.all(np.diff(h) <= 1e-6 * (1 + h[:-1]))
        assert model.total_cost == min(model.restart_costs)
        assert len(model.restart_costs) == 3

    def test_deterministic(self):
        Rs = inputs(12, 4)
        a = kmeans(Rs, 2, GRID, n_restarts=2, init_seed=1)
        b = kmeans(Rs, 2, GRID, n_restarts=2, init_seed=1)
        assert a.assignments.tolist() == b.assignments.tolist()
        assert a.total_cost == b.total_cost

    def test_normalize_flag(self):
        Rs = [R.scaled(s) for R, s in zip(inputs(13, 2), (1.0, 10.0))]
        model = kmeans(Rs, 1, GRID, n_restarts=1, normalize=True)
        assert all(abs(B.r0 - 1) < 1e-6 for B in model.barycenters)

    @pytest.mark.parametrize("K", [0, 4, 1.5])
    def test_bad_k(self, K):
        with pytest.raises(ValidationError):
            kmeans(inputs(14, 3), K, GRID)

    def test_to_dict(self):
        d = kmeans(inputs(15, 2), 1, GRID, n_restarts=1).to_dict()
        assert d["metric"] == "tk" and len(d["normalized_distances"]) == 2


class TestComparison:
    def test_euclidean_single_cluster_is_mean(self):
        Rs = inputs(16, 4)
        model = kmeans_comparison(Rs, 1, "euclidean", n_restarts=1)
        np.testing.assert_allclose(model.barycenters[0], sum(R.matrix() for R in Rs) / 4, atol=1e-12)

    @pytest.mark.parametrize("metric", ["euclidean", "log_euclidean", "kl", "ellipticity"])
    def test_barycenter_minimizes_its_cost(self, metric, rng):
        Rs = [R.matrix() + 0.5 * np.eye(2) for R in inputs(17, 3)]
        B = comparison_barycenter(metric, Rs)
        base = sum(comparison_cost(metric, R, B) for R in Rs)
        for _ in range(5):
            G = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            P = B + 1e-3 * (G + G.conj().T)
            assert sum(comparison_cost(metric, R, P) for R in Rs) >= base - 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_best_restart_reported(self, seed):
        Rs = inputs(20 + seed, 6)
        model = kmeans_comparison(Rs, 2, "log_euclidean", init_seed=seed)
        assert model.total_cost == min(model.restart_costs)
        h = np.array(model.history)
        assert np.all(np.diff(h) <= 1e-9 * (1 + h[:-1]))

    def test_unknown_metric(self):
        with pytest.raises(ValidationError):
            kmeans_comparison(inputs(18, 2), 1, "cosine")
        with pytest.raises(ValidationError):
            comparison_cost("cosine", np.eye(2), np.eye(2))
