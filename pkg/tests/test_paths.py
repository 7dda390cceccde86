import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings, strategies as st

from toeplitz_omt.errors import ValidationError
from toeplitz_omt.paths import (
    CovariancePath,
    displacement,
    euclidean_kkt_residual,
    fit_euclidean_path,
    fit_log_euclidean_path,
    interpolate,
    interpolate_with_mass_terms,
    psd_projection,
    track,
    tracking_objective,
)
from toeplitz_omt.signals import random_toeplitz_psd, rng_from_seed
from toeplitz_omt.spectral import DiscreteSpectrum, FrequencyGrid, ToeplitzCov, TransportPlan
from toeplitz_omt.transport import compute_T, compute_T_kappa


def random_plan(rng, N):
    return TransportPlan(FrequencyGrid(N), rng.random((N, N)) * (rng.random((N, N)) < 0.3))


class TestDisplacement:
    def test_half_turn_goes_positive(self):
        g = FrequencyGrid(8)
        D = displacement(g)
        assert D[0, 4] == pytest.approx(np.pi)
        assert D[4, 0] == pytest.approx(np.pi)
        assert np.all(D > -np.pi) and np.all(D <= np.pi)

    def test_shorter_arc(self):
        g = FrequencyGrid(8)
        D = displacement(g)
        assert D[0, 7] == pytest.approx(-np.pi / 4)
        np.testing.assert_allclose(np.diag(D), 0.0)


class TestInterpolation:
    def test_endpoints_reproduce_inputs(self):
        rng = rng_from_seed(0)
        R0 = random_toeplitz_psd(rng, 3)
        R1 = random_toeplitz_psd(rng, 3, r0=R0.r0)
        res = compute_T(R0, R1, FrequencyGrid(64), feas_tol=0.0)
        np.testing.assert_allclose(interpolate(res.plan, 3, 0.0).lags, R0.lags, atol=1e-8)
        np.testing.assert_allclose(interpolate(res.plan, 3, 1.0).lags, R1.lags, atol=1e-8)

    def test_single_atom_moves_along_arc(self):
        g = FrequencyGrid(8)
        M = np.zeros((8, 8))
        M[1, 3] = 2 * np.pi
        R = interpolate(TransportPlan(g, M), 2, 0.5)
        mid = g.nodes[1] + 0.5 * (g.nodes[3] - g.nodes[1])
        assert R.lags[1] == pytest.approx(np.exp(-1j * mid))

    @settings(max_examples=15)
    @given(st.integers(0, 10_000), st.floats(-1.0, 2.0))
    def test_psd_toeplitz_constant_diagonal(self, seed, tau):
        rng = rng_from_seed(seed)
        plan = random_plan(rng, 12)
        R = interpolate(plan, 4, tau)
        assert R.r0 == pytest.approx(plan.mass.sum() / (2 * np.pi))
        assert np.linalg.eigvalsh(R.matrix()).min() >= -1e-10 * (1 + R.r0)

    def test_mass_terms_fade_linearly(self):
        rng = rng_from_seed(1)
        R0, R1 = random_toeplitz_psd(rng, 3), random_toeplitz_psd(rng, 3)
        res = compute_T_kappa(R0, R1, FrequencyGrid(32), kappa=1.0, feas_tol=0.0)
        ends = [interpolate_with_mass_terms(res.plan, res.psi0, res.psi1, 3, t) for t in (0.0, 1.0)]
        np.testing.assert_allclose(ends[0].lags, R0.lags, atol=1e-7)
        np.testing.assert_allclose(ends[1].lags, R1.lags, atol=1e-7)
        mid = interpolate_with_mass_terms(res.plan, res.psi0, res.psi1, 3, 0.5)
        assert np.linalg.eigvalsh(mid.matrix()).min() >= -1e-10

    def test_mass_terms_need_shared_grid(self):
        plan = TransportPlan(FrequencyGrid(4), np.eye(4))
        other = DiscreteSpectrum(FrequencyGrid(8), np.ones(8))
        with pytest.raises(ValidationError):
            interpolate_with_mass_terms(plan, other, other, 2, 0.5)

    def test_path_container(self, tmp_path):
        plan = random_plan(rng_from_seed(2), 8)
        path = CovariancePath.evaluate(plan, 3, [0.0, 0.5, 1.0])
        assert len(path.matrices) == 3
        vals = path.correlograms(np.linspace(-np.pi, np.pi, 5))
        assert vals.shape == (3, 5)
        path.write_csv(tmp_path / "p.csv", np.linspace(-np.pi, np.pi, 5))
        assert len((tmp_path / "p.csv").read_text().splitlines()) == 1 + 15
        with pytest.raises(ValidationError):
            CovariancePath.evaluate(plan, 3, [0.0], psi0=DiscreteSpectrum(plan.grid, np.ones(8)))


class TestTrack:
    def estimates(self, seed=3, n=2):
        rng = rng_from_seed(seed)
        R0 = random_toeplitz_psd(rng, n)
        R1 = random_toeplitz_psd(rng, n, r0=R0.r0)
        return [(0.0, R0), (0.5, random_toeplitz_psd(rng, n, r0=R0.r0)), (1.0, R1)]

    def test_objective_matches_direct_evaluation(self):
        est = self.estimates()
        res = track(est, FrequencyGrid(16), lam=0.5)
        assert res.objective == pytest.approx(tracking_objective(res.plan, est, lam=0.5), rel=1e-9)

    def test_against_lbfgsb(self):
        est = self.estimates(4)
        g = FrequencyGrid(6)
        res = track(est, g, lam=1.0, tol=1e-10)

        def f(v):
            return tracking_objective(TransportPlan(g, v.reshape(6, 6)), est, lam=1.0)

        ref = scipy.optimize.minimize(f, np.full(36, 0.1), method="L-BFGS-B", bounds=[(0, None)] * 36,
                                      options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 20000})
        assert res.objective <= ref.fun + 1e-6 * (1 + ref.fun)
        assert res.objective == pytest.approx(ref.fun, rel=1e-5)

    def test_dense_estimates_add_constant(self):
        est = self.estimates(5)
        H = est[1][1].matrix() + 0.1 * np.diag([1.0, -1.0])
        dense = [est[0], (0.5, H), est[2]]
        res = track(dense, FrequencyGrid(8), lam=1.0)
        assert res.objective == pytest.approx(tracking_objective(res.plan, dense, lam=1.0), rel=1e-8)

    @pytest.mark.parametrize("bad", [[], [(0.0, ToeplitzCov([1.0])), (0.0, ToeplitzCov([1.0]))]])
    def test_validation(self, bad):
        with pytest.raises(ValidationError):
            track(bad, FrequencyGrid(4))

    def test_bad_lambda(self):
        with pytest.raises(ValidationError):
            track(self.estimates(), FrequencyGrid(4), lam=0.0)


class TestLineFits:
    def test_unconstrained_case_is_exact(self):
        rng = rng_from_seed(6)
        A, B = (random_toeplitz_psd(rng, 3).matrix() + np.eye(3) for _ in range(2))
        est = [(t, (1 - t) * A + t * B) for t in (0.0, 0.3, 0.7, 1.0)]
        fit = fit_euclidean_path(est)
        np.testing.assert_allclose(fit.R0, A, atol=1e-8)
        np.testing.assert_allclose(fit.at(0.3), est[1][1], atol=1e-8)
        assert fit.objective == pytest.approx(0.0, abs=1e-12)

    def test_constrained_fit_kkt_and_oracle(self):
        rng = np.random.default_rng(7)
        n = 2
        est = []
        for t in (0.0, 0.5, 1.0, 1.5):
            G = rng.standard_normal((n, n))
            est.append((t, G + G.T))  # indefinite targets force the constraint
        fit = fit_euclidean_path(est, tol=1e-12)
        assert euclidean_kkt_residual(est, fit) <= 1e-6
        assert np.linalg.eigvalsh(fit.R0).min() >= -1e-12

        def obj(v):
            L0, L1 = v[:4].reshape(2, 2), v[4:].reshape(2, 2)
            P0, P1 = L0 @ L0.T, L1 @ L1.T
            return sum(np.linalg.norm((1 - t) * P0 + t * P1 - X) ** 2 for t, X in est)

        best = min(scipy.optimize.minimize(obj, rng.standard_normal(8), method="BFGS",
                                           options={"gtol": 1e-10}).fun for _ in range(10))
        assert fit.objective <= best + 1e-7
        assert fit.objective == pytest.approx(best, rel=1e-5, abs=1e-8)

    def test_log_euclidean_commuting(self):
        # diagonal inputs on an exact log-line are recovered exactly
        a, b = np.array([1.0, 2.0]), np.array([3.0, 0.5])
        est = [(t, np.diag(np.exp((1 - t) * np.log(a) + t * np.log(b)))) for t in (0.0, 0.4, 1.0)]
        fit = fit_log_euclidean_path(est)
        np.testing.assert_allclose(fit.R0, np.diag(a), atol=1e-10)
        np.testing.assert_allclose(fit.R1, np.diag(b), atol=1e-10)
        np.testing.assert_allclose(fit.at(0.4), est[1][1], atol=1e-10)

    def test_needs_two_times(self):
        with pytest.raises(ValidationError):
            fit_euclidean_path([(0.5, np.eye(2)), (0.5, np.eye(2))])
        with pytest.raises(ValidationError):
            fit_log_euclidean_path([(0.0, np.eye(2))])

    def test_psd_projection(self):
        P = psd_projection(np.diag([2.0, -1.0]))
        np.testing.assert_allclose(P, np.diag([2.0, 0.0]), atol=1e-14)
