import json

import numpy as np
import pytest

from toeplitz_omt import demos
from toeplitz_omt.signals import ula_covariance


class TestHelpers:
    def test_same_partition(self):
        assert demos.same_partition([0, 0, 1, 2], [2, 2, 0, 1])
        assert not demos.same_partition([0, 0, 1, 2], [0, 1, 1, 2])
        assert not demos.same_partition([0, 0, 1, 1], [0, 0, 0, 0])

    def test_is_exact_toeplitz(self):
        from scipy.linalg import toeplitz

        T = toeplitz([1.0, 0.5j, 0.1], [1.0, -0.5j, 0.1])
        assert demos.is_exact_toeplitz(T)
        T[2, 1] += 1e-15
        assert not demos.is_exact_toeplitz(T)

    def test_rank_one_pair(self):
        R0, R1 = demos.rank_one_pair(0.5)
        assert R0.lags[1] == 0.5
        assert R1.lags[1] == pytest.approx(0.5 * np.exp(5j * np.pi / 6))

    def test_separated_reference_endpoints(self):
        for tau, scene in ((0.0, demos.INTERFERER_SCENE_0), (1.0, demos.INTERFERER_SCENE_1)):
            np.testing.assert_allclose(demos.separated_reference(tau).lags, ula_covariance(scene).lags,
                                       atol=1e-12)

    def test_angle_scan_monotone(self):
        ang, w = demos.angle_scan(11)
        assert ang[0] == pytest.approx(-90) and ang[-1] == pytest.approx(90)
        assert np.all(np.diff(w) > 0)

    def test_ar_ensemble(self):
        Rs, labels = demos.ar_ensemble(3)
        assert len(Rs) == 9 and labels.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
        assert all(R.r0 == pytest.approx(1.0) for R in Rs)
        again, _ = demos.ar_ensemble(3)
        np.testing.assert_array_equal(Rs[4].lags, again[4].lags)


class TestSmallRuns:
    def test_contractivity_writes_outputs(self, tmp_path):
        summary = demos.contractivity(trials=2, grid_size=64, outdir=tmp_path)
        assert summary["passed"]
        saved = json.loads((tmp_path / "contractivity_summary.json").read_text())
        assert saved["additive_violations"] == 0
        lines = (tmp_path / "contractivity_trials.csv").read_text().splitlines()
        assert lines[0] == "trial,base,additive,multiplicative" and len(lines) == 3

    def test_deterministic(self):
        a = demos.contractivity(trials=2, grid_size=32, seed=4)
        b = demos.contractivity(trials=2, grid_size=32, seed=4)
        a.pop("seconds"), b.pop("seconds")
        assert a == b

    def test_registry(self):
        assert set(demos.RUNNERS) == set(demos.DEMOS)
