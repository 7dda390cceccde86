"""Acceptance criteria, each at its stated tolerance.

Every test carries a ``criterion`` marker; the terminal summary prints one
verdict line per criterion.
"""
import time

import numpy as np
import pytest

from oracles import (
    lp_vertex_enumeration,
    qp_active_set_brute_force,
    random_bounded_lp,
    random_sdp_instance,
    sdp_dual_grid_search,
)
from toeplitz_omt import demos
from toeplitz_omt.signals import random_toeplitz_psd, rng_from_seed
from toeplitz_omt.solvers import LinearProgram, SdpProblem, solve_lp, solve_qp_nonneg, solve_sdp
from toeplitz_omt.solvers.report import OPTIMAL
from toeplitz_omt.sos import bounds_sandwich
from toeplitz_omt.spectral import DiscreteSpectrum, FrequencyGrid, gamma_apply
from toeplitz_omt.transport import compute_T, compute_T_kappa


def chordal2(a, b):
    return abs(np.exp(1j * a) - np.exp(1j * b)) ** 2


@pytest.mark.criterion(1, "Dirac closed form")
def test_dirac_closed_form():
    grid = FrequencyGrid(512)
    rng = rng_from_seed(2024)
    start = time.perf_counter()
    for _ in range(10):
        i, j = rng.choice(grid.N, 2, replace=False)
        a, b = grid.nodes[i], grid.nodes[j]
        R0 = gamma_apply(DiscreteSpectrum.atoms(grid, [a], [2 * np.pi]), 8)
        R1 = gamma_apply(DiscreteSpectrum.atoms(grid, [b], [2 * np.pi]), 8)
        value = compute_T(R0, R1, grid, feas_tol=0.0).value
        assert value == pytest.approx(2 * np.pi * chordal2(a, b), rel=1e-5)
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(2, "unit-circle trajectory")
def test_trajectory():
    summary = demos.trajectory()
    assert summary["stats"]["1.0"]["max_abs_dev_from_unit_circle"] <= 1e-6
    assert summary["stats"]["0.1"]["max_chord_deviation_ratio"] < 0.05
    assert summary["passed"]


@pytest.mark.criterion(3, "path Toeplitz/PSD/diagonal on DOA scene")
def test_doa_path_properties():
    summary = demos.doa()
    checks = summary["checks"]
    assert checks["toeplitz"] and checks["psd"] and checks["diagonal"]
    assert checks["static_within_one_bin"]
    assert checks["split_separates_monotonically"]


@pytest.mark.criterion(4, "contractivity")
def test_contractivity():
    start = time.perf_counter()
    summary = demos.contractivity(trials=100)
    assert summary["additive_violations"] == 0
    assert summary["multiplicative_violations"] == 0
    assert time.perf_counter() - start < 300


@pytest.mark.criterion(5, "semi-metric")
def test_semimetric():
    grid = FrequencyGrid(256)
    rng = rng_from_seed(55)
    for _ in range(50):
        R0, R1 = random_toeplitz_psd(rng, 4), random_toeplitz_psd(rng, 4)
        ab = compute_T_kappa(R0, R1, grid).value
        ba = compute_T_kappa(R1, R0, grid).value
        assert ab >= 0 and ba >= 0
        assert abs(ab - ba) <= 1e-7
        assert compute_T_kappa(R0, R0, grid).value <= 1e-8 * (1 + R0.r0)


@pytest.mark.criterion(6, "duality and bounds sandwich")
def test_bounds_sandwich():
    rng = rng_from_seed(66)
    n = 4
    start = time.perf_counter()
    for _ in range(10):
        R0 = random_toeplitz_psd(rng, n)
        R1 = random_toeplitz_psd(rng, n, r0=R0.r0)
        rows = bounds_sandwich(R0, R1, grid_sizes=(256, 512), degrees=(n + 2, n + 4))
        by = {(r["N"], r["m"]): r for r in rows}
        at256 = by[(256, n + 2)]
        assert abs(at256["primal_grid"] - at256["dual_grid"]) <= 1e-6 * (1 + at256["primal_grid"])
        for r in rows:
            assert r["sos"] <= r["primal_grid"] + 1e-6
        low, high = by[(512, n + 2)]["sos"], by[(512, n + 4)]["sos"]
        assert high >= low - 1e-8
        primal512 = by[(512, n + 4)]["primal_grid"]
        assert abs(high - primal512) <= 0.05 * primal512
    assert time.perf_counter() - start < 600


@pytest.mark.criterion(7, "tracking versus Euclidean fit")
def test_tracking():
    checks = demos.ar_track()["checks"]
    assert checks["argmax_monotone"]
    assert checks["start_within_0.05pi"] and checks["end_within_0.05pi"]
    assert checks["euclidean_two_peaks_above_25pct"]


@pytest.mark.criterion(8, "synthetic clustering")
def test_synthetic_clustering():
    summary = demos.cluster_synthetic(seeds=range(20))
    assert summary["recovered"] >= 18
    assert all(r["monotone"] for r in summary["runs"])


@pytest.fixture(scope="module")
def interferer():
    return demos.doa_interferer()


@pytest.mark.criterion(9, "fixed-cost interferer, literal: 0 deg within 25% of start")
@pytest.mark.xfail(strict=True, reason="the ideal separated path itself rises to about 3.9x its "
                                      "start at 0 deg as the moving source passes; see the ledger")
def test_interferer_literal(interferer):
    assert interferer["checks"]["fixed_cost_within_25pct_of_start"]


@pytest.mark.criterion(9, "fixed-cost interferer, chordal dips below half")
def test_interferer_chordal_dip(interferer):
    assert interferer["checks"]["chordal_dips_below_half"]


@pytest.mark.criterion(9, "fixed-cost interferer, separated-reference form")
def test_interferer_reference(interferer):
    assert interferer["checks"]["fixed_cost_tracks_separated_reference"]
    assert interferer["checks"]["chordal_departs_from_separated_reference"]


@pytest.mark.criterion(10, "solver oracles")
def test_solver_oracles():
    rng = np.random.default_rng(1010)
    for _ in range(20):
        E = int(rng.integers(2, 5))
        V = int(rng.integers(E + 1, 13))
        c, A, b = random_bounded_lp(rng, E, V)
        ref, _ = lp_vertex_enumeration(c, A, b)
        x, _, rep = solve_lp(LinearProgram(c, A, b))
        assert rep.status == OPTIMAL
        assert abs(c @ x - ref) <= 1e-7
    for _ in range(20):
        V = int(rng.integers(2, 7))
        G = rng.standard_normal((V, V))
        Q, q = G @ G.T + 0.1 * np.eye(V), rng.standard_normal(V)
        ref, _ = qp_active_set_brute_force(Q, q)
        res = solve_qp_nonneg(Q, q, tol=1e-12)
        assert abs(res.report.objective - ref) <= 1e-6
    for k in range(10):
        C, A, b2 = random_sdp_instance(rng, 3, complex_=bool(k % 2))
        ref, _ = sdp_dual_grid_search(C, A, b2)
        res = solve_sdp(SdpProblem(3, C, [(np.eye(3), 1.0), (A, b2)]), tol=1e-9)
        assert res.report.status == OPTIMAL
        assert abs(res.report.objective - ref) <= 1e-4
