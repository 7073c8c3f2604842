"""Field sampling, duality, variograms, and distributional invariances."""

import warnings

import numpy as np
import pytest

from gasket_fgf.constants import hurst_from_s
from gasket_fgf.fields import (
    empirical_covariance,
    hoelder_statistic,
    pinned_field,
    sample_field,
    scaling_invariance_test,
    symmetry_invariance_test,
    variogram,
    white_noise_pairing,
)
from gasket_fgf.geometry import symmetry_permutation
from gasket_fgf.kernels import kernel_matrix


def test_sample_reproducible(basis4):
    a = sample_field(basis4, 0.5, seed=42)
    b = sample_field(basis4, 0.5, seed=42)
    c = sample_field(basis4, 0.5, seed=43)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.generator == "PCG64"
    assert a.seed == 42
    assert a.hurst == pytest.approx(hurst_from_s(0.5))


def test_sample_is_spectral_synthesis(basis4):
    smp = sample_field(basis4, 0.55, seed=1, J=40)
    assert smp.modes == 40
    assert len(smp.coefficients) == 40
    # coefficients are the raw gaussian draws; values carry lambda^{-s}
    recon = basis4.phi[:, :40] @ (basis4.lam[:40] ** -0.55 * smp.coefficients)
    np.testing.assert_allclose(smp.values, recon, atol=1e-12)
    assert np.std(smp.coefficients) == pytest.approx(1.0, abs=0.35)


def test_sample_mean_zero(basis4):
    smp = sample_field(basis4, 0.5, seed=7)
    assert abs(basis4.mass @ smp.values) <= 1e-12


def test_sample_j_validation(basis4):
    with pytest.raises(ValueError):
        sample_field(basis4, 0.5, seed=0, J=basis4.count + 1)
    with pytest.raises(ValueError):
        sample_field(basis4, 0.2, seed=0)


def test_pinned_field(basis4):
    smp = sample_field(basis4, 0.5, seed=5)
    pinned = pinned_field(smp, q=2)
    assert pinned.values[2] == 0.0
    np.testing.assert_allclose(
        np.diff(pinned.values), np.diff(smp.values), atol=1e-12)


def test_white_noise_pairing_per_mode(basis4):
    smp = sample_field(basis4, 0.5, seed=9)
    for j in (0, 3, 17):
        lhs, rhs = white_noise_pairing(smp, basis4, basis4.phi[:, j])
        assert lhs == pytest.approx(rhs, abs=1e-10)
        # pairing against mode j recovers that mode's raw noise draw
        assert rhs == pytest.approx(smp.coefficients[j], abs=1e-10)


def test_white_noise_pairing_random_f(basis4, rng):
    smp = sample_field(basis4, 0.5, seed=9)
    for _ in range(20):
        f = basis4.phi @ rng.standard_normal(basis4.count)
        lhs, rhs = white_noise_pairing(smp, basis4, f)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_white_noise_pairing_s_mismatch(basis4):
    smp = sample_field(basis4, 0.5, seed=9)
    with pytest.raises(ValueError):
        white_noise_pairing(smp, basis4, basis4.phi[:, 0], s=0.6)


def test_empirical_covariance_small(basis4):
    seeds = np.random.SeedSequence(3).spawn(1500)
    iu, ju = np.triu_indices(len(basis4.graph), 1)
    sel = np.random.default_rng(5).choice(len(iu), 10, replace=False)
    pairs = np.column_stack([iu[sel], ju[sel]])
    rep = empirical_covariance(basis4, 0.5, seeds, pairs)
    assert rep.replications == 1500
    assert rep.npairs == 10
    assert rep.max_abs_z == pytest.approx(2.3876, abs=1e-3)
    assert rep.passed


def test_empirical_covariance_needs_replications(basis4):
    seeds = np.random.SeedSequence(3).spawn(999)
    with pytest.raises(ValueError):
        empirical_covariance(basis4, 0.5, seeds, [(0, 1)])


def test_variogram_exact_level5(basis5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = variogram(basis5, 0.5)
    assert rep.mode == "exact"
    assert rep.npairs == 66_795  # all pairs: below the subsample cutoff
    assert rep.slope == pytest.approx(0.78136, abs=1e-3)
    target = 2 * hurst_from_s(0.5)
    assert abs(rep.slope - target) <= 0.1


def test_variogram_mc_converges(basis5):
    seeds = np.random.SeedSequence(11).spawn(60)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = variogram(basis5, 0.5, seeds=seeds, mode="mc")
    assert rep.mode == "mc"
    assert rep.replications == 60
    assert rep.slope == pytest.approx(0.76281, abs=1e-3)
    assert rep.half_width < 0.05
    assert abs(rep.slope - 2 * hurst_from_s(0.5)) <= 2 * max(rep.half_width, 0.05)


def test_variogram_window_validation(basis5):
    with pytest.raises(ValueError):
        variogram(basis5, 0.5, window=(2.0 ** -4, 2.0 ** -1))  # hi too large
    with pytest.raises(ValueError):
        variogram(basis5, 0.5, window=(2.0 ** -9, 2.0 ** -2))  # lo below mesh
    with pytest.raises(ValueError):
        variogram(basis5, 0.5, window=(2.0 ** -4, 2.0 ** -2))  # < 3 octaves
    with pytest.raises(ValueError):
        variogram(basis5, 0.5, mode="mc")  # mc needs seeds


def test_hoelder_bounded_for_true_exponent(basis6):
    smp = sample_field(basis6, 0.5, seed=5000, J=basis6.cluster_complete(878))
    rep = hoelder_statistic(smp, basis6.graph, smp.hurst)
    assert rep.verdict == "bounded"
    assert rep.ratio == pytest.approx(0.8926, abs=1e-3)
    assert rep.hurst_claim == smp.hurst
    assert len(rep.values) == len(rep.deltas) == 3


def test_hoelder_overclaim_raises_slope_gap(basis6):
    wide = tuple(2.0 ** -k for k in range(2, 7))
    for seed in (5000, 5001, 5002):
        smp = sample_field(basis6, 0.5, seed=seed, J=basis6.cluster_complete(878))
        true = hoelder_statistic(smp, basis6.graph, smp.hurst, deltas=wide)
        over = hoelder_statistic(smp, basis6.graph, smp.hurst + 0.2, deltas=wide)
        # weighting by an overstated exponent inflates the small-delta
        # statistic, dragging the log-log slope down
        assert true.slope - over.slope > 0.1


def test_hoelder_inconclusive_when_annulus_empty(basis4):
    smp = sample_field(basis4, 0.5, seed=3)
    rep = hoelder_statistic(smp, basis4.graph, smp.hurst,
                            deltas=(2.0 ** -5, 2.0 ** -6))
    assert np.isnan(rep.ratio)
    assert rep.verdict == "inconclusive"


def test_hoelder_delta_validation(basis4):
    smp = sample_field(basis4, 0.5, seed=3)
    with pytest.raises(ValueError):
        hoelder_statistic(smp, basis4.graph, smp.hurst, deltas=(0.5,))


def test_symmetry_invariance(basis4):
    for i in (1, 2, 3):
        sym = symmetry_permutation(basis4.graph, i)
        rep = symmetry_invariance_test(basis4, 0.5, sym)
        assert rep.passed
        assert rep.kind == "symmetry"
        assert rep.params["reflection"] == i
        assert rep.measured["kernel_deviation"] <= 1e-8
        assert rep.measured["corner_variance_spread"] <= 1e-8


def test_symmetry_detects_broken_map(basis4):
    sym = symmetry_permutation(basis4.graph, 1)
    bad = np.array(sym.permutation)
    # transpose two non-equivalent vertices: no longer an isometry
    interior = [v.id for v in basis4.graph.vertices if not v.is_boundary]
    bad[[interior[0], interior[3]]] = bad[[interior[3], interior[0]]]
    broken = type(sym)(index=1, permutation=bad, fixed_vertex=sym.fixed_vertex)
    rep = symmetry_invariance_test(basis4, 0.5, broken)
    assert not rep.passed


def test_scaling_invariance(basis4, sub_basis5):
    rep = scaling_invariance_test(basis4, sub_basis5, 0.5)
    assert rep.passed
    assert rep.kind == "scaling"
    assert rep.measured["eigenvalue_deviation"] <= 1e-10
    assert rep.measured["kernel_deviation"] <= 1e-10
    # 2^{-2H} = 3/5 exactly when s = 1/2
    assert rep.params["covariance_ratio"] == pytest.approx(0.6, abs=1e-12)
    assert rep.params["word"] == [0]


def test_scaling_level_mismatch(basis4, basis5):
    with pytest.raises(ValueError):
        scaling_invariance_test(basis4, basis5, 0.5)


def test_field_variance_matches_kernel_diagonal(basis4):
    # across replications the per-vertex variance follows G_2s(x,x)
    reps = np.stack([sample_field(basis4, 0.5, seed=k).values
                     for k in range(400)])
    var = reps.var(axis=0)
    diag = np.diag(kernel_matrix(basis4, 1.0))
    ratio = var / diag
    assert np.median(ratio) == pytest.approx(1.0, abs=0.15)