import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redccr import ensemble as ens
from redccr import oscillator as osc
from redccr.exceptions import DimensionCapError, ShapeError, TruncationError
from redccr.grid import (GridSpec, build_grid, inner_product_Z, make_profile, polarized, random_polarized,
                         random_profile)


@pytest.fixture
def equator_point():
    g = build_grid(GridSpec(1.0, 2.0, 1, 1, 1))
    return g, make_profile(g, "constant")


def test_vacuum_single_copy_and_norm(small_profile):
    v1 = ens.ensemble_vacuum(small_profile, 1)
    np.testing.assert_array_equal(v1.factors[0].amps, osc.vacuum_state(small_profile).amps)
    v3 = ens.ensemble_vacuum(small_profile, 3)
    assert v3.norm2() == pytest.approx(1.0, abs=1e-12)
    assert ens.to_dense(v3).norm2() == pytest.approx(1.0, abs=1e-12)


def test_invalid_ensemble_size(small_profile):
    with pytest.raises(ValueError):
        ens.ensemble_vacuum(small_profile, 0)


def test_collective_annihilation_kills_vacuum(small_profile, rng):
    v = ens.ensemble_vacuum(small_profile, 3, n_max=1)
    out = ens.apply_collective(ens.annihilation(random_polarized(small_profile.grid, rng)), v)
    assert out.norm2() == 0.0


def test_collective_I_of_one_is_identity(small_profile, rng):
    v = ens.to_dense(ens.ensemble_coherent(small_profile, 0.2 * random_polarized(small_profile.grid, rng), 2, 4, tail_tol=1e-6))
    out = ens.apply_collective(ens.identity_weight(np.ones(small_profile.grid.size)), v)
    np.testing.assert_allclose(out.amps, v.amps, atol=1e-15)


def test_normalizations_are_pinned(unit_profile, one_point):
    # one point, unit weight, O = 1: every factor is |k,0,0>
    N = 2
    vac = ens.ensemble_vacuum(unit_profile, N, n_max=1)
    f = polarized(one_point, plus=1.0)
    one = ens.apply_collective(ens.creation(f), vac)
    # a(f)^+ = (a_1^+ + a_2^+) / sqrt(2): two components of 1/sqrt(2), unit norm
    assert one.norm2() == pytest.approx(1.0, abs=1e-15)
    assert np.sort(np.abs(one.amps[one.amps != 0])) == pytest.approx([2**-0.5, 2**-0.5])
    # I(c) = (1/N) sum c = c
    out = ens.apply_collective(ens.identity_weight(np.array([3.0])), one)
    np.testing.assert_allclose(out.amps, 3.0 * one.amps)
    # number and four-momentum are plain sums
    both = ens.dense_from_factors([osc.basis_state(one_point, 1, 0, 1, 0)] * N)
    np.testing.assert_allclose(ens.apply_collective(ens.number(), both).amps, 2.0 * both.amps)
    t = 0.7
    P = ens.apply_collective(ens.four_momentum([t, 0, 0, 0], "physical"), both)
    np.testing.assert_allclose(P.amps, N * 2 * t * both.amps)


def test_collective_matrix_matches_dense_action(small_profile, rng):
    g = small_profile.grid
    st_ = ens.DenseState(g, 1, rng.normal(size=(g.size * 4,) * 2) + 0j)
    for op in (ens.annihilation(random_polarized(g, rng)), ens.creation(random_polarized(g, rng)),
               ens.identity_weight(rng.normal(size=g.size)), ens.number(),
               ens.four_momentum(rng.normal(size=4), "vacuum")):
        M = ens.collective_matrix(op, g, 1, 2)
        np.testing.assert_allclose(M @ st_.amps.reshape(-1), ens.apply_collective(op, st_).amps.reshape(-1),
                                   atol=1e-13)


def test_unknown_operator_kind():
    with pytest.raises(ValueError):
        ens.CollectiveOp("displacement")


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ccr_safe_subspace(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(GridSpec(0.5, 2.0, 2, 1, 1))
    f, h = random_polarized(g, rng), random_polarized(g, rng)
    assert ens.ccr_residual(f, h, g, 2, 2) < 1e-12


def test_I_is_central(small_grid, rng):
    h = rng.normal(size=small_grid.size) + 1j * rng.normal(size=small_grid.size)
    assert ens.centrality_residual(h, random_polarized(small_grid, rng), small_grid, 2, 2) < 1e-12


def test_bruteforce_trivial_cases(small_profile, rng):
    g = small_profile.grid
    assert ens.multiphoton_product_bruteforce([], [], small_profile, 2) == pytest.approx(1.0)
    f, h = random_polarized(g, rng), random_polarized(g, rng)
    assert ens.multiphoton_product_bruteforce([f], [h, h], small_profile, 2) == 0.0


@pytest.mark.parametrize("N", [1, 2, 3])
def test_one_photon_correlator_is_N_independent(small_profile, rng, N):
    g = small_profile.grid
    f, h = random_polarized(g, rng), random_polarized(g, rng)
    val = ens.multiphoton_product_bruteforce([f], [h], small_profile, N)
    assert val == pytest.approx(inner_product_Z(f, h, small_profile), abs=1e-12)


def test_bruteforce_truncation_and_cap(small_profile, rng):
    g = small_profile.grid
    fs = [random_polarized(g, rng) for _ in range(2)]
    with pytest.raises(TruncationError):
        ens.multiphoton_product_bruteforce(fs, fs, small_profile, 2, n_max=1)
    with pytest.raises(DimensionCapError):
        ens.multiphoton_product_bruteforce(fs, fs, small_profile, 4, cap=1000)


def test_dense_state_shape_checks(small_grid):
    with pytest.raises(ShapeError):
        ens.DenseState(small_grid, 1, np.zeros((3, 3)))


def test_displacement_zero_is_identity(small_profile, rng):
    st_ = ens.ensemble_coherent(small_profile, 0.2 * random_polarized(small_profile.grid, rng), 2, 6)
    out = ens.displacement_apply(np.zeros((small_profile.grid.size, 2)), st_)
    np.testing.assert_allclose(ens.to_dense(out).amps, ens.to_dense(st_).amps, atol=1e-15)


def test_displaced_vacuum_is_coherent(small_profile, rng):
    beta = 0.5 * random_polarized(small_profile.grid, rng)
    out = ens.displacement_apply(beta, ens.ensemble_vacuum(small_profile, 3, 10))
    target = ens.ensemble_coherent(small_profile, beta, 3, 10)
    for a, b in zip(out.factors, target.factors):
        np.testing.assert_allclose(a.amps, b.amps, atol=1e-14)


def test_displacement_composes_up_to_pointwise_phase(small_profile, rng):
    g = small_profile.grid
    alpha, beta = 0.3 * random_polarized(g, rng), 0.3 * random_polarized(g, rng)
    out = ens.displacement_apply(beta, ens.ensemble_coherent(small_profile, alpha, 2, 14))
    target = ens.ensemble_coherent(small_profile, alpha + beta, 2, 14)
    for a, b in zip(out.factors, target.factors):
        # D(b)|a> = exp(i Im(b conj a)) |a + b> at every point and helicity
        phase = np.exp(1j * np.sum(np.imag(beta * np.conj(alpha)), axis=1) / 2)
        # the highest levels carry the truncation error of the product path
        np.testing.assert_allclose(a.amps[:, :10, :10], phase[:, None, None] * b.amps[:, :10, :10], atol=1e-12)


def test_displacement_preserves_norm(small_profile, rng):
    st_ = ens.ensemble_coherent(small_profile, 0.2 * random_polarized(small_profile.grid, rng), 2, 12)
    out = ens.displacement_apply(0.3 * random_polarized(small_profile.grid, rng), st_)
    assert out.norm2() == pytest.approx(st_.norm2(), abs=1e-10)


def test_product_path_reports_leak(small_profile, rng):
    with pytest.raises(TruncationError):
        ens.displacement_apply(2.0 * random_polarized(small_profile.grid, rng), ens.ensemble_vacuum(small_profile, 2, 2))


def test_product_and_dense_displacement_agree(equator_point, rng):
    g, prof = equator_point
    N, n_max = 2, 4
    beta = random_polarized(g, rng)
    beta *= 0.2 / np.linalg.norm(beta)
    vac = ens.ensemble_vacuum(prof, N, n_max)
    p = ens.to_dense(ens.displacement_apply(beta, vac, method="product")).amps.reshape(-1)
    d = ens.displacement_apply(beta, vac, method="dense").amps.reshape(-1)
    sw = np.sqrt(ens.local_weight_vector(g, n_max, N))
    idx = ens.safe_indices(g, n_max, N, level=n_max - 2)
    assert (sw * np.abs(p - d))[idx].max() < 1e-8


def test_displacement_bad_method(small_profile):
    with pytest.raises(ValueError):
        ens.displacement_apply(np.zeros((small_profile.grid.size, 2)), ens.ensemble_vacuum(small_profile, 1), "taylor")
    with pytest.raises(ValueError):
        ens.displacement_apply(np.zeros((small_profile.grid.size, 2)),
                               ens.to_dense(ens.ensemble_vacuum(small_profile, 1)), "product")


def test_conjugation_identity(one_point, rng):
    beta = polarized(one_point, plus=0.05 * np.exp(0.3j), minus=-0.02)
    f = random_polarized(one_point, rng)
    assert ens.displacement_conjugation_residual(beta, f, one_point, 3, 2) < 1e-8
    assert ens.displacement_conjugation_residual(4 * beta, f, one_point, 8, 2, level=2) < 1e-8


def test_excitation_distribution_vacuum(small_profile):
    p = ens.excitation_distribution(ens.ensemble_vacuum(small_profile, 4, 2))
    assert p[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(p[1:]) < 1e-15)


def test_excitation_distribution_single_point_poisson(unit_profile, one_point):
    from scipy.stats import poisson

    a = 0.2
    p = ens.excitation_distribution(ens.ensemble_coherent(unit_profile, polarized(one_point, plus=a), 1, 12))
    np.testing.assert_allclose(p[:13], poisson.pmf(np.arange(13), a**2), atol=1e-15)


def test_excitation_distribution_product_matches_dense(small_profile, rng):
    st_ = ens.ensemble_coherent(small_profile, 0.4 * random_polarized(small_profile.grid, rng), 2, 4,
                                tail_tol=1e-3)
    p = ens.excitation_distribution(st_)
    q = ens.excitation_distribution(ens.to_dense(st_))
    np.testing.assert_allclose(p, q[: len(p)], atol=1e-14)


def test_excitation_distribution_tail_guard(small_profile, rng):
    st_ = ens.ensemble_coherent(small_profile, random_polarized(small_profile.grid, rng), 2, 3, tail_tol=1.0)
    with pytest.raises(TruncationError):
        ens.excitation_distribution(st_, tail_tol=1e-12)


def test_poisson_tv_shrinks_with_N(small_profile, rng):
    g = small_profile.grid
    alpha = random_polarized(g, rng)
    alpha /= np.sqrt(np.sum(g.weights[:, None] * small_profile.Z[:, None] * np.abs(alpha) ** 2))
    tvs = [ens.poisson_tv(ens.excitation_distribution(ens.ensemble_coherent(small_profile, alpha, N, 14)), 1.0)
           for N in (8, 16, 32)]
    assert tvs[0] > tvs[1] > tvs[2]
    assert tvs[2] < 0.01


def test_to_dense_cap(small_profile):
    with pytest.raises(DimensionCapError):
        ens.to_dense(ens.ensemble_vacuum(small_profile, 4, 2), cap=10_000)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dense_inner_matches_product_inner(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(GridSpec(0.5, 2.0, 1, 1, 2))
    prof = random_profile(g, rng)
    a = ens.ensemble_coherent(prof, 0.3 * random_polarized(g, rng), 2, 8, tail_tol=1e-6)
    b = ens.ensemble_coherent(prof, 0.3 * random_polarized(g, rng), 2, 8, tail_tol=1e-6)
    assert ens.to_dense(a).inner(ens.to_dense(b)) == pytest.approx(a.inner(b), abs=1e-13)
