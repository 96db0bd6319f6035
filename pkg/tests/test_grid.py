import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redccr.exceptions import GridSpecError, ProfileError, ShapeError
from redccr.grid import (GridSpec, MomentumGrid, VacuumProfile, build_grid, check_polarized, delta_gamma,
                         inner_product_Z, make_profile, minkowski, polarized, random_polarized, random_profile,
                         shell_measure, write_grid_csv)


def test_single_point_fixture(one_point):
    np.testing.assert_array_equal(one_point.points, [[1.0, 0.0, 0.0, 1.0]])
    np.testing.assert_array_equal(one_point.weights, [1.0])


def test_two_shells_along_z():
    g = build_grid(GridSpec(radii=[1.0, 2.0], directions=[[0, 0, 1]], weight=1.0))
    np.testing.assert_array_equal(g.points, [[1, 0, 0, 1], [2, 0, 0, 2]])
    np.testing.assert_array_equal(g.weights, [1.0, 1.0])


@pytest.mark.parametrize("spec", [GridSpec(0.1, 10, 16, 2, 4), GridSpec(0.3, 3.0, 5, 3, 5), GridSpec(1.0, 2.0, 1, 1, 1)])
def test_points_null_positive_and_off_negative_axis(spec):
    g = build_grid(spec)
    np.testing.assert_allclose(minkowski(g.points, g.points), 0.0, atol=1e-13)
    assert np.all(g.energies > 0)
    assert np.all(g.weights > 0)
    on_axis = (g.points[:, 1] == 0) & (g.points[:, 2] == 0) & (g.points[:, 3] < 0)
    assert not on_axis.any()


def test_total_measure_matches_shell_integral():
    # d^3k / ((2 pi)^3 2|k|) over k_min < |k| < k_max is (k_max^2 - k_min^2) / (8 pi^2)
    g = build_grid(GridSpec(0.1, 10.0, 16, 2, 4))
    assert g.total_measure() == pytest.approx((10.0**2 - 0.1**2) / (8 * np.pi**2), rel=1e-13)
    assert shell_measure(0.1, 10.0) == pytest.approx(g.total_measure(), rel=1e-13)


def test_radial_quadrature_converges_on_doubling():
    # int dGamma |k| over the shell is (k_max^3 - k_min^3) / (12 pi^2); midpoint error drops ~4x per doubling
    exact = (10.0**3 - 0.1**3) / (12 * np.pi**2)
    errs = []
    for n in (16, 32, 64):
        g = build_grid(GridSpec(0.1, 10.0, n, 2, 4))
        errs.append(abs(g.integrate(g.energies) - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_build_grid_is_deterministic():
    a = build_grid(GridSpec(0.2, 5, 4, 2, 3))
    b = build_grid(GridSpec(0.2, 5, 4, 2, 3))
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.weights, b.weights)


@pytest.mark.parametrize("spec", [GridSpec(0.0, 1.0), GridSpec(2.0, 1.0), GridSpec(0.1, 1.0, n_radial=0),
                                  GridSpec(0.1, 1.0, n_polar=0), GridSpec(0.1, 1.0, n_azimuth=0),
                                  GridSpec(radii=[1.0], directions=[[0, 0, 1]])])
def test_build_grid_rejects_bad_specs(spec):
    with pytest.raises(GridSpecError):
        build_grid(spec)


def test_negative_z_axis_rejected():
    with pytest.raises(GridSpecError):
        MomentumGrid.from_momenta([[0.0, 0.0, -1.0]], [1.0])


def test_nonpositive_weight_rejected():
    with pytest.raises(GridSpecError):
        MomentumGrid.from_momenta([[0.0, 0.0, 1.0]], [0.0])


def test_delta_gamma_examples(one_point):
    assert delta_gamma(one_point, 0, 0) == 1.0
    g = MomentumGrid.from_momenta([[0, 0, 1.0], [1.0, 0, 0]], [0.25, 1.0])
    assert delta_gamma(g, 0, 0) == 4.0
    assert delta_gamma(g, 0, 1) == 0.0
    with pytest.raises(IndexError):
        delta_gamma(g, 0, 2)


def test_delta_gamma_resolves_identity(small_grid, rng):
    f = rng.normal(size=small_grid.size)
    D = np.array([[delta_gamma(small_grid, i, j) for j in range(small_grid.size)] for i in range(small_grid.size)])
    np.testing.assert_allclose(D @ (small_grid.weights * f), f, rtol=0, atol=1e-14)


def test_inner_product_examples(one_point, two_point, unit_profile, half_profile):
    f = polarized(one_point, plus=1.0)
    assert inner_product_Z(f, f, unit_profile) == 1.0
    assert inner_product_Z(polarized(one_point, plus=1.0), polarized(one_point, minus=1.0), unit_profile) == 0.0
    a = polarized(two_point, plus=[1.0, 1.0])
    b = polarized(two_point, plus=[1.0, -1.0])
    assert abs(inner_product_Z(a, b, half_profile)) < 1e-15


def test_inner_product_shape_mismatch(small_profile):
    with pytest.raises(ShapeError):
        inner_product_Z(np.zeros((3, 2)), np.zeros((3, 2)), small_profile)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_inner_product_hermitian_and_positive(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(GridSpec(0.3, 3.0, 3, 2, 2))
    prof = random_profile(g, rng)
    f, h = random_polarized(g, rng), random_polarized(g, rng)
    assert inner_product_Z(f, h, prof) == pytest.approx(np.conj(inner_product_Z(h, f, prof)), abs=1e-12)
    ff = inner_product_Z(f, f, prof)
    assert ff.real > 0 and abs(ff.imag) < 1e-12


def test_inner_product_zero_where_Z_vanishes(two_point):
    prof = VacuumProfile(two_point, np.array([1.0, 0.0], dtype=complex))
    f = polarized(two_point, plus=[0.0, 3.0])
    assert inner_product_Z(f, f, prof) == 0.0


@pytest.mark.parametrize("template,params", [("constant", {}), ("lognormal", {"eps": 1.0, "sigma": 0.7}),
                                             ("power_exp", {"power": 1.0, "scale": 2.0})])
def test_profiles_are_normalized(template, params):
    g = build_grid(GridSpec(0.1, 10.0, 8, 2, 4))
    prof = make_profile(g, template, **params)
    assert abs(prof.total() - 1.0) < 1e-12
    assert np.all(prof.Z >= 0)


def test_normalized_rescales(small_grid, rng):
    prof = VacuumProfile(small_grid, 3.7 * (rng.normal(size=small_grid.size) + 0j)).normalized()
    assert abs(prof.total() - 1.0) < 1e-12


def test_profile_errors(small_grid):
    with pytest.raises(ProfileError):
        make_profile(small_grid, "gaussian")
    with pytest.raises(ProfileError):
        VacuumProfile(small_grid, np.zeros(small_grid.size)).normalized()
    with pytest.raises(ShapeError):
        VacuumProfile(small_grid, np.ones(small_grid.size + 1))
    with pytest.raises(ProfileError):
        VacuumProfile.from_Z(small_grid, -np.ones(small_grid.size))


def test_check_polarized_rejects_nonfinite(one_point):
    with pytest.raises(ShapeError):
        check_polarized(one_point, [[np.nan, 0.0]])


def test_grid_csv_roundtrip(tmp_path, small_grid, small_profile):
    path = tmp_path / "grid.csv"
    write_grid_csv(path, small_grid, small_profile)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("k0", "k1", "k2", "k3", "w", "Z")
    np.testing.assert_array_equal(data["w"], small_grid.weights)
    np.testing.assert_array_equal(data["Z"], small_profile.Z)
