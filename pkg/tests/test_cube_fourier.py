import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import extension_integrals

from gse.cube_fourier import (
    aggregate_mk,
    coefficients_from_corners,
    cube_coefficients,
    cube_corner_values,
    cube_poincare_gap,
    direct_identities,
    extension_forms_direct,
    identity_suite,
    nu_measures,
    subset_sizes,
    walsh_matrix,
)
from gse.lattice import LatticeBox, LatticeFunction, corner_offsets
from gse.transfer import multilinear_extend


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_walsh_orthogonality(d):
    W = walsh_matrix(d)
    np.testing.assert_array_equal(W.T @ W, 2**d * np.eye(2**d))


def test_corner_convention():
    # corner 0 is x = (-1, ..., -1); bit i set means x_i = +1
    W = walsh_matrix(2)
    x = 2 * corner_offsets(2) - 1
    for S in range(4):
        expected = np.prod(np.where([(S >> i) & 1 for i in range(2)], x, 1), axis=1)
        np.testing.assert_array_equal(W[:, S], expected)


def test_coefficients_of_simple_functions():
    box = LatticeBox(2, 0.5, boundary="periodic", period=4)
    vals = np.zeros(box.shape)
    vals[1, :] = 1.0  # f = 1 on the slice k_0 = 1
    f = LatticeFunction(box, vals)
    # cube based at (0, 0): corners (0,0),(1,0),(0,1),(1,1); f = (1 + x_0)/2
    c = cube_coefficients(f, (0, 0)).coeffs
    np.testing.assert_allclose(c, [0.5, 0.5, 0.0, 0.0])
    const = LatticeFunction(box, np.full(box.shape, 3.0))
    np.testing.assert_allclose(cube_coefficients(const, (2, 3)).coeffs, [3.0, 0, 0, 0])


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_per_cube_parseval_and_dirichlet(d, seed):
    F = np.random.default_rng(seed).standard_normal(2**d)
    c = coefficients_from_corners(F)
    np.testing.assert_allclose(walsh_matrix(d) @ c, F, atol=1e-13)
    assert np.mean(F**2) == pytest.approx(np.sum(c**2), rel=1e-12)
    edges = [(a, a | 1 << i) for i in range(d) for a in range(2**d) if not a >> i & 1]
    graph = sum((F[a] - F[b]) ** 2 for a, b in edges)
    assert graph == pytest.approx(2 ** (d + 1) * np.sum(subset_sizes(d) * c**2), rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_identity_suite_periodic(d):
    rep = identity_suite(d, count=50, seed=100 + d)
    assert rep.passed, rep


@pytest.mark.parametrize("d,radius", [(1, 7), (2, 3), (3, 2)])
def test_identities_on_dirichlet_boxes(d, radius):
    rng = np.random.default_rng(d)
    box = LatticeBox(d, 0.37, radius=radius)
    f = LatticeFunction(box, rng.standard_normal(box.shape))
    for name, (direct, fourier) in direct_identities(f).items():
        assert fourier == pytest.approx(direct, rel=1e-12), name


@pytest.mark.parametrize("d,radius", [(1, 4), (2, 2)])
def test_extension_forms_against_quadrature(d, radius):
    rng = np.random.default_rng(7)
    theta = 0.3
    box = LatticeBox(d, theta, radius=radius)
    f = LatticeFunction(box, rng.standard_normal(box.shape))
    g = multilinear_extend(f)
    lo = [-(radius + 1) * theta] * d
    hi = [(radius + 1) * theta] * d
    norm, grad = extension_integrals(g, lo, hi, theta)
    dn, dg = extension_forms_direct(f)
    assert dn == pytest.approx(norm, rel=1e-12)
    assert dg == pytest.approx(grad, rel=1e-10)


def test_cube_corner_values_cover_support():
    box = LatticeBox(1, 0.5, radius=2)
    f = LatticeFunction(box, np.arange(1.0, 6.0))
    bases, F = cube_corner_values(f)
    assert bases[:, 0].tolist() == list(range(-3, 3))
    # the outermost cubes straddle the zero exterior
    np.testing.assert_array_equal(F[0], [0.0, 1.0])
    np.testing.assert_array_equal(F[-1], [5.0, 0.0])
    with pytest.raises(IndexError):
        cube_coefficients(f, (2,))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cube_poincare(d):
    # the cube graph has spectral gap 2: ||F - mean||^2 <= <F, L F> / 2
    rng = np.random.default_rng(d)
    box = LatticeBox(d, 0.5, boundary="periodic", period=4)
    for _ in range(20):
        f = LatticeFunction(box, rng.standard_normal(box.shape))
        var, lap = cube_poincare_gap(f, (1,) * d)
        assert var <= lap / 2 + 1e-12


def _smooth_positive(box, rng, width):
    x = box.positions().reshape(-1, box.dim)
    c = rng.uniform(-0.2, 0.2, box.dim)
    return LatticeFunction(box, np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * width**2)))


@pytest.mark.parametrize("d", [1, 2])
def test_gradient_quotient_transfer(d):
    # theta^2 ||grad g||^2 / ||g||^2 <= R_L(f) / (1 - R_L(f))
    rng = np.random.default_rng(11)
    for _ in range(10):
        theta = rng.uniform(0.02, 0.1)
        box = LatticeBox(d, theta, radius=int(0.9 / theta) if d == 1 else 12)
        f = _smooth_positive(box, rng, rng.uniform(0.15, 0.3))
        R = f.laplacian_form() / f.norm2()
        assert R < 1
        ng, gg = extension_forms_direct(f)
        assert theta**2 * gg / ng <= R / (1 - R) + 1e-12


@pytest.mark.parametrize("d", [1, 2])
def test_cube_mass_transfer(d):
    # nu_g(C) <= nu_f(C) / (1 - R_L(f)) on every cube
    rng = np.random.default_rng(12)
    box = LatticeBox(d, 0.05, radius=15 if d == 1 else 8)
    f = _smooth_positive(box, rng, 0.2)
    R = f.laplacian_form() / f.norm2()
    nu = nu_measures(f)
    assert nu.nu_f.sum() == pytest.approx(1.0)
    assert nu.nu_g.sum() == pytest.approx(1.0)
    assert np.all(nu.nu_g <= nu.nu_f / (1 - R) + 1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_norm_and_gradient_comparison_random(d):
    rng = np.random.default_rng(20 + d)
    for _ in range(50):
        theta = rng.uniform(0.05, 0.95)
        box = LatticeBox(d, theta, radius=3 if d < 3 else 2)
        f = LatticeFunction(box, rng.random(box.shape))
        agg = aggregate_mk(f)
        assert agg.norm2_g(theta) >= (2 / 3) ** d * theta**d * f.norm2() - 1e-12
        assert agg.dirichlet_g(theta) <= theta ** (d - 2) * f.laplacian_form() + 1e-9
