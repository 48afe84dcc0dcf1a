import math

import numpy as np
import pytest

from gse.potential import (
    POTENTIALS,
    estimate_metadata,
    make_almost_mathieu,
    make_constant,
    make_separable_power,
    make_zero,
    potential_from_name,
)


def test_almost_mathieu_values():
    V = make_almost_mathieu(1.0)
    x = np.array([0.0, 0.25, 0.5, 0.3])
    np.testing.assert_allclose(V(x), 2 - 2 * np.cos(2 * np.pi * x), atol=1e-15)
    assert V(np.array([[0.5]]))[0] == pytest.approx(4.0)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_periodic_and_nonnegative(dim):
    rng = np.random.default_rng(dim)
    for V in (make_almost_mathieu(0.7, dim), make_separable_power(dim, 4, 2.0)):
        x = rng.uniform(-3, 3, size=(500, dim))
        shift = rng.integers(-3, 4, size=(500, dim))
        np.testing.assert_allclose(V(x), V(x + shift), atol=1e-12)
        assert np.all(V(x) >= 0)


def test_mathieu_metadata_constants():
    lam = 0.3
    V = make_almost_mathieu(lam)
    assert V.lipschitz == pytest.approx(4 * math.pi * lam)
    assert V.deriv_bound == pytest.approx(8 * math.pi**2 * lam)
    assert V.sup_norm == pytest.approx(4 * lam)
    assert V.coercivity == pytest.approx((4 * lam, 1 / (2 * math.pi * math.sqrt(lam)), 2))


def test_mathieu_metadata_bounds_sampled_derivatives():
    V = make_almost_mathieu(1.3)
    x = np.linspace(0, 1, 20001)
    h = 1e-5
    first = np.abs((V(x + h) - V(x - h)) / (2 * h))
    second = np.abs((V(x + h) - 2 * V(x) + V(x - h)) / h**2)
    assert first.max() <= V.lipschitz * (1 + 1e-6)
    assert second.max() <= V.deriv_bound * (1 + 1e-4)
    assert V(x).max() <= V.sup_norm + 1e-12


def _coercivity_ratio(V, frac):
    """sup over {V <= t} of dist to the critical set / (K sqrt t), t = frac t0."""
    t0, K, P = V.coercivity
    x = np.linspace(1e-7, 0.5 - 1e-7, 200001)
    dist = np.minimum(x, 0.5 - x)  # critical points at Z and Z + 1/2
    t = frac * t0
    return (dist[V(x) <= t] / (K * t ** (1 / P))).max()


def test_mathieu_coercivity_near_wells_and_at_large_t():
    V = make_almost_mathieu(1.0)
    # leading order: the sublevel radius matches K sqrt(t) as t -> 0
    assert _coercivity_ratio(V, 1e-4) == pytest.approx(1.0, abs=1e-3)
    for frac in (0.7, 0.85, 1.0):
        assert _coercivity_ratio(V, frac) <= 1.0


def test_mathieu_coercivity_constant_is_only_leading_order():
    # the quoted K is exceeded at intermediate t; the worst point is x = 1/4
    V = make_almost_mathieu(1.0)
    assert _coercivity_ratio(V, 0.5) == pytest.approx(math.pi / (2 * math.sqrt(2)), rel=1e-4)
    assert _coercivity_ratio(V, 0.3) > 1.0


def test_separable_power_shape_and_metadata():
    V = make_separable_power(2, 4, 3.0)
    x = np.array([[0.01, 0.0], [0.5, 0.5]])
    np.testing.assert_allclose(V(x), 3.0 * np.sum((np.sin(np.pi * x) / np.pi) ** 4, axis=1))
    assert V.estimated
    assert V.coercivity.P == 4
    grid = np.stack(np.meshgrid(*[np.linspace(0, 1, 201)] * 2, indexing="ij"), axis=-1).reshape(-1, 2)
    assert V(grid).max() <= V.sup_norm


def test_separable_power_rejects_odd_power():
    with pytest.raises(ValueError):
        make_separable_power(1, 3, 1.0)


def test_estimated_metadata_cover_analytic_values():
    exact = make_almost_mathieu(0.5)
    est = estimate_metadata(exact, samples=2000)
    assert est.estimated
    assert exact.lipschitz <= est.lipschitz <= 1.1 * exact.lipschitz
    assert exact.sup_norm <= est.sup_norm <= 1.1 * exact.sup_norm


def test_trivial_potentials_and_registry():
    assert np.all(make_zero(2)(np.zeros((3, 2))) == 0)
    assert np.all(make_constant(2.0)(np.linspace(0, 1, 5)) == 2.0)
    V = potential_from_name("almost_mathieu", **{"lambda": 2.0})
    assert V.params["lambda"] == 2.0
    assert set(POTENTIALS) >= {"almost_mathieu", "separable_power", "zero", "constant"}
    with pytest.raises(KeyError):
        potential_from_name("nope")


def test_shift_and_scale():
    V = make_almost_mathieu(1.0)
    W = V.scaled(0.25)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(W(x), 0.25 * V(x))
    assert W.sup_norm == pytest.approx(1.0)
    np.testing.assert_allclose(V.shifted(0.2)(x), V(x + 0.2))
