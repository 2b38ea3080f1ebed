import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tanlab.manifold import (
    FAMILIES, CurvatureSpectrum, EmbeddingSpec, envelope_spec, estimate_cs, evaluate_embedding,
    generate_embedding, generate_spectrum, normal_part, polynomial_features, quadratic_part, remainder,
    taylor_quadratic,
)

dims = st.integers(1, 6).flatmap(lambda m: st.tuples(st.just(m), st.integers(m + 1, m + 12)))
seeds = st.integers(0, 2 ** 31 - 1)


@given(dims, st.floats(0, 50), seeds)
@settings(max_examples=60, deadline=None)
def test_spectrum_within_kmax(mn, kmax, seed):
    m, n = mn
    sp = generate_spectrum(m, n, kmax, seed)
    assert sp.kappa.shape == (n - m, m)
    assert np.all(np.abs(sp.kappa) <= kmax)
    # one sign per normal direction
    for row in sp.kappa:
        assert np.all(row >= 0) or np.all(row <= 0)


def test_force_extreme_attains_kmax():
    sp = generate_spectrum(3, 10, 7.5, 1, force_extreme=True)
    assert np.max(np.abs(sp.kappa)) == 7.5


def test_spectrum_rejects_bad_input():
    with pytest.raises(ValueError):
        generate_spectrum(5, 5, 1.0, 0)
    with pytest.raises(ValueError):
        generate_spectrum(2, 5, -1.0, 0)
    with pytest.raises(ValueError, match="kmax"):
        CurvatureSpectrum(1, 2, np.array([[3.0]]), kmax=2.0)


def test_same_seed_same_germ_and_rotations_orthonormal():
    a = generate_embedding("quadratic", 4, 9, 3.0, 17, random_rotations=True)
    b = generate_embedding("quadratic", 4, 9, 3.0, 17, random_rotations=True)
    np.testing.assert_array_equal(a.spectrum.kappa, b.spectrum.kappa)
    np.testing.assert_array_equal(a.spectrum.rotations, b.spectrum.rotations)
    for v in a.spectrum.rotations:
        np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-12)
    c = generate_embedding("quadratic", 4, 9, 3.0, 18)
    assert not np.array_equal(a.spectrum.kappa, c.spectrum.kappa)


@pytest.mark.parametrize("family", FAMILIES)
def test_json_round_trip(family):
    spec = generate_embedding(family, 3, 7, 4.0, 5)
    back = EmbeddingSpec.from_json(spec.to_json())
    assert back.family == family and back.seed == spec.seed
    x = np.random.default_rng(0).uniform(-0.1, 0.1, (20, 3))
    np.testing.assert_array_equal(evaluate_embedding(back, x), evaluate_embedding(spec, x))
    assert set(json.loads(spec.to_json())) == {"family", "m", "n", "kmax", "kappa", "poly_coeffs", "rotations", "seed"}


def test_poly_coeffs_range_and_rules():
    spec = generate_embedding("smooth3_poly", 3, 8, 2.0, 0)
    assert spec.poly_coeffs.shape == (5, 3, 3)
    assert spec.poly_coeffs.min() >= 0 and spec.poly_coeffs.max() <= 10
    with pytest.raises(ValueError, match="poly_coeffs"):
        EmbeddingSpec("quadratic", spec.spectrum, spec.poly_coeffs)
    with pytest.raises(ValueError):
        EmbeddingSpec("smooth3_poly", spec.spectrum, spec.poly_coeffs + 20)
    with pytest.raises(ValueError, match="unknown family"):
        EmbeddingSpec("cubic", spec.spectrum)


def test_quadratic_form_by_hand():
    kappa = np.array([[2.0, -4.0], [1.0, 0.5]])
    spec = EmbeddingSpec("quadratic", CurvatureSpectrum(2, 4, kappa))
    x = np.array([0.3, -0.2])
    want = [0.5 * (2 * 0.09 - 4 * 0.04), 0.5 * (0.09 + 0.5 * 0.04)]
    np.testing.assert_allclose(quadratic_part(spec, x), want, rtol=1e-14)
    np.testing.assert_allclose(evaluate_embedding(spec, x), [0.3, -0.2, *want], rtol=1e-14)


def test_rotated_quadratic_matches_hessian():
    spec = generate_embedding("quadratic", 3, 6, 5.0, 2, random_rotations=True)
    sp = spec.spectrum
    x = np.array([0.1, -0.3, 0.2])
    for l in range(3):
        h = sp.rotations[l] @ np.diag(sp.kappa[l]) @ sp.rotations[l].T
        assert quadratic_part(spec, x)[l] == pytest.approx(0.5 * x @ h @ x, rel=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
def test_germ_vanishes_to_second_order(family):
    spec = generate_embedding(family, 3, 8, 6.0, 3)
    assert np.all(normal_part(spec, np.zeros(3)) == 0)
    d = np.array([0.6, -0.8, 0.0])
    # remainder is O(t^3): halving t shrinks it by ~8
    r1 = np.abs(remainder(spec, 1e-2 * d)).max()
    r2 = np.abs(remainder(spec, 5e-3 * d)).max()
    if family != "quadratic":
        assert r2 <= r1 / 7.5
    # Taylor part matches f to second order
    t = 1e-4
    np.testing.assert_allclose(normal_part(spec, t * d), taylor_quadratic(spec, t * d), rtol=1e-3, atol=1e-14)


def test_smooth1_curvature_sign():
    spec = EmbeddingSpec("smooth1_exp", CurvatureSpectrum(1, 2, np.array([[3.0]])))
    x = np.array([1e-4])
    # 1 - exp(q) ~ -q
    assert normal_part(spec, x)[0] == pytest.approx(-1.5e-8, rel=1e-6)


def test_cs_oracle_sin_one_dimension():
    k, nu = 4.0, 0.5
    spec = EmbeddingSpec("smooth2_sin", CurvatureSpectrum(1, 2, np.array([[k]])))
    q = k * nu * nu / 2
    truth = (q - math.sin(q)) / nu ** 3  # ratio increases with |x|, sup at the edge
    est = estimate_cs(spec, nu, grid_points_per_axis=41)
    assert est.cs == pytest.approx(1.2 * truth, rel=1e-12)


def test_cs_oracle_exp_sobol_route():
    # isotropic q: the ratio depends on ||x|| and grows with it, so the sup sits at a cube corner
    m, k, nu = 5, 2.0, 0.3
    spec = EmbeddingSpec("smooth1_exp", CurvatureSpectrum(m, m + 1, np.full((1, m), k)))
    r = nu * math.sqrt(m)
    q = k * r * r / 2
    truth = (math.expm1(q) - q) / r ** 3
    est = estimate_cs(spec, nu, seed=1)
    assert 0.97 * 1.2 * truth <= est.cs <= 1.2 * truth * (1 + 1e-12)


def test_cs_poly_one_dimension():
    nu = 0.2
    spec = EmbeddingSpec("smooth3_poly", CurvatureSpectrum(1, 2, np.array([[0.0]])), np.array([[[1.0, 2.0, 3.0]]]))
    truth = 1 + 2 * nu + 3 * nu * nu
    assert estimate_cs(spec, nu).cs == pytest.approx(1.2 * truth, rel=1e-12)


def test_cs_quadratic_is_zero_and_rejects_bad_width():
    spec = generate_embedding("quadratic", 2, 5, 3.0, 0)
    assert estimate_cs(spec, 0.1).cs == 0.0
    with pytest.raises(ValueError):
        estimate_cs(spec, 0.0)


@pytest.mark.parametrize("family", ["smooth1_exp", "smooth2_sin", "smooth3_poly"])
def test_envelope_dominates_random_draws(family):
    nu = 0.05
    env = estimate_cs(envelope_spec(family, 2, 10.0), nu).cs
    for seed in range(3):
        assert estimate_cs(generate_embedding(family, 2, 6, 10.0, seed), nu).cs <= env * (1 + 1e-9)


@pytest.mark.parametrize("family,rot", [("quadratic", False), ("quadratic", True), ("smooth3_poly", False)])
def test_polynomial_features_exact(family, rot):
    spec = generate_embedding(family, 3, 9, 5.0, 4, random_rotations=rot)
    pf = polynomial_features(spec)
    x = np.random.default_rng(1).uniform(-0.2, 0.2, (50, 3))
    np.testing.assert_allclose(pf.features(x) @ pf.coef.T, normal_part(spec, x), rtol=1e-12, atol=1e-16)
    # homogeneity: feature i scales as nu**degree
    np.testing.assert_allclose(pf.features(3 * x), pf.features(x) * 3.0 ** pf.degrees, rtol=1e-12)


def test_no_features_for_transcendental_germs():
    assert polynomial_features(generate_embedding("smooth2_sin", 2, 4, 1.0, 0)) is None


def test_rejects_wrong_dimension():
    spec = generate_embedding("quadratic", 2, 4, 1.0, 0)
    with pytest.raises(ValueError, match="length m=2"):
        evaluate_embedding(spec, np.zeros(3))
