"""
Tests for gamma matrix representations.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.clifford import ad_action, build_gamma_rep, gamma_of_vector
from src.errors import CliffordStructureError, DimensionError


class TestGammaRep:

    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_relations_hold_to_rounding(self, n):
        rep = build_gamma_rep(n)
        assert rep.N == 2 ** (n // 2)
        assert rep.clifford_residual() < 1e-12
        assert rep.beta_residual() < 1e-12
        assert rep.kappa_residual() < 1e-12

    def test_two_dimensional_seed(self, rep2):
        assert np.array_equal(rep2.gammas[0], np.array([[0, 1], [-1, 0]]))
        assert np.array_equal(rep2.gammas[1], np.array([[0, 1], [1, 0]]))
        # i beta gamma_0 is the identity, so the reduced inner product needs no spinor weight
        assert np.allclose(1j * rep2.beta @ rep2.gammas[0], np.eye(2))

    @pytest.mark.parametrize("n, has_kappa", [(2, True), (4, True), (6, False), (8, False)])
    def test_charge_conjugation_presence(self, n, has_kappa):
        rep = build_gamma_rep(n)
        assert (rep.kappa is not None) == has_kappa

    def test_kappa_is_real_and_commutes_with_gammas(self, rep4):
        K = rep4.kappa
        assert np.isrealobj(K) or np.allclose(K.imag, 0.0)
        for g in rep4.gammas:
            assert np.allclose(K @ np.conj(g), g @ K, atol=1e-12)

    def test_apply_kappa_is_an_involution(self, rep4, rng):
        psi = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
        assert np.allclose(rep4.apply_kappa(rep4.apply_kappa(psi)), psi, atol=1e-12)

    def test_apply_kappa_without_kappa(self):
        with pytest.raises(CliffordStructureError):
            build_gamma_rep(6).apply_kappa(np.ones(8))

    @pytest.mark.parametrize("n", [0, 1, 3, 10, 2.0])
    def test_unsupported_dimensions(self, n):
        with pytest.raises(DimensionError):
            build_gamma_rep(n)

    def test_construction_is_reproducible(self):
        a, b = build_gamma_rep(4), build_gamma_rep(4)
        for ga, gb in zip(a.gammas, b.gammas):
            assert np.array_equal(ga, gb)
        assert np.array_equal(a.kappa, b.kappa)


class TestCliffordMaps:

    @given(st.lists(st.floats(min_value=-3, max_value=3, allow_nan=False), min_size=4, max_size=4))
    @settings(max_examples=30, deadline=None)
    def test_gamma_of_vector_squares_to_minkowski_norm(self, v):
        rep = build_gamma_rep(4)
        g = gamma_of_vector(rep, v)
        norm = -v[0] ** 2 + sum(c * c for c in v[1:])
        assert np.allclose(g @ g, norm * np.eye(4), atol=1e-9)

    def test_gamma_of_vector_wrong_length(self, rep2):
        with pytest.raises(DimensionError):
            gamma_of_vector(rep2, [1.0, 2.0, 3.0])

    def test_ad_action_of_a_generator_is_a_reflection(self, rep2):
        # gamma_1 anticommutes with gamma_0 and commutes with itself
        assert np.allclose(ad_action(rep2, rep2.gammas[1]), np.diag([-1.0, 1.0]), atol=1e-12)

    def test_ad_action_of_a_boost_is_lorentz(self, rep4):
        rapidity = 0.7
        generator = 0.5 * rapidity * rep4.gammas[0] @ rep4.gammas[1]
        a = np.cosh(0.5 * rapidity) * np.eye(4) + np.sinh(0.5 * rapidity) * rep4.gammas[0] @ rep4.gammas[1]
        assert np.allclose(generator @ generator, (0.5 * rapidity) ** 2 * np.eye(4))
        L = ad_action(rep4, a)
        assert np.allclose(L.T @ rep4.eta @ L, rep4.eta, atol=1e-10)
        assert abs(abs(L[0, 0]) - np.cosh(rapidity)) < 1e-10

    def test_ad_action_rejects_singular_matrices(self, rep2):
        with pytest.raises(CliffordStructureError):
            ad_action(rep2, np.zeros((2, 2)))
