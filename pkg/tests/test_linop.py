import itertools
import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lincap.fock import basis_state, enumerate_basis, state_from_terms
from lincap.linop import (
    U2Angles,
    apply,
    check_unitary,
    embed,
    hermitian_from_params,
    is_unitary,
    lift,
    mode_permutation,
    permanent,
    propagate,
    u2_from_angles,
    unitary_from_json,
    unitary_from_params,
    unitary_to_json,
)
from lincap.protocols import beam_splitter
from lincap.verify import brute_force_permanent

from conftest import random_unitary


def polynomial_lift(U, n):
    """Lift by expanding prod_k (sum_j U[j,k] x_j)^{k_k} in commuting variables."""
    N = U.shape[0]
    basis = enumerate_basis(n, N)
    L = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, k in enumerate(basis.elements):
        poly = {(0,) * N: 1.0 + 0j}
        for mode, count in enumerate(k):
            for _ in range(count):
                nxt = defaultdict(complex)
                for mono, c in poly.items():
                    for j in range(N):
                        m = list(mono)
                        m[j] += 1
                        nxt[tuple(m)] += c * U[j, mode]
                poly = nxt
        norm_k = math.sqrt(math.prod(math.factorial(c) for c in k))
        for mono, c in poly.items():
            norm_m = math.sqrt(math.prod(math.factorial(c) for c in mono))
            L[basis.index[mono], col] = c * norm_m / norm_k
    return L


class TestPermanent:
    @pytest.mark.parametrize("size", range(0, 6))
    def test_matches_brute_force(self, rng, size):
        for _ in range(10):
            a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
            assert abs(permanent(a) - brute_force_permanent(a)) < 1e-12

    def test_identity_and_ones(self):
        assert permanent(np.eye(4)) == pytest.approx(1)
        assert permanent(np.ones((5, 5))) == pytest.approx(math.factorial(5))

    def test_hadamard_two_by_two(self):
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        assert abs(permanent(h)) < 1e-15

    def test_non_square(self):
        with pytest.raises(ValueError):
            permanent(np.ones((2, 3)))

    def test_size_limit(self):
        with pytest.raises(ValueError):
            permanent(np.ones((9, 9)))

    @given(arrays(np.float64, (4, 4), elements=st.floats(-3, 3)))
    def test_invariant_under_row_permutation_and_transpose(self, a):
        p = permanent(a)
        assert permanent(a[[2, 0, 3, 1]]) == pytest.approx(p, abs=1e-9)
        assert permanent(a.T) == pytest.approx(p, abs=1e-9)


class TestCharts:
    def test_hermitian(self, rng):
        H = hermitian_from_params(rng.standard_normal(16), 4)
        np.testing.assert_allclose(H, H.conj().T)

    def test_zero_params_identity(self):
        np.testing.assert_allclose(unitary_from_params(np.zeros(9), 3), np.eye(3), atol=1e-15)

    def test_batched_unitary(self, rng):
        U = unitary_from_params(rng.standard_normal((7, 3, 16)), 4)
        assert U.shape == (7, 3, 4, 4)
        assert is_unitary(U)

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            hermitian_from_params(np.zeros(5), 2)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            unitary_from_params(np.array([np.nan, 0, 0, 0]), 2)

    @pytest.mark.parametrize("angles", [(0.3, 1.0, 2.0, -0.5), (0.0,), (np.pi / 4, 0, 0, 0)])
    def test_u2_unitary(self, angles):
        assert is_unitary(u2_from_angles(U2Angles(*angles)))

    def test_angles_wrap(self):
        assert U2Angles(7.0).theta == pytest.approx(7.0 - 2 * np.pi)

    def test_angles_reject_nan(self):
        with pytest.raises(ValueError):
            U2Angles(float("nan"))

    def test_check_unitary(self):
        with pytest.raises(ValueError, match="not unitary"):
            check_unitary(np.ones((2, 2)))


class TestEmbedAndPermute:
    def test_embed(self):
        u = u2_from_angles(U2Angles(0.4, 0.1, 0.2, 0.3))
        U = embed(u, 1, 4)
        np.testing.assert_allclose(U[1:3, 1:3], u)
        assert U[0, 0] == 1 and U[3, 3] == 1 and U[0, 1] == 0

    def test_embed_out_of_range(self):
        with pytest.raises(ValueError):
            embed(np.eye(2), 3, 4)

    def test_permutation_moves_photon(self):
        P = mode_permutation([2, 0, 1])
        s = apply(P, basis_state(enumerate_basis(1, 3), (1, 0, 0)))
        assert s.terms() == {(0, 0, 1): pytest.approx(1)}

    def test_bad_permutation(self):
        with pytest.raises(ValueError):
            mode_permutation([0, 0, 1])


class TestLift:
    def test_single_photon_is_identity_map(self, rng):
        U = random_unitary(rng, 4)
        np.testing.assert_allclose(lift(U, 1), U, atol=1e-14)

    def test_vacuum(self, rng):
        np.testing.assert_allclose(lift(random_unitary(rng, 3), 0), [[1]])

    @pytest.mark.parametrize("n,N", [(2, 4), (3, 3), (2, 2), (3, 4)])
    def test_matches_polynomial_expansion(self, rng, n, N):
        U = random_unitary(rng, N)
        np.testing.assert_allclose(lift(U, n), polynomial_lift(U, n), atol=1e-12)

    @pytest.mark.parametrize("n,N", [(2, 4), (3, 3), (1, 5)])
    def test_unitary_over_200_draws(self, rng, n, N):
        L = lift(random_unitary(rng, N, size=200), n)
        err = np.abs(L @ np.conj(np.swapaxes(L, -1, -2)) - np.eye(L.shape[-1])).max()
        assert err < 1e-9

    def test_homomorphism_over_200_draws(self, rng):
        U, V = random_unitary(rng, 4, 200), random_unitary(rng, 4, 200)
        assert np.abs(lift(U @ V, 2) - lift(U, 2) @ lift(V, 2)).max() < 1e-9

    def test_hong_ou_mandel(self):
        out = apply(beam_splitter(0, 1, 2), basis_state(enumerate_basis(2, 2), (1, 1)))
        assert abs(out.amplitudes[1]) < 1e-15  # no |1,1> coincidence
        assert abs(out.amplitudes[0]) ** 2 == pytest.approx(0.5)

    def test_beam_splitter_example(self):
        s = basis_state(enumerate_basis(2, 4), (0, 1, 1, 0))
        out = apply(beam_splitter(1, 2, 4), s)
        want = state_from_terms({(0, 0, 2, 0): 1, (0, 2, 0, 0): -1})
        np.testing.assert_allclose(out.amplitudes, want.amplitudes, atol=1e-15)

    def test_apply_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply(np.eye(3), basis_state(enumerate_basis(1, 2), (1, 0)))


class TestPropagate:
    @pytest.mark.parametrize("n,N", [(0, 2), (1, 3), (2, 4), (3, 3), (3, 4), (4, 2)])
    def test_matches_lift(self, rng, n, N):
        dim = math.comb(n + N - 1, n)
        U = random_unitary(rng, N, size=5)
        c = rng.standard_normal((5, dim)) + 1j * rng.standard_normal((5, dim))
        want = np.einsum("bij,bj->bi", lift(U, n), c)
        np.testing.assert_allclose(propagate(U, c, n), want, atol=1e-12)

    def test_broadcasts_one_state_over_many_unitaries(self, rng):
        U = random_unitary(rng, 4, size=6)
        c = rng.standard_normal(10) + 0j
        out = propagate(U, c, 2)
        assert out.shape == (6, 10)
        np.testing.assert_allclose(out[3], lift(U[3], 2) @ c, atol=1e-12)


def test_json_round_trip(rng):
    U = random_unitary(rng, 4)
    np.testing.assert_array_equal(unitary_from_json(unitary_to_json(U)), U)
