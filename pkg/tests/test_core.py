import numpy as np
import pytest

from tensortrack.core import (
    TensorSubspace,
    outer_rank_one,
    rank_surrogate,
    rebalance,
    refold,
    singular_values,
    synthesize_slice,
    unfold,
)


def random_subspace(rng, dims, rank):
    return TensorSubspace(
        tuple(
            (rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))) / np.sqrt(2)
            for n in dims
        )
    )


def brute_force_outer(vectors):
    dims = [len(v) for v in vectors]
    out = np.zeros(dims, dtype=np.complex128)
    for idx in np.ndindex(*dims):
        prod = 1.0 + 0.0j
        for axis, n in enumerate(idx):
            prod *= vectors[axis][n]
        out[idx] = prod
    return out


class TestOuterRankOne:
    def test_canonical_vectors(self):
        out = outer_rank_one([[1, 0], [1, 1]])
        np.testing.assert_array_equal(out, [[1, 1], [0, 0]])

    def test_single_complex_entry(self):
        out = outer_rank_one([[1j, 0], [0, 1]])
        np.testing.assert_array_equal(out, [[0, 1j], [0, 0]])

    def test_matches_brute_force_triple_loop(self):
        rng = np.random.default_rng(3)
        vecs = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(3)]
        np.testing.assert_allclose(outer_rank_one(vecs), brute_force_outer(vecs), rtol=1e-13)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            outer_rank_one([])

    def test_empty_vector_rejected(self):
        with pytest.raises(ValueError):
            outer_rank_one([[1.0], []])


class TestSynthesizeSlice:
    def test_basis_selection(self):
        rng = np.random.default_rng(0)
        sub = random_subspace(rng, (4, 3), 3)
        gamma = np.zeros(3)
        gamma[0] = 1.0
        expected = np.outer(sub.factors[0][:, 0], sub.factors[1][:, 0])
        np.testing.assert_allclose(synthesize_slice(sub, gamma), expected, rtol=1e-13)

    def test_zero_coefficients(self):
        rng = np.random.default_rng(1)
        sub = random_subspace(rng, (4, 3), 2)
        np.testing.assert_array_equal(synthesize_slice(sub, np.zeros(2)), np.zeros((4, 3)))

    def test_matches_brute_force_sum(self):
        rng = np.random.default_rng(2)
        sub = random_subspace(rng, (4, 5), 3)
        gamma = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        expected = sum(
            gamma[r] * brute_force_outer([f[:, r] for f in sub.factors]) for r in range(3)
        )
        np.testing.assert_allclose(synthesize_slice(sub, gamma), expected, rtol=1e-12)

    def test_rank_mismatch(self):
        rng = np.random.default_rng(3)
        sub = random_subspace(rng, (4, 3), 2)
        with pytest.raises(ValueError):
            synthesize_slice(sub, np.zeros(3))

    def test_linearity(self):
        rng = np.random.default_rng(4)
        sub = random_subspace(rng, (5, 6, 4), 3)
        g1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        g2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lhs = synthesize_slice(sub, a * g1 + b * g2)
        rhs = a * synthesize_slice(sub, g1) + b * synthesize_slice(sub, g2)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


class TestSingularValues:
    def test_unit_columns(self):
        rng = np.random.default_rng(5)
        factors = []
        for n in (4, 5):
            f = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
            factors.append(f / np.linalg.norm(f, axis=0))
        sub = TensorSubspace(tuple(factors))
        np.testing.assert_allclose(singular_values(sub), np.ones(3), rtol=1e-13)

    def test_homogeneity(self):
        rng = np.random.default_rng(6)
        sub = random_subspace(rng, (4, 5), 3)
        base = singular_values(sub)
        scaled = list(f.copy() for f in sub.factors)
        scaled[0][:, 1] *= 2.0
        doubled = singular_values(TensorSubspace(tuple(scaled)))
        np.testing.assert_allclose(doubled[1], 2 * base[1], rtol=1e-13)
        np.testing.assert_allclose(doubled[[0, 2]], base[[0, 2]], rtol=1e-13)

    def test_norm_product_oracle_three_modes(self):
        rng = np.random.default_rng(7)
        sub = random_subspace(rng, (4, 5), 3)
        third = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        got = singular_values(sub, mode_m_factor=third)
        expected = np.array(
            [
                np.sqrt((np.abs(sub.factors[0][:, r]) ** 2).sum())
                * np.sqrt((np.abs(sub.factors[1][:, r]) ** 2).sum())
                * np.sqrt((np.abs(third[:, r]) ** 2).sum())
                for r in range(3)
            ]
        )
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_rank_mismatch(self):
        rng = np.random.default_rng(8)
        sub = random_subspace(rng, (4, 5), 3)
        with pytest.raises(ValueError):
            singular_values(sub, mode_m_factor=np.ones((6, 2)))


class TestRankSurrogate:
    def test_identity_factors(self):
        assert rank_surrogate([np.eye(2), np.eye(2)]) == pytest.approx(2.0)

    def test_balanced_rank_one_three_factors(self):
        # norms 2, 2, 2 per factor: sigma = 8, surrogate = 8**(2/3) = 4
        cols = [2 * np.eye(n, 1) for n in (3, 4, 5)]
        assert rank_surrogate(cols) == pytest.approx(8 ** (2 / 3), rel=1e-12)

    def test_frobenius_oracle(self):
        rng = np.random.default_rng(9)
        mats = [rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3)) for n in (4, 5, 6)]
        expected = sum(np.sum(np.abs(m) ** 2) for m in mats) / 3
        assert rank_surrogate(mats) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("nmodes", [2, 3, 4])
    def test_balanced_equals_singular_value_sum(self, nmodes):
        rng = np.random.default_rng(10 + nmodes)
        rank = 4
        gains = rng.uniform(0.5, 2.0, size=rank)
        mats = []
        for n in (5, 6, 7, 8)[:nmodes]:
            f = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
            f *= gains[np.newaxis, :] / np.linalg.norm(f, axis=0)
            mats.append(f)
        sigma = gains**nmodes
        expected = np.sum(sigma ** (2 / nmodes))
        assert rank_surrogate(mats) == pytest.approx(expected, rel=1e-10)

    def test_matrix_nuclear_norm_with_orthogonal_columns(self):
        rng = np.random.default_rng(20)
        rank = 3
        q1, _ = np.linalg.qr(rng.standard_normal((8, rank)) + 1j * rng.standard_normal((8, rank)))
        q2, _ = np.linalg.qr(rng.standard_normal((7, rank)) + 1j * rng.standard_normal((7, rank)))
        gains = rng.uniform(0.5, 2.0, size=rank)
        a1 = q1 * gains[np.newaxis, :]
        a2 = q2 * gains[np.newaxis, :]
        nuclear = np.linalg.svd(a1 @ a2.T, compute_uv=False).sum()
        assert rank_surrogate([a1, a2]) == pytest.approx(nuclear, rel=1e-8)


class TestRebalance:
    def test_geometric_mean(self):
        a1 = np.array([[4.0], [0.0]], dtype=complex)
        a2 = np.array([[1.0], [0.0], [0.0]], dtype=complex)
        out = rebalance(TensorSubspace((a1, a2)))
        assert np.linalg.norm(out.factors[0]) == pytest.approx(2.0)
        assert np.linalg.norm(out.factors[1]) == pytest.approx(2.0)

    def test_idempotent(self):
        rng = np.random.default_rng(21)
        sub = rebalance(random_subspace(rng, (4, 5, 6), 3))
        again = rebalance(sub)
        for f, g in zip(sub.factors, again.factors):
            np.testing.assert_allclose(f, g, atol=1e-15)

    def test_synthesis_unchanged(self):
        rng = np.random.default_rng(22)
        sub = random_subspace(rng, (5, 6), 4)
        gamma = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        before = synthesize_slice(sub, gamma)
        after = synthesize_slice(rebalance(sub), gamma)
        np.testing.assert_allclose(before, after, rtol=1e-12)

    def test_preserves_singular_values_and_equalizes_norms(self):
        rng = np.random.default_rng(23)
        sub = random_subspace(rng, (5, 6, 7), 3)
        bal = rebalance(sub)
        np.testing.assert_allclose(singular_values(bal), singular_values(sub), rtol=1e-12)
        norms = np.stack([np.linalg.norm(f, axis=0) for f in bal.factors])
        spread = (norms.max(axis=0) - norms.min(axis=0)) / norms.max(axis=0)
        assert spread.max() < 1e-12

    def test_zero_component_stays_zero(self):
        a1 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
        a2 = np.array([[2.0, 0.0], [0.0, 0.0]], dtype=complex)
        out = rebalance(TensorSubspace((a1, a2)))
        np.testing.assert_array_equal(out.factors[0][:, 1], 0)
        np.testing.assert_array_equal(out.factors[1][:, 1], 0)

    def test_degenerate_component_rejected(self):
        a1 = np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex)
        a2 = np.array([[2.0, 0.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(ValueError, match="component 1"):
            rebalance(TensorSubspace((a1, a2)))

    def test_phases_untouched(self):
        rng = np.random.default_rng(24)
        sub = random_subspace(rng, (4, 4), 2)
        bal = rebalance(sub)
        for f, g in zip(sub.factors, bal.factors):
            mask = np.abs(f) > 1e-12
            np.testing.assert_allclose(
                np.angle(f[mask]), np.angle(g[mask]), atol=1e-12
            )


class TestUnfold:
    def test_mode1_rows_are_slices(self):
        t = np.arange(8).reshape(2, 2, 2)
        m = unfold(t, 1)
        np.testing.assert_array_equal(m, [[0, 1, 2, 3], [4, 5, 6, 7]])

    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(25)
        t = rng.standard_normal((3, 4, 5)) + 1j * rng.standard_normal((3, 4, 5))
        for mode in (1, 2, 3):
            back = refold(unfold(t, mode), mode, t.shape)
            np.testing.assert_array_equal(back, t)

    def test_rank_one_unfolding(self):
        rng = np.random.default_rng(26)
        vecs = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for n in (4, 5, 6)]
        t = outer_rank_one(vecs)
        for mode in (1, 2, 3):
            s = np.linalg.svd(unfold(t, mode), compute_uv=False)
            assert s[1] < 1e-10 * s[0]

    def test_unfolding_rank_bounded_by_subspace_rank(self):
        rng = np.random.default_rng(27)
        rank = 3
        sub = random_subspace(rng, (6, 7), rank)
        gamma = rng.standard_normal(rank) + 1j * rng.standard_normal(rank)
        t = synthesize_slice(sub, gamma)
        for mode in (1, 2):
            s = np.linalg.svd(unfold(t, mode), compute_uv=False)
            assert (s[rank:] < 1e-10 * s[0]).all()

    def test_mode_out_of_range(self):
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), 3)
