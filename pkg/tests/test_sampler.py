import numpy as np
import pytest
from oracles import random_subspace

from tensortrack.core import TensorSubspace, synthesize_slice
from tensortrack.sampler import (
    SamplingDistribution,
    adaptive_step,
    draw_samples,
    entry_scores,
    expected_count_trace,
    expected_sample_count,
    row_scores,
)
from tensortrack.tracker import Fixed, StepConfig, init_state


def brute_force_entry_scores(subspace, beta):
    """Double loop over the raw score law, then blend and renormalize."""
    n1, n2 = subspace.dims
    r = subspace.rank
    bars = []
    for f in subspace.factors:
        bars.append(f / np.linalg.norm(f, axis=0)[None, :])
    raw = np.zeros((n1, n2))
    for i in range(n1):
        for j in range(n2):
            raw[i, j] = (
                np.sum(np.abs(bars[0][i, :]) ** 2) + np.sum(np.abs(bars[1][j, :]) ** 2)
            ) / (r * (n1 + n2))
    raw /= raw.sum()
    blended = (1 - beta) * raw + beta / raw.size
    return blended / blended.sum()


class TestEntryScores:
    def test_equal_row_norms_give_uniform(self):
        f1 = np.fft.fft(np.eye(6), axis=0, norm="ortho")[:, :3]
        f2 = np.fft.fft(np.eye(4), axis=0, norm="ortho")[:, :2]
        # pad ranks to match
        sub = TensorSubspace((f1[:, :2], f2))
        dist = entry_scores(sub, beta=0.0)
        np.testing.assert_allclose(dist.scores, 1.0 / 24, atol=1e-12)

    def test_scores_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            sub = random_subspace(rng, (7, 5), 3)
            dist = entry_scores(sub)
            assert abs(dist.scores.sum() - 1.0) < 1e-12

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(1)
        sub = random_subspace(rng, (6, 5), 3)
        for beta in (0.0, 0.1, 0.5):
            dist = entry_scores(sub, beta=beta)
            np.testing.assert_allclose(
                dist.scores, brute_force_entry_scores(sub, beta), rtol=1e-12
            )

    def test_column_scale_invariance(self):
        rng = np.random.default_rng(2)
        sub = random_subspace(rng, (6, 5), 3)
        scaled = [f.copy() for f in sub.factors]
        scaled[0][:, 1] *= 3.7 - 1.2j
        scaled[1][:, 2] *= -0.01j
        dist_a = entry_scores(sub)
        dist_b = entry_scores(TensorSubspace(tuple(scaled)))
        np.testing.assert_allclose(dist_a.scores, dist_b.scores, rtol=1e-12)

    def test_zero_column_rejected(self):
        f1 = np.ones((4, 2), dtype=complex)
        f1[:, 1] = 0.0
        sub = TensorSubspace((f1, np.ones((3, 2), dtype=complex)))
        with pytest.raises(ValueError):
            entry_scores(sub)

    def test_floor_from_blend(self):
        rng = np.random.default_rng(3)
        sub = random_subspace(rng, (6, 5), 3)
        dist = entry_scores(sub, beta=0.1)
        assert dist.scores.min() >= 0.1 / 30 - 1e-15


class TestRowScores:
    def test_marginalization_identity(self):
        rng = np.random.default_rng(4)
        sub = random_subspace(rng, (7, 5), 3)
        for beta in (0.0, 0.1):
            entries = entry_scores(sub, beta=beta)
            rows = row_scores(sub, beta=beta)
            np.testing.assert_allclose(
                entries.scores.sum(axis=1), rows.scores, rtol=1e-12, atol=1e-14
            )

    def test_uniform_for_equal_rows(self):
        f1 = np.fft.fft(np.eye(8), axis=0, norm="ortho")[:, :3]
        f2 = np.fft.fft(np.eye(6), axis=0, norm="ortho")[:, :3]
        sub = TensorSubspace((f1, f2))
        rows = row_scores(sub, beta=0.0)
        np.testing.assert_allclose(rows.scores, 1.0 / 8, atol=1e-12)

    def test_sum_to_one(self):
        rng = np.random.default_rng(5)
        rows = row_scores(random_subspace(rng, (9, 4), 2))
        assert abs(rows.scores.sum() - 1.0) < 1e-12

    def test_closed_form(self):
        rng = np.random.default_rng(6)
        sub = random_subspace(rng, (6, 4), 2)
        n1, n2, r = 6, 4, 2
        bar = sub.factors[0] / np.linalg.norm(sub.factors[0], axis=0)[None, :]
        raw = (n2 * np.sum(np.abs(bar) ** 2, axis=1) + r) / (r * (n1 + n2))
        raw /= raw.sum()
        expected = 0.9 * raw + 0.1 / n1
        np.testing.assert_allclose(row_scores(sub, beta=0.1).scores, expected, rtol=1e-12)


class TestDrawSamples:
    def test_point_mass_with_replacement(self):
        scores = np.zeros(20)
        scores[7] = 1.0
        dist = SamplingDistribution(scores, "rows")
        plan = draw_samples(dist, 50, True, np.random.default_rng(0))
        assert plan.omega.tolist() == [7]

    def test_without_replacement_exact_count(self):
        rng = np.random.default_rng(1)
        dist = SamplingDistribution(np.full(30, 1 / 30), "rows")
        plan = draw_samples(dist, 12, False, rng)
        assert plan.size == 12
        assert len(np.unique(plan.omega)) == 12

    def test_without_replacement_full_domain(self):
        rng = np.random.default_rng(2)
        dist = SamplingDistribution(np.full(10, 0.1), "rows")
        plan = draw_samples(dist, 10, False, rng)
        assert sorted(plan.omega.tolist()) == list(range(10))

    def test_forced_indices_included_and_counted(self):
        rng = np.random.default_rng(3)
        dist = SamplingDistribution(np.full(10, 0.1), "rows")
        plan = draw_samples(dist, 4, False, rng, forced=[0, 5])
        assert plan.size == 4
        assert {0, 5} <= set(plan.omega.tolist())

    def test_with_replacement_never_exceeds_k(self):
        rng = np.random.default_rng(4)
        scores = rng.random(40)
        dist = SamplingDistribution(scores / scores.sum(), "rows")
        for k in (1, 5, 17):
            assert draw_samples(dist, k, True, rng).size <= k

    def test_dedup_count_matches_formula(self):
        # uniform over 400 entries, K=50: E|omega| = 400 (1 - (1 - 1/400)^50)
        n, k, trials = 400, 50, 4000
        dist = SamplingDistribution(np.full(n, 1 / n), "entries")
        rng = np.random.default_rng(5)
        sizes = [draw_samples(dist, k, True, rng).size for _ in range(trials)]
        expected = n * (1 - (1 - 1 / n) ** k)
        se = np.std(sizes, ddof=1) / np.sqrt(trials)
        assert abs(np.mean(sizes) - expected) < 3 * se

    def test_k_out_of_range(self):
        dist = SamplingDistribution(np.full(5, 0.2), "rows")
        with pytest.raises(ValueError):
            draw_samples(dist, 0, True, np.random.default_rng(0))
        with pytest.raises(ValueError):
            draw_samples(dist, 6, False, np.random.default_rng(0))


class TestExpectedSampleCount:
    def test_uniform_closed_form(self):
        n, k = 50, 10
        dist = SamplingDistribution(np.full(n, 1 / n), "rows")
        assert expected_sample_count(dist, k) == pytest.approx(n * (1 - (1 - 1 / n) ** k))

    def test_point_mass(self):
        scores = np.zeros(9)
        scores[3] = 1.0
        dist = SamplingDistribution(scores, "rows")
        for k in (1, 10, 100):
            assert expected_sample_count(dist, k) == pytest.approx(1.0)

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(6)
        scores = rng.random(60) + 0.01
        dist = SamplingDistribution(scores / scores.sum(), "entries")
        k, trials = 30, 20000
        draws = rng.choice(60, size=(trials, k), p=dist.flat)
        sizes = (np.diff(np.sort(draws, axis=1), axis=1) != 0).sum(axis=1) + 1
        se = sizes.std(ddof=1) / np.sqrt(trials)
        assert abs(expected_sample_count(dist, k) - sizes.mean()) < 3 * se

    def test_running_average(self):
        d1 = SamplingDistribution(np.full(4, 0.25), "rows")
        d2 = SamplingDistribution(np.array([1.0, 0, 0, 0]), "rows")
        trace = expected_count_trace([d1, d2], 3)
        e1 = expected_sample_count(d1, 3)
        np.testing.assert_allclose(trace, [e1, (e1 + 1.0) / 2])


class TestAdaptiveStep:
    def _tracked_state(self, rng, sub):
        cfg = StepConfig(lam=0.05, rank=sub.rank, step=Fixed(0.02), warm_start=sub)
        return init_state(cfg, sub.dims, rng)

    def test_full_budget_reduces_to_full_observation(self):
        rng = np.random.default_rng(7)
        sub = random_subspace(rng, (6, 5), 2)
        truth = synthesize_slice(sub, rng.standard_normal(2) + 1j * rng.standard_normal(2))
        state = self._tracked_state(rng, sub)
        calls = []

        def source(t, idx):
            calls.append(np.asarray(idx))
            return truth[tuple(np.asarray(idx).T)]

        state, plan, report = adaptive_step(
            state, source, 30, False, rng, domain="entries", frame=0
        )
        assert plan.size == 30
        assert len(calls) == 1 and calls[0].shape == (30, 2)
        assert np.linalg.norm(report.residual) < 1e-8

    def test_source_consulted_only_at_sampled_indices(self):
        rng = np.random.default_rng(8)
        sub = random_subspace(rng, (8, 8), 2)
        truth = synthesize_slice(sub, rng.standard_normal(2) + 1j * rng.standard_normal(2))
        state = self._tracked_state(rng, sub)
        seen = set()

        def source(t, idx):
            idx = np.asarray(idx)
            seen.update(map(tuple, idx.tolist()))
            return truth[tuple(idx.T)]

        state, plan, _ = adaptive_step(state, source, 12, False, rng, domain="entries", frame=0)
        assert len(seen) == 12
        multi = set(map(tuple, np.stack(np.unravel_index(plan.omega, (8, 8)), axis=1).tolist()))
        assert seen == multi

    def test_row_domain_expands_full_lines(self):
        rng = np.random.default_rng(9)
        sub = random_subspace(rng, (6, 5), 2)
        truth = synthesize_slice(sub, rng.standard_normal(2) + 1j * rng.standard_normal(2))
        state = self._tracked_state(rng, sub)
        widths = []

        def source(t, idx):
            widths.append(len(np.asarray(idx)))
            return truth[tuple(np.asarray(idx).T)]

        _, plan, _ = adaptive_step(
            state, source, 3, False, rng, domain="rows", forced=[0], frame=0
        )
        assert plan.size == 3
        assert 0 in plan.omega
        assert widths == [15]  # 3 rows x 5 columns

    def test_near_uniform_scores_sample_like_uniform(self):
        # equal-row-norm factors give beta-blended uniform scores; the drawn
        # mask frequencies must be flat across the domain
        f1 = np.fft.fft(np.eye(10), axis=0, norm="ortho")[:, :2]
        f2 = np.fft.fft(np.eye(8), axis=0, norm="ortho")[:, :2]
        sub = TensorSubspace((f1, f2))
        truth = synthesize_slice(sub, np.array([1.0, 0.5j]))
        counts = np.zeros(80)
        n_seeds = 400
        for seed in range(n_seeds):
            rng = np.random.default_rng(seed)
            state = self._tracked_state(rng, sub)

            def source(t, idx):
                return truth[tuple(np.asarray(idx).T)]

            _, plan, _ = adaptive_step(state, source, 20, False, rng, domain="entries", frame=0)
            counts[plan.omega] += 1
        freq = counts / (n_seeds * 20)
        np.testing.assert_allclose(freq, 1.0 / 80, atol=4 * np.sqrt((1 / 80) / n_seeds / 20) + 0.003)
