"""Adaptive randomized subsampling driven by subspace importance scores.

Entries (or full phase-encode rows) are scored by how strongly they project
onto the current subspace: columns are normalized first, so the scores are
invariant to per-column rescaling, and the per-index score aggregates the
squared row energies of the normalized factors.  Scores are blended with a
uniform floor before use so that a confident warm start can never permanently
starve an index, then renormalized to a proper distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TensorSubspace
from .observation import EntryMask, MeasurementBatch, weighted_draw_without_replacement
from .tracker import StepReport, TrackerState, track_step

__all__ = [
    "SamplingDistribution",
    "SamplePlan",
    "entry_scores",
    "row_scores",
    "draw_samples",
    "expected_sample_count",
    "expected_count_trace",
    "adaptive_step",
]

DEFAULT_UNIFORM_BLEND = 0.1


@dataclass(frozen=True)
class SamplingDistribution:
    """Importance scores over entries of the frame domain or over its rows."""

    scores: np.ndarray
    domain_kind: str  # "entries" | "rows"

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if self.domain_kind not in ("entries", "rows"):
            raise ValueError(f"unknown domain kind {self.domain_kind!r}")
        if self.domain_kind == "rows" and scores.ndim != 1:
            raise ValueError("row scores must be one-dimensional")
        if (scores < 0).any():
            raise ValueError("scores must be nonnegative")
        total = scores.sum()
        if not np.isclose(total, 1.0, rtol=0, atol=1e-9):
            raise ValueError(f"scores must sum to one, got {total}")
        object.__setattr__(self, "scores", scores)

    @property
    def domain_size(self) -> int:
        return self.scores.size

    @property
    def flat(self) -> np.ndarray:
        return self.scores.ravel()


@dataclass(frozen=True)
class SamplePlan:
    """Result of one draw: the trial count, mode, and resulting index set."""

    k: int
    replacement: bool
    omega: np.ndarray  # flat indices into the score domain, unique

    @property
    def size(self) -> int:
        return self.omega.size


def _normalized_row_energies(subspace: TensorSubspace) -> list[np.ndarray]:
    energies = []
    for m, factor in enumerate(subspace.factors):
        norms = np.linalg.norm(factor, axis=0)
        if (norms == 0).any():
            raise ValueError(f"mode {m + 1} has an all-zero column; scores undefined")
        normalized = factor / norms[None, :]
        energies.append(np.sum(np.abs(normalized) ** 2, axis=1))
    return energies


def _blend(scores: np.ndarray, beta: float) -> np.ndarray:
    if not 0.0 <= beta < 1.0:
        raise ValueError("uniform blend weight must be in [0, 1)")
    out = (1.0 - beta) * scores + beta / scores.size
    return out / out.sum()


def entry_scores(subspace: TensorSubspace, beta: float = DEFAULT_UNIFORM_BLEND) -> SamplingDistribution:
    """Per-entry importance scores from the normalized factor row energies.

    The raw score of index (n_1, ..., n_{M-1}) is
    ``sum_m ||row n_m of normalized A_m||^2 / (R sum_m N_m)``; the result is
    blended with the uniform distribution at weight ``beta`` and renormalized
    (the raw normalizer is exact only for two modes).
    """
    energies = _normalized_row_energies(subspace)
    dims = subspace.dims
    scores = np.zeros(dims)
    for m, energy in enumerate(energies):
        shape = [1] * len(dims)
        shape[m] = dims[m]
        scores = scores + energy.reshape(shape)
    scores /= subspace.rank * sum(dims)
    scores /= scores.sum()
    return SamplingDistribution(_blend(scores, beta), "entries")


def row_scores(subspace: TensorSubspace, beta: float = DEFAULT_UNIFORM_BLEND) -> SamplingDistribution:
    """Row-marginalized scores for sampling whole phase-encode lines.

    Equals :func:`entry_scores` marginalized over the column index:
    ``s(n_1) = (N_2 ||row n_1||^2 + R) / (R (N_1 + N_2))`` before blending.
    """
    if subspace.nmodes != 2:
        raise ValueError("row scores are defined for two-mode subspaces")
    energies = _normalized_row_energies(subspace)
    n1, n2 = subspace.dims
    r = subspace.rank
    scores = (n2 * energies[0] + r) / (r * (n1 + n2))
    scores /= scores.sum()
    return SamplingDistribution(_blend(scores, beta), "rows")


def draw_samples(
    dist: SamplingDistribution,
    k: int,
    replacement: bool,
    rng,
    forced=None,
) -> SamplePlan:
    """Draw ``k`` trials from the score distribution.

    With replacement the plan keeps the deduplicated set of the i.i.d. draws,
    so it may hold fewer than ``k`` indices; without replacement it holds
    exactly ``k`` distinct indices obtained by sequential renormalized draws.
    Forced indices (e.g. the center k-space line) are always included and
    count toward ``k``.
    """
    if k < 1:
        raise ValueError("trial count must be at least 1")
    flat = dist.flat
    n = flat.size
    if forced is None:
        forced_idx = np.empty(0, dtype=np.int64)
    else:
        forced_idx = np.unique(np.asarray(forced, dtype=np.int64).ravel())
        if forced_idx.size and (forced_idx.min() < 0 or forced_idx.max() >= n):
            raise ValueError("forced index out of range")
    if forced_idx.size > k:
        raise ValueError("more forced indices than trials")
    remaining = k - forced_idx.size

    if replacement:
        drawn = rng.choice(n, size=remaining, replace=True, p=flat) if remaining else np.empty(0, dtype=np.int64)
        omega = np.union1d(forced_idx, drawn.astype(np.int64))
    else:
        if k > n:
            raise ValueError("cannot draw more distinct indices than the domain holds")
        weights = flat.copy()
        weights[forced_idx] = 0.0
        drawn = weighted_draw_without_replacement(weights, remaining, rng) if remaining else np.empty(0, dtype=np.int64)
        omega = np.union1d(forced_idx, drawn)
    return SamplePlan(k=k, replacement=replacement, omega=omega.astype(np.int64))


def expected_sample_count(dist: SamplingDistribution, k: int) -> float:
    """Closed-form expected distinct-sample count of k with-replacement draws."""
    if k < 1:
        raise ValueError("trial count must be at least 1")
    s = dist.flat
    return float(np.sum(1.0 - (1.0 - s) ** k))


def expected_count_trace(dists, k: int) -> np.ndarray:
    """Running average ``(1/t) sum_tau E|Omega_tau|`` over a distribution sequence."""
    counts = np.array([expected_sample_count(d, k) for d in dists])
    if counts.size == 0:
        raise ValueError("need at least one distribution")
    return np.cumsum(counts) / np.arange(1, counts.size + 1)


def _omega_to_entries(plan: SamplePlan, dist: SamplingDistribution, dims) -> np.ndarray:
    if dist.domain_kind == "rows":
        n2 = dims[1]
        rows = plan.omega
        i = np.repeat(rows, n2)
        j = np.tile(np.arange(n2, dtype=np.int64), rows.size)
        return np.stack([i, j], axis=1)
    multi = np.unravel_index(plan.omega, dims)
    return np.stack(multi, axis=1)


def adaptive_step(
    state: TrackerState,
    truth_source,
    k: int,
    replacement: bool,
    rng,
    beta: float = DEFAULT_UNIFORM_BLEND,
    domain: str = "entries",
    forced=None,
    noise_sigma: float = 0.0,
    frame: int | None = None,
) -> tuple[TrackerState, SamplePlan, StepReport]:
    """Score, acquire, and track one frame (the closed adaptive loop).

    Scores come from the pre-step subspace; the drawn plan decides which
    entries are acquired, and ``truth_source(frame, indices)`` is consulted
    only at those indices, which is the acquisition-simulation contract the
    harness enforces with a tripwire provider.  ``frame`` identifies the
    acquired frame when it differs from the tracker's step counter (e.g.
    after a multi-epoch warm start).
    """
    if domain == "rows":
        dist = row_scores(state.subspace, beta)
    elif domain == "entries":
        dist = entry_scores(state.subspace, beta)
    else:
        raise ValueError(f"unknown sampling domain {domain!r}")
    if frame is None:
        frame = state.t
    plan = draw_samples(dist, k, replacement, rng, forced=forced)
    indices = _omega_to_entries(plan, dist, state.subspace.dims)
    descriptor = EntryMask(state.subspace.dims, indices)
    values = np.asarray(truth_source(frame, indices), dtype=np.complex128).ravel()
    if noise_sigma > 0 and values.size:
        noise = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
        values = values + noise_sigma * noise
    batch = MeasurementBatch(values, descriptor, t=frame, noise_sigma=noise_sigma)
    new_state, report = track_step(state, batch)
    return new_state, plan, report
