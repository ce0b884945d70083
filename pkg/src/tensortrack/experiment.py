"""Experiment orchestration: acquisition simulation, runs, and artifacts.

The truth tensor is only ever touched through a provider that serves frames
strictly in order; score-driven acquisition additionally reads nothing but
the sampled entries.  Metric computation happens outside the provider, which
models the scanner, not the evaluator.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ExperimentConfig
from .core import TensorSubspace
from .cten import read_cten, write_cten
from .metrics import LassoConfig, MetricRow, differential_cs_step, nmse, ssim
from .mri import CoilSet, reconstruct_frame, synth_sensitivities
from .observation import (
    CoilFourierMask,
    EntryMask,
    FourierMask,
    MeasurementBatch,
    measure,
    rows_to_entries,
    unitary_dft2,
    variable_density_rows,
)
from .sampler import (
    SamplePlan,
    draw_samples,
    entry_scores,
    expected_sample_count,
    row_scores,
)
from .tracker import (
    Fixed,
    HessianBound,
    StepConfig,
    StepReport,
    TrackerState,
    init_state,
    track_step,
)

__all__ = [
    "NumericalError",
    "StreamingProvider",
    "RunResult",
    "run_tracking",
    "run_adaptive",
    "run_baseline",
    "recompute_metrics",
    "run_experiment",
    "write_metrics_csv",
    "write_mask_csv",
    "write_trace_csv",
    "write_budget_csv",
]


class NumericalError(RuntimeError):
    """Raised when a run produces non-finite values."""


class StreamingProvider:
    """Serves ground-truth data strictly in frame order.

    ``entries`` is the acquisition interface for subsampled reads;
    ``full_frame`` models a fully acquired scan.  Requesting a frame beyond
    the first unserved one raises, which is what keeps streaming runs honest.
    """

    def __init__(self, tensor: np.ndarray):
        self._tensor = np.asarray(tensor, dtype=np.complex128)
        if self._tensor.ndim < 2:
            raise ValueError("truth tensor needs at least one frame axis")
        self._next = 0

    @property
    def frames(self) -> int:
        return self._tensor.shape[-1]

    @property
    def frame_shape(self) -> tuple[int, ...]:
        return self._tensor.shape[:-1]

    def _claim(self, t: int) -> None:
        if t < 0 or t >= self.frames:
            raise IndexError(f"frame {t} out of range")
        if t > self._next:
            raise RuntimeError(f"frame {t} requested before frame {self._next} was processed")
        if t == self._next:
            self._next += 1

    def full_frame(self, t: int) -> np.ndarray:
        self._claim(t)
        return self._tensor[..., t].copy()

    def entries(self, t: int, indices) -> np.ndarray:
        self._claim(t)
        idx = np.asarray(indices, dtype=np.int64)
        return self._tensor[..., t][tuple(idx.T)].copy()

    def sketch(self, t: int, descriptor, noise_sigma: float, rng) -> MeasurementBatch:
        frame = self.full_frame(t)
        return measure(frame, descriptor, noise_sigma, rng, t=t)


@dataclass
class RunResult:
    recon: np.ndarray
    metrics: list[MetricRow]
    mask_rows: list[tuple]
    trace: list[StepReport]
    budget: list[tuple] = field(default_factory=list)
    per_frame_ms: list[float] = field(default_factory=list)
    final_subspace: TensorSubspace | None = None


def _step_config(config: ExperimentConfig, rank: int | None = None) -> StepConfig:
    step = (
        Fixed(config.mu)
        if config.step_mode == "fixed"
        else HessianBound(config.c_floor, config.c_cap)
    )
    return StepConfig(
        lam=config.lam,
        rank=rank if rank is not None else config.rank,
        step=step,
        init_scale=config.init_scale,
    )


def _full_entries(shape) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(n, dtype=np.int64) for n in shape], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _frame_metrics(truth_frame, est_frame, samples, t, domain) -> MetricRow:
    if domain == "kspace":
        ref_img = np.abs(unitary_dft2(truth_frame, inverse=True))
        est_img = np.abs(unitary_dft2(est_frame, inverse=True))
    else:
        ref_img = np.abs(truth_frame)
        est_img = np.abs(est_frame)
    return MetricRow(
        t=t,
        nmse=nmse(truth_frame, est_frame),
        ssim=ssim(ref_img, est_img),
        samples=int(samples),
    )


def _draw_frame_entries(config: ExperimentConfig, shape, rng):
    """Static (non-adaptive) per-frame mask; returns (entries, mask_record)."""
    mode = config.sampling.mode
    n1 = shape[0]
    if mode == "full":
        return _full_entries(shape), [("full", None)]
    if mode in ("variable_density", "adaptive"):
        rows = variable_density_rows(n1, config.sampling.alpha, config.sampling.fraction, rng)
        return rows_to_entries(rows, shape[1]), [("rows", np.sort(rows))]
    if mode == "uniform":
        total = int(np.prod(shape))
        k = max(1, int(np.ceil(config.sampling.fraction * total)))
        flat = rng.choice(total, size=k, replace=False)
        idx = np.stack(np.unravel_index(np.sort(flat), shape), axis=1)
        return idx, [("entries", idx)]
    raise ConfigError(f"unknown sampling mode {mode!r}")


def _record_mask(mask_rows, t, record, entries):
    kind, payload = record[0]
    if kind == "rows":
        for i in payload:
            mask_rows.append((t, int(i)))
    elif kind == "entries":
        for i, j in payload:
            mask_rows.append((t, int(i), int(j)))
    else:  # full
        mask_rows.append((t, -1))


def _coil_set(config: ExperimentConfig, shape, rng) -> CoilSet | None:
    if config.coils is None:
        return None
    return synth_sensitivities(shape[0], shape[1], config.coils.count, config.coils.smoothness, rng)


def _descriptor_for(entries, shape, coils: CoilSet | None):
    if coils is None:
        return EntryMask(shape, entries)
    return CoilFourierMask(shape, entries, coils.maps)


def _acquire(provider, t, descriptor, config, rng) -> MeasurementBatch:
    if isinstance(descriptor, EntryMask):
        values = provider.entries(t, descriptor.indices)
        if config.noise_sigma > 0 and values.size:
            noise = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
            values = values + config.noise_sigma * noise
        return MeasurementBatch(values, descriptor, t=t, noise_sigma=config.noise_sigma)
    return provider.sketch(t, descriptor, config.noise_sigma, rng)


def _rebalanced(state: TrackerState) -> TrackerState:
    from dataclasses import replace

    from .core import rebalance

    return replace(state, subspace=rebalance(state.subspace))


def _warm_up(provider, config, coils, rng):
    """Run the tracker over the fully acquired leading frames.

    Returns the warmed state plus the warm batches (re-used to report warm
    frame metrics and, in batch mode, prepended to the epoch stream).
    """
    shape = provider.frame_shape
    state = init_state(_step_config(config), shape, rng)
    warm_n = min(config.warm_start_frames, provider.frames)
    batches = []
    for t in range(warm_n):
        desc = _descriptor_for(_full_entries(shape), shape, coils)
        batches.append(_acquire(provider, t, desc, config, rng))
    reports = []
    for epoch in range(config.warm_epochs):
        if epoch > 0 and batches:
            state = _rebalanced(state)
        for batch in batches:
            state, rep = track_step(state, batch)
            reports.append(rep)
    return state, batches, reports


def _reconstruct(subspace, gamma, coils: CoilSet | None) -> np.ndarray:
    # entry model: the frame is the synthesized slice; coil model: same slice
    # in the image domain (the measurement already carries F and H_c)
    return reconstruct_frame(subspace, gamma).kspace


def run_tracking(
    truth: np.ndarray,
    config: ExperimentConfig,
    epochs: int | None = None,
    provider: StreamingProvider | None = None,
) -> RunResult:
    """Streaming (epochs=1) or batch multi-epoch tracking over masked frames."""
    if config.patch is not None:
        return _run_tracking_patched(truth, config, epochs=epochs, provider=provider)
    rng = np.random.default_rng(config.seed)
    provider = provider or StreamingProvider(truth)
    shape = provider.frame_shape
    if len(shape) != 2:
        raise ConfigError("tracking experiments expect 2-D frames")
    coils = _coil_set(config, shape, rng)
    n_epochs = config.epochs if epochs is None else epochs

    state, warm_batches, warm_reports = _warm_up(provider, config, coils, rng)
    warm_n = len(warm_batches)
    total_frames = provider.frames

    recon = np.zeros_like(np.asarray(truth, dtype=np.complex128))
    metrics: list[MetricRow] = []
    mask_rows: list[tuple] = []
    trace: list[StepReport] = list(warm_reports)
    per_frame_ms: list[float] = []

    # masks are drawn once; batch mode revisits the same undersampled data
    frame_batches: list[MeasurementBatch] = []
    for t in range(warm_n, total_frames):
        entries, record = _draw_frame_entries(config, shape, rng)
        _record_mask(mask_rows, t, record, entries)
        desc = _descriptor_for(entries, shape, coils)
        frame_batches.append(_acquire(provider, t, desc, config, rng))

    gammas: dict[int, np.ndarray] = {}
    for epoch in range(n_epochs):
        if epoch > 0:
            state = _rebalanced(state)
        order = list(range(len(frame_batches)))
        if config.reshuffle and epoch > 0:
            order = list(rng.permutation(len(frame_batches)))
        for k in order:
            batch = frame_batches[k]
            tic = time.perf_counter()
            state, rep = track_step(state, batch)
            per_frame_ms.append(1e3 * (time.perf_counter() - tic))
            trace.append(rep)
            gammas[batch.t] = rep.gamma

    # reconstruct every frame at the final subspace; warm frames re-project too
    from .observation import build_phi
    from .tracker import solve_gamma

    for t in range(total_frames):
        if t < warm_n:
            batch = warm_batches[t]
        else:
            batch = frame_batches[t - warm_n]
        if n_epochs > 1 or t < warm_n:
            phi = build_phi(state.subspace, batch.descriptor)
            gamma = solve_gamma(phi, batch.y, config.lam)
        else:
            gamma = gammas[t]
        frame_est = _reconstruct(state.subspace, gamma, coils)
        recon[..., t] = frame_est
        truth_frame = np.asarray(truth, dtype=np.complex128)[..., t]
        domain = "direct" if coils is not None else config.data_domain
        metrics.append(
            _frame_metrics(truth_frame, frame_est, batch.descriptor.nmeas, t, domain)
        )
    for t in range(warm_n):
        mask_rows.insert(t, (t, -1))

    return RunResult(
        recon=recon,
        metrics=metrics,
        mask_rows=mask_rows,
        trace=trace,
        per_frame_ms=per_frame_ms,
        final_subspace=state.subspace,
    )


def _run_tracking_patched(truth, config, epochs=None, provider=None) -> RunResult:
    """Independent tracker per non-overlapping k-space patch."""
    from .mri import PatchGrid, patch_assemble, patch_partition

    if config.coils is not None:
        raise ConfigError("patched runs and coil models are mutually exclusive")
    rng = np.random.default_rng(config.seed)
    provider = provider or StreamingProvider(truth)
    shape = provider.frame_shape
    grid = PatchGrid(shape, config.patch.n1, config.patch.n2, config.patch.rho)
    n_epochs = config.epochs if epochs is None else epochs
    warm_n = min(config.warm_start_frames, provider.frames)
    total_frames = provider.frames
    npatch = grid.k1 * grid.k2

    states = [
        init_state(_step_config(config, rank=grid.rho), (grid.n1, grid.n2), rng)
        for _ in range(npatch)
    ]

    def patch_batches(t, entries):
        frame_values = provider.entries(t, entries)
        if config.noise_sigma > 0 and frame_values.size:
            noise = rng.standard_normal(frame_values.size) + 1j * rng.standard_normal(frame_values.size)
            frame_values = frame_values + config.noise_sigma * noise
        out = []
        for p in range(grid.k1):
            for q in range(grid.k2):
                inside = (
                    (entries[:, 0] >= p * grid.n1)
                    & (entries[:, 0] < (p + 1) * grid.n1)
                    & (entries[:, 1] >= q * grid.n2)
                    & (entries[:, 1] < (q + 1) * grid.n2)
                )
                local = entries[inside] - np.array([p * grid.n1, q * grid.n2])
                desc = EntryMask((grid.n1, grid.n2), local)
                out.append(MeasurementBatch(frame_values[inside], desc, t=t))
        return out

    mask_rows: list[tuple] = []
    trace: list[StepReport] = []
    all_batches: list[list[MeasurementBatch]] = []
    full = _full_entries(shape)
    for t in range(warm_n):
        mask_rows.append((t, -1))
        all_batches.append(patch_batches(t, full))
    for t in range(warm_n, total_frames):
        entries, record = _draw_frame_entries(config, shape, rng)
        _record_mask(mask_rows, t, record, entries)
        all_batches.append(patch_batches(t, entries))

    for epoch in range(config.warm_epochs):
        for t in range(warm_n):
            for p in range(npatch):
                if epoch > 0 and t == 0:
                    states[p] = _rebalanced(states[p])
                states[p], _ = track_step(states[p], all_batches[t][p])

    per_frame_ms: list[float] = []
    for epoch in range(n_epochs):
        if epoch > 0:
            states = [_rebalanced(s) for s in states]
        order = list(range(warm_n, total_frames))
        if config.reshuffle and epoch > 0:
            order = [warm_n + int(i) for i in rng.permutation(total_frames - warm_n)]
        for t in order:
            tic = time.perf_counter()
            reps = []
            for p in range(npatch):
                states[p], rep = track_step(states[p], all_batches[t][p])
                reps.append(rep)
            per_frame_ms.append(1e3 * (time.perf_counter() - tic))
            trace.append(
                StepReport(
                    gamma=np.concatenate([r.gamma for r in reps]),
                    residual=np.concatenate([r.residual for r in reps]),
                    instantaneous_cost=float(sum(r.instantaneous_cost for r in reps)),
                    step_size=reps[0].step_size,
                    t=reps[0].t,
                )
            )

    from .observation import build_phi
    from .tracker import solve_gamma

    truth_arr = np.asarray(truth, dtype=np.complex128)
    recon = np.zeros_like(truth_arr)
    metrics: list[MetricRow] = []
    for t in range(total_frames):
        tiles = []
        samples = 0
        for p in range(npatch):
            batch = all_batches[t][p]
            phi = build_phi(states[p].subspace, batch.descriptor)
            gamma = solve_gamma(phi, batch.y, config.lam)
            tiles.append(_reconstruct(states[p].subspace, gamma, None))
            samples += batch.descriptor.nmeas
        frame_est = patch_assemble(tiles, grid)
        recon[..., t] = frame_est
        metrics.append(
            _frame_metrics(truth_arr[..., t], frame_est, samples, t, config.data_domain)
        )

    return RunResult(
        recon=recon,
        metrics=metrics,
        mask_rows=mask_rows,
        trace=trace,
        per_frame_ms=per_frame_ms,
    )


def run_adaptive(
    truth: np.ndarray,
    config: ExperimentConfig,
    provider: StreamingProvider | None = None,
) -> RunResult:
    """Score-driven acquisition: variable density until the switch frame, then
    subspace-driven draws; the truth is consulted only at sampled indices."""
    if config.patch is not None or config.coils is not None:
        raise ConfigError("adaptive runs use whole frames without coil models")
    rng = np.random.default_rng(config.seed)
    provider = provider or StreamingProvider(truth)
    shape = provider.frame_shape
    if len(shape) != 2:
        raise ConfigError("adaptive experiments expect 2-D frames")

    state, warm_batches, warm_reports = _warm_up(provider, config, None, rng)
    warm_n = len(warm_batches)
    total_frames = provider.frames
    switch = config.sampling.switch_frame
    if switch is None:
        switch = warm_n
    domain = config.sampling.domain
    n1, n2 = shape
    if config.sampling.k is not None:
        k_draws = config.sampling.k
    elif domain == "rows":
        k_draws = max(1, int(np.ceil(config.sampling.fraction * n1)))
    else:
        k_draws = max(1, int(np.ceil(config.sampling.fraction * n1 * n2)))

    truth_arr = np.asarray(truth, dtype=np.complex128)
    recon = np.zeros_like(truth_arr)
    metrics: list[MetricRow] = []
    mask_rows: list[tuple] = [(t, -1) for t in range(warm_n)]
    budget: list[tuple] = []
    trace: list[StepReport] = list(warm_reports)
    per_frame_ms: list[float] = []

    for t in range(warm_n, total_frames):
        tic = time.perf_counter()
        if t < switch:
            rows = variable_density_rows(n1, config.sampling.alpha, config.sampling.fraction, rng)
            entries = rows_to_entries(rows, n2)
            desc = EntryMask(shape, entries)
            values = provider.entries(t, entries)
            if config.noise_sigma > 0 and values.size:
                noise = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
                values = values + config.noise_sigma * noise
            batch = MeasurementBatch(values, desc, t=t, noise_sigma=config.noise_sigma)
            state, rep = track_step(state, batch)
            for i in np.sort(rows):
                mask_rows.append((t, int(i)))
            budget.append((t, len(rows), len(rows), float(len(rows))))
            samples = desc.nmeas
        else:
            if domain == "rows":
                dist = row_scores(state.subspace, config.sampling.beta)
                forced = np.array([0])  # center line stays forced
            else:
                dist = entry_scores(state.subspace, config.sampling.beta)
                forced = None
            plan = draw_samples(dist, k_draws, config.sampling.replacement, rng, forced=forced)
            expected = expected_sample_count(dist, k_draws) if config.sampling.replacement else float(plan.size)
            if domain == "rows":
                entries = rows_to_entries(plan.omega, n2)
                for i in plan.omega:
                    mask_rows.append((t, int(i)))
            else:
                entries = np.stack(np.unravel_index(plan.omega, shape), axis=1)
                for i, j in entries:
                    mask_rows.append((t, int(i), int(j)))
            desc = EntryMask(shape, entries)
            values = provider.entries(t, entries)
            if config.noise_sigma > 0 and values.size:
                noise = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
                values = values + config.noise_sigma * noise
            batch = MeasurementBatch(values, desc, t=t, noise_sigma=config.noise_sigma)
            state, rep = track_step(state, batch)
            budget.append((t, k_draws, plan.size, expected))
            samples = desc.nmeas
        trace.append(rep)
        frame_est = _reconstruct(state.subspace, rep.gamma, None)
        recon[..., t] = frame_est
        metrics.append(
            _frame_metrics(truth_arr[..., t], frame_est, samples, t, config.data_domain)
        )
        per_frame_ms.append(1e3 * (time.perf_counter() - tic))

    # warm frames: re-projected at the final subspace for completeness
    from .observation import build_phi
    from .tracker import solve_gamma

    warm_metrics = []
    for t in range(warm_n):
        batch = warm_batches[t]
        phi = build_phi(state.subspace, batch.descriptor)
        gamma = solve_gamma(phi, batch.y, config.lam)
        frame_est = _reconstruct(state.subspace, gamma, None)
        recon[..., t] = frame_est
        warm_metrics.append(
            _frame_metrics(truth_arr[..., t], frame_est, batch.descriptor.nmeas, t, config.data_domain)
        )
    metrics = warm_metrics + metrics

    return RunResult(
        recon=recon,
        metrics=metrics,
        mask_rows=mask_rows,
        trace=trace,
        budget=budget,
        per_frame_ms=per_frame_ms,
        final_subspace=state.subspace,
    )


def run_baseline(
    truth: np.ndarray,
    config: ExperimentConfig,
    provider: StreamingProvider | None = None,
) -> RunResult:
    """Differential compressed-sensing baseline over variable-density masks.

    The input tensor is k-space; each frame estimate is the previous image
    plus a sparse correction recovered from the frame's sampled coefficients.
    """
    if config.data_domain != "kspace":
        raise ConfigError("the differential CS baseline runs on k-space input")
    rng = np.random.default_rng(config.seed)
    provider = provider or StreamingProvider(truth)
    shape = provider.frame_shape
    if len(shape) != 2:
        raise ConfigError("baseline experiments expect 2-D frames")
    n1, n2 = shape
    warm_n = min(config.warm_start_frames, provider.frames)
    total_frames = provider.frames

    truth_arr = np.asarray(truth, dtype=np.complex128)
    recon = np.zeros_like(truth_arr)
    metrics: list[MetricRow] = []
    mask_rows: list[tuple] = []
    per_frame_ms: list[float] = []

    prev_image = np.zeros(shape, dtype=np.complex128)
    prev_diff = None
    for t in range(warm_n):
        kframe = provider.full_frame(t)
        prev_image = unitary_dft2(kframe, inverse=True)
        recon[..., t] = kframe
        mask_rows.append((t, -1))
        metrics.append(_frame_metrics(truth_arr[..., t], kframe, kframe.size, t, "kspace"))

    for t in range(warm_n, total_frames):
        tic = time.perf_counter()
        rows = variable_density_rows(n1, config.sampling.alpha, config.sampling.fraction, rng)
        entries = rows_to_entries(rows, n2)
        for i in np.sort(rows):
            mask_rows.append((t, int(i)))
        desc = FourierMask(shape, entries)
        values = provider.entries(t, entries)
        if config.noise_sigma > 0 and values.size:
            noise = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
            values = values + config.noise_sigma * noise
        batch = MeasurementBatch(values, desc, t=t, noise_sigma=config.noise_sigma)
        lasso = LassoConfig(
            lam=config.baseline.lam,
            max_iters=config.baseline.max_iters,
            gap_tol=config.baseline.gap_tol,
            warm_start=prev_diff,
        )
        image = differential_cs_step(prev_image, batch, lasso)
        prev_diff = image - prev_image
        prev_image = image
        kest = unitary_dft2(image)
        recon[..., t] = kest
        metrics.append(_frame_metrics(truth_arr[..., t], kest, desc.nmeas, t, "kspace"))
        per_frame_ms.append(1e3 * (time.perf_counter() - tic))

    return RunResult(
        recon=recon,
        metrics=metrics,
        mask_rows=mask_rows,
        trace=[],
        per_frame_ms=per_frame_ms,
    )


def recompute_metrics(truth: np.ndarray, estimate: np.ndarray, domain: str = "kspace") -> list[MetricRow]:
    truth = np.asarray(truth, dtype=np.complex128)
    estimate = np.asarray(estimate, dtype=np.complex128)
    if truth.shape != estimate.shape:
        raise ValueError("truth and estimate shapes differ")
    rows = []
    for t in range(truth.shape[-1]):
        rows.append(_frame_metrics(truth[..., t], estimate[..., t], truth[..., t].size, t, domain))
    return rows


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_metrics_csv(path, rows: list[MetricRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,nmse,ssim,samples\n")
        for row in rows:
            fh.write(f"{row.t},{_fmt(row.nmse)},{_fmt(row.ssim)},{row.samples}\n")


def write_mask_csv(path, rows: list[tuple]) -> None:
    width = max((len(r) for r in rows), default=2)
    header = "t,i" if width == 2 else "t,i,j"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def write_trace_csv(path, reports: list[StepReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,f_t,step_size,gamma_norm,residual_norm\n")
        for rep in reports:
            fh.write(
                f"{rep.t},{_fmt(rep.instantaneous_cost)},{_fmt(rep.step_size)},"
                f"{_fmt(float(np.linalg.norm(rep.gamma)))},"
                f"{_fmt(float(np.linalg.norm(rep.residual)))}\n"
            )


def write_budget_csv(path, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,K,omega_size,expected\n")
        for t, k, size, expected in rows:
            fh.write(f"{t},{k},{size},{_fmt(expected)}\n")


def _git_commit() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def run_experiment(config: ExperimentConfig, input_path, outdir, mode: str) -> dict:
    """Load the input tensor, run one experiment mode, and write all artifacts."""
    import os

    tic = time.perf_counter()
    truth = read_cten(input_path)
    if truth.ndim != 3:
        raise ConfigError(f"expected a 3-way input tensor, got {truth.ndim}-way")

    if mode == "track":
        result = run_tracking(truth, config, epochs=1)
    elif mode == "batch":
        result = run_tracking(truth, config)
    elif mode == "adaptive":
        result = run_adaptive(truth, config)
    elif mode == "baseline":
        result = run_baseline(truth, config)
    else:
        raise ConfigError(f"unknown experiment mode {mode!r}")

    if not np.isfinite(result.recon).all():
        raise NumericalError("reconstruction contains non-finite values")

    os.makedirs(outdir, exist_ok=True)
    write_cten(os.path.join(outdir, "recon.cten"), result.recon)
    write_metrics_csv(os.path.join(outdir, "metrics.csv"), result.metrics)
    write_mask_csv(os.path.join(outdir, "mask.csv"), result.mask_rows)
    if result.trace:
        write_trace_csv(os.path.join(outdir, "trace.csv"), result.trace)
    if result.budget:
        write_budget_csv(os.path.join(outdir, "budget.csv"), result.budget)

    total = time.perf_counter() - tic
    manifest = {
        "mode": mode,
        "input": str(input_path),
        "config": config.to_dict(),
        "commit": _git_commit(),
        "timings": {
            "total_s": total,
            "per_frame_ms": [round(x, 3) for x in result.per_frame_ms],
        },
        "mean_nmse": float(np.mean([m.nmse for m in result.metrics])),
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
