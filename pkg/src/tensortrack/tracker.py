"""Online stochastic alternating minimization for tensor subspace tracking.

Each acquisition step first projects the new measurements onto the current
subspace (a ridge regression solved through the SVD), then refines every
factor column with one stochastic gradient step computed from the frozen
previous subspace.  The cost is real-valued over complex variables, so the
"gradient" is the conjugate (Wirtinger) derivative scaled so that
``a <- a - mu * grad`` descends; this is validated against finite differences
in the test suite rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import TensorSubspace
from .observation import (
    CoilFourierMask,
    Descriptor,
    EntryMask,
    FourierMask,
    GenericDense,
    MeasurementBatch,
    build_phi,
    unitary_dft2,
    unitary_dft_matrix,
)

__all__ = [
    "Fixed",
    "HessianBound",
    "StepConfig",
    "TrackerState",
    "StepReport",
    "random_subspace",
    "init_state",
    "solve_gamma",
    "instantaneous_cost",
    "factor_gradient",
    "mode_vector_matrix",
    "hessian_bound",
    "track_step",
    "empirical_cost",
    "empirical_cost_gradient",
    "run",
]


@dataclass(frozen=True)
class Fixed:
    """Constant step size."""

    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("fixed step size must be positive")


@dataclass(frozen=True)
class HessianBound:
    """Curvature-driven steps mu_t = 1 / sum_tau alpha_tau with clamped alpha."""

    c_floor: float
    c_cap: float

    def __post_init__(self):
        if not 0 < self.c_floor <= self.c_cap:
            raise ValueError("need 0 < c_floor <= c_cap")


@dataclass(frozen=True)
class StepConfig:
    """Tracker hyperparameters.

    ``lam`` is the rank-regularization weight; it anneals as lam/t inside the
    factor updates.  ``lam = 0`` is accepted so exact fixed-point behavior can
    be exercised, although the regularized setting assumes lam > 0.
    """

    lam: float
    rank: int
    step: Fixed | HessianBound = Fixed(0.01)
    warm_start: TensorSubspace | None = None
    init_scale: float = 1.0
    norm_cap: float | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass(frozen=True)
class TrackerState:
    """The single mutable object of the online loop (replaced, never edited)."""

    subspace: TensorSubspace
    config: StepConfig
    t: int = 1
    alpha_bar: float = 0.0


@dataclass(frozen=True)
class StepReport:
    gamma: np.ndarray
    residual: np.ndarray
    instantaneous_cost: float
    step_size: float
    t: int
    norm_exceeded: bool = False


def random_subspace(dims, rank: int, rng, init_scale: float = 1.0) -> TensorSubspace:
    """Random init: factor entries i.i.d. complex Gaussian, scale init_scale/sqrt(N_m)."""
    factors = []
    for n in dims:
        scale = init_scale / np.sqrt(n)
        z = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        factors.append(scale * z / np.sqrt(2.0))
    return TensorSubspace(tuple(factors))


def init_state(config: StepConfig, dims, rng) -> TrackerState:
    if config.warm_start is not None:
        sub = config.warm_start
        if sub.dims != tuple(dims) or sub.rank != config.rank:
            raise ValueError("warm-start subspace does not match dims/rank")
    else:
        sub = random_subspace(dims, config.rank, rng, config.init_scale)
    return TrackerState(subspace=sub, config=config)


def solve_gamma(phi: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge projection onto the subspace via the thin SVD.

    Minimizes ``0.5 ||y - Phi g||^2 + 0.5 lam ||g||^2`` as
    ``g = V diag(s / (s^2 + lam)) U^H y``.  Well-defined for any row count;
    with fewer rows than columns the null-space component is zero, and with
    ``lam = 0`` this is the pseudo-inverse (minimum-norm) solution.
    """
    phi = np.asarray(phi, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128).ravel()
    if phi.ndim != 2 or phi.shape[0] != y.size:
        raise ValueError(f"phi shape {phi.shape} inconsistent with y length {y.size}")
    if phi.shape[0] == 0:
        return np.zeros(phi.shape[1], dtype=np.complex128)
    u, s, vh = np.linalg.svd(phi, full_matrices=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        filt = np.where(s > 0, s / (s**2 + lam), 0.0)
    return vh.conj().T @ (filt * (u.conj().T @ y))


def _subspace_energy(subspace: TensorSubspace) -> float:
    return float(sum(np.linalg.norm(f) ** 2 for f in subspace.factors))


def instantaneous_cost(
    subspace: TensorSubspace,
    batch: MeasurementBatch,
    lam: float,
    t: int,
    gamma: np.ndarray,
) -> float:
    """Regularized least-squares cost of one frame at fixed coefficients."""
    phi = build_phi(subspace, batch.descriptor)
    e = batch.y - phi @ gamma
    return 0.5 * float(np.linalg.norm(e) ** 2) + 0.5 * (lam / t) * _subspace_energy(subspace)


def _scatter_theta(descriptor, residual) -> np.ndarray:
    """Sum of residual-weighted conjugate sketches for the Fourier kinds.

    Equals ``sum_ell e_ell * conj(W_ell)`` computed through the inverse DFT:
    ``Theta = sum_c conj(H_c) * F^-1(Xi_c)`` where Xi_c scatters coil c's
    residuals onto its sampled indices.
    """
    n1, n2 = descriptor.shape
    picks = tuple(descriptor.indices.T)
    if isinstance(descriptor, FourierMask):
        xi = np.zeros((n1, n2), dtype=np.complex128)
        xi[picks] = residual
        return unitary_dft2(xi, inverse=True)
    theta = np.zeros((n1, n2), dtype=np.complex128)
    block = len(descriptor.indices)
    for c, h in enumerate(descriptor.coils):
        xi = np.zeros((n1, n2), dtype=np.complex128)
        xi[picks] = residual[c * block : (c + 1) * block]
        theta += np.conj(h) * unitary_dft2(xi, inverse=True)
    return theta


def _dense_mode_contract(tensors: np.ndarray, subspace: TensorSubspace, skip: int, r: int) -> np.ndarray:
    """Contract every mode except ``skip`` of the stacked sketches (L, N_skip)."""
    out = tensors
    for axis in range(subspace.nmodes - 1, -1, -1):
        if axis == skip:
            continue
        out = np.tensordot(out, subspace.factors[axis][:, r], axes=([axis + 1], [0]))
    return out


def _gradient_data_terms(subspace, gamma, descriptor, residual) -> list[np.ndarray]:
    """Per-mode matrices ``D_m[:, r] = conj(gamma_r) sum_ell e_ell conj(w_{ell,r,m})``."""
    gamma_c = np.conj(gamma)
    if isinstance(descriptor, EntryMask):
        idx = descriptor.indices
        terms = []
        for m, factor in enumerate(subspace.factors):
            coef = np.ones((len(idx), subspace.rank), dtype=np.complex128)
            for i, other in enumerate(subspace.factors):
                if i != m:
                    coef *= other[idx[:, i], :]
            d = np.zeros_like(factor)
            np.add.at(d, idx[:, m], residual[:, None] * np.conj(coef))
            terms.append(d * gamma_c[None, :])
        return terms
    if isinstance(descriptor, (FourierMask, CoilFourierMask)):
        theta = _scatter_theta(descriptor, residual)
        a1, a2 = subspace.factors
        d1 = (theta @ np.conj(a2)) * gamma_c[None, :]
        d2 = (theta.T @ np.conj(a1)) * gamma_c[None, :]
        return [d1, d2]
    if isinstance(descriptor, GenericDense):
        terms = []
        for m, factor in enumerate(subspace.factors):
            d = np.zeros_like(factor)
            for r in range(subspace.rank):
                w = _dense_mode_contract(descriptor.tensors, subspace, m, r)
                d[:, r] = gamma_c[r] * (residual @ np.conj(w))
            terms.append(d)
        return terms
    raise TypeError(f"unknown descriptor type {type(descriptor).__name__}")


def factor_gradient(
    subspace: TensorSubspace,
    gamma: np.ndarray,
    descriptor: Descriptor,
    residual: np.ndarray,
    lam: float,
    t: int,
) -> list[np.ndarray]:
    """Per-mode gradient matrices of the instantaneous cost.

    Column r of mode m holds
    ``(lam/t) a_r^(m) - conj(gamma_r) sum_ell e_ell conj(W_ell x_{i != m} a_r^(i))``.
    Entry and Fourier descriptors use their collapsed closed forms (scatter
    onto sampled rows; inverse-DFT residual image); the dense kind evaluates
    the mode products literally and serves as the generic reference.
    """
    gamma = np.asarray(gamma, dtype=np.complex128).ravel()
    residual = np.asarray(residual, dtype=np.complex128).ravel()
    if residual.size != descriptor.nmeas:
        raise ValueError("residual length does not match descriptor")
    data = _gradient_data_terms(subspace, gamma, descriptor, residual)
    return [(lam / t) * f - d for f, d in zip(subspace.factors, data)]


def mode_vector_matrix(
    subspace: TensorSubspace, descriptor: Descriptor, mode: int, r: int
) -> np.ndarray:
    """Rows ``w_ell = W_ell x_{i != mode} a_r^(i)`` as an (L, N_mode) matrix."""
    if isinstance(descriptor, EntryMask):
        idx = descriptor.indices
        coef = np.ones(len(idx), dtype=np.complex128)
        for i, other in enumerate(subspace.factors):
            if i != mode:
                coef *= other[idx[:, i], r]
        s = np.zeros((len(idx), subspace.dims[mode]), dtype=np.complex128)
        s[np.arange(len(idx)), idx[:, mode]] = coef
        return s
    if isinstance(descriptor, FourierMask):
        f1 = unitary_dft_matrix(descriptor.shape[0])
        f2 = unitary_dft_matrix(descriptor.shape[1])
        ii, jj = descriptor.indices.T
        if mode == 0:
            other = np.fft.fft(subspace.factors[1][:, r], norm="ortho")
            return f1[:, ii].T * other[jj][:, None]
        other = np.fft.fft(subspace.factors[0][:, r], norm="ortho")
        return f2[:, jj].T * other[ii][:, None]
    if isinstance(descriptor, CoilFourierMask):
        f1 = unitary_dft_matrix(descriptor.shape[0])
        f2 = unitary_dft_matrix(descriptor.shape[1])
        ii, jj = descriptor.indices.T
        a1, a2 = subspace.factors
        blocks = []
        for h in descriptor.coils:
            if mode == 0:
                # W_c x_2 b = u_i * (H_c @ (v_j * b)) for W_c = H_c * (u_i v_j^T)
                tmp = h @ (f2[:, jj] * a2[:, r][:, None])
                blocks.append((f1[:, ii] * tmp).T)
            else:
                tmp = h.T @ (f1[:, ii] * a1[:, r][:, None])
                blocks.append((f2[:, jj] * tmp).T)
        return np.concatenate(blocks, axis=0)
    if isinstance(descriptor, GenericDense):
        return _dense_mode_contract(descriptor.tensors, subspace, mode, r)
    raise TypeError(f"unknown descriptor type {type(descriptor).__name__}")


def _power_lambda_max(s: np.ndarray, iters: int = 1000, tol: float = 1e-8) -> float:
    """Largest eigenvalue of the Gram operator G = sum_ell w_ell w_ell^H.

    Power iteration applying ``v -> S^T (conj(S) v)``; stops when the
    Rayleigh quotient moves by less than ``tol`` relative or after ``iters``
    rounds.  The start vector is a fixed pseudorandom draw: structured
    deterministic starts (e.g. all ones) can sit exactly on a non-dominant
    eigenvector of Fourier-type Grams.
    """
    n = s.shape[1]
    if s.shape[0] == 0 or n == 0:
        return 0.0
    start_rng = np.random.default_rng(0x7E5)
    v = start_rng.standard_normal(n) + 1j * start_rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam_prev = -1.0
    for _ in range(iters):
        u = np.conj(s) @ v
        w = s.T @ u
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        lam = float(np.linalg.norm(np.conj(s) @ v) ** 2)
        if lam_prev >= 0 and abs(lam - lam_prev) <= tol * max(lam, 1e-300):
            return lam
        lam_prev = lam
    return lam_prev


def hessian_bound(
    subspace: TensorSubspace,
    gamma: np.ndarray,
    descriptor: Descriptor,
    lam: float,
    t: int,
    c_floor: float = 0.0,
    c_cap: float = np.inf,
    iters: int = 1000,
    tol: float = 1e-8,
) -> float:
    """Curvature bound ``alpha_t``: largest per-column Hessian spectral norm.

    The per-(mode, component) Hessian is ``(lam/t) I + |gamma_r|^2 G`` with
    ``G`` the Gram of the contracted sketches, so the bound is
    ``lam/t + max_{m,r} |gamma_r|^2 lambda_max(G_{m,r})`` clamped to
    ``[c_floor, c_cap]``.
    """
    gamma = np.asarray(gamma, dtype=np.complex128).ravel()
    top = 0.0
    for m in range(subspace.nmodes):
        for r in range(subspace.rank):
            g2 = float(np.abs(gamma[r]) ** 2)
            if g2 == 0.0:
                continue
            s = mode_vector_matrix(subspace, descriptor, m, r)
            top = max(top, g2 * _power_lambda_max(s, iters=iters, tol=tol))
    return float(np.clip(lam / t + top, c_floor, c_cap))


def track_step(state: TrackerState, batch: MeasurementBatch) -> tuple[TrackerState, StepReport]:
    """One acquisition step: ridge projection (S1) then parallel factor updates (S2).

    All (m, r) updates read the frozen step-entry subspace.  An empty batch
    leaves the subspace untouched but still advances the time index, keeping
    the lam/t schedule well-defined.
    """
    cfg = state.config
    sub = state.subspace
    t = state.t
    if batch.descriptor.shape != sub.dims:
        raise ValueError("batch descriptor does not match tracker dimensions")

    if batch.descriptor.nmeas == 0:
        gamma = np.zeros(sub.rank, dtype=np.complex128)
        cost = 0.5 * (cfg.lam / t) * _subspace_energy(sub)
        report = StepReport(gamma, np.zeros(0, dtype=np.complex128), cost, 0.0, t)
        return replace(state, t=t + 1), report

    phi = build_phi(sub, batch.descriptor)
    gamma = solve_gamma(phi, batch.y, cfg.lam)
    residual = batch.y - phi @ gamma
    cost = 0.5 * float(np.linalg.norm(residual) ** 2) + 0.5 * (cfg.lam / t) * _subspace_energy(sub)

    alpha_bar = state.alpha_bar
    if isinstance(cfg.step, HessianBound):
        alpha = hessian_bound(
            sub, gamma, batch.descriptor, cfg.lam, t,
            c_floor=cfg.step.c_floor, c_cap=cfg.step.c_cap,
        )
        alpha_bar = alpha_bar + alpha
        mu = 1.0 / alpha_bar
    else:
        mu = cfg.step.mu

    grads = factor_gradient(sub, gamma, batch.descriptor, residual, cfg.lam, t)
    factors = tuple(f - mu * g for f, g in zip(sub.factors, grads))
    new_sub = TensorSubspace(factors)

    exceeded = False
    if cfg.norm_cap is not None:
        exceeded = any(np.linalg.norm(f) > cfg.norm_cap for f in factors)

    report = StepReport(gamma, residual, cost, mu, t, exceeded)
    return replace(state, subspace=new_sub, t=t + 1, alpha_bar=alpha_bar), report


def empirical_cost(state: TrackerState, batches) -> float:
    """Averaged cost ``(1/T) sum_tau f_tau`` at the current subspace.

    Coefficients are re-solved per frame, so by the envelope argument the
    gradient of this quantity at the re-solved coefficients is the partial
    factor gradient; both serve as the empirical convergence diagnostic.
    """
    batches = list(batches)
    if not batches:
        raise ValueError("empirical cost needs at least one batch")
    total = 0.0
    for tau, batch in enumerate(batches, start=1):
        phi = build_phi(state.subspace, batch.descriptor)
        gamma = solve_gamma(phi, batch.y, state.config.lam)
        total += instantaneous_cost(state.subspace, batch, state.config.lam, tau, gamma)
    return total / len(batches)


def empirical_cost_gradient(state: TrackerState, batches) -> list[np.ndarray]:
    """Per-mode partial factor gradient at the re-solved coefficients.

    By the envelope argument this equals the full gradient of the averaged
    cost with the coefficient ridge penalty included (the inner minimization
    of the batch program), which is the stationarity diagnostic the tracker
    is expected to drive to zero.
    """
    batches = list(batches)
    if not batches:
        raise ValueError("empirical cost gradient needs at least one batch")
    sums = [np.zeros_like(f) for f in state.subspace.factors]
    for tau, batch in enumerate(batches, start=1):
        phi = build_phi(state.subspace, batch.descriptor)
        gamma = solve_gamma(phi, batch.y, state.config.lam)
        residual = batch.y - phi @ gamma
        grads = factor_gradient(
            state.subspace, gamma, batch.descriptor, residual, state.config.lam, tau
        )
        for acc, g in zip(sums, grads):
            acc += g
    return [g / len(batches) for g in sums]


def run(
    stream,
    config: StepConfig,
    epochs: int = 1,
    reshuffle: bool = False,
    rng=None,
    initial: TrackerState | None = None,
    rebalance_epochs: bool = True,
) -> tuple[TensorSubspace, list[StepReport]]:
    """Fold :func:`track_step` over a measurement stream, optionally repeatedly.

    Each epoch's final subspace initializes the next and the time index keeps
    growing globally, so the lam/t annealing continues across epochs.  With
    ``reshuffle`` the frame order is re-drawn from ``rng`` for every epoch
    after the first.  Between epochs the factor representation is rebalanced
    (a synthesis-preserving rescaling that keeps the per-component norms from
    drifting apart); pass ``rebalance_epochs=False`` for raw gradient steps.
    """
    from .core import rebalance

    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    batches = list(stream)
    if not batches:
        raise ValueError("empty measurement stream")
    if initial is None:
        if rng is None:
            raise ValueError("rng is required when no initial state is given")
        state = init_state(config, batches[0].descriptor.shape, rng)
    else:
        state = initial

    reports: list[StepReport] = []
    for epoch in range(epochs):
        if rebalance_epochs and epoch > 0:
            state = replace(state, subspace=rebalance(state.subspace))
        order = np.arange(len(batches))
        if reshuffle and epoch > 0:
            if rng is None:
                raise ValueError("rng is required for reshuffling")
            order = rng.permutation(len(batches))
        for k in order:
            state, report = track_step(state, batches[k])
            reports.append(report)
    return state.subspace, reports
