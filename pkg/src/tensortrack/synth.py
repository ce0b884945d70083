"""Synthetic ground-truth generators with known latent structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TensorSubspace, synthesize_slice

__all__ = ["PhantomSpec", "gen_phantom", "gen_lowrank_stream"]


@dataclass(frozen=True)
class PhantomSpec:
    """Pulsating two-ellipse phantom over a complex phase ramp.

    The outer ellipse is static; the inner disc's radius breathes as
    ``r0 * (1 + amplitude * sin(2 pi t / period))``.  Axes and radii are
    fractions of the frame half-extents.  Edges are smoothed a little so the
    frame stack has rapidly decaying singular values.
    """

    n1: int = 64
    n2: int = 64
    frames: int = 120
    outer_axes: tuple[float, float] = (0.8, 0.7)
    inner_radius: float = 0.3
    pulse_amplitude: float = 0.3
    period: float = 25.0
    phase_ramp: tuple[float, float] = (0.06, 0.1)
    edge_softness: float = 1.5

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4 or self.frames < 1:
            raise ValueError("phantom frame must be at least 4x4 with one frame")
        if not (0 < self.outer_axes[0] <= 1 and 0 < self.outer_axes[1] <= 1):
            raise ValueError("outer ellipse leaves the frame")
        if self.inner_radius * (1 + abs(self.pulse_amplitude)) > min(self.outer_axes):
            raise ValueError("pulsating inner disc leaves the outer ellipse")
        if self.period <= 0:
            raise ValueError("period must be positive")


def _soft_indicator(level: np.ndarray, softness: float) -> np.ndarray:
    # level < 1 inside; smooth roll-off of roughly `softness` pixels
    return 0.5 * (1.0 - np.tanh((level - 1.0) / max(softness, 1e-6)))


def gen_phantom(spec: PhantomSpec) -> np.ndarray:
    """Deterministic complex phantom tensor of shape (n1, n2, frames)."""
    yy, xx = np.meshgrid(np.arange(spec.n1), np.arange(spec.n2), indexing="ij")
    cy, cx = (spec.n1 - 1) / 2.0, (spec.n2 - 1) / 2.0
    half1, half2 = spec.n1 / 2.0, spec.n2 / 2.0
    ny = (yy - cy) / half1
    nx = (xx - cx) / half2

    soft = spec.edge_softness / min(half1, half2)
    outer_level = np.sqrt((ny / spec.outer_axes[0]) ** 2 + (nx / spec.outer_axes[1]) ** 2)
    outer = _soft_indicator(outer_level, soft)
    rho = np.sqrt(ny**2 + nx**2)
    ramp = np.exp(1j * (spec.phase_ramp[0] * yy + spec.phase_ramp[1] * xx))

    out = np.empty((spec.n1, spec.n2, spec.frames), dtype=np.complex128)
    for t in range(spec.frames):
        # exact modulo keeps frames t and t + period bit-identical
        cycle = np.mod(float(t), spec.period) / spec.period
        radius = spec.inner_radius * (1.0 + spec.pulse_amplitude * np.sin(2.0 * np.pi * cycle))
        inner = _soft_indicator(rho / radius, soft)
        out[:, :, t] = (outer + inner) * ramp
    return out


def gen_lowrank_stream(
    dims,
    rank: int,
    frames: int,
    noise_sigma: float,
    rng,
    row_decay: float = 0.0,
):
    """Random rank-R stream: factors, per-frame coefficients, synthesized frames.

    Factor entries are i.i.d. unit complex Gaussians; with ``row_decay > 0``
    each mode's rows are scaled by ``(1 + n)**(-row_decay)`` so the energy
    concentrates on early rows (useful for exercising score-driven sampling).
    Returns ``(tensor, subspace, gammas)`` with the tensor shaped
    ``dims + (frames,)`` and ``gammas`` holding one coefficient row per frame.
    """
    dims = tuple(int(d) for d in dims)
    factors = []
    for n in dims:
        z = (rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))) / np.sqrt(2.0)
        if row_decay > 0:
            z *= (1.0 + np.arange(n))[:, None] ** (-row_decay)
        factors.append(z)
    subspace = TensorSubspace(tuple(factors))
    gammas = (rng.standard_normal((frames, rank)) + 1j * rng.standard_normal((frames, rank))) / np.sqrt(2.0)

    tensor = np.empty(dims + (frames,), dtype=np.complex128)
    for t in range(frames):
        tensor[..., t] = synthesize_slice(subspace, gammas[t])
    if noise_sigma > 0:
        noise = rng.standard_normal(tensor.shape) + 1j * rng.standard_normal(tensor.shape)
        tensor = tensor + noise_sigma * noise
    return tensor, subspace, gammas
