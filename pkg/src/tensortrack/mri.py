"""MRI specializations: k-space interpolation, patches, and parallel imaging.

The interpolation path treats the k-space stack as the data tensor (a
trilinear model over (k_x, k_y, t)) and tracks it through entry masks; the
tomographic path works in the image domain with coil-weighted Fourier
measurements.  Both are thin specializations of the generic tracker step and
are required to agree with it; the equivalence is enforced by tests, not
assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TensorSubspace
from .observation import (
    CoilFourierMask,
    EntryMask,
    MeasurementBatch,
    unitary_dft2,
)
from .tracker import StepReport, TrackerState, track_step

__all__ = [
    "FrameEstimate",
    "PatchGrid",
    "CoilSet",
    "reconstruct_frame",
    "interp_track_step",
    "patch_partition",
    "patch_assemble",
    "synth_sensitivities",
    "coil_residual_image",
    "parallel_track_step",
]


@dataclass(frozen=True)
class FrameEstimate:
    """Interpolated k-space frame and the magnitude image it implies."""

    kspace: np.ndarray
    image: np.ndarray


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping tiling of an N1 x N2 frame into n1 x n2 patches.

    The patch extents must divide the frame extents exactly; ``rho`` is the
    per-patch tracking rank.
    """

    frame_shape: tuple[int, int]
    n1: int
    n2: int
    rho: int = 1

    def __post_init__(self):
        shape = tuple(int(n) for n in self.frame_shape)
        if len(shape) != 2:
            raise ValueError("patch grids tile 2-D frames")
        if self.n1 < 1 or self.n2 < 1 or self.rho < 1:
            raise ValueError("patch extents and rank must be positive")
        if shape[0] % self.n1 or shape[1] % self.n2:
            raise ValueError(
                f"patch size ({self.n1}, {self.n2}) does not tile frame {shape}"
            )
        object.__setattr__(self, "frame_shape", shape)

    @property
    def k1(self) -> int:
        return self.frame_shape[0] // self.n1

    @property
    def k2(self) -> int:
        return self.frame_shape[1] // self.n2


@dataclass(frozen=True)
class CoilSet:
    """Coil sensitivity maps with sum-of-squares normalization per pixel."""

    maps: tuple[np.ndarray, ...]

    def __post_init__(self):
        maps = tuple(np.asarray(h, dtype=np.complex128) for h in self.maps)
        if not maps:
            raise ValueError("coil set needs at least one map")
        shape = maps[0].shape
        for h in maps:
            if h.shape != shape:
                raise ValueError("all sensitivity maps must share the frame shape")
        object.__setattr__(self, "maps", maps)

    @property
    def shape(self) -> tuple[int, int]:
        return self.maps[0].shape

    @property
    def ncoils(self) -> int:
        return len(self.maps)


def reconstruct_frame(subspace: TensorSubspace, gamma) -> FrameEstimate:
    """Interpolated frame ``A1 diag(gamma) A2^T`` and its magnitude image.

    Plain (unconjugated) transpose, matching the synthesis model; the image is
    the magnitude of the inverse unitary DFT of the interpolated k-space.
    """
    if subspace.nmodes != 2:
        raise ValueError("frame reconstruction needs a two-mode (matrix) subspace")
    gamma = np.asarray(gamma, dtype=np.complex128).ravel()
    if gamma.size != subspace.rank:
        raise ValueError("gamma length does not match subspace rank")
    a1, a2 = subspace.factors
    kspace = (a1 * gamma[None, :]) @ a2.T
    image = np.abs(unitary_dft2(kspace, inverse=True))
    return FrameEstimate(kspace=kspace, image=image)


def interp_track_step(state: TrackerState, batch: MeasurementBatch):
    """k-space interpolation step: the tracker step over an entry mask.

    The sampled k-space indices act directly as entry picks of the k-space
    tensor, which collapses the factor updates to scatter updates on the
    sampled rows and columns.
    """
    if not isinstance(batch.descriptor, EntryMask):
        raise TypeError("interpolation steps take entry-mask batches")
    if state.subspace.nmodes != 2:
        raise ValueError("interpolation tracking needs a two-mode subspace")
    return track_step(state, batch)


def parallel_track_step(state: TrackerState, batch: MeasurementBatch, coils: CoilSet | None = None):
    """Sensitivity-aware tomographic step over coil-blocked k-space data.

    The factor updates flow through the aggregated residual image
    ``Theta = sum_c conj(H_c) * F^-1(Xi_c)``; see :func:`coil_residual_image`.
    """
    if not isinstance(batch.descriptor, CoilFourierMask):
        raise TypeError("parallel steps take coil-Fourier batches")
    if coils is not None and coils.ncoils != batch.descriptor.ncoils:
        raise ValueError("coil count does not match the batch descriptor")
    return track_step(state, batch)


def patch_partition(frame: np.ndarray, grid: PatchGrid) -> list[np.ndarray]:
    """Row-major list of the grid's non-overlapping patches."""
    frame = np.asarray(frame)
    if frame.shape != grid.frame_shape:
        raise ValueError(f"frame shape {frame.shape} does not match grid {grid.frame_shape}")
    out = []
    for p in range(grid.k1):
        for q in range(grid.k2):
            out.append(
                frame[p * grid.n1 : (p + 1) * grid.n1, q * grid.n2 : (q + 1) * grid.n2].copy()
            )
    return out


def patch_assemble(patches, grid: PatchGrid) -> np.ndarray:
    """Exact inverse of :func:`patch_partition`."""
    patches = [np.asarray(p) for p in patches]
    if len(patches) != grid.k1 * grid.k2:
        raise ValueError(f"expected {grid.k1 * grid.k2} patches, got {len(patches)}")
    out = np.empty(grid.frame_shape, dtype=np.result_type(*[p.dtype for p in patches]))
    for p in range(grid.k1):
        for q in range(grid.k2):
            tile = patches[p * grid.k2 + q]
            if tile.shape != (grid.n1, grid.n2):
                raise ValueError("patch shape does not match the grid")
            out[p * grid.n1 : (p + 1) * grid.n1, q * grid.n2 : (q + 1) * grid.n2] = tile
    return out


def synth_sensitivities(n1: int, n2: int, ncoils: int, smoothness: float, rng) -> CoilSet:
    """Synthetic smooth coil maps with sum-of-squares normalization.

    Each coil gets a raised-cosine magnitude bump centered at an anchor spaced
    evenly around the frame plus a linear phase ramp; the maps are then scaled
    pixelwise so ``sum_c |H_c|^2 == 1`` everywhere.
    """
    if ncoils < 1:
        raise ValueError("need at least one coil")
    if smoothness <= 0:
        raise ValueError("smoothness must be positive")
    yy, xx = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    cy, cx = (n1 - 1) / 2.0, (n2 - 1) / 2.0
    radius = max(n1, n2) * float(smoothness)
    maps = []
    for c in range(ncoils):
        angle = 2.0 * np.pi * c / ncoils
        ay = cy + 0.5 * n1 * 0.45 * np.sin(angle) * (ncoils > 1)
        ax = cx + 0.5 * n2 * 0.45 * np.cos(angle) * (ncoils > 1)
        dist = np.hypot(yy - ay, xx - ax)
        mag = 0.5 * (1.0 + np.cos(np.pi * np.minimum(dist / radius, 1.0)))
        mag = mag + 1e-3  # keep every pixel covered so normalization is defined
        py, px = rng.uniform(-np.pi, np.pi, size=2) / max(n1, n2)
        phase = np.exp(1j * (py * yy + px * xx))
        maps.append(mag * phase)
    stack = np.stack(maps)
    sos = np.sqrt(np.sum(np.abs(stack) ** 2, axis=0))
    stack /= sos[None, :, :]
    return CoilSet(tuple(stack))


def coil_residual_image(residual_images, coils: CoilSet) -> np.ndarray:
    """Aggregate ``Theta = sum_c conj(H_c) * F^-1(Xi_c)`` from per-coil residuals.

    ``residual_images[c]`` is the sparse matrix holding coil c's fitting
    errors on the sampled indices and zero elsewhere.  This equals the dense
    residual-weighted sketch sum ``sum_c sum_ell e (W_c^ell)^*``.
    """
    residual_images = [np.asarray(x, dtype=np.complex128) for x in residual_images]
    if len(residual_images) != coils.ncoils:
        raise ValueError("one residual image per coil is required")
    theta = np.zeros(coils.shape, dtype=np.complex128)
    for xi, h in zip(residual_images, coils.maps):
        if xi.shape != coils.shape:
            raise ValueError("residual image shape does not match the coils")
        theta += np.conj(h) * unitary_dft2(xi, inverse=True)
    return theta
