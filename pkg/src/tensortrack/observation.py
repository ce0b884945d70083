"""Measurement operators: sketches, unitary Fourier transforms, and masks.

A projection descriptor defines one frame's linear measurements.  The scalar
measurement of a frame ``L`` against a sketch tensor ``W`` is the bilinear
(unconjugated) pairing ``<L, W> = sum(L * W)``, matching the trace inner
product that makes ``<L, F_l e_i e_j^T F_r> = [F(L)]_{i,j}`` for the unitary
2-D DFT ``F``.

Frequency indexing is the natural (unshifted) DFT layout: row 0 is the DC
line, and a row's distance from the center is the magnitude of its signed
frequency offset (``fftfreq`` convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TensorSubspace

__all__ = [
    "EntryMask",
    "FourierMask",
    "CoilFourierMask",
    "GenericDense",
    "MeasurementBatch",
    "unitary_dft2",
    "unitary_dft_matrix",
    "project",
    "build_phi",
    "dense_sketches",
    "variable_density_rows",
    "rows_to_entries",
    "row_distances",
    "measure",
    "weighted_draw_without_replacement",
]


def _as_indices(indices, shape) -> np.ndarray:
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    if idx.size == 0:
        idx = idx.reshape(0, len(shape))
    if idx.shape[1] != len(shape):
        raise ValueError(
            f"indices have {idx.shape[1]} coordinates for a {len(shape)}-way frame"
        )
    for axis, extent in enumerate(shape):
        col = idx[:, axis]
        if col.size and (col.min() < 0 or col.max() >= extent):
            raise ValueError(f"index out of range on axis {axis} (extent {extent})")
    if len(np.unique(idx, axis=0)) != len(idx):
        raise ValueError("duplicate indices within one descriptor")
    return idx


@dataclass(frozen=True)
class EntryMask:
    """Entry subsampling: measurement ell picks the entry at ``indices[ell]``."""

    shape: tuple[int, ...]
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "indices", _as_indices(self.indices, self.shape))

    @property
    def nmeas(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class FourierMask:
    """k-space subsampling: measurement ell picks DFT coefficient (i, j)."""

    shape: tuple[int, int]
    indices: np.ndarray

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if len(shape) != 2:
            raise ValueError("Fourier masks are defined for 2-D frames")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "indices", _as_indices(self.indices, shape))

    @property
    def nmeas(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class CoilFourierMask:
    """Multi-coil k-space subsampling over a shared index set.

    Measurement order blocks the coils consecutively, coil 1 first:
    ``y = [F(H_1 * L)[Omega], ..., F(H_C * L)[Omega]]``.
    """

    shape: tuple[int, int]
    indices: np.ndarray
    coils: tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if len(shape) != 2:
            raise ValueError("coil Fourier masks are defined for 2-D frames")
        coils = tuple(np.asarray(h, dtype=np.complex128) for h in self.coils)
        if not coils:
            raise ValueError("coil Fourier mask needs at least one sensitivity map")
        for h in coils:
            if h.shape != shape:
                raise ValueError("sensitivity map shape does not match the frame")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "indices", _as_indices(self.indices, shape))
        object.__setattr__(self, "coils", coils)

    @property
    def ncoils(self) -> int:
        return len(self.coils)

    @property
    def nmeas(self) -> int:
        return len(self.indices) * len(self.coils)


@dataclass(frozen=True)
class GenericDense:
    """Explicit dense sketch tensors, one per measurement (oracle path)."""

    shape: tuple[int, ...]
    tensors: np.ndarray

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        tensors = np.asarray(self.tensors, dtype=np.complex128)
        if tensors.ndim != len(shape) + 1 or tensors.shape[1:] != shape:
            raise ValueError(
                f"dense sketches must have shape (L, {', '.join(map(str, shape))})"
            )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "tensors", tensors)

    @property
    def nmeas(self) -> int:
        return self.tensors.shape[0]


Descriptor = EntryMask | FourierMask | CoilFourierMask | GenericDense


@dataclass(frozen=True)
class MeasurementBatch:
    """One frame's measurements plus the descriptor that produced them."""

    y: np.ndarray
    descriptor: Descriptor
    t: int = 0
    noise_sigma: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128).ravel()
        if y.size != self.descriptor.nmeas:
            raise ValueError(
                f"batch holds {y.size} values for {self.descriptor.nmeas} projections"
            )
        object.__setattr__(self, "y", y)


def unitary_dft2(image: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary 2-D DFT (1/sqrt(N) per direction); forward o inverse == identity."""
    image = np.asarray(image, dtype=np.complex128)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("unitary_dft2 expects a nonempty 2-D array")
    if inverse:
        return np.fft.ifft2(image, norm="ortho")
    return np.fft.fft2(image, norm="ortho")


def unitary_dft_matrix(n: int) -> np.ndarray:
    """Symmetric unitary 1-D DFT matrix F with F @ x == fft(x, norm='ortho')."""
    return np.fft.fft(np.eye(n), axis=0, norm="ortho")


def project(slice_: np.ndarray, descriptor: Descriptor) -> np.ndarray:
    """Apply the descriptor's sketches to one frame, returning the L_t values."""
    slice_ = np.asarray(slice_, dtype=np.complex128)
    if slice_.shape != descriptor.shape:
        raise ValueError(
            f"frame shape {slice_.shape} does not match descriptor {descriptor.shape}"
        )
    if isinstance(descriptor, EntryMask):
        return slice_[tuple(descriptor.indices.T)]
    if isinstance(descriptor, FourierMask):
        return unitary_dft2(slice_)[tuple(descriptor.indices.T)]
    if isinstance(descriptor, CoilFourierMask):
        picks = tuple(descriptor.indices.T)
        blocks = [unitary_dft2(h * slice_)[picks] for h in descriptor.coils]
        return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.complex128)
    if isinstance(descriptor, GenericDense):
        axes = tuple(range(slice_.ndim))
        return np.tensordot(descriptor.tensors, slice_, axes=(tuple(a + 1 for a in axes), axes))
    raise TypeError(f"unknown descriptor type {type(descriptor).__name__}")


def build_phi(subspace: TensorSubspace, descriptor: Descriptor) -> np.ndarray:
    """Regression matrix with ``Phi[ell, r]`` the sketch of the r-th basis.

    Entry masks use the factor-entry product directly; Fourier masks use the
    rank-one identity ``F(a o b) = (F1 a) o (F2 b)`` so the dense rank-one
    tensor is never formed.  Coil masks follow the sensitivity-weighted model
    ``[F(H_c * (a o b))]_{i,j}`` with coil blocks stacked in coil order.
    """
    if subspace.dims != descriptor.shape:
        raise ValueError(
            f"subspace dims {subspace.dims} do not match descriptor {descriptor.shape}"
        )
    if isinstance(descriptor, EntryMask):
        phi = np.ones((descriptor.nmeas, subspace.rank), dtype=np.complex128)
        for axis, factor in enumerate(subspace.factors):
            phi *= factor[descriptor.indices[:, axis], :]
        return phi
    if isinstance(descriptor, FourierMask):
        a_hat = np.fft.fft(subspace.factors[0], axis=0, norm="ortho")
        b_hat = np.fft.fft(subspace.factors[1], axis=0, norm="ortho")
        i, j = descriptor.indices.T
        return a_hat[i, :] * b_hat[j, :]
    if isinstance(descriptor, CoilFourierMask):
        picks = tuple(descriptor.indices.T)
        a, b = subspace.factors
        blocks = []
        for h in descriptor.coils:
            block = np.empty((len(descriptor.indices), subspace.rank), dtype=np.complex128)
            for r in range(subspace.rank):
                block[:, r] = unitary_dft2(h * np.outer(a[:, r], b[:, r]))[picks]
            blocks.append(block)
        return np.concatenate(blocks, axis=0)
    if isinstance(descriptor, GenericDense):
        phi = np.empty((descriptor.nmeas, subspace.rank), dtype=np.complex128)
        for r in range(subspace.rank):
            phi[:, r] = project(subspace.basis_tensor(r), descriptor)
        return phi
    raise TypeError(f"unknown descriptor type {type(descriptor).__name__}")


def dense_sketches(descriptor: Descriptor) -> np.ndarray:
    """Materialize every sketch tensor of a descriptor (test/oracle helper)."""
    if isinstance(descriptor, GenericDense):
        return descriptor.tensors.copy()
    out = np.zeros((descriptor.nmeas,) + descriptor.shape, dtype=np.complex128)
    if isinstance(descriptor, EntryMask):
        for ell, idx in enumerate(descriptor.indices):
            out[(ell, *idx)] = 1.0
        return out
    if isinstance(descriptor, FourierMask):
        f1 = unitary_dft_matrix(descriptor.shape[0])
        f2 = unitary_dft_matrix(descriptor.shape[1])
        for ell, (i, j) in enumerate(descriptor.indices):
            out[ell] = np.outer(f1[:, i], f2[:, j])
        return out
    if isinstance(descriptor, CoilFourierMask):
        f1 = unitary_dft_matrix(descriptor.shape[0])
        f2 = unitary_dft_matrix(descriptor.shape[1])
        ell = 0
        for h in descriptor.coils:
            for i, j in descriptor.indices:
                out[ell] = h * np.outer(f1[:, i], f2[:, j])
                ell += 1
        return out
    raise TypeError(f"unknown descriptor type {type(descriptor).__name__}")


def row_distances(n1: int) -> np.ndarray:
    """Distance of each DFT row from the DC line (|signed frequency offset|)."""
    return np.abs(np.fft.fftfreq(n1, d=1.0 / n1)).astype(np.int64)


def weighted_draw_without_replacement(weights: np.ndarray, k: int, rng) -> np.ndarray:
    """Draw k distinct indices by sequential renormalized weighted draws.

    Returned in draw order, so the first element follows the base law exactly.
    """
    w = np.asarray(weights, dtype=float).copy()
    if k > np.count_nonzero(w):
        raise ValueError("cannot draw more items than have positive weight")
    picked = np.empty(k, dtype=np.int64)
    cdf = np.empty_like(w)
    for n in range(k):
        np.cumsum(w, out=cdf)
        total = cdf[-1]
        u = rng.random() * total
        idx = int(np.searchsorted(cdf, u, side="right"))
        idx = min(idx, len(w) - 1)
        picked[n] = idx
        w[idx] = 0.0
    return picked


def variable_density_rows(n1: int, alpha: float, fraction: float, rng) -> np.ndarray:
    """Variable-density Cartesian phase-encode rows.

    Selects ``ceil(fraction * n1)`` distinct rows.  The center (DC) row is
    always included; the rest are drawn without replacement with per-distance
    probability proportional to ``d**alpha``, the mass at each distance split
    evenly between the +d and -d offsets (the lone Nyquist row of an even
    extent keeps a half share).  Rows are returned in draw order, center
    first.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n_rows = int(np.ceil(fraction * n1))
    if n_rows < 1:
        raise ValueError("fraction selects no rows")
    dist = row_distances(n1)
    weights = np.zeros(n1)
    nonzero = dist > 0
    weights[nonzero] = dist[nonzero].astype(float) ** alpha / 2.0
    if n_rows - 1 > 0:
        drawn = weighted_draw_without_replacement(weights, n_rows - 1, rng)
    else:
        drawn = np.empty(0, dtype=np.int64)
    return np.concatenate([np.zeros(1, dtype=np.int64), drawn])


def rows_to_entries(rows, n2: int) -> np.ndarray:
    """Expand phase-encode rows into the (i, j) entry set of fully read lines."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.arange(n2, dtype=np.int64)
    i = np.repeat(rows, n2)
    j = np.tile(cols, len(rows))
    return np.stack([i, j], axis=1)


def measure(
    truth_slice: np.ndarray,
    descriptor: Descriptor,
    noise_sigma: float,
    rng,
    t: int = 0,
) -> MeasurementBatch:
    """Sketch a ground-truth frame and add circular complex Gaussian noise.

    Real and imaginary noise components are i.i.d. with standard deviation
    ``noise_sigma`` each.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    y = project(truth_slice, descriptor)
    if noise_sigma > 0 and y.size:
        noise = rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)
        y = y + noise_sigma * noise
    return MeasurementBatch(y=y, descriptor=descriptor, t=t, noise_sigma=noise_sigma)
