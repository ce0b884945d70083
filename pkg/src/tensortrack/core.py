"""Complex M-way tensor values, PARAFAC factor subspaces, and the rank surrogate.

Tensors are plain ``numpy.ndarray`` values with ``complex128`` entries and
row-major layout (last index fastest).  A latent subspace is the ordered list
of the M-1 non-temporal factor matrices of a rank-R PARAFAC model; mode 1
comes first and the ordering is fixed.  Nothing here mutates its inputs, so
all values can be shared freely across threads.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "TensorSubspace",
    "outer_rank_one",
    "synthesize_slice",
    "singular_values",
    "rank_surrogate",
    "rebalance",
    "unfold",
    "refold",
]


def _as_factor(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"factor matrix must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"factor matrix must be nonempty, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class TensorSubspace:
    """Rank-R tensor subspace held as M-1 factor matrices.

    ``factors[m]`` has shape ``(N_{m+1}, R)``.  Column r of every factor
    belongs to the r-th rank-one basis.  Columns may be rank deficient or
    non-orthogonal; no normalization is imposed at construction.
    """

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(_as_factor(f) for f in self.factors)
        if not factors:
            raise ValueError("subspace needs at least one factor matrix")
        ranks = {f.shape[1] for f in factors}
        if len(ranks) != 1:
            raise ValueError(f"factor ranks differ: {sorted(ranks)}")
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def nmodes(self) -> int:
        return len(self.factors)

    def basis_tensor(self, r: int) -> np.ndarray:
        """Dense rank-one basis tensor for component ``r``."""
        return outer_rank_one([f[:, r] for f in self.factors])


def outer_rank_one(vectors) -> np.ndarray:
    """Outer product of the given vectors.

    Entry ``(n_1, ..., n_M)`` of the result is the product of the ``n_m``-th
    entries of the inputs.
    """
    vecs = [np.asarray(v, dtype=np.complex128).ravel() for v in vectors]
    if not vecs:
        raise ValueError("outer product of an empty vector list")
    for v in vecs:
        if v.size == 0:
            raise ValueError("outer product with an empty vector")
    return reduce(np.multiply.outer, vecs)


def synthesize_slice(subspace: TensorSubspace, gamma) -> np.ndarray:
    """Dense slice ``sum_r gamma_r * a_r^(1) o ... o a_r^(M-1)``.

    Linear in ``gamma``; raises on rank mismatch.
    """
    gamma = np.asarray(gamma, dtype=np.complex128).ravel()
    if gamma.shape != (subspace.rank,):
        raise ValueError(
            f"gamma length {gamma.size} does not match rank {subspace.rank}"
        )
    letters = string.ascii_lowercase
    ins = ",".join(f"{letters[m]}z" for m in range(subspace.nmodes))
    out = "".join(letters[: subspace.nmodes])
    return np.einsum(f"{ins},z->{out}", *subspace.factors, gamma, optimize=True)


def singular_values(subspace: TensorSubspace, mode_m_factor=None) -> np.ndarray:
    """Per-component singular values ``sigma_r = prod_m ||a_r^(m)||``.

    The product runs over the subspace factors plus, when supplied, the
    trailing mode-M factor.  Values are returned in column order, unsorted:
    PARAFAC columns have identity, so no permutation is resolved.
    """
    mats = list(subspace.factors)
    if mode_m_factor is not None:
        f = _as_factor(mode_m_factor)
        if f.shape[1] != subspace.rank:
            raise ValueError("mode-M factor rank does not match subspace rank")
        mats.append(f)
    norms = np.stack([np.linalg.norm(f, axis=0) for f in mats])
    return np.prod(norms, axis=0)


def rank_surrogate(factors) -> float:
    """Tractable low-rank penalty ``(1/M) * sum_m ||A_m||_F^2``.

    ``M`` is the number of supplied factor matrices.  For per-component
    balanced factors this equals ``sum_r sigma_r^(2/M)``, the generalization
    of the matrix nuclear norm the regularizer reduces to at M = 2.
    """
    mats = [_as_factor(f) for f in factors]
    if not mats:
        raise ValueError("rank surrogate of an empty factor list")
    total = sum(np.linalg.norm(f) ** 2 for f in mats)
    return float(total) / len(mats)


def rebalance(subspace: TensorSubspace) -> TensorSubspace:
    """Equalize per-component column norms across modes.

    For each component r every factor column is rescaled to the geometric
    mean norm ``g_r = (prod_m ||a_r^(m)||)^(1/(M-1))``.  Magnitudes only:
    column phases stay where the input put them, and the tensor synthesized
    from any coefficient vector is unchanged.  Components whose columns are
    zero in every mode are left zero; a column that is zero in one mode but
    not another has no norm-preserving rescaling and raises.
    """
    norms = np.stack([np.linalg.norm(f, axis=0) for f in subspace.factors])
    zero = norms == 0.0
    dead = zero.all(axis=0)
    mixed = zero.any(axis=0) & ~dead
    if mixed.any():
        r = int(np.flatnonzero(mixed)[0])
        raise ValueError(f"component {r} is zero in some modes but not all")

    nmodes = subspace.nmodes
    target = np.ones(subspace.rank)
    live = ~dead
    target[live] = np.prod(norms[:, live], axis=0) ** (1.0 / nmodes)

    scaled = []
    for f, n in zip(subspace.factors, norms):
        scale = np.ones(subspace.rank)
        scale[live] = target[live] / n[live]
        scaled.append(f * scale[np.newaxis, :])
    return TensorSubspace(tuple(scaled))


def unfold(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (1-based) into an ``N_mode x prod(rest)`` matrix.

    Columns enumerate the remaining indices in ascending mode order with the
    last one fastest; ``refold`` inverts exactly.
    """
    tensor = np.asarray(tensor)
    if not 1 <= mode <= tensor.ndim:
        raise ValueError(f"mode {mode} out of range for {tensor.ndim}-way tensor")
    return np.moveaxis(tensor, mode - 1, 0).reshape(tensor.shape[mode - 1], -1)


def refold(matrix: np.ndarray, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor with extents ``dims``."""
    dims = tuple(int(d) for d in dims)
    if not 1 <= mode <= len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = dims[: mode - 1] + dims[mode:]
    stacked = np.asarray(matrix).reshape((dims[mode - 1],) + rest)
    return np.moveaxis(stacked, 0, mode - 1)
