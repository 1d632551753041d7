"""Tolerance-aware linear algebra primitives shared by the whole package.

Everything operates on plain complex ``numpy.ndarray`` matrices.  Rank-type
decisions use singular values with a cutoff *relative* to the largest singular
value; positivity checks use an absolute floor scaled by the spectral range.
The single :class:`Tolerances` bundle threads every numeric knob through the
package so a caller can tighten or relax the whole pipeline coherently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "Projection",
    "dagger",
    "mirror_hermitian",
    "hermitian_basis",
    "rank_eps",
    "image_basis",
    "kernel_basis",
    "subspace_intersection",
    "projector_onto",
    "projection_from_matrix",
    "identity_projection",
    "orthogonal_complement",
    "same_subspace",
    "psd_check",
    "hermitian_sqrt_pinv",
]


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds used across the package.

    Attributes
    ----------
    rank_rel : float
        Relative singular-value cutoff for rank decisions.  Also serves as the
        relative positive-definiteness threshold for the quadratic model's Gram
        matrix (both default to 1e-9; they are deliberately the same knob).
    psd_abs : float
        Absolute eigenvalue floor (scaled by the spectral magnitude) below
        which a Hermitian matrix still counts as positive semidefinite.
    zero_f : float
        Threshold under which the minimized objective of the adjoint-block
        quadratic counts as an exact zero.
    idem : float
        Tolerance for idempotence / invariance residuals of projections.
    max_power_iters : int
        Iteration cap for power-method fallbacks on large corner reps.
    sinkhorn_residual : float
        Doubly-stochastic residual target for the operator scaling loop.
    sinkhorn_max_iters : int
        Iteration cap for the operator scaling loop.
    """

    rank_rel: float = 1e-9
    psd_abs: float = 1e-9
    zero_f: float = 1e-8
    idem: float = 1e-10
    max_power_iters: int = 10000
    sinkhorn_residual: float = 1e-8
    sinkhorn_max_iters: int = 100000

    def __post_init__(self) -> None:
        for name in ("rank_rel", "psd_abs", "zero_f", "idem", "sinkhorn_residual"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name!r} must be positive")
        for name in ("max_power_iters", "sinkhorn_max_iters"):
            if not getattr(self, name) > 0:
                raise ValueError(f"iteration cap {name!r} must be positive")


DEFAULT_TOL = Tolerances()


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


def _as_matrix(mat: np.ndarray, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(mat)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr.astype(complex, copy=False)


def dagger(mat: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(mat).conj().T


def mirror_hermitian(mat: np.ndarray) -> np.ndarray:
    """Return the matrix with its lower triangle mirrored onto the upper one.

    The result is exactly conjugate-symmetric by construction (the diagonal is
    replaced by its real part), which keeps downstream eigensolvers honest.
    """
    arr = _as_matrix(mat, "hermitian matrix")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError("hermitian matrix must be square")
    low = np.tril(arr, -1)
    return low + dagger(low) + np.diag(np.real(np.diag(arr)))


def hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal real basis of the Hermitian ``dim x dim`` matrices.

    Ordered as: ``dim`` diagonal units, then the ``dim(dim-1)/2`` real
    symmetric pairs, then the ``dim(dim-1)/2`` imaginary antisymmetric pairs.
    Orthonormal in the trace inner product.

    Returns
    -------
    ndarray of shape (dim*dim, dim, dim)
    """
    mats = np.zeros((dim * dim, dim, dim), dtype=complex)
    idx = 0
    for i in range(dim):
        mats[idx, i, i] = 1.0
        idx += 1
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            mats[idx, i, j] = inv_sqrt2
            mats[idx, j, i] = inv_sqrt2
            idx += 1
    for i in range(dim):
        for j in range(i + 1, dim):
            mats[idx, i, j] = -1j * inv_sqrt2
            mats[idx, j, i] = 1j * inv_sqrt2
            idx += 1
    return mats


def rank_eps(mat: np.ndarray, tol: Tolerances | None = None) -> int:
    """Numerical rank: singular values above ``rank_rel`` times the largest."""
    tol = _tol(tol)
    arr = _as_matrix(mat)
    if arr.size == 0:
        return 0
    sv = np.linalg.svd(arr, compute_uv=False)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sv > tol.rank_rel * sv[0]))


def image_basis(mat: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Orthonormal basis of the column space, as columns of an ``(n, r)`` array."""
    tol = _tol(tol)
    arr = _as_matrix(mat)
    u, sv, _ = np.linalg.svd(arr, full_matrices=False)
    if sv.size == 0 or sv[0] <= 0.0:
        return np.zeros((arr.shape[0], 0), dtype=complex)
    r = int(np.count_nonzero(sv > tol.rank_rel * sv[0]))
    return u[:, :r]


def kernel_basis(mat: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Orthonormal basis of the null space, as columns of a ``(cols, n - r)`` array."""
    tol = _tol(tol)
    arr = _as_matrix(mat)
    n = arr.shape[1]
    u, sv, vh = np.linalg.svd(arr, full_matrices=True)
    if sv.size == 0 or sv[0] <= 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(sv > tol.rank_rel * sv[0]))
    return vh[r:].conj().T.reshape(n, n - r)


def subspace_intersection(
    basis_a: np.ndarray, basis_b: np.ndarray, tol: Tolerances | None = None
) -> np.ndarray:
    """Orthonormal basis of the intersection of two column spans.

    A direction counts as shared when its principal angle is below
    ``sqrt(rank_rel)``; for genuinely common vectors the angle is at machine
    level, so membership residuals in either span stay tiny.
    """
    tol = _tol(tol)
    a = _as_matrix(basis_a, "basis_a")
    b = _as_matrix(basis_b, "basis_b")
    if a.shape[0] != b.shape[0]:
        raise ValueError("bases must live in the same ambient space")
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, cosines, _ = np.linalg.svd(a.conj().T @ b)
    angle_tol = np.sqrt(tol.rank_rel)
    keep = np.arccos(np.clip(cosines, -1.0, 1.0)) < angle_tol
    cols = a @ u[:, : int(np.count_nonzero(keep))]
    if cols.shape[1] == 0:
        return cols
    # re-orthonormalize to clean up rounding
    q, _ = np.linalg.qr(cols)
    return q


@dataclass(frozen=True, eq=False)
class Projection:
    """Orthogonal projection, stored with an explicit orthonormal image basis.

    Attributes
    ----------
    dim : int
        Ambient dimension.
    matrix : ndarray (dim, dim)
        The projector ``basis @ basis*``; Hermitian and idempotent.
    basis : ndarray (dim, rank)
        Orthonormal columns spanning the image.
    rank : int
    """

    dim: int
    matrix: np.ndarray
    basis: np.ndarray
    rank: int


def projector_onto(basis: np.ndarray, tol: Tolerances | None = None) -> Projection:
    """Projection onto the span of orthonormal columns.

    ``basis`` must already be orthonormal (Gram residual below ``idem`` scaled
    to the dimension); use :func:`image_basis` first for a raw spanning set.
    """
    tol = _tol(tol)
    b = _as_matrix(basis, "basis")
    n, r = b.shape
    if r:
        gram_resid = np.abs(b.conj().T @ b - np.eye(r)).max()
        if gram_resid > max(tol.idem, 1e3 * np.finfo(float).eps * n):
            raise ValueError(
                f"basis columns are not orthonormal (Gram residual {gram_resid:.2e})"
            )
    mat = mirror_hermitian(b @ b.conj().T) if r else np.zeros((n, n), dtype=complex)
    return Projection(dim=n, matrix=mat, basis=b, rank=r)


def projection_from_matrix(mat: np.ndarray, tol: Tolerances | None = None) -> Projection:
    """Projection onto the image of an (approximately idempotent Hermitian) matrix."""
    return projector_onto(image_basis(mat, tol), tol)


def identity_projection(dim: int) -> Projection:
    """The full-space projection of the given dimension."""
    return Projection(
        dim=dim,
        matrix=np.eye(dim, dtype=complex),
        basis=np.eye(dim, dtype=complex),
        rank=dim,
    )


def orthogonal_complement(proj: Projection, tol: Tolerances | None = None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of a projection's image."""
    if proj.rank == 0:
        return np.eye(proj.dim, dtype=complex)
    if proj.rank == proj.dim:
        return np.zeros((proj.dim, 0), dtype=complex)
    return kernel_basis(proj.basis.conj().T, tol)


def same_subspace(p: Projection, q: Projection, atol: float = 1e-8) -> bool:
    """Whether two projections describe the same subspace, entrywise on projectors."""
    if p.dim != q.dim:
        return False
    return p.rank == q.rank and np.abs(p.matrix - q.matrix).max() <= atol


def psd_check(mat: np.ndarray, tol: Tolerances | None = None) -> bool:
    """Positive semidefiniteness up to an absolute floor.

    The minimum eigenvalue may dip to ``-psd_abs * (1 + |spectrum|_max)``
    before the verdict flips, which absorbs round-off from congruences.
    """
    tol = _tol(tol)
    arr = mirror_hermitian(mat)
    if arr.shape[0] == 0:
        return True
    eigs = np.linalg.eigvalsh(arr)
    scale = 1.0 + float(np.abs(eigs).max(initial=0.0))
    return bool(eigs.min() >= -tol.psd_abs * scale)


def hermitian_sqrt_pinv(
    mat: np.ndarray, tol: Tolerances | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Square root and pseudo-inverse square root of a PSD matrix.

    Eigenvalues below ``rank_rel`` times the largest are treated as exact
    zeros in both factors.

    Returns
    -------
    (sqrt, pinv_sqrt) : pair of ndarray
        ``sqrt @ sqrt`` recovers the input on its support and
        ``sqrt @ pinv_sqrt`` is the orthogonal projection onto it.
    """
    tol = _tol(tol)
    arr = mirror_hermitian(mat)
    if not psd_check(arr, tol):
        raise ValueError("hermitian_sqrt_pinv requires a PSD input")
    eigs, vecs = np.linalg.eigh(arr)
    top = float(eigs.max(initial=0.0))
    cut = tol.rank_rel * top
    kept = eigs > cut
    root = np.zeros_like(eigs)
    inv_root = np.zeros_like(eigs)
    root[kept] = np.sqrt(eigs[kept])
    inv_root[kept] = 1.0 / np.sqrt(eigs[kept])
    sqrt = mirror_hermitian(vecs @ np.diag(root) @ vecs.conj().T)
    pinv_sqrt = mirror_hermitian(vecs @ np.diag(inv_root) @ vecs.conj().T)
    return sqrt, pinv_sqrt
