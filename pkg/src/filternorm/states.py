"""Bipartite states on C^k (x) C^m and their associated completely positive maps.

The Kronecker convention is row-major: basis vector ``e_i (x) f_j`` sits at
index ``i*m + j`` (0-based), so ``numpy.kron`` and ``reshape(k, m)`` agree with
the on-disk matrix layout.  A state's map acts as ``T(X) = G_rho(X^t)`` where
``G_rho(Y) = sum_i tr(A_i Y) B_i`` for any expansion ``rho = sum_i A_i (x) B_i``;
in Kraus form the operators are the transposed coefficient matrices of the
spectral decomposition, which makes ``rho`` the Choi matrix of ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    image_basis,
    mirror_hermitian,
    psd_check,
    rank_eps,
)
from .maps import CpMap

__all__ = [
    "BipartiteState",
    "SchmidtPair",
    "maximally_entangled",
    "diagonal_state",
    "random_state",
    "partial_transpose",
    "is_ppt",
    "partial_trace_first",
    "partial_trace_second",
    "vec_to_matrix",
    "tensor_rank",
    "find_full_rank_vector",
    "state_to_map",
    "apply_filter",
    "operator_schmidt",
    "embed_rectangular",
]


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """PSD operator on ``C^k (x) C^m``.

    Attributes
    ----------
    k, m : int
        Local dimensions of the two tensor factors.
    rho : ndarray (k*m, k*m)
        The (Hermitian, PSD) matrix; mirrored to exact conjugate symmetry at
        construction.  The trace is NOT normalized.
    """

    k: int
    m: int
    rho: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise ValueError("local dimensions must be at least 1")
        rho = np.asarray(self.rho, dtype=complex)
        n = self.k * self.m
        if rho.shape != (n, n):
            raise ValueError(f"state matrix must be {n} x {n}, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ValueError("state matrix contains non-finite entries")
        herm_resid = np.abs(rho - rho.conj().T).max()
        if herm_resid > 1e-8 * max(1.0, np.abs(rho).max()):
            raise ValueError("state matrix is not Hermitian")
        rho = mirror_hermitian(rho)
        if not psd_check(rho):
            raise ValueError("state matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @property
    def order(self) -> int:
        return self.k * self.m

    def blocks(self) -> np.ndarray:
        """View of ``rho`` as a ``(k, m, k, m)`` tensor."""
        return self.rho.reshape(self.k, self.m, self.k, self.m)


def maximally_entangled(k: int) -> BipartiteState:
    """The projection onto ``sum_i e_i (x) e_i``, normalized to unit trace."""
    u = np.eye(k, dtype=complex).reshape(k * k)
    return BipartiteState(k=k, m=k, rho=np.outer(u, u.conj()) / k)


def diagonal_state(weights: np.ndarray) -> BipartiteState:
    """Diagonal state ``sum_ij w[i, j] E_ii (x) F_jj`` from a nonnegative array."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be a nonnegative 2-d array with some mass")
    k, m = w.shape
    return BipartiteState(k=k, m=m, rho=np.diag(w.reshape(k * m)).astype(complex))


def random_state(
    k: int, m: int, rank: int | None = None, rng: np.random.Generator | None = None
) -> BipartiteState:
    """Random unit-trace state of the given rank (Gram matrix of Gaussian vectors)."""
    rng = np.random.default_rng() if rng is None else rng
    n = k * m
    r = n if rank is None else rank
    g = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    rho = g @ g.conj().T
    return BipartiteState(k=k, m=m, rho=rho / np.trace(rho).real)


def partial_transpose(state: BipartiteState) -> np.ndarray:
    """Transpose on the second factor; Hermitian, trace preserved, involutive."""
    return (
        state.blocks()
        .transpose(0, 3, 2, 1)
        .reshape(state.order, state.order)
        .copy()
    )


def is_ppt(state: BipartiteState, tol: Tolerances | None = None) -> bool:
    """Whether the state has a positive partial transpose."""
    tol = _tol(tol)
    return psd_check(state.rho, tol) and psd_check(partial_transpose(state), tol)


def partial_trace_first(state: BipartiteState) -> np.ndarray:
    """Trace out the first factor: an ``m x m`` matrix."""
    return np.einsum("ijil->jl", state.blocks())


def partial_trace_second(state: BipartiteState) -> np.ndarray:
    """Trace out the second factor: a ``k x k`` matrix."""
    return np.einsum("ijlj->il", state.blocks())


def vec_to_matrix(v: np.ndarray, k: int, m: int) -> np.ndarray:
    """Coefficient matrix of a vector: entry ``(i, j)`` multiplies ``e_i (x) f_j``."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != k * m:
        raise ValueError(f"vector length {v.size} does not match {k}*{m}")
    return v.reshape(k, m)


def tensor_rank(v: np.ndarray, k: int, m: int, tol: Tolerances | None = None) -> int:
    """Schmidt rank of a vector = numerical rank of its coefficient matrix."""
    return rank_eps(vec_to_matrix(v, k, m), tol)


def find_full_rank_vector(
    state: BipartiteState,
    attempts: int = 64,
    rng: np.random.Generator | None = None,
    tol: Tolerances | None = None,
) -> np.ndarray | None:
    """Search the range for a vector of full tensor rank ``min(k, m)``.

    Tries the canonical vector ``sum_i e_i (x) e_i`` first (when square and
    inside the range, it anchors to a scalar filter, so downstream quantities
    are reproducible run to run); otherwise samples complex-Gaussian
    combinations of a range basis and keeps the one whose coefficient matrix
    is best conditioned (largest smallest singular value after normalization).
    Returns ``None`` when no sample reaches full tensor rank — absence of a
    witness, not proof that none exists.
    """
    tol = _tol(tol)
    rng = np.random.default_rng(0) if rng is None else rng
    basis = image_basis(state.rho, tol)
    r = basis.shape[1]
    if r == 0:
        return None
    target = min(state.k, state.m)
    if state.k == state.m:
        u = np.eye(state.k, dtype=complex).reshape(state.k * state.k)
        u = u / np.linalg.norm(u)
        residual = u - basis @ (basis.conj().T @ u)
        if np.linalg.norm(residual) <= 1e-10:
            return u
    best_v = None
    best_sigma = 0.0
    for _ in range(attempts):
        coeff = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        v = basis @ coeff
        norm = np.linalg.norm(v)
        if norm < 1e-14:
            continue
        v = v / norm
        sv = np.linalg.svd(vec_to_matrix(v, state.k, state.m), compute_uv=False)
        if sv[0] <= 0.0:
            continue
        if int(np.count_nonzero(sv > tol.rank_rel * sv[0])) == target:
            if sv[-1] > best_sigma:
                best_sigma = float(sv[-1])
                best_v = v
    return best_v


def state_to_map(state: BipartiteState, tol: Tolerances | None = None) -> CpMap:
    """The CP map ``T(X) = G_rho(X^t)`` whose Choi matrix is the state.

    Kraus operators are the transposed coefficient matrices of the spectral
    vectors (eigenvalues below ``rank_rel`` of the top are dropped).
    """
    tol = _tol(tol)
    eigs, vecs = np.linalg.eigh(state.rho)
    top = float(eigs.max(initial=0.0))
    if top <= 0.0:
        raise ValueError("the zero state has no associated map")
    kraus = []
    for i in range(eigs.size):
        if eigs[i] > tol.rank_rel * top:
            coeff = vec_to_matrix(np.sqrt(eigs[i]) * vecs[:, i], state.k, state.m)
            kraus.append(coeff.T.copy())
    return CpMap(src_dim=state.k, dst_dim=state.m, kraus=tuple(kraus))


def apply_filter(
    state: BipartiteState,
    R: np.ndarray,
    S: np.ndarray,
    tol: Tolerances | None = None,
) -> BipartiteState:
    """Congruence by a local filter: ``(R (x) S) rho (R (x) S)*``.

    Both factors must be invertible (this is a filtering operation, not a
    measurement), so ranks and tensor ranks are preserved.
    """
    tol = _tol(tol)
    R = np.asarray(R, dtype=complex)
    S = np.asarray(S, dtype=complex)
    if R.shape != (state.k, state.k) or S.shape != (state.m, state.m):
        raise ValueError("filter shapes must match the local dimensions")
    if rank_eps(R, tol) < state.k or rank_eps(S, tol) < state.m:
        raise ValueError("filters must be invertible")
    F = np.kron(R, S)
    return BipartiteState(k=state.k, m=state.m, rho=F @ state.rho @ F.conj().T)


@dataclass(frozen=True, eq=False)
class SchmidtPair:
    """One term of an operator Schmidt decomposition.

    ``left`` is ``k x k`` Hermitian, ``right`` is ``m x m`` Hermitian, and the
    families are trace-orthonormal; ``weight >= 0``.
    """

    left: np.ndarray
    right: np.ndarray
    weight: float


def operator_schmidt(
    state: BipartiteState, tol: Tolerances | None = None
) -> list[SchmidtPair]:
    """Operator Schmidt decomposition ``rho = sum_n w_n C_n (x) D_n``.

    Computed as the singular value decomposition of the realignment of the
    state, expressed in a real Hermitian operator basis so the factors come
    out exactly Hermitian.  Weights below ``rank_rel`` of the largest are
    dropped.
    """
    from .linalg import hermitian_basis  # local import keeps module load light

    tol = _tol(tol)
    k, m = state.k, state.m
    pk = hermitian_basis(k)
    qm = hermitian_basis(m)
    # real coefficient matrix R[a, b] = tr(rho (P_a (x) Q_b))
    coeff = np.einsum("aij,bkl,ikjl->ab", pk.conj(), qm.conj(), state.blocks())
    coeff = np.real(coeff)
    u, sv, vh = np.linalg.svd(coeff)
    pairs: list[SchmidtPair] = []
    if sv.size == 0 or sv[0] <= 0.0:
        return pairs
    for n in range(sv.size):
        if sv[n] <= tol.rank_rel * sv[0]:
            break
        left = mirror_hermitian(np.einsum("a,aij->ij", u[:, n], pk))
        right = mirror_hermitian(np.einsum("b,bij->ij", vh[n, :], qm))
        pairs.append(SchmidtPair(left=left, right=right, weight=float(sv[n])))
    return pairs


def embed_rectangular(
    state: BipartiteState, tol: Tolerances | None = None
) -> BipartiteState:
    """Embed a ``k (x) m`` state into a square ``mk (x) mk`` one.

    Using the operator Schmidt pairs ``(C_n, D_n, w_n)``, builds
    ``sum_n w_n (Id_m (x) C_n) (x) (D_n (x) Id_k)``.  The embedded state is PSD
    (it is a reshuffling of ``Id_m (x) rho (x) Id_k``), inherits the PPT
    property, and its decision problem matches the rectangular original.
    """
    tol = _tol(tol)
    k, m = state.k, state.m
    n = m * k
    out = np.zeros((n * n, n * n), dtype=complex)
    eye_m = np.eye(m, dtype=complex)
    eye_k = np.eye(k, dtype=complex)
    for pair in operator_schmidt(state, tol):
        out += pair.weight * np.kron(np.kron(eye_m, pair.left), np.kron(pair.right, eye_k))
    return BipartiteState(k=n, m=n, rho=out)
