"""Completely positive maps in Kraus form and their corner representations.

A map ``T(X) = sum_i K_i X K_i*`` acts from ``k x k`` to ``m x m`` matrices.
Most of the decision machinery lives on *corners*: for a projection ``V`` the
compression ``V M V`` is an invariant subalgebra when ``T(V X V)`` stays inside
it, and ``T`` restricted there is encoded as a real matrix over an orthonormal
Hermitian basis.  Spectral-radius (Perron) data of those real matrices drives
the irreducibility tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Projection,
    Tolerances,
    dagger,
    hermitian_basis,
    image_basis,
    mirror_hermitian,
    psd_check,
    rank_eps,
)

__all__ = [
    "CpMap",
    "CornerRep",
    "identity_map",
    "apply",
    "adjoint",
    "transform",
    "conjugate",
    "kraus_norm",
    "restrict_to_corner",
    "leaves_invariant",
    "corner_rep",
    "geometric_multiplicity",
    "spectral_radius_perron",
    "is_doubly_stochastic",
    "is_irreducible",
]


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


@dataclass(frozen=True, eq=False)
class CpMap:
    """Completely positive map given by Kraus operators.

    Attributes
    ----------
    src_dim : int
        Dimension ``k`` of the input matrices.
    dst_dim : int
        Dimension ``m`` of the output matrices.
    kraus : tuple of ndarray
        Operators of shape ``(m, k)``; at least one must be nonzero.
    """

    src_dim: int
    dst_dim: int
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.kraus:
            raise ValueError("CpMap needs at least one Kraus operator")
        for op in self.kraus:
            if op.shape != (self.dst_dim, self.src_dim):
                raise ValueError(
                    f"Kraus operator shape {op.shape} does not match "
                    f"({self.dst_dim}, {self.src_dim})"
                )
            if not np.all(np.isfinite(op)):
                raise ValueError("Kraus operator contains non-finite entries")
        if all(np.abs(op).max() == 0.0 for op in self.kraus):
            raise ValueError("all Kraus operators vanish")


def identity_map(dim: int) -> CpMap:
    """The identity map on ``dim x dim`` matrices."""
    return CpMap(src_dim=dim, dst_dim=dim, kraus=(np.eye(dim, dtype=complex),))


def apply(T: CpMap, X: np.ndarray) -> np.ndarray:
    """Evaluate ``T(X) = sum_i K_i X K_i*``."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (T.src_dim, T.src_dim):
        raise ValueError(f"input must be {T.src_dim} x {T.src_dim}, got {X.shape}")
    out = np.zeros((T.dst_dim, T.dst_dim), dtype=complex)
    for op in T.kraus:
        out += op @ X @ dagger(op)
    return out


def adjoint(T: CpMap) -> CpMap:
    """Adjoint map in the trace inner product: Kraus operators get daggered."""
    return CpMap(
        src_dim=T.dst_dim,
        dst_dim=T.src_dim,
        kraus=tuple(dagger(op) for op in T.kraus),
    )


def transform(T: CpMap, left: np.ndarray, right: np.ndarray) -> CpMap:
    """Two-sided Kraus transform ``K -> left @ K @ right``.

    Realizes ``X -> left T(right X right*) left*``.
    """
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    kraus = tuple(left @ op @ right for op in T.kraus)
    return CpMap(src_dim=right.shape[1], dst_dim=left.shape[0], kraus=kraus)


def conjugate(
    T: CpMap, Q: np.ndarray, scale: float = 1.0, tol: Tolerances | None = None
) -> CpMap:
    """Congruence ``X -> scale * Q T(Q^{-1} X Q^{-*}) Q*`` for square maps."""
    tol = _tol(tol)
    if T.src_dim != T.dst_dim:
        raise ValueError("conjugate requires a square map")
    Q = np.asarray(Q, dtype=complex)
    if Q.shape != (T.src_dim, T.src_dim):
        raise ValueError("Q has the wrong shape")
    if rank_eps(Q, tol) < T.src_dim:
        raise ValueError("Q must be invertible")
    if scale <= 0:
        raise ValueError("scale must be positive")
    Qi = np.linalg.inv(Q)
    return transform(T, np.sqrt(scale) * Q, Qi)


def kraus_norm(T: CpMap) -> float:
    """Sum of squared Frobenius norms of the Kraus operators (bounds ``||T||``)."""
    return float(sum(np.linalg.norm(op) ** 2 for op in T.kraus))


def restrict_to_corner(T: CpMap, V: Projection) -> CpMap:
    """Compress a square map to the corner of ``V``: Kraus ``K -> B* K B``.

    Faithful as the corner restriction when ``T`` leaves ``V M V`` invariant.
    """
    if T.src_dim != T.dst_dim or T.src_dim != V.dim:
        raise ValueError("corner restriction requires a square map matching V")
    b = V.basis
    return CpMap(
        src_dim=V.rank,
        dst_dim=V.rank,
        kraus=tuple(dagger(b) @ op @ b for op in T.kraus),
    )


def _corner_basis(V: Projection) -> np.ndarray:
    """Lifted orthonormal Hermitian basis of ``V M V`` (shape ``(s^2, k, k)``)."""
    small = hermitian_basis(V.rank)
    b = V.basis
    return np.einsum("ip,npq,jq->nij", b, small, b.conj())


def leaves_invariant(
    T: CpMap, V: Projection, tol: Tolerances | None = None
) -> bool:
    """Whether ``T(V M V)`` stays inside ``V M V``.

    Checks ``T(b) == V T(b) V`` for every corner basis element ``b`` with an
    absolute threshold of ``idem`` scaled by a Kraus-norm bound on ``||T||``.
    """
    tol = _tol(tol)
    if T.src_dim != T.dst_dim or T.src_dim != V.dim:
        return False
    thresh = tol.idem * max(1.0, kraus_norm(T))
    P = V.matrix
    for b in _corner_basis(V):
        tb = apply(T, b)
        if np.abs(tb - P @ tb @ P).max() > thresh:
            return False
    return True


@dataclass(frozen=True, eq=False)
class CornerRep:
    """Real matrix of a map restricted to a corner.

    Attributes
    ----------
    V : Projection
        The corner's projection (rank ``s``).
    basis : ndarray (s^2, k, k)
        Lifted orthonormal Hermitian basis of ``V M V``.
    matrix : ndarray (s^2, s^2), real
        ``matrix[i, j] = Re tr(basis_i T(basis_j))``.  The compressed adjoint
        ``X -> V T*(X) V`` is represented by ``matrix.T`` in the same basis.
    """

    V: Projection
    basis: np.ndarray
    matrix: np.ndarray


def corner_rep(
    T: CpMap, V: Projection, tol: Tolerances | None = None, check: bool = True
) -> CornerRep:
    """Real representation of ``T`` on the corner of ``V``.

    Raises ``ValueError`` when invariance fails badly (guard threshold is a
    loose ``1e-6`` of the map's norm bound; the strict contract lives in
    :func:`leaves_invariant`).
    """
    tol = _tol(tol)
    if T.src_dim != T.dst_dim or T.src_dim != V.dim:
        raise ValueError("corner_rep requires a square map matching V")
    basis = _corner_basis(V)
    s2 = basis.shape[0]
    rep = np.zeros((s2, s2))
    P = V.matrix
    guard = 1e-6 * max(1.0, kraus_norm(T))
    for j in range(s2):
        tb = apply(T, basis[j])
        if check and np.abs(tb - P @ tb @ P).max() > guard:
            raise ValueError("corner is not invariant under the map")
        rep[:, j] = np.real(np.einsum("nij,ij->n", basis.conj(), tb))
    return CornerRep(V=V, basis=basis, matrix=rep)


def geometric_multiplicity(
    rep: CornerRep | np.ndarray, lam: float, tol: Tolerances | None = None
) -> int:
    """Dimension of the eigenspace of ``lam`` for a corner rep matrix."""
    mat = rep.matrix if isinstance(rep, CornerRep) else np.asarray(rep)
    n = mat.shape[0]
    return n - rank_eps(mat - lam * np.eye(n), tol)


def _top_eigenvalue(mat: np.ndarray, tol: Tolerances) -> float:
    """Largest-modulus eigenvalue, asserted (nearly) real per Perron theory."""
    n = mat.shape[0]
    if n > 256:
        # power iteration fallback for large corners (outside the desk scale)
        x = np.ones(n) / np.sqrt(n)
        lam = 0.0
        for _ in range(tol.max_power_iters):
            y = mat @ x
            norm = np.linalg.norm(y)
            if norm == 0.0:
                return 0.0
            x_new = y / norm
            lam_new = float(x_new @ mat @ x_new)
            if abs(lam_new - lam) < 1e-14 * max(1.0, abs(lam_new)):
                return lam_new
            x, lam = x_new, lam_new
        return lam
    eigs = np.linalg.eigvals(mat)
    idx = int(np.argmax(np.abs(eigs)))
    lam = eigs[idx]
    if abs(lam) == 0.0:
        return 0.0
    if abs(lam.imag) > 1e-8 * max(1.0, abs(lam)):
        raise ValueError(
            f"spectral radius eigenvalue is not real ({lam:.3e}); "
            "the map does not look positivity-preserving"
        )
    return float(lam.real)


def _eigenspace(rep: CornerRep, lam: float, tol: Tolerances) -> np.ndarray:
    """Lifted Hermitian basis (d, k, k) of the ``lam``-eigenspace of ``rep.matrix``.

    The kernel cutoff is scaled by ``max(sigma_max(rep - lam), |lam|)`` rather
    than by the shifted matrix alone, so an eigenvalue passed in from an
    equivalent corner (equal up to roundoff) still recovers the eigenspace
    even when the shifted matrix is numerically zero.
    """
    n = rep.matrix.shape[0]
    shifted = rep.matrix - lam * np.eye(n)
    _, sv, vh = np.linalg.svd(shifted)
    scale = max(float(sv[0]) if sv.size else 0.0, abs(lam))
    if scale <= 0.0:
        coeffs = np.eye(n)
    else:
        r = int(np.count_nonzero(sv > tol.rank_rel * scale))
        coeffs = vh[r:].conj().T
    coeffs = np.real(coeffs)
    return np.einsum("nd,nij->dij", coeffs, rep.basis)


def _psd_in_span(mats: np.ndarray, tol: Tolerances) -> np.ndarray | None:
    """A PSD, trace-one element in the real span of trace-orthonormal Hermitians.

    Deterministic alternating projections between the span and the PSD cone,
    started from the span-projection of the identity and falling back to each
    signed basis element.  Returns ``None`` if nothing converges.
    """
    d, k, _ = mats.shape
    if d == 0:
        return None

    def project_span(X: np.ndarray) -> np.ndarray:
        c = np.real(np.einsum("nij,ij->n", mats.conj(), X))
        return np.einsum("n,nij->ij", c, mats)

    def clip_psd(X: np.ndarray) -> np.ndarray:
        eigs, vecs = np.linalg.eigh(mirror_hermitian(X))
        eigs = np.clip(eigs, 0.0, None)
        return vecs @ np.diag(eigs) @ vecs.conj().T

    starts = [project_span(np.eye(k, dtype=complex))]
    for i in range(d):
        starts.append(mats[i])
        starts.append(-mats[i])

    for start in starts:
        X = np.array(start, dtype=complex)
        norm = np.linalg.norm(X)
        if norm < 1e-14:
            continue
        X /= norm
        ok = False
        for _ in range(500):
            Xp = clip_psd(X)
            if np.linalg.norm(Xp) < 1e-14:
                break
            Xs = project_span(Xp)
            norm = np.linalg.norm(Xs)
            if norm < 1e-14:
                break
            Xs /= norm
            if np.linalg.norm(Xs - X) < 1e-14:
                X = Xs
                ok = True
                break
            X = Xs
        if ok and psd_check(X, tol):
            trace = float(np.real(np.trace(X)))
            if trace > 1e-12:
                return mirror_hermitian(X / trace)
    return None


def _perron_vector(rep: CornerRep, lam: float, tol: Tolerances) -> np.ndarray | None:
    """PSD trace-one eigenvector of ``rep`` at ``lam`` (lifted to k x k), if found."""
    space = _eigenspace(rep, lam, tol)
    if space.shape[0] == 0:
        return None
    if space.shape[0] == 1:
        cand = mirror_hermitian(space[0])
        trace = float(np.real(np.trace(cand)))
        if trace < 0:
            cand, trace = -cand, -trace
        if trace <= 1e-12 or not psd_check(cand / max(trace, 1e-12), tol):
            return None
        return cand / trace
    return _psd_in_span(space, tol)


def spectral_radius_perron(
    T: CpMap, V: Projection, tol: Tolerances | None = None
) -> tuple[float, np.ndarray]:
    """Spectral radius and a PSD trace-one Perron eigenvector of ``T`` on a corner.

    Raises ``ValueError`` when the corner map vanishes or when no PSD
    eigenvector can be located in the top eigenspace.
    """
    tol = _tol(tol)
    rep = corner_rep(T, V, tol)
    scale = np.abs(rep.matrix).max()
    if scale == 0.0:
        raise ValueError("the map vanishes on this corner")
    lam = _top_eigenvalue(rep.matrix, tol)
    gamma = _perron_vector(rep, lam, tol)
    if gamma is None:
        raise ValueError("no PSD Perron eigenvector found in the top eigenspace")
    return lam, gamma


def is_doubly_stochastic(T: CpMap, tol: Tolerances | None = None) -> bool:
    """Whether ``T(Id/sqrt(k)) = Id/sqrt(m)`` and ``T*(Id/sqrt(m)) = Id/sqrt(k)``.

    Absolute residual threshold ``sinkhorn_residual`` on the normalized
    identities.
    """
    tol = _tol(tol)
    k, m = T.src_dim, T.dst_dim
    fwd = apply(T, np.eye(k) / np.sqrt(k)) - np.eye(m) / np.sqrt(m)
    bwd = apply(adjoint(T), np.eye(m) / np.sqrt(m)) - np.eye(k) / np.sqrt(k)
    res = max(np.abs(fwd).max(), np.abs(bwd).max())
    return bool(res <= tol.sinkhorn_residual)


def is_irreducible(T: CpMap, V: Projection, tol: Tolerances | None = None) -> bool:
    """Irreducibility of ``T`` on the corner of ``V``.

    Holds exactly when the Perron eigenvectors of the corner restriction and of
    the compressed adjoint both have image equal to ``Im(V)`` and the top
    eigenvalue has geometric multiplicity one.
    """
    tol = _tol(tol)
    try:
        rep = corner_rep(T, V, tol)
    except ValueError:
        return False
    if np.abs(rep.matrix).max() == 0.0:
        return False
    lam = _top_eigenvalue(rep.matrix, tol)
    if lam <= 0.0:
        return False
    if geometric_multiplicity(rep, lam, tol) != 1:
        return False
    gamma = _perron_vector(rep, lam, tol)
    if gamma is None or rank_eps(gamma, tol) != V.rank:
        return False
    rep_adj = CornerRep(V=rep.V, basis=rep.basis, matrix=rep.matrix.T)
    delta = _perron_vector(rep_adj, lam, tol)
    return delta is not None and rank_eps(delta, tol) == V.rank
