"""Shared state generators for the test suite."""

import numpy as np

from filternorm import BipartiteState, apply_filter, diagonal_state, is_ppt, random_state


def separable_full_rank(k: int, rng: np.random.Generator) -> BipartiteState:
    """Full-rank PPT state: mixture of 3k^2 random products plus an identity floor."""
    n = k * k
    rho = np.zeros((n, n), dtype=complex)
    for _ in range(3 * n):
        a = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        b = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        v = np.kron(a, b)
        rho += np.outer(v, v.conj())
    rho += 0.05 * np.trace(rho).real / n * np.eye(n)
    return BipartiteState(k=k, m=k, rho=rho / np.trace(rho).real)


def blocky_state(k: int, dims: list[int], rng: np.random.Generator) -> BipartiteState:
    """PPT state mixing products supported on consecutive index blocks of sizes dims."""
    assert sum(dims) == k
    rho = np.zeros((k * k, k * k), dtype=complex)
    off = 0
    for d in dims:
        sel = np.arange(off, off + d)
        for _ in range(4 * d * d):
            a = np.zeros(k, dtype=complex)
            b = np.zeros(k, dtype=complex)
            a[sel] = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            b[sel] = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            v = np.kron(a, b)
            rho += np.outer(v, v.conj())
        off += d
    return BipartiteState(k=k, m=k, rho=rho / np.trace(rho).real)


def random_invertible(k: int, rng: np.random.Generator) -> np.ndarray:
    """Well-conditioned random invertible matrix."""
    return rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)) + 2.5 * np.eye(k)


def hidden_blocky(k: int, dims: list[int], rng: np.random.Generator) -> BipartiteState:
    """Blocky state with its block structure scrambled by an invertible local filter."""
    base = blocky_state(k, dims, rng)
    out = apply_filter(base, random_invertible(k, rng), random_invertible(k, rng))
    return BipartiteState(k=k, m=k, rho=out.rho / np.trace(out.rho).real)


def pattern_weights(k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Random {0,1} pattern scaled by random positive weights, at least one entry."""
    while True:
        pattern = rng.random((k, m)) < 0.5
        if pattern.any():
            return pattern * rng.uniform(0.2, 2.0, size=(k, m))


def pattern_state(w: np.ndarray) -> BipartiteState:
    """Unit-trace diagonal state with the given nonnegative weight array."""
    return diagonal_state(w / w.sum())


def random_ppt_2x2(rng: np.random.Generator) -> BipartiteState:
    """Rejection-sample a full-rank PPT 2x2 state."""
    while True:
        st = random_state(2, 2, rng=rng)
        if is_ppt(st):
            return st


def random_npt_2x2(rng: np.random.Generator) -> BipartiteState:
    """Rejection-sample a full-rank NPT 2x2 state."""
    while True:
        st = random_state(2, 2, rng=rng)
        if not is_ppt(st):
            return st


def neq2_state() -> BipartiteState:
    """The 2x2 diagonal state with weights (1,1,0,1)/3."""
    return diagonal_state(np.array([[1.0, 1.0], [0.0, 1.0]]) / 3.0)


def upper_triangular_map_kraus(k: int, s: int, rng: np.random.Generator, nops: int = 3):
    """Kraus list leaving the leading s x s corner invariant (block upper triangular)."""
    ops = []
    for _ in range(nops):
        K = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        K[s:, :s] = 0.0
        ops.append(K)
    return ops
