"""Decision pipeline: anchoring, corner search, quadratic solver, main loop."""

import numpy as np
import pytest

import oracles
from filternorm import (
    OUTCOME_EQUIVALENT,
    OUTCOME_INCONCLUSIVE,
    OUTCOME_NOT_EQUIVALENT,
    STAGE_F_MIN_POSITIVE,
    STAGE_NO_FULL_RANK_VECTOR,
    BipartiteState,
    CpMap,
    adjoint_block_quadratic,
    anchor_transform,
    apply,
    apply_filter,
    decide_equivalence,
    diagonal_state,
    find_irreducible_corner,
    identity_map,
    is_irreducible,
    leaves_invariant,
    maximally_entangled,
    normalize_corner,
    solve_adjoint_block,
    spectral_radius_perron,
    state_to_map,
)
from filternorm.decide import _coords_to_block
from filternorm.linalg import (
    identity_projection,
    projector_onto,
    rank_eps,
    same_subspace,
)
from helpers import (
    blocky_state,
    hidden_blocky,
    neq2_state,
    pattern_state,
    random_invertible,
    separable_full_rank,
    upper_triangular_map_kraus,
)

U2 = np.eye(2, dtype=complex).reshape(4)
IDENTITY_STATE = BipartiteState(k=2, m=2, rho=np.eye(4, dtype=complex) / 4)


def normalized_t1(k, s, rng):
    """Random map with normalized leading invariant corner, via the pipeline."""
    T = CpMap(src_dim=k, dst_dim=k,
              kraus=tuple(upper_triangular_map_kraus(k, s, rng)))
    lead = projector_onto(np.eye(k, dtype=complex)[:, :s])
    lam, _ = spectral_radius_perron(T, lead)
    Q, T1, s1 = normalize_corner(T, lead, lam)
    return T1, s1


def test_anchor_canonical_vector_gives_identity_prefilter():
    """Anchoring on the entangled sum leaves the state untouched."""
    st = maximally_entangled(2)
    P, A = anchor_transform(st, U2)
    assert np.abs(P - np.eye(2)).max() == 0.0
    assert np.abs(A.rho - st.rho).max() == 0.0


def test_anchor_inverts_the_coefficient_matrix():
    """A vector with coefficient matrix diag(2,1) anchors with P = diag(1/2,1)."""
    v = np.array([2.0, 0.0, 0.0, 1.0], dtype=complex)
    P, A = anchor_transform(IDENTITY_STATE, v)
    assert np.abs(P - np.diag([0.5, 1.0])).max() < 1e-12
    # the anchored state is (P (x) Id) rho (P (x) Id)*
    F = np.kron(P, np.eye(2))
    assert np.abs(A.rho - F @ IDENTITY_STATE.rho @ F.conj().T).max() < 1e-14


def test_anchor_rejects_bad_vectors():
    """Rank-deficient vectors and vectors outside the range are rejected."""
    prod = np.kron(np.array([1.0, 0.0]), np.array([1.0, 0.0])).astype(complex)
    with pytest.raises(ValueError):
        anchor_transform(IDENTITY_STATE, prod)
    with pytest.raises(ValueError):
        anchor_transform(maximally_entangled(2), np.array([1.0, 0.0, 0.0, -1.0]))
    with pytest.raises(ValueError):
        anchor_transform(BipartiteState(k=2, m=3, rho=np.eye(6) / 6), U2)


def test_anchored_map_does_not_shrink_images():
    """After anchoring, rank(T(X)) >= rank(X) on random PSD inputs."""
    rng = np.random.default_rng(0)
    st = separable_full_rank(3, rng)
    v = np.eye(3, dtype=complex).reshape(9)
    _, A = anchor_transform(st, v)
    T = state_to_map(A)
    for r in (1, 2, 3):
        g = rng.standard_normal((3, r)) + 1j * rng.standard_normal((3, r))
        X = g @ g.conj().T
        assert rank_eps(apply(T, X)) >= rank_eps(X)


def test_find_irreducible_corner_identity_map():
    """The identity map is maximally reducible: a rank-1 corner with value 1."""
    V, lam = find_irreducible_corner(identity_map(2), identity_projection(2))
    assert V.rank == 1
    assert abs(lam - 1.0) < 1e-9


def test_find_irreducible_corner_neq2():
    """The anchored map of the (1,1,0,1)/3 state shrinks to the second axis."""
    _, A = anchor_transform(neq2_state(), U2)
    V, lam = find_irreducible_corner(state_to_map(A), identity_projection(2))
    e22 = projector_onto(np.eye(2, dtype=complex)[:, [1]])
    assert same_subspace(V, e22)
    assert abs(lam - 1.0 / 3.0) < 1e-9


def test_find_irreducible_corner_keeps_irreducible_corners():
    """An already irreducible map comes back unchanged."""
    T = state_to_map(diagonal_state(np.ones((2, 2)) / 4.0))
    V, lam = find_irreducible_corner(T, identity_projection(2))
    assert same_subspace(V, identity_projection(2))
    assert is_irreducible(T, V)
    assert abs(lam - 0.5) < 1e-9


def test_find_irreducible_corner_output_contract():
    """Returned corners are invariant, irreducible, and nested in the input."""
    rng = np.random.default_rng(1)
    for k, dims in [(3, [1, 2]), (4, [2, 2])]:
        st = blocky_state(k, dims, rng)
        v = np.eye(k, dtype=complex).reshape(k * k)
        _, A = anchor_transform(st, v)
        T = state_to_map(A)
        V, lam = find_irreducible_corner(T, identity_projection(k))
        assert V.rank <= k
        assert leaves_invariant(T, V)
        assert is_irreducible(T, V)
        assert lam > 0


def test_normalize_corner_neq2_hand_formula():
    """On the shrunken corner the normalized map is X -> (x11+x22)E11 + x22 E22."""
    rng = np.random.default_rng(2)
    _, A = anchor_transform(neq2_state(), U2)
    T = state_to_map(A)
    V, lam = find_irreducible_corner(T, identity_projection(2))
    Q, T1, s = normalize_corner(T, V, lam)
    assert s == 1
    for _ in range(5):
        X = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        want = np.diag([X[0, 0] + X[1, 1], X[1, 1]])
        assert np.abs(apply(T1, X) - want).max() < 1e-12


def test_normalize_corner_postconditions():
    """Leading corner invariant, adjoint fixed point exact, spectral radius one."""
    rng = np.random.default_rng(3)
    for k, s in [(3, 1), (4, 2), (4, 3)]:
        T1, s1 = normalized_t1(k, s, rng)
        assert s1 == s
        lead = projector_onto(np.eye(k, dtype=complex)[:, :s])
        assert leaves_invariant(T1, lead)
        v1 = np.zeros((k, k), dtype=complex)
        v1[:s, :s] = np.eye(s)
        from filternorm import adjoint

        fixed = v1 @ apply(adjoint(T1), v1) @ v1
        assert np.abs(fixed - v1).max() < 1e-8
        lam, _ = spectral_radius_perron(T1, lead)
        assert abs(lam - 1.0) < 1e-8


def test_normalize_corner_unitary_for_doubly_stochastic_maps():
    """A doubly stochastic irreducible map normalizes with a unitary Q."""
    rng = np.random.default_rng(4)
    p = rng.dirichlet(np.ones(3))
    ops = []
    for i in range(3):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        q, _ = np.linalg.qr(g)
        ops.append(np.sqrt(p[i]) * q)
    T = CpMap(src_dim=3, dst_dim=3, kraus=tuple(ops))
    V = identity_projection(3)
    lam, _ = spectral_radius_perron(T, V)
    assert abs(lam - 1.0) < 1e-8
    Q, T1, s = normalize_corner(T, V, lam)
    assert s == 3
    gram = Q.conj().T @ Q
    assert np.abs(gram - gram[0, 0] * np.eye(3)).max() < 1e-8


def test_quadratic_model_matches_trace_oracles():
    """Model evaluation equals both direct trace expressions at random points."""
    rng = np.random.default_rng(5)
    for k, s in [(2, 1), (3, 1), (3, 2), (4, 2)]:
        T1, s1 = normalized_t1(k, s, rng)
        model = adjoint_block_quadratic(T1, s1)
        assert model.n == 2 * s1 * (k - s1)
        assert np.abs(model.gram - model.gram.T).max() < 1e-12
        kraus = list(T1.kraus)
        for _ in range(10):
            x = rng.standard_normal(model.n)
            X = _coords_to_block(x, k - s1, s1)
            got = model.evaluate(x)
            assert abs(got - oracles.objective_f_expanded(kraus, s1, X)) < 1e-8
            assert abs(got - oracles.objective_f_single_trace(kraus, s1, X)) < 1e-8


def test_quadratic_objective_is_nonnegative():
    """The single-trace form makes f >= 0 wherever the model is evaluated."""
    rng = np.random.default_rng(6)
    T1, s1 = normalized_t1(3, 1, rng)
    model = adjoint_block_quadratic(T1, s1)
    for _ in range(50):
        x = rng.standard_normal(model.n) * 3.0
        assert model.evaluate(x) > -1e-10


def test_solve_adjoint_block_pairs_each_certified_block_with_itself():
    """On the certified block-diagonal map each corner is its own unique partner."""
    rng = np.random.default_rng(7)
    for st in [diagonal_state(np.diag([0.5, 0.5])), blocky_state(3, [1, 2], rng),
               hidden_blocky(3, [2, 1], rng)]:
        verdict = decide_equivalence(st)
        assert verdict.outcome == OUTCOME_EQUIVALENT
        cert = verdict.certificate
        for V, lam in cert.blocks:
            result = solve_adjoint_block(cert.final_map, V, lam)
            assert result.W is not None
            assert same_subspace(result.W, V)
            assert result.min_f <= 1e-8
            assert result.gram_min_eig is None or result.gram_min_eig > 0


def test_solve_adjoint_block_neq2_diagnostics():
    """The (1,1,0,1)/3 corner has no partner: min_f = 1, smallest Gram eig = 2."""
    _, A = anchor_transform(neq2_state(), U2)
    T = state_to_map(A)
    V, lam = find_irreducible_corner(T, identity_projection(2))
    result = solve_adjoint_block(T, V, lam)
    assert result.W is None
    assert abs(result.min_f - 1.0) < 1e-9
    assert abs(result.gram_min_eig - 2.0) < 1e-9


def test_decide_neq2_regression():
    """diag(1,1,0,1)/3 is not equivalent, with the pinned witness numbers."""
    verdict = decide_equivalence(neq2_state())
    assert verdict.outcome == OUTCOME_NOT_EQUIVALENT
    assert verdict.certificate is None
    w = verdict.witness
    assert w is not None and w.stage == STAGE_F_MIN_POSITIVE
    assert abs(w.min_f - 1.0) < 1e-9
    assert abs(w.gram_min_eig - 2.0) < 1e-9
    assert verdict.blocks == ()
    assert verdict.iterations == 1


def test_decide_separable_diagonal_state():
    """diag(1,0,0,1)/2 is equivalent with two rank-1 blocks of value one."""
    verdict = decide_equivalence(diagonal_state(np.diag([0.5, 0.5])))
    assert verdict.outcome == OUTCOME_EQUIVALENT
    assert sorted(V.rank for V, _ in verdict.blocks) == [1, 1]
    for _, lam in verdict.blocks:
        assert abs(lam - 1.0) < 1e-9
    assert verdict.iterations <= 2


def test_decide_identity_state_is_a_single_block():
    """The normalized identity is equivalent with one full-rank block."""
    verdict = decide_equivalence(IDENTITY_STATE)
    assert verdict.outcome == OUTCOME_EQUIVALENT
    assert [V.rank for V, _ in verdict.blocks] == [2]
    assert verdict.iterations == 1


def test_decide_rejects_npt_and_rectangular_states():
    """Non-PPT and non-square inputs raise instead of returning a verdict."""
    with pytest.raises(ValueError):
        decide_equivalence(maximally_entangled(2))
    with pytest.raises(ValueError):
        decide_equivalence(BipartiteState(k=2, m=3, rho=np.eye(6) / 6))


def test_decide_product_state_is_inconclusive():
    """A pure product state has no full-tensor-rank range vector."""
    vec = np.kron(np.array([1.0, 0.5]), np.array([0.5, -1.0])).astype(complex)
    st = BipartiteState(k=2, m=2, rho=np.outer(vec, vec.conj()))
    st = BipartiteState(k=2, m=2, rho=st.rho / np.trace(st.rho).real)
    verdict = decide_equivalence(st)
    assert verdict.outcome == OUTCOME_INCONCLUSIVE
    assert verdict.witness.stage == STAGE_NO_FULL_RANK_VECTOR
    assert verdict.iterations == 0


def test_decide_hidden_block_structure():
    """A filtered two-block state is recognized with block ranks {1, 2}."""
    rng = np.random.default_rng(8)
    st = hidden_blocky(3, [1, 2], rng)
    verdict = decide_equivalence(st)
    assert verdict.outcome == OUTCOME_EQUIVALENT
    assert sorted(V.rank for V, _ in verdict.blocks) == [1, 2]
    assert verdict.iterations <= 3


def test_decide_certificate_structure():
    """Certified blocks are orthogonal, complete, irreducible, and invariant."""
    rng = np.random.default_rng(9)
    for st in [diagonal_state(np.diag([0.5, 0.5])), hidden_blocky(3, [1, 2], rng),
               separable_full_rank(3, rng)]:
        verdict = decide_equivalence(st)
        assert verdict.outcome == OUTCOME_EQUIVALENT
        cert = verdict.certificate
        k = st.k
        total = np.zeros((k, k), dtype=complex)
        for i, (V, lam) in enumerate(cert.blocks):
            assert lam > 0
            assert leaves_invariant(cert.final_map, V)
            assert is_irreducible(cert.final_map, V)
            total += V.matrix
            for j, (W, _) in enumerate(cert.blocks):
                if i != j:
                    assert np.abs(V.matrix @ W.matrix).max() < 1e-10
        assert np.abs(total - np.eye(k)).max() < 1e-10
        assert rank_eps(cert.accumulated_transform) == k
        assert rank_eps(cert.prefilter) == k


def test_decide_certificate_reconstructs_the_state():
    """The realigned state equals the sum of its certified corner compressions."""
    rng = np.random.default_rng(10)
    for st in [diagonal_state(np.diag([0.5, 0.5])), blocky_state(3, [1, 2], rng),
               separable_full_rank(2, rng)]:
        verdict = decide_equivalence(st)
        cert = verdict.certificate
        Q = cert.accumulated_transform
        anchored = apply_filter(st, cert.prefilter, np.eye(st.k, dtype=complex))
        C = apply_filter(anchored, np.linalg.inv(Q).T, Q).rho
        D = np.zeros_like(C)
        for V, _ in cert.blocks:
            K = np.kron(V.matrix.T, V.matrix)
            D += K @ C @ K.conj().T
        assert np.abs(C - D).max() < 1e-8 * max(1.0, np.abs(C).max())


def test_decide_outcome_invariant_under_local_filters():
    """Congruence by Q1 (x) Q2 never changes the outcome."""
    rng = np.random.default_rng(11)
    cases = [
        neq2_state(),
        diagonal_state(np.diag([0.5, 0.5])),
        blocky_state(3, [1, 2], rng),
        separable_full_rank(2, rng),
        pattern_state(np.array([[1.0, 1.0], [1.0, 1.0]])),
    ]
    for st in cases:
        base = decide_equivalence(st).outcome
        Q1 = random_invertible(st.k, rng)
        Q2 = random_invertible(st.k, rng)
        moved = apply_filter(st, Q1, Q2)
        moved = BipartiteState(k=st.k, m=st.m, rho=moved.rho / np.trace(moved.rho).real)
        assert decide_equivalence(moved).outcome == base


def test_decide_accepts_an_explicit_anchor_vector():
    """Supplying a valid anchor vector gives the same outcome as the search."""
    st = diagonal_state(np.diag([0.5, 0.5]))
    v = np.array([2.0, 0.0, 0.0, 1.0], dtype=complex)
    verdict = decide_equivalence(st, v=v)
    assert verdict.outcome == OUTCOME_EQUIVALENT
    assert sorted(V.rank for V, _ in verdict.blocks) == [1, 1]


def test_decide_termination_bound():
    """The block loop never runs more than k iterations."""
    rng = np.random.default_rng(12)
    for k, dims in [(2, [1, 1]), (3, [1, 1, 1]), (4, [1, 1, 2])]:
        st = blocky_state(k, dims, rng)
        verdict = decide_equivalence(st)
        assert verdict.iterations <= k


def test_decide_matches_classical_total_support_on_diagonal_states():
    """Diagonal-state verdicts agree with the permutation-diagonal oracle."""
    rng = np.random.default_rng(13)
    agree = 0
    for _ in range(60):
        k = int(rng.integers(2, 4))
        w = (rng.random((k, k)) < 0.5) * rng.uniform(0.2, 2.0, size=(k, k))
        if not w.any():
            continue
        verdict = decide_equivalence(pattern_state(w), rng=np.random.default_rng(0))
        scalable = oracles.has_total_support(w)
        assert (verdict.outcome == OUTCOME_EQUIVALENT) == scalable
        agree += 1
    assert agree >= 50


def test_decide_is_deterministic_for_a_fixed_seed():
    """Two runs with the same seed produce bitwise-identical witness numbers."""
    a = decide_equivalence(neq2_state(), rng=np.random.default_rng(42))
    b = decide_equivalence(neq2_state(), rng=np.random.default_rng(42))
    assert a.witness.min_f == b.witness.min_f
    assert a.witness.gram_min_eig == b.witness.gram_min_eig
