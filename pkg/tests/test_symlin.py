import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfmaslov import symlin as sl
from sfmaslov.exceptions import DimensionMismatch, NotAGraph, NotSymmetric, NumericallyAmbiguous


def e(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def test_omega_basic():
    assert sl.omega(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0


def test_omega_matches_J(rng):
    for _ in range(100):
        n = rng.integers(1, 6)
        x, y = rng.standard_normal(2 * n), rng.standard_normal(2 * n)
        assert abs(sl.omega(x, y) - sl.apply_J(x) @ y) < 1e-12
        assert abs(sl.omega(x, x)) < 1e-12


def test_omega_dimension_errors():
    with pytest.raises(DimensionMismatch):
        sl.omega(np.ones(2), np.ones(4))
    with pytest.raises(DimensionMismatch):
        sl.omega(np.ones(3), np.ones(3))


def test_J_is_complex_structure():
    J = sl.J_matrix(3)
    assert np.allclose(J @ J, -np.eye(6))
    assert np.allclose(J.T @ J, np.eye(6))


def test_symplectic_complement_examples(rng):
    H0 = sl.h0_frame(2)
    assert sl.same_span(sl.symplectic_complement(H0), H0)
    W = np.concatenate([e(0, 2), np.zeros(2)])[:, None]
    expected = np.column_stack([e(0, 4), e(1, 4), e(3, 4)])
    assert sl.same_span(sl.symplectic_complement(W), expected)
    for _ in range(50):
        n = rng.integers(1, 5)
        k = rng.integers(0, 2 * n + 1)
        W = sl.orth(rng.standard_normal((2 * n, k)))
        assert W.shape[1] + sl.symplectic_complement(W).shape[1] == 2 * n


def test_classify():
    assert sl.classify(sl.h0_frame(2)) == "lagrangian"
    assert sl.classify(e(0, 4)) == "isotropic"
    assert sl.classify(np.column_stack([e(0, 4), e(2, 4)])) == "symplectic"
    assert sl.classify(np.column_stack([e(0, 4), e(1, 4), e(3, 4)])) == "coisotropic"
    # span{(e1,0), (0,e1), (e2,0)} in n=3: ω degenerate on it, neither iso- nor coisotropic
    W = np.column_stack([e(0, 6), e(3, 6), e(1, 6)])
    assert sl.classify(W) == "none"


def test_clean_intersection_examples():
    H0, H1 = sl.h0_frame(2), sl.h1_frame(2)
    assert sl.clean_intersection(H0, H1) == {"clean": True, "dimIntersection": 0}
    assert sl.clean_intersection(H0, H0)["dimIntersection"] == 2
    G = sl.graph_lagrangian(np.diag([0.0, 1.0]))
    assert sl.clean_intersection(H0, G)["dimIntersection"] == 1


def test_fredholm_pair_index(rng):
    assert sl.fredholm_pair_index(sl.h0_frame(2), sl.h1_frame(2)) == 0
    for _ in range(100):
        n = rng.integers(1, 5)
        assert sl.fredholm_pair_index(sl.random_lagrangian(n, rng), sl.random_lagrangian(n, rng)) == 0
    # V ⊂ H0: dim(V ∩ W) = 1, V + W = H0 has codimension 2
    V = e(0, 4)[:, None]
    W = sl.h0_frame(2)
    codim = 4 - np.linalg.matrix_rank(np.hstack([V, W]))
    assert sl.fredholm_pair_index(V, W) == 1 - codim == -1


def test_graph_roundtrip(rng):
    assert sl.same_span(sl.graph_lagrangian(np.zeros((2, 2))), sl.h0_frame(2))
    G = sl.graph_lagrangian(np.eye(1))
    assert np.allclose(np.abs(G[:, 0]), [2 ** -0.5, 2 ** -0.5])
    for _ in range(100):
        n = rng.integers(1, 6)
        B = sl.random_symmetric(n, rng)
        L = sl.graph_lagrangian(B)
        assert sl.is_lagrangian(L)
        assert np.linalg.norm(sl.lagrangian_to_graph(L) - B) < 1e-10


def test_lagrangian_to_graph_examples():
    assert np.allclose(sl.lagrangian_to_graph(sl.h0_frame(2)), 0)
    assert np.allclose(sl.lagrangian_to_graph(np.array([[1.0], [3.0]])), [[3.0]])
    with pytest.raises(NotAGraph):
        sl.lagrangian_to_graph(sl.h1_frame(2))


def test_not_symmetric():
    with pytest.raises(NotSymmetric):
        sl.graph_lagrangian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rank_guard_band():
    M = np.diag([1.0, 1e-8])
    with pytest.raises(NumericallyAmbiguous):
        sl.numerical_rank(M)
    assert sl.numerical_rank(np.diag([1.0, 1e-14])) == 1
    assert sl.numerical_rank(np.diag([1.0, 1e-3])) == 2


def test_direct_sum_is_lagrangian(rng):
    A, B = sl.random_lagrangian(2, rng), sl.random_lagrangian(3, rng)
    D = sl.direct_sum(A, B)
    assert D.shape == (10, 5)
    assert sl.is_lagrangian(D)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_random_lagrangians_are_lagrangian(n, seed):
    L = sl.random_lagrangian(n, np.random.default_rng(seed))
    assert sl.is_lagrangian(L)
    assert np.allclose(sl.apply_J(L).T @ L, 0, atol=1e-12)
