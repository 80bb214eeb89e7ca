import math

import numpy as np
import pytest

from sfmaslov import grassmann as gr
from sfmaslov import symlin as sl
from sfmaslov.exceptions import NotClosed, TransversalityViolated


def line(theta):
    return np.array([[math.cos(theta)], [math.sin(theta)]])


def graph1(a):
    return sl.graph_lagrangian(np.array([[float(a)]]))


def test_unitary_examples():
    assert np.allclose(gr.unitary_from_lagrangian(sl.h0_frame(2)), np.eye(2))
    assert np.allclose(gr.unitary_from_lagrangian(sl.h1_frame(2)), 1j * np.eye(2))


def test_det_squared_phase():
    assert gr.det_squared_phase(sl.h0_frame(2)) == pytest.approx(0.0, abs=1e-12)
    assert gr.det_squared_phase(sl.h1_frame(1)) == pytest.approx(math.pi)
    for theta in np.linspace(0.05, 3.1, 17):
        assert gr.det_squared_phase(line(theta)) == pytest.approx((2 * theta) % (2 * math.pi), abs=1e-12)


def test_det_squared_phase_is_frame_independent(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        L = sl.random_lagrangian(n, rng)
        G = rng.standard_normal((n, n))
        p0, p1 = gr.det_squared_phase(L), gr.det_squared_phase(gr.qr_frame(L @ G))
        assert abs(np.exp(1j * p0) - np.exp(1j * p1)) < 1e-9


def test_loop_index_examples():
    assert gr.maslov_loop_index(gr.LagrangianPath.constant(sl.h0_frame(2))) == 0
    loop = gr.LagrangianPath(lambda t: line(math.pi * t), 0.0, 1.0)
    assert gr.maslov_loop_index(loop) == 1
    assert gr.maslov_loop_index(loop.reversed()) == -1
    assert gr.maslov_loop_index(loop.concat(loop)) == 2


def test_loop_index_doubling_random(rng):
    for _ in range(10):
        n = int(rng.integers(1, 4))
        S = rng.standard_normal((n, n))
        S = S + S.T
        w = int(rng.integers(-2, 3))
        Q = sl.random_lagrangian(n, rng)
        Z0 = Q[:n] + 1j * Q[n:]

        def f(t, S=S, w=w, Z0=Z0):
            # exp(iπ t (S_t)) with an integer twist on one eigen-direction
            from scipy.linalg import expm
            H = math.sin(math.pi * t) * S
            U = expm(1j * H) @ Z0
            U[:, 0] *= np.exp(1j * math.pi * w * t)
            return np.vstack([U.real, U.imag])

        loop = gr.LagrangianPath(f, 0.0, 1.0, n_grid=65)
        m = gr.maslov_loop_index(loop)
        assert m == w
        assert gr.maslov_loop_index(loop.concat(loop)) == 2 * m


def test_loop_not_closed():
    with pytest.raises(NotClosed):
        gr.maslov_loop_index(gr.LagrangianPath(lambda t: line(t), 0.0, 1.0))


def test_relative_index_calibration():
    p = gr.LagrangianPath(graph1, -1.0, 1.0)
    assert gr.relative_maslov_index(p, sl.h0_frame(1)) == 1
    assert gr.relative_maslov_index(p.reversed(), sl.h0_frame(1)) == -1
    # graphs never meet H1, so relative to H1 the index vanishes
    assert gr.relative_maslov_index(p, sl.h1_frame(1)) == 0


def test_relative_index_inside_chart_is_zero(rng):
    for _ in range(20):
        n = int(rng.integers(1, 4))
        L = sl.random_lagrangian(n, rng)
        E, JE, C0 = gr.chart(L, sl.random_lagrangian(n, rng))
        C1 = sl.random_symmetric(n, rng)
        p = gr.LagrangianPath(lambda s: E @ ((1 - s) * C0 + s * C1) + JE, 0.0, 1.0)
        assert gr.relative_maslov_index(p, L) == 0


def test_triple_signature_examples():
    H0, H1 = sl.h0_frame(1), sl.h1_frame(1)
    for a in (0.3, 1.0, 4.0):
        # Q(v) = ω(Av, v) = -a v²
        assert gr.triple_signature(H0, graph1(a), H1) == -1
        assert gr.triple_signature(H0, graph1(-a), H1) == 1
    assert np.allclose(gr.triple_form(H0, graph1(2.0), H1), [[-2.0]])


def test_triple_signature_degenerate():
    with pytest.raises(TransversalityViolated):
        gr.triple_signature(sl.h0_frame(1), sl.h0_frame(1), sl.h1_frame(1))


def test_hormander_examples(rng):
    H0, H1 = sl.h0_frame(1), sl.h1_frame(1)
    assert gr.hormander_index(H0, H1, graph1(-1), graph1(1)) == -1
    assert gr.hormander_index_via_path(H0, H1, graph1(-1), graph1(1)) == -1
    for _ in range(10):
        n = int(rng.integers(1, 4))
        L0, L1, M = (sl.random_lagrangian(n, rng) for _ in range(3))
        assert gr.hormander_index(L0, L1, M, M) == 0


def test_transversal_to_pair(rng):
    H0, H1 = sl.h0_frame(2), sl.h1_frame(2)
    for L0, L1 in [(H0, H0), (H0, H1)]:
        M = gr.transversal_to_pair(L0, L1)
        assert sl.is_lagrangian(M)
        assert sl.intersection_dim(M, L0) == 0 and sl.intersection_dim(M, L1) == 0
    for _ in range(30):
        n = int(rng.integers(1, 5))
        L0 = sl.random_lagrangian(n, rng)
        # force a nontrivial intersection half of the time
        if rng.random() < 0.5:
            B = sl.random_symmetric(n, rng)
            w, V = np.linalg.eigh(B)
            w[: int(rng.integers(1, n + 1))] = 0.0
            L0 = sl.h0_frame(n)
            L1 = sl.graph_lagrangian(V @ np.diag(w) @ V.T)
        else:
            L1 = sl.random_lagrangian(n, rng)
        M = gr.transversal_to_pair(L0, L1)
        assert sl.is_lagrangian(M)
        assert sl.intersection_dim(M, L0) == 0 and sl.intersection_dim(M, L1) == 0


def test_suspension_example():
    trip = (sl.h0_frame(1), graph1(1.0), sl.h1_frame(1))
    for k in (1, 2, 3):
        assert gr.triple_signature(*gr.suspend_triple(*trip, k)) == -1
    assert gr.triple_signature(sl.h0_frame(2), gr.codiagonal(1), sl.h1_frame(2)) == 0
