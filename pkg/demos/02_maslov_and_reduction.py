"""Maslov indices of Lagrangian paths and symplectic reduction.

The det² winding of a loop of Lagrangian planes is computed in the full space
and again after reducing modulo an isotropic subspace that the loop meets
cleanly.  The two integers match.  The relative index of the graph path of
[λ] against the horizontal plane gives the orientation anchor, +1.
"""

import numpy as np

from sfmaslov import grassmann as gr
from sfmaslov import reduction as rd
from sfmaslov import symlin as sl

# orientation anchor
graph = gr.LagrangianPath(lambda t: sl.graph_lagrangian(np.array([[t]])), -1.0, 1.0)
print("m_H0(graph([t])) =", gr.relative_maslov_index(graph, sl.h0_frame(1)))
print("m_H1(graph([t])) =", gr.relative_maslov_index(graph, sl.h1_frame(1)), "(graphs never meet H1)")

# a loop in n = 3: a line of F x F turning w half-turns, plus a moving graph over I
rng = np.random.default_rng(3)
n, w = 3, 2
Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
F, I = Q[:, :1], Q[:, 1:]
C0 = np.diag([3.0, -2.5])
C1 = np.array([[0.0, 1.0], [1.0, 0.0]])


def loop_frame(t):
    th = np.pi * w * t
    C = C0 + np.sin(2 * np.pi * t) * C1
    return np.vstack([np.hstack([np.cos(th) * F, I]), np.hstack([np.sin(th) * F, I @ C])])


loop = gr.LagrangianPath(loop_frame, 0.0, 1.0, n_grid=129)
ctx = rd.reduced_path_context(I, n)
reduced = gr.LagrangianPath(lambda t: ctx.coords(rd.reduce_lagrangian(ctx, loop.frame(t))), 0.0, 1.0, n_grid=129)
print("loop index in S(R^3):  ", gr.maslov_loop_index(loop))
print("loop index after ρ^I:  ", gr.maslov_loop_index(reduced), f"(reduced half-dimension {ctx.dim})")

# the Hörmander index two ways
L0, L1, M0, M1 = (sl.random_lagrangian(2, rng) for _ in range(4))
print("Hörmander index: triple signatures", gr.hormander_index(L0, L1, M0, M1),
      " path in Λ_L1", gr.hormander_index_via_path(L0, L1, M0, M1))
