"""A certified finite-rank corrector along a path with crossings.

K(λ) = F R(λ) Fᵀ has a fixed image F and makes A(λ) + K(λ) invertible for
every λ, including the singular points of A itself.  The certificate is the
smallest singular value of A + K on a grid ten times finer than the one used
to build it.
"""

import math

import numpy as np

from sfmaslov import grassmann as gr
from sfmaslov import parametrix as px
from sfmaslov import symlin as sl
from sfmaslov.spectral import OperatorPath

n = 8
path = OperatorPath(lambda x: np.diag(np.concatenate([[x, 0.5 - x], np.linspace(1, 2, n - 2)])), -1.0, 1.0)
pp = px.parametrix_path(path)
print(f"method {pp.method}, dim F = {pp.F.shape[1]} of {n}")
print("replayed min σ(A + K):", px.replay_certificate(pp, path, density=10))
print("rank K(0):", np.linalg.matrix_rank(pp.K(0.0)))

# the same machinery inverts a single singular matrix
single = px.invert_single(np.diag([0.0, 1.0, -1.0]))
print("single matrix: dim F =", single.F.shape[1], " σ_min(A + K) =", round(single.min_singular_value, 6))

# a path of transversals to a rotating line needs one suspension
l0 = gr.LagrangianPath.constant(sl.h0_frame(1))
l1 = gr.LagrangianPath(lambda t: np.array([[math.cos(math.pi * t)], [math.sin(math.pi * t)]]), 0.0, 1.0)
res = px.transversal_path(l0, l1, k_max=4)
print("transversal path: suspension k =", res.k, " certified margin", round(px.certify_transversal(res), 4))
