"""
Linear symplectic algebra on the canonical space S(H) = R^n x R^n.

Vectors of S(H) are stored as length-2n arrays ``(u, v)``; subspaces as
``(2n, k)`` arrays with orthonormal columns (frames).  Two frames describe the
same subspace iff their projectors agree, so comparisons always go through
:func:`gap`.
"""

import numpy as np

from . import _tol
from .exceptions import (
    DimensionMismatch,
    NotAGraph,
    NotSymmetric,
    NumericallyAmbiguous,
)


def half_dim(x):
    m = np.shape(x)[0]
    if m % 2:
        raise DimensionMismatch(f"ambient dimension {m} is odd")
    return m // 2


def J_matrix(n):
    """Matrix of the complex structure J(u, v) = (-v, u)."""
    Z = np.zeros((n, n))
    I = np.eye(n)
    return np.block([[Z, -I], [I, Z]])


def apply_J(x):
    """Apply J to a vector or to every column of a frame."""
    x = np.asarray(x, dtype=float)
    n = half_dim(x)
    return np.concatenate([-x[n:], x[:n]], axis=0)


def omega(x, y):
    """Canonical symplectic form ``<v2, u1> - <v1, u2>``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatch(f"omega needs two vectors of equal length, got {x.shape}, {y.shape}")
    n = half_dim(x)
    return float(y[n:] @ x[:n] - x[n:] @ y[:n])


def omega_matrix(X, Y):
    """Pairing matrix ``omega(X[:, i], Y[:, j])`` of two frames."""
    return apply_J(X).T @ Y


# ---------------------------------------------------------------------------
# frames and rank decisions

def _as_frame(W):
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    return W


def _rank_from_singular_values(s, tol):
    if s.size == 0 or s[0] == 0.0:
        return 0
    rel = s / s[0]
    half = np.sqrt(tol.rank_band)
    lo, hi = tol.rank / half, tol.rank * half
    bad = rel[(rel > lo) & (rel < hi)]
    if bad.size:
        raise NumericallyAmbiguous(
            f"singular value {bad[0]:.3e} (relative) has no clear gap around {tol.rank:.1e}",
            margin=float(bad[0]))
    return int(np.sum(rel > tol.rank))


def numerical_rank(M, tol=None):
    """Rank of ``M`` by relative singular-value thresholding.

    Raises :class:`NumericallyAmbiguous` when a singular value falls inside the
    guard band ``(rank/sqrt(band), rank*sqrt(band))`` around the cutoff.
    """
    tol = _tol.resolve(tol)
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    return _rank_from_singular_values(np.linalg.svd(M, compute_uv=False), tol)


def orth(W, tol=None):
    """Orthonormal frame of the column span of ``W``."""
    W = _as_frame(W)
    if W.shape[1] == 0 or W.shape[0] == 0:
        return np.zeros((W.shape[0], 0))
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    r = _rank_from_singular_values(s, _tol.resolve(tol))
    return U[:, :r]


def null_space(M, tol=None):
    """Orthonormal basis of the kernel of ``M`` (columns)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    ncol = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncol)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = _rank_from_singular_values(s, _tol.resolve(tol))
    return Vt[r:].T.copy()


def complement(W, dim=None):
    """Orthonormal frame of the orthogonal complement of span(W)."""
    W = _as_frame(W)
    if W.shape[1] == 0:
        return np.eye(W.shape[0] if dim is None else dim)
    return null_space(W.T)


def projector(W):
    W = _as_frame(W)
    return W @ W.T


def gap(V, W):
    """Gap distance ``||P_V - P_W||`` (spectral norm)."""
    V, W = _as_frame(V), _as_frame(W)
    if V.shape[0] != W.shape[0]:
        raise DimensionMismatch("frames live in different ambient spaces")
    D = projector(V) - projector(W)
    if not D.any():
        return 0.0
    return float(np.linalg.norm(D, 2))


def same_span(V, W, tol=None):
    tol = _tol.resolve(tol)
    return _as_frame(V).shape[1] == _as_frame(W).shape[1] and gap(V, W) < tol.gap


def is_orthonormal(W, tol=None):
    tol = _tol.resolve(tol)
    W = _as_frame(W)
    return np.linalg.norm(W.T @ W - np.eye(W.shape[1])) < tol.orth


# ---------------------------------------------------------------------------
# subspace algebra

def intersection_dim(V, W, tol=None):
    """dim(V ∩ W) from the rank defect of ``[V | W]``."""
    V, W = _as_frame(V), _as_frame(W)
    if V.shape[0] != W.shape[0]:
        raise DimensionMismatch("frames live in different ambient spaces")
    k = V.shape[1] + W.shape[1]
    if k == 0:
        return 0
    return k - numerical_rank(np.hstack([V, W]), tol)


def intersection(V, W, tol=None):
    """Orthonormal frame of V ∩ W."""
    V, W = _as_frame(V), _as_frame(W)
    if V.shape[1] == 0 or W.shape[1] == 0:
        return np.zeros((V.shape[0], 0))
    N = null_space(np.hstack([V, -W]), tol)
    if N.shape[1] == 0:
        return np.zeros((V.shape[0], 0))
    return orth(V @ N[: V.shape[1]], tol)


def subspace_sum(V, W, tol=None):
    return orth(np.hstack([_as_frame(V), _as_frame(W)]), tol)


def clean_intersection(V, W, tol=None):
    """Report whether V and W meet only in 0, with dim(V ∩ W).

    In finite dimension V + W is always closed, so clean means trivial
    intersection.
    """
    d = intersection_dim(V, W, tol)
    return {"clean": d == 0, "dimIntersection": d}


def transversality_margin(V, W):
    """Smallest singular value of ``[V | W]``; positive iff V ∩ W = 0.

    For frames with ``k_V + k_W <= 2n`` this equals ``sqrt(1 - cos θ_min)``
    where θ_min is the smallest principal angle; it is Lipschitz in the gap
    metric and is what the path algorithms use as a quantitative margin.
    """
    V, W = _as_frame(V), _as_frame(W)
    M = np.hstack([V, W])
    if M.shape[1] == 0:
        return 1.0
    if M.shape[1] > M.shape[0]:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def fredholm_pair_index(V, W, tol=None):
    """ind(V, W) = dim(V ∩ W) - codim(V + W)."""
    V, W = _as_frame(V), _as_frame(W)
    m = V.shape[0]
    d = intersection_dim(V, W, tol)
    s = V.shape[1] + W.shape[1] - d
    return d - (m - s)


def symplectic_complement(W, tol=None):
    """Frame of W^♯ = {v : omega(u, v) = 0 for all u in W} = (JW)^⊥."""
    W = _as_frame(W)
    half_dim(W)
    if W.shape[1] == 0:
        return np.eye(W.shape[0])
    return null_space(apply_J(W).T, tol)


def _contained(V, W, tol):
    """span(V) ⊂ span(W) by the projector test."""
    V, W = _as_frame(V), _as_frame(W)
    if V.shape[1] == 0:
        return True
    if W.shape[1] == 0:
        return False
    R = V - W @ (W.T @ V)
    return np.linalg.norm(R, 2) < tol.gap


def classify(W, tol=None):
    """One of ``lagrangian``, ``isotropic``, ``symplectic``, ``coisotropic``, ``none``."""
    tol = _tol.resolve(tol)
    W = orth(W, tol)
    n = half_dim(W)
    Ws = symplectic_complement(W, tol)
    iso = _contained(W, Ws, tol)
    coiso = _contained(Ws, W, tol)
    if iso and coiso:
        return "lagrangian"
    if iso:
        return "isotropic"
    if intersection_dim(W, Ws, tol) == 0:
        return "symplectic"
    if coiso:
        return "coisotropic"
    return "none"


def is_isotropic(W, tol=None):
    tol = _tol.resolve(tol)
    W = _as_frame(W)
    if W.shape[1] == 0:
        return True
    return np.max(np.abs(omega_matrix(W, W))) < tol.lagr


def is_lagrangian(W, tol=None):
    W = _as_frame(W)
    return W.shape[1] == half_dim(W) and is_orthonormal(W, tol) and is_isotropic(W, tol)


# ---------------------------------------------------------------------------
# distinguished Lagrangians and graphs

def h0_frame(n):
    """H_0 = H x {0}."""
    return np.vstack([np.eye(n), np.zeros((n, n))])


def h1_frame(n):
    """H_1 = {0} x H = J H_0."""
    return np.vstack([np.zeros((n, n)), np.eye(n)])


def check_symmetric(B, tol=None):
    tol = _tol.resolve(tol)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[0] != B.shape[1]:
        raise NotSymmetric(f"matrix of shape {B.shape} is not square")
    scale = max(1.0, float(np.max(np.abs(B)))) if B.size else 1.0
    if B.size and np.max(np.abs(B - B.T)) > tol.sym * scale:
        raise NotSymmetric("matrix is not symmetric")
    return 0.5 * (B + B.T)


def graph_lagrangian(B, tol=None):
    """Orthonormal frame of the graph {(u, Bu)} of a symmetric matrix."""
    B = check_symmetric(B, tol)
    n = B.shape[0]
    Q, _ = np.linalg.qr(np.vstack([np.eye(n), B]))
    return Q


def lagrangian_to_graph(L, tol=None):
    """Symmetric B with graph(B) = L; :class:`NotAGraph` when L ∩ H_1 ≠ 0."""
    L = _as_frame(L)
    n = half_dim(L)
    X, Y = L[:n], L[n:]
    try:
        r = numerical_rank(X, tol)
    except NumericallyAmbiguous as exc:
        raise NotAGraph("L is numerically too close to H_1", margin=exc.margin) from exc
    if r < n:
        raise NotAGraph(f"L meets H_1 in dimension {n - r}")
    B = np.linalg.solve(X.T, Y.T).T
    return 0.5 * (B + B.T)


def direct_sum(A, B):
    """Direct sum of subspaces of S(R^p) and S(R^q) inside S(R^{p+q}).

    Coordinates are reordered so the result has rows ``(u_A, u_B, v_A, v_B)``.
    """
    A, B = _as_frame(A), _as_frame(B)
    p, q = half_dim(A), half_dim(B)
    ka, kb = A.shape[1], B.shape[1]
    out = np.zeros((2 * (p + q), ka + kb))
    out[:p, :ka] = A[:p]
    out[p + q:2 * p + q, :ka] = A[p:]
    out[p:p + q, ka:] = B[:q]
    out[2 * p + q:, ka:] = B[q:]
    return out


def random_symmetric(n, rng, scale=1.0):
    G = rng.standard_normal((n, n))
    return scale * 0.5 * (G + G.T)


def random_lagrangian(n, rng):
    """Haar-ish random Lagrangian: image of H_0 under a random unitary."""
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(G)
    return np.vstack([U.real, U.imag])
