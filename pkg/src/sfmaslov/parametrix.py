"""
Finite-rank correctors making a path of symmetric matrices invertible.

The corrector has the form ``K = I_F R P_F`` for a fixed subspace F.  A + K is
invertible exactly when ``graph(-R)`` is transverse to the reduction of
``Gr A`` modulo ``F^⊥ x {0}``, so the problem is one of finding a continuous
path of Lagrangians transverse to two given paths; :func:`transversal_path`
solves that problem, suspending by ``R^k`` when the pieces cannot be glued
inside one component.
"""

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, schur

from . import _tol
from .exceptions import (
    AmbientTooSmall,
    CertificateFailure,
    SuspensionBudgetExceeded,
    TransversalityLost,
)
from .grassmann import LagrangianPath, qr_frame, transversal_to_pair
from .symlin import (
    check_symmetric,
    complement,
    direct_sum,
    graph_lagrangian,
    h0_frame,
    h1_frame,
    half_dim,
    omega_matrix,
    transversality_margin,
)


# ---------------------------------------------------------------------------
# coordinates adapted to a transverse pair

def pair_chart(L0, L1, tol=None):
    """Symplectic matrix Ψ with Ψ(H_0) = L1 and Ψ(H_1) = L0.

    Lagrangians transverse to both L0 and L1 are then exactly the images of
    graphs of invertible symmetric matrices, and the connected components of
    that set are labelled by the signature of the matrix.
    """
    tol = _tol.resolve(tol)
    E0, E1 = qr_frame(L0), qr_frame(L1)
    m = transversality_margin(E0, E1)
    if m <= 10 * tol.rank:
        raise TransversalityLost("pair is not transverse", margin=m)
    G = omega_matrix(E1, E0)
    return np.hstack([E1, np.linalg.solve(G.T, E0.T).T])


def chart_coords(Psi, M):
    """Symmetric B with M = Ψ graph(B)."""
    N = Psi.shape[0] // 2
    Z = np.linalg.solve(Psi, M)
    B = np.linalg.solve(Z[:N].T, Z[N:].T).T
    return 0.5 * (B + B.T)


def chart_frame(Psi, B):
    N = Psi.shape[0] // 2
    return qr_frame(Psi @ np.vstack([np.eye(N), B]))


def _signature(B):
    ev = np.linalg.eigvalsh(B)
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def real_log_orthogonal(Q):
    """Real skew X with expm(X) = Q for Q in SO(N).

    Uses the real Schur form; -1 eigenvalues are paired into rotations by π.
    """
    N = Q.shape[0]
    T, Z = schur(Q, output="real")
    X = np.zeros((N, N))
    minus = []
    i = 0
    while i < N:
        if i + 1 < N and abs(T[i + 1, i]) > 1e-12:
            th = np.arctan2(T[i + 1, i], T[i, i])
            X[i + 1, i], X[i, i + 1] = th, -th
            i += 2
            continue
        if T[i, i] < 0:
            minus.append(i)
        i += 1
    if len(minus) % 2:
        raise ValueError("matrix is not in SO(N)")
    for p, q in zip(minus[::2], minus[1::2]):
        X[q, p], X[p, q] = np.pi, -np.pi
    L = Z @ X @ Z.T
    L = 0.5 * (L - L.T)
    if np.linalg.norm(expm(L) - Q) > 1e-8 * max(1, N):
        raise ValueError("logarithm did not reproduce the rotation")
    return L


def connecting_path(B0, B1):
    """Path s ↦ B(s) of invertible symmetric matrices from B0 to B1.

    Eigenvalues of B0 are moved to ±1, the eigenframe is rotated onto that of
    B1, then eigenvalues move out to those of B1.  Requires equal signatures.
    """
    e0, U0 = np.linalg.eigh(B0)
    e1, U1 = np.linalg.eigh(B1)
    D = np.sign(e0)
    if np.any(D == 0) or np.any(np.sign(e1) != D):
        raise ValueError("endpoints must be invertible with equal signature")
    U1 = U1.copy()
    if np.linalg.det(U1 @ U0.T) < 0:
        U1[:, 0] *= -1
    X = real_log_orthogonal(U1 @ U0.T)

    def B(s):
        s = min(max(float(s), 0.0), 1.0)
        if s <= 1 / 3:
            r = 3 * s
            return (U0 * ((1 - r) * e0 + r * D)) @ U0.T
        if s <= 2 / 3:
            U = expm((3 * s - 1) * X) @ U0
            return (U * D) @ U.T
        r = 3 * s - 2
        return (U1 * ((1 - r) * D + r * e1)) @ U1.T

    return B


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return 3 * s ** 2 - 2 * s ** 3


# ---------------------------------------------------------------------------
# transversal paths

def suspended(path, k, which):
    """l ⊕ R_0^k (``which=0``) or l ⊕ R_1^k (``which=1``)."""
    if k == 0:
        return path
    R = h0_frame(k) if which == 0 else h1_frame(k)
    f = path.frame
    return LagrangianPath(lambda t: direct_sum(f(t), R), path.a, path.b, grid=path.grid)


@dataclass
class TransversalPathResult:
    k: int
    path: LagrangianPath
    l0: LagrangianPath
    l1: LagrangianPath
    switches: list = field(default_factory=list)
    defects: list = field(default_factory=list)
    min_margin: float = np.nan

    def __iter__(self):
        return iter((self.k, self.path))


def _margin_pair(P, A, B):
    return min(transversality_margin(P, A), transversality_margin(P, B))


class _Framecache:
    def __init__(self, path):
        self.path = path
        self.store = {}

    def __call__(self, t):
        if t not in self.store:
            self.store[t] = self.path.frame(t)
        return self.store[t]


def transversal_path(l0, l1, k_max=None, tol=None, valid=0.05, n_grid=201, max_inserts=200):
    """Path p transverse to ``l0 ⊕ R_0^k`` and ``l1 ⊕ R_1^k`` at every time.

    Parameters
    ----------
    l0, l1 : LagrangianPath
        Paths in Λ(n) on a common interval.
    k_max : int, optional
        Suspension budget (default ``4 n``).
    valid : float
        A constant piece is kept while its transversality margin against both
        paths stays above this value.

    Returns
    -------
    TransversalPathResult
        Unpacks as ``(k, p)``.  ``defects`` lists the signature mismatch at
        every switch point.

    Raises
    ------
    SuspensionBudgetExceeded, TransversalityLost
    """
    tol = _tol.resolve(tol)
    a, b = l0.a, l0.b
    if abs(l1.a - a) > 1e-12 or abs(l1.b - b) > 1e-12:
        raise ValueError("paths must share their parameter interval")
    n = l0.n
    if k_max is None:
        k_max = 4 * n
    floor = 10 * tol.rank
    f0, f1 = _Framecache(l0), _Framecache(l1)
    ts = sorted(set(np.round(np.concatenate([l0.grid, l1.grid, np.linspace(a, b, n_grid)]), 15)))

    def creation_level(M, t):
        # a piece is kept while its margin stays above this level
        return min(valid, 0.25 * _margin_pair(M, f0(t), f1(t)))

    def reach(M, i, level):
        j = i
        while j + 1 < len(ts) and _margin_pair(M, f0(ts[j + 1]), f1(ts[j + 1])) >= level:
            j += 1
        return j

    def pair_margin(t):
        return transversality_margin(f0(t), f1(t))

    def pair_ok(t):
        return pair_margin(t) >= min(valid, 1e3 * floor)

    def candidates(t, M_old):
        """(M, d) pairs; d = sign(B_old) - sign(B_new) in the chart at t."""
        out = []
        if M_old is None or not pair_ok(t):
            M = transversal_to_pair(f0(t), f1(t), tol)
            out.append((M, 0))
            if pair_ok(t):
                Psi = pair_chart(f0(t), f1(t), tol)
                for s in (1.0, -1.0):
                    out.append((chart_frame(Psi, s * np.eye(n)), 0))
            return out
        Psi = pair_chart(f0(t), f1(t), tol)
        Bo = chart_coords(Psi, M_old)
        so = _signature(Bo)
        ev, U = np.linalg.eigh(Bo)
        S = np.sign(ev)
        mats = [(U * S) @ U.T, np.eye(n), -np.eye(n)]
        for j in range(n):
            Sj = S.copy()
            Sj[j] = -Sj[j]
            mats.append((U * Sj) @ U.T)
        mats.append(chart_coords(Psi, transversal_to_pair(f0(t), f1(t), tol)))
        for B in mats:
            out.append((chart_frame(Psi, B), so - _signature(B)))
        return out

    # greedy partition
    i = 0
    best = None
    for Mc, _ in candidates(ts[0], None):
        lev = creation_level(Mc, ts[0])
        key = (reach(Mc, 0, lev), lev)
        if lev > floor and (best is None or key > best[0]):
            best = (key, Mc, lev)
    if best is None:
        raise TransversalityLost("no transversal at the initial time", where=ts[0])
    _, M, level = best
    pieces = [(ts[0], M)]
    defects = []
    inserts = 0
    cum = [0]
    while True:
        j = reach(M, i, level)
        if j == len(ts) - 1:
            break
        # latest switch point inside the reach of M where the pair is transverse,
        # else the most transverse one
        m = None
        for q in range(j, i, -1):
            if pair_margin(ts[q]) >= valid:
                m = q
                break
        if m is None and j > i:
            q = max(range(i + 1, j + 1), key=lambda q: pair_margin(ts[q]))
            if pair_ok(ts[q]):
                m = q
        if m is None:
            inserts += 1
            if inserts > max_inserts:
                raise TransversalityLost("could not find a switch point", where=ts[i])
            ts.insert(j + 1, 0.5 * (ts[j] + ts[j + 1]))
            continue
        opts = []
        for Mc, d in candidates(ts[m], M):
            lev = creation_level(Mc, ts[m])
            if lev <= floor:
                continue
            r = reach(Mc, m, lev)
            c = cum[-1] + d
            spread = max(max(cum), c) - min(min(cum), c)
            opts.append((-r, spread, abs(d), -lev, d, Mc, lev))
        opts.sort(key=lambda o: o[:4])
        r, _, _, _, d, Mn, lev = opts[0]
        if -r <= m:
            inserts += 1
            if inserts > max_inserts:
                raise TransversalityLost("transversal pieces do not advance", where=ts[m])
            ts.insert(m + 1, 0.5 * (ts[m] + ts[m + 1]))
            continue
        if abs(d) > 2 * n:
            raise TransversalityLost(f"signature defect {d} outside [-2n, 2n]", where=ts[m])
        defects.append(int(d))
        cum.append(cum[-1] + d)
        pieces.append((ts[m], Mn))
        M, i, level = Mn, m, lev

    cmax, cmin = max(cum), min(cum)
    k = (cmax - cmin) // 2
    if k > k_max:
        raise SuspensionBudgetExceeded(f"suspension {k} exceeds budget {k_max}", margin=k)
    s0 = (cmax + cmin) // 2
    sigs = [s0 - c for c in cum]

    def pad(M, s):
        if k == 0:
            return M
        q = np.concatenate([np.ones((k + s) // 2), -np.ones((k - s) // 2)])
        return direct_sum(M, graph_lagrangian(np.diag(q)))

    L0s, L1s = suspended(l0, k, 0), suspended(l1, k, 1)
    g0, g1 = _Framecache(L0s), _Framecache(L1s)
    frames = [pad(M, s) for (_, M), s in zip(pieces, sigs)]
    starts = [t for t, _ in pieces]

    # windows at each switch: frozen-time connecting path, ramped by smoothstep
    windows = []
    for w in range(1, len(pieces)):
        tm = starts[w]
        nxt = starts[w + 1] if w + 1 < len(starts) else b
        Psi = pair_chart(g0(tm), g1(tm), tol)
        B0, B1 = chart_coords(Psi, frames[w - 1]), chart_coords(Psi, frames[w])
        if _signature(B0) != _signature(B1):
            raise TransversalityLost("suspended pieces lie in different components", where=tm)
        Bpath = connecting_path(B0, B1)
        delta = 0.5 * (nxt - tm)
        for _ in range(60):
            ss = np.linspace(0.0, 1.0, 33)
            worst = min(_margin_pair(chart_frame(Psi, Bpath(smoothstep(s))),
                                     L0s.frame(tm + s * delta), L1s.frame(tm + s * delta))
                        for s in ss)
            if worst > floor and _margin_pair(frames[w], L0s.frame(tm + delta),
                                              L1s.frame(tm + delta)) > floor:
                break
            delta *= 0.5
        else:
            raise TransversalityLost("ramp width collapsed", where=tm)
        windows.append((tm, delta, Psi, Bpath))

    def p(t):
        w = bisect.bisect_right(starts, t) - 1
        w = max(w, 0)
        if w >= 1:
            tm, delta, Psi, Bpath = windows[w - 1]
            if t < tm + delta:
                return chart_frame(Psi, Bpath(smoothstep((t - tm) / delta)))
        return frames[w]

    grid = sorted(set(ts) | {tm + d for tm, d, _, _ in windows}
                  | {tm + d * s for tm, d, _, _ in windows for s in np.linspace(0, 1, 9)})
    path = LagrangianPath(p, a, b, grid=np.array(grid))
    res = TransversalPathResult(k, path, L0s, L1s, [float(t) for t in starts[1:]], defects)
    res.min_margin = certify_transversal(res, density=1, tol=tol)
    return res


def certify_transversal(res, density=10, tol=None):
    """Minimum margin of p against both suspended paths on a refined grid.

    The grid is the path grid with ``density - 1`` extra points per interval
    plus all midpoints.  Raises :class:`TransversalityLost` below ``10*rank``.
    """
    tol = _tol.resolve(tol)
    ts = refine(res.path.grid, density)
    worst = np.inf
    for t in ts:
        m = _margin_pair(res.path.frame(t), res.l0.frame(t), res.l1.frame(t))
        if m <= 10 * tol.rank:
            raise TransversalityLost("certificate failed", where=float(t), margin=m)
        worst = min(worst, m)
    return float(worst)


def refine(grid, density):
    grid = np.asarray(grid, dtype=float)
    pts = [grid]
    for j in range(1, 2 * density):
        pts.append(grid[:-1] + (grid[1:] - grid[:-1]) * j / (2 * density))
    return np.unique(np.concatenate(pts))


# ---------------------------------------------------------------------------
# correctors

def reduced_graph(A, Fb, Ib):
    """Frame of {(P_F u, P_F A u) : A u ∈ F} in the coordinates of F (2f rows)."""
    f = Fb.shape[1]
    if Ib.shape[1] == 0:
        U = np.eye(A.shape[0])
    else:
        _, _, Vt = np.linalg.svd(Ib.T @ A)
        U = Vt[-f:].T if f else np.zeros((A.shape[0], 0))
    return qr_frame(np.vstack([Fb.T @ U, Fb.T @ (A @ U)]))


def _min_sv(A):
    return float(np.linalg.svd(A, compute_uv=False)[-1])


@dataclass
class SingleParametrix:
    F: np.ndarray
    R: np.ndarray
    K: np.ndarray
    M: np.ndarray
    L: np.ndarray
    min_singular_value: float


def invert_single(A, tol=None, rng=None):
    """K = I_F R P_F with A + K invertible and F as small as possible.

    F starts as the numerical kernel of A.  With ``rng`` the transversal M is a
    random member of the admissible set instead of the canonical one.
    """
    tol = _tol.resolve(tol)
    A = check_symmetric(A, tol)
    n = A.shape[0]
    ev, V = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(ev))))
    thr = tol.inv * scale
    order = np.argsort(np.abs(ev))
    f = int(np.sum(np.abs(ev) <= thr))
    if f == 0:
        return SingleParametrix(np.zeros((n, 0)), np.zeros((0, 0)), np.zeros((n, n)),
                                np.zeros((0, 0)), np.zeros((0, 0)), _min_sv(A))
    while f <= n:
        Fb, Ib = V[:, order[:f]], V[:, order[f:]]
        L = reduced_graph(A, Fb, Ib)
        F1 = h1_frame(f)
        if rng is None:
            M = transversal_to_pair(F1, L, tol)
        else:
            Psi = pair_chart(F1, L, tol)
            Q, _ = np.linalg.qr(rng.standard_normal((f, f)))
            ev_r = rng.choice([-1.0, 1.0], size=f) * rng.uniform(0.5, 2.0, size=f)
            M = chart_frame(Psi, (Q * ev_r) @ Q.T)
        X, Y = M[:f], M[f:]
        R = -np.linalg.solve(X.T, Y.T).T
        R = 0.5 * (R + R.T)
        K = Fb @ R @ Fb.T
        s = _min_sv(A + K)
        if s > thr:
            return SingleParametrix(Fb, R, K, M, L, s)
        f += 1
    raise CertificateFailure("no corrector certified", margin=s)


@dataclass
class ParametrixPath:
    """K(λ) = F R(λ) Fᵀ with A(λ) + K(λ) invertible on the whole interval."""

    F: np.ndarray
    R_func: object
    a: float
    b: float
    grid: np.ndarray
    method: str
    k: int = 0
    min_singular_value: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    def R(self, lam):
        return self.R_func(float(lam))

    def K(self, lam):
        return self.F @ self.R(lam) @ self.F.T

    @property
    def rank_bound(self):
        return self.F.shape[1]

    def samples(self, ts=None):
        ts = self.grid if ts is None else np.asarray(ts)
        return ts, np.array([self.K(t) for t in ts])


def _certify(path, K, ts, thr):
    worst = np.inf
    for t in ts:
        s = _min_sv(path.matrix(t) + K(t))
        if s <= thr:
            raise CertificateFailure(f"A + K singular at λ = {t:.10g}", where=float(t), margin=s)
        worst = min(worst, s)
    return worst


def _path_scale(path, ts):
    return max(1.0, max(np.linalg.norm(path.matrix(t), 2) for t in ts))


def parametrix_path(path, tol=None, k_max=None, allow_full=False, n_grid=201,
                    strategies=("constant", "transversal")):
    """Certified finite-rank corrector for an operator path.

    Endpoint invertibility is not required.  F starts as the complement of
    the common isotropic subspace of the graph path; the constant corrector
    ``R = c Id`` is tried first (it works whenever the compression of A to
    ``F^⊥`` stays invertible), then a transversal path is built, and F is
    enlarged by the suspension size when that is positive.

    ``strategies`` restricts the constructions tried; with F = H the constant
    corrector is always available.
    """
    from .reduction import common_isotropic
    from .spectral import graph_path

    tol = _tol.resolve(tol)
    n = path.n
    ts = np.unique(np.concatenate([path.grid, np.linspace(path.a, path.b, n_grid)]))
    mats = {t: path.matrix(t) for t in ts}
    scale = _path_scale(path, ts)
    thr = tol.inv * scale
    try:
        Ib = common_isotropic(graph_path(path), tol)
    except Exception:
        Ib = np.zeros((n, 0))
    rounds = []
    while True:
        Fb = complement(Ib, n) if Ib.shape[1] else np.eye(n)
        f = Fb.shape[1]
        out = None
        if "constant" in strategies or f == n:
            out = _try_constant(path, Fb, Ib, ts, mats, thr, tol)
        if out is not None:
            out.diagnostics["rounds"] = rounds
            return out
        try:
            out = _try_transversal(path, Fb, Ib, ts, thr, tol, k_max)
        except (TransversalityLost, CertificateFailure) as exc:
            rounds.append({"dimF": f, "failure": type(exc).__name__})
            k = 1
        else:
            if out.k == 0:
                out.diagnostics["rounds"] = rounds
                return out
            k = out.k
            rounds.append({"dimF": f, "k": k})
        if Ib.shape[1] < k:
            if allow_full:
                Ib = np.zeros((n, 0))
                continue
            raise AmbientTooSmall(
                f"suspension {k} needs more room than dim Ĩ = {Ib.shape[1]}",
                margin=k, padding=k - Ib.shape[1])
        # drop the k directions of Ĩ on which A is weakest on average
        W = sum((Ib.T @ mats[t] @ Ib) @ (Ib.T @ mats[t] @ Ib) for t in ts) / len(ts)
        _, Q = np.linalg.eigh(W)
        Ib = Ib @ Q[:, k:]


def _try_constant(path, Fb, Ib, ts, mats, thr, tol):
    f = Fb.shape[1]
    n = Fb.shape[0]
    if Ib.shape[1]:
        comp = [Ib.T @ mats[t] @ Ib for t in ts]
        if min(_min_sv(C) for C in comp) <= 1e-6 * max(1.0, max(np.linalg.norm(C, 2) for C in comp)):
            return None
        schur_c = [Fb.T @ mats[t] @ Fb - Fb.T @ mats[t] @ Ib @ np.linalg.solve(C, Ib.T @ mats[t] @ Fb)
                   for t, C in zip(ts, comp)]
    else:
        schur_c = [mats[t] for t in ts]
    c = 1.0 + max(np.linalg.norm(S, 2) for S in schur_c)
    R0 = c * np.eye(f)
    K = lambda t: Fb @ R0 @ Fb.T  # noqa: E731
    try:
        worst = _certify(path, K, ts, thr)
        worst = min(worst, _certify(path, K, refine(ts, 10), thr))
    except CertificateFailure:
        return None
    return ParametrixPath(Fb, lambda lam: R0, path.a, path.b, ts, "constant", 0, worst,
                          {"c": c, "dimF": f})


def _try_transversal(path, Fb, Ib, ts, thr, tol, k_max):
    f = Fb.shape[1]
    l0 = LagrangianPath(lambda lam: reduced_graph(path.matrix(lam), Fb, Ib), path.a, path.b, grid=ts)
    l1 = LagrangianPath.constant(h1_frame(f), path.a, path.b)
    res = transversal_path(l0, l1, k_max=k_max, tol=tol)
    if res.k:
        return ParametrixPath(Fb, None, path.a, path.b, ts, "transversal", res.k, np.nan,
                              {"dimF": f, "switches": res.switches, "defects": res.defects})

    def R(lam):
        M = res.path.frame(lam)
        B = np.linalg.solve(M[:f].T, M[f:].T).T
        return -0.5 * (B + B.T)

    K = lambda t: Fb @ R(t) @ Fb.T  # noqa: E731
    grid = res.path.grid
    worst = _certify(path, K, refine(grid, 1), thr)
    worst = min(worst, _certify(path, K, refine(grid, 10), thr))
    return ParametrixPath(Fb, R, path.a, path.b, np.asarray(grid), "transversal", 0, worst,
                          {"dimF": f, "switches": res.switches, "defects": res.defects,
                           "transversal_margin": res.min_margin})


def replay_certificate(pp, path, density=10, tol=None):
    """Re-check σ_min(A + K) on a grid ``density`` times finer than the output grid."""
    tol = _tol.resolve(tol)
    ts = refine(pp.grid, density)
    thr = tol.inv * _path_scale(path, ts)
    return _certify(path, pp.K, ts, thr)
