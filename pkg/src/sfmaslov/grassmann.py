"""
Maslov index in the finite-dimensional Lagrangian Grassmannian.

A Lagrangian frame ``[X; Y]`` is identified with the complex matrix
``Z = X + iY``; for an orthonormal frame Z is unitary and ``det(Z)**2`` depends
only on the subspace.  Indices are winding numbers of that phase, counted
counter-clockwise.  With this orientation the graph path of ``A(λ) = [λ]``
on ``[-1, 1]`` has Maslov index +1 relative to H_0, so crossing forms enter
with their natural sign.
"""

import math

import numpy as np

from . import _tol
from .exceptions import (
    EndpointNotTransverse,
    NotClosed,
    ParityViolation,
    RefinementExhausted,
    TransversalityViolated,
    UnitarityFailure,
)
from .symlin import (
    _as_frame,
    apply_J,
    direct_sum,
    gap,
    graph_lagrangian,
    h0_frame,
    h1_frame,
    half_dim,
    intersection,
    intersection_dim,
    orth,
)

TWO_PI = 2.0 * math.pi


def qr_frame(W):
    """Orthonormal frame of a full-rank basis (fast path, no rank test)."""
    Q, _ = np.linalg.qr(_as_frame(W))
    return Q


class LagrangianPath:
    """A continuous path t ↦ L(t) of Lagrangians on [a, b].

    Either a generator ``func(t)`` returning any basis of L(t) (then the path
    can be refined on demand) or a fixed list of samples.
    """

    def __init__(self, func, a=0.0, b=1.0, grid=None, n_grid=33):
        self.func = func
        self.a = float(a)
        self.b = float(b)
        if not self.b > self.a:
            raise ValueError("path interval must satisfy a < b")
        if grid is None:
            grid = np.linspace(self.a, self.b, n_grid)
        self.grid = np.asarray(grid, dtype=float)
        self._samples = None
        self._cache = {}

    @classmethod
    def from_samples(cls, ts, frames):
        ts = np.asarray(ts, dtype=float)
        if np.any(np.diff(ts) <= 0):
            raise ValueError("sample parameters must be strictly increasing")
        obj = cls(None, ts[0], ts[-1], grid=ts)
        obj._samples = {float(t): qr_frame(F) for t, F in zip(ts, frames)}
        return obj

    @classmethod
    def constant(cls, L, a=0.0, b=1.0):
        L = qr_frame(L)
        return cls(lambda t: L, a, b, n_grid=2)

    def frame(self, t):
        t = float(t)
        if self.func is not None:
            F = self._cache.get(t)
            if F is None:
                F = qr_frame(self.func(t))
                F.setflags(write=False)
                if len(self._cache) >= 20000:
                    self._cache.clear()
                self._cache[t] = F
            return F
        try:
            return self._samples[t]
        except KeyError:
            raise RefinementExhausted(
                "path given by samples cannot be refined", where=t) from None

    def __call__(self, t):
        return self.frame(t)

    @property
    def n(self):
        return half_dim(self.frame(self.a))

    def reversed(self):
        a, b = self.a, self.b
        if self.func is None:
            ts = self.grid[::-1]
            return LagrangianPath.from_samples(a + b - ts, [self._samples[float(t)] for t in ts])
        f = self.func
        return LagrangianPath(lambda t: f(a + b - t), a, b, grid=(a + b - self.grid)[::-1])

    def concat(self, other):
        """This path followed by ``other`` (reparametrised onto [b, b + len])."""
        shift = self.b - other.a
        a, b = self.a, self.b
        f, g = self.func, other.func
        if f is None or g is None:
            ts = list(self.grid) + [t + shift for t in other.grid[1:]]
            frames = [self.frame(t) for t in self.grid] + [other.frame(t) for t in other.grid[1:]]
            return LagrangianPath.from_samples(ts, frames)

        def h(t):
            return f(t) if t <= b else g(t - shift)

        grid = np.concatenate([self.grid, other.grid[1:] + shift])
        return LagrangianPath(h, a, other.b + shift, grid=grid)


# ---------------------------------------------------------------------------
# unitary picture

def unitary_from_lagrangian(L, tol=None):
    tol = _tol.resolve(tol)
    L = _as_frame(L)
    n = half_dim(L)
    Z = L[:n] + 1j * L[n:]
    err = np.linalg.norm(Z @ Z.conj().T - np.eye(n))
    if err > tol.orth * max(1, n) * 10:
        raise UnitarityFailure(f"||Z Z* - I|| = {err:.2e}; frame is not an orthonormal Lagrangian frame",
                               margin=float(err))
    return Z


def _det2(L):
    """Unit complex number det(X + iY)^2 / |.|^2 (frame independent on Lagrangians)."""
    L = _as_frame(L)
    n = half_dim(L)
    d = np.linalg.det(L[:n] + 1j * L[n:])
    d2 = d * d
    return d2 / abs(d2)


def det_squared_phase(L, tol=None):
    Z = unitary_from_lagrangian(L, tol)
    d = np.linalg.det(Z)
    return float(np.angle(d * d) % TWO_PI)


def _lagrangian_gap(L0, L1):
    """Gap between equal-dimensional orthonormal frames via principal angles."""
    s = np.linalg.svd(L0.T @ L1, compute_uv=False)
    if s.size == 0:
        return 0.0
    return float(np.sqrt(max(0.0, 1.0 - min(1.0, s[-1]) ** 2)))


def _phase_walk(frame_at, ts, tol, max_depth=20, can_refine=True, step_ok=None):
    """Accumulated det² phase along consecutive parameters, refining as needed.

    A step is accepted when its gap distance is below ``tol.path`` and the
    wrapped phase jump is below π/2.  For refinable paths the midpoint must
    pass the same test against the start: a line turning by a full π between
    two samples returns to itself and would otherwise go unnoticed.
    ``step_ok(t0, t1)`` is an extra acceptance test supplied by the caller.
    """
    total = 0.0
    stack = []
    ts = list(ts)
    prev_t = ts[0]
    prev_F = frame_at(prev_t)
    prev_z = _det2(prev_F)
    for t_next in ts[1:]:
        stack.append((t_next, 0))
        while stack:
            t1, depth = stack[-1]
            F1 = frame_at(t1)
            z1 = _det2(F1)
            jump = float(np.angle(z1 / prev_z))
            ok = abs(jump) < 0.5 * math.pi and _lagrangian_gap(prev_F, F1) < tol.path
            if ok and can_refine and depth < max_depth:
                Fm = frame_at(0.5 * (prev_t + t1))
                zm = _det2(Fm)
                ok = (abs(float(np.angle(zm / prev_z))) < 0.5 * math.pi
                      and abs(float(np.angle(z1 / zm))) < 0.5 * math.pi
                      and _lagrangian_gap(prev_F, Fm) < tol.path
                      and _lagrangian_gap(Fm, F1) < tol.path)
                if ok and step_ok is not None:
                    ok = step_ok(prev_t, t1)
            if ok:
                total += jump
                prev_t, prev_F, prev_z = t1, F1, z1
                stack.pop()
                continue
            if not can_refine:
                raise RefinementExhausted(
                    f"phase jump {jump:.3f} or gap too large between samples", where=(prev_t, t1))
            if depth >= max_depth:
                raise RefinementExhausted("bisection depth exhausted", where=(prev_t, t1))
            stack.append((0.5 * (prev_t + t1), depth + 1))
    return total


def _winding(total):
    w = total / TWO_PI
    r = round(w)
    if abs(w - r) > 0.05:
        raise NotClosed(f"accumulated phase {total:.6f} is not a multiple of 2π")
    return int(r)


def path_phase(path, tol=None):
    """Total det² phase swept by a Lagrangian path (not reduced mod 2π)."""
    tol = _tol.resolve(tol)
    return _phase_walk(path.frame, path.grid, tol, can_refine=path.func is not None)


def maslov_loop_index(path, tol=None):
    """Winding number of det² along a closed Lagrangian path."""
    tol = _tol.resolve(tol)
    La, Lb = path.frame(path.a), path.frame(path.b)
    if gap(La, Lb) > max(tol.gap, 1e-7):
        raise NotClosed(f"loop endpoints differ by gap {gap(La, Lb):.2e}")
    return _winding(path_phase(path, tol))


# ---------------------------------------------------------------------------
# charts of Λ_L

def chart(L, M, tol=None):
    """Symmetric C with M = span(E C + JE), E an orthonormal frame of L.

    Every Lagrangian transverse to L is such a graph over JL.
    """
    tol = _tol.resolve(tol)
    E = qr_frame(L)
    JE = apply_J(E)
    M = _as_frame(M)
    a = E.T @ M
    b = JE.T @ M
    s = np.linalg.svd(b, compute_uv=False)
    if s.size and s[-1] <= tol.rank * max(1.0, s[0]):
        raise EndpointNotTransverse("Lagrangian is not transverse to the reference", margin=float(s[-1]))
    C = np.linalg.solve(b.T, a.T).T
    return E, JE, 0.5 * (C + C.T)


def _chart_segment(E, JE, C0, C1):
    def f(s):
        return E @ ((1.0 - s) * C0 + s * C1) + JE
    return f


def relative_maslov_index(path, L, tol=None, step_ok=None):
    """Maslov index of ``path`` relative to ``L``.

    The path is closed by the segment ``C(s)`` of symmetric forms over JL
    joining the end chart back to the start chart (a path inside Λ_L) and the
    winding number of the resulting loop is returned.
    """
    tol = _tol.resolve(tol)
    La, Lb = path.frame(path.a), path.frame(path.b)
    try:
        E, JE, Ca = chart(L, La, tol)
        _, _, Cb = chart(L, Lb, tol)
    except EndpointNotTransverse as exc:
        raise EndpointNotTransverse("path endpoints must be transverse to L", margin=exc.margin) from exc
    total = _phase_walk(path.frame, path.grid, tol, can_refine=path.func is not None, step_ok=step_ok)
    closing = _chart_segment(E, JE, Cb, Ca)
    total += _phase_walk(lambda s: qr_frame(closing(s)), np.linspace(0.0, 1.0, 9), tol)
    return _winding(total)


# ---------------------------------------------------------------------------
# triples, Hörmander index

def _require_transverse(V, W, what, tol):
    if intersection_dim(V, W, tol) != 0:
        raise TransversalityViolated(f"{what} are not transverse")


def triple_form(L0, M, L1, tol=None):
    """Matrix of Q(v) = omega(Av, v) on L0, where M = graph(A: L0 -> L1)."""
    tol = _tol.resolve(tol)
    E0, E1, Mf = qr_frame(L0), qr_frame(L1), qr_frame(M)
    _require_transverse(E0, E1, "L0 and L1", tol)
    _require_transverse(Mf, E0, "M and L0", tol)
    _require_transverse(Mf, E1, "M and L1", tol)
    n = E0.shape[1]
    coef = np.linalg.solve(np.hstack([E0, E1]), Mf)
    a, b = coef[:n], coef[n:]
    T = np.linalg.solve(a.T, b.T).T          # b a^{-1}
    Q = T.T @ (apply_J(E1).T @ E0)
    return 0.5 * (Q + Q.T)


def signature(Q, tol=None):
    tol = _tol.resolve(tol)
    ev = np.linalg.eigvalsh(Q)
    if ev.size == 0:
        return 0
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.min(np.abs(ev)) <= tol.rank * scale:
        raise TransversalityViolated("quadratic form is degenerate")
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def triple_signature(L0, M, L1, tol=None):
    return signature(triple_form(L0, M, L1, tol), tol)


def hormander_index(L0, L1, M0, M1, tol=None):
    """½[sign(L0, M1, L1) - sign(L0, M0, L1)] for L0 transverse to L1."""
    tol = _tol.resolve(tol)
    s1 = triple_signature(L0, M1, L1, tol)
    s0 = triple_signature(L0, M0, L1, tol)
    d = s1 - s0
    if d % 2:
        raise ParityViolation(f"signature difference {d} is odd")
    return d // 2


def hormander_index_via_path(L0, L1, M0, M1, tol=None):
    """Hörmander index as the Maslov index of a path inside Λ_{L1}.

    ``q`` joins M0 to M1 through graphs over J L1; the index equals the
    winding of the loop (q, then back through Λ_{L0}), which is
    ``-m_{L0}(q)``.
    """
    tol = _tol.resolve(tol)
    E, JE, C0 = chart(L1, M0, tol)
    _, _, C1 = chart(L1, M1, tol)
    seg = _chart_segment(E, JE, C0, C1)
    q = LagrangianPath(seg, 0.0, 1.0, n_grid=9)
    return -relative_maslov_index(q, L0, tol)


# ---------------------------------------------------------------------------
# transversals and suspension

def transversal_to_pair(L0, L1, tol=None):
    """A Lagrangian transverse to both L0 and L1.

    Reduce modulo J(L0 ∩ L1), take the graph of ``C1 + Id`` over the reduced
    L0 (C1 the chart of the reduced L1), and add J(L0 ∩ L1) back.
    """
    from .reduction import build_context, reduce_lagrangian

    tol = _tol.resolve(tol)
    E0, E1 = qr_frame(L0), qr_frame(L1)
    I = intersection(E0, E1, tol)
    r = I.shape[1]
    n = E0.shape[1]
    if r == 0:
        E, JE, C1 = chart(E0, E1, tol)
        return qr_frame(E @ (C1 + np.eye(n)) + JE)
    JI = apply_J(I)
    if r == n:
        return JI
    ctx = build_context(JI, tol=tol)
    R0 = reduce_lagrangian(ctx, E0, tol)
    R1 = reduce_lagrangian(ctx, E1, tol)
    E = R0
    JE = apply_J(E)
    a, b = E.T @ R1, JE.T @ R1
    C1 = np.linalg.solve(b.T, a.T).T
    C1 = 0.5 * (C1 + C1.T)
    Mt = E @ (C1 + np.eye(n - r)) + JE
    return orth(np.hstack([Mt, JI]), tol)


def codiagonal(k):
    """Co-diagonal {(x, y, -x, y)} in S(R^{2k}), the graph of diag(-I_k, I_k)."""
    return graph_lagrangian(np.diag(np.concatenate([-np.ones(k), np.ones(k)])))


def suspend_triple(L0, M, L1, k):
    """k-th suspension (L0 ⊕ R_0^{2k}, M ⊕ co-diagonal, L1 ⊕ R_1^{2k})."""
    return (direct_sum(L0, h0_frame(2 * k)),
            direct_sum(M, codiagonal(k)),
            direct_sum(L1, h1_frame(2 * k)))
