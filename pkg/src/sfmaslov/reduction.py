"""
Symplectic reduction modulo an isotropic subspace.

For an isotropic I the reduced space is S_I = I^♯ ∩ I^⊥, realised as a
J-invariant subspace of the ambient space.  A :class:`ReductionContext`
carries an orthonormal frame of S_I together with a reference Lagrangian G of
S_I; the columns ``[G | JG]`` give symplectic coordinates identifying S_I with
the standard S(R^m).
"""

from dataclasses import dataclass

import numpy as np

from . import _tol
from .exceptions import (
    EmptyIsotropic,
    NotClean,
    NotIsotropic,
    NotLagrangian,
    NotNested,
)
from .symlin import (
    _as_frame,
    apply_J,
    classify,
    complement,
    gap,
    h0_frame,
    half_dim,
    intersection_dim,
    is_isotropic,
    null_space,
    orth,
    transversality_margin,
)


@dataclass(frozen=True)
class ReductionContext:
    I: np.ndarray          # (2n, r) frame of the isotropic subspace
    space: np.ndarray      # (2n, 2m) frame of S_I
    ref: np.ndarray        # (2n, m) frame of the reference Lagrangian G ⊂ S_I
    ambient: np.ndarray    # (2n, 2p) frame of the J-invariant space being reduced

    @property
    def dim(self):
        """Half-dimension m of S_I."""
        return self.ref.shape[1]

    @property
    def basis(self):
        """Symplectic orthonormal basis ``[G | JG]`` of S_I."""
        return np.hstack([self.ref, apply_J(self.ref)])

    @property
    def projector(self):
        return self.space @ self.space.T

    def coords(self, W):
        """Coordinates in S(R^m) of a subspace lying in S_I."""
        return self.basis.T @ _as_frame(W)

    def from_coords(self, C):
        return self.basis @ np.asarray(C, dtype=float)

    @property
    def perp(self):
        """Frame of S_I^⊥ inside the ambient space, i.e. of I ⊕ JI."""
        return orth(np.hstack([self.I, apply_J(self.I)]))


def symplectic_gram_schmidt(space, seed=None):
    """Lagrangian frame G of a J-invariant subspace with ``[G | JG]`` orthonormal."""
    space = _as_frame(space)
    W = space.copy() if seed is None else np.hstack([_as_frame(seed), space])
    picked = []
    m = space.shape[1] // 2
    for j in range(W.shape[1]):
        w = W[:, j].copy()
        for _ in range(2):
            for g in picked:
                w -= g * (g @ w)
                Jg = apply_J(g)
                w -= Jg * (Jg @ w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-6:
            picked.append(w / nrm)
        if len(picked) == m:
            break
    if len(picked) < m:
        raise NotLagrangian("could not build a Lagrangian frame of the reduced space")
    return np.column_stack(picked) if picked else np.zeros((space.shape[0], 0))


def build_context(I, ambient=None, tol=None):
    """Reduction context for an isotropic subspace I.

    ``ambient`` is an optional frame of a J-invariant subspace containing
    I ⊕ JI (used for iterated reductions); by default the whole space.
    """
    tol = _tol.resolve(tol)
    I = _as_frame(I)
    N = I.shape[0]
    half_dim(I)
    if ambient is None:
        ambient = np.eye(N)
    ambient = _as_frame(ambient)
    if I.shape[1]:
        I = orth(I, tol)
        if not is_isotropic(I, tol):
            raise NotIsotropic("I is not isotropic")
        K = np.hstack([I, apply_J(I)])
        # S_I = ambient ∩ (I + JI)^⊥
        coef = null_space(K.T @ ambient, tol)
        space = orth(ambient @ coef, tol) if coef.shape[1] else np.zeros((N, 0))
    else:
        space = ambient.copy()
    if space.shape[1] != ambient.shape[1] - 2 * I.shape[1]:
        raise NotIsotropic("I is not contained in the ambient space")
    ref = _reference_lagrangian(space, I, tol)
    return ReductionContext(I=I, space=space, ref=ref, ambient=ambient)


def _reference_lagrangian(space, I, tol):
    m = space.shape[1] // 2
    if m == 0:
        return np.zeros((space.shape[0], 0))
    n = space.shape[0] // 2
    H0 = h0_frame(n)
    # prefer the projection of H_0 so that I = I'x{0} gives the natural F x F coordinates
    P = space @ (space.T @ H0)
    try:
        G = orth(P, tol)
    except Exception:
        G = np.zeros((space.shape[0], 0))
    if G.shape[1] == m and is_isotropic(G, tol):
        return G
    return symplectic_gram_schmidt(space)


def is_clean(L, I, tol=None):
    tol = _tol.resolve(tol)
    if _as_frame(I).shape[1] == 0:
        return True
    return intersection_dim(L, I, tol) == 0


def reduce_lagrangian(ctx, L, tol=None, check=False):
    """Symplectic reduction L_I: projection of L ∩ I^♯ onto S_I.

    ``L`` must be a Lagrangian of ``ctx.ambient`` meeting I trivially.  With
    ``check=True`` the result is compared with (L + I) ∩ S_I.
    """
    tol = _tol.resolve(tol)
    L = _as_frame(L)
    I = ctx.I
    if I.shape[1] == 0:
        return orth(L, tol)
    JI = apply_J(I)
    # L ∩ I^♯ with I^♯ = (JI)^⊥; rank(JIᵀ L) = dim I - dim(L ∩ I), so the
    # kernel has the expected size exactly when L is clean mod I
    coef = null_space(JI.T @ L, tol)
    if coef.shape[1] != L.shape[1] - I.shape[1]:
        raise NotClean("Lagrangian is not clean modulo I")
    W = L @ coef
    out = orth(ctx.space @ (ctx.space.T @ W), tol)
    if out.shape[1] != ctx.dim:
        raise NotClean(f"reduced subspace has dimension {out.shape[1]}, expected {ctx.dim}")
    if check:
        alt = _reduce_via_sum(ctx, L, tol)
        if gap(out, alt) > tol.gap:
            raise NotClean("projection and (L + I) ∩ S_I disagree")
    return out


def _reduce_via_sum(ctx, L, tol):
    """(L + I) ∩ S_I, computed independently of the projection route."""
    LI = orth(np.hstack([L, ctx.I]), tol)
    perp = ctx.perp
    # S_I ∩ (L + I): vectors of L + I orthogonal to I ⊕ JI, kept inside the ambient space
    comp = complement(ctx.ambient)
    constraints = np.hstack([perp, comp]) if comp.shape[1] else perp
    coef = null_space(constraints.T @ LI, tol)
    return orth(LI @ coef, tol)


def reduce_via_sum(ctx, L, tol=None):
    return _reduce_via_sum(ctx, _as_frame(L), _tol.resolve(tol))


def extend_lagrangian(ctx, L, tol=None):
    """Right inverse of the reduction: L ↦ L + JI."""
    L = _as_frame(L)
    return orth(np.hstack([L, apply_J(ctx.I)]), tol)


def compose_check(I1, I2, lagrangians, tol=None):
    """Check ρ^{I1} = ρ^{I} ∘ ρ^{I2} with I = I1 ∩ I2^⊥ on a batch of Lagrangians."""
    tol = _tol.resolve(tol)
    I1, I2 = orth(I1, tol), orth(I2, tol)
    if I2.shape[1] and I1.shape[1] < I2.shape[1]:
        raise NotNested("I2 is larger than I1")
    if I2.shape[1]:
        resid = I2 - I1 @ (I1.T @ I2) if I1.shape[1] else I2
        if np.linalg.norm(resid, 2) > tol.gap:
            raise NotNested("I2 is not contained in I1")
    # I = I1 ∩ I2^⊥
    if I1.shape[1] and I2.shape[1]:
        coef = null_space(I2.T @ I1, tol)
        I = orth(I1 @ coef, tol) if coef.shape[1] else np.zeros((I1.shape[0], 0))
    else:
        I = I1
    ctx1 = build_context(I1, tol=tol)
    ctx2 = build_context(I2, tol=tol)
    ctx = build_context(I, ambient=ctx2.space, tol=tol)
    ok = True
    for L in lagrangians:
        one = reduce_lagrangian(ctx1, L, tol)
        two = reduce_lagrangian(ctx, reduce_lagrangian(ctx2, L, tol), tol)
        ok &= gap(one, two) < tol.gap
    return bool(ok)


def h_isotropic(Ibasis, n=None):
    """I_0 = I x {0} ⊂ S(H) for an (n, r) basis of a subspace I of H."""
    Ibasis = np.asarray(Ibasis, dtype=float)
    if Ibasis.ndim == 1:
        Ibasis = Ibasis[:, None]
    n = Ibasis.shape[0] if n is None else n
    return np.vstack([Ibasis, np.zeros((n, Ibasis.shape[1]))])


# ---------------------------------------------------------------------------
# common isotropic subspace for a path

def _near_h0_directions(L, Ibasis, threshold):
    """Directions u of I along which L nearly contains (u, 0).

    Returns unit vectors of H (columns) spanning the near-intersection of L
    with I_0, using the singular values of the part of L orthogonal to I_0.
    """
    n = half_dim(L)
    I0 = h_isotropic(Ibasis, n)
    R = L - I0 @ (I0.T @ L)
    _, s, Vt = np.linalg.svd(R, full_matrices=True)
    s = np.concatenate([s, np.zeros(L.shape[1] - s.size)])
    pick = np.flatnonzero(s <= threshold)
    if pick.size == 0:
        pick = np.array([int(np.argmin(s))])
    W = L @ Vt[pick].T
    U = Ibasis @ (Ibasis.T @ W[:n])
    return U


def _frame_gap(L0, L1):
    """Gap between equal-dimensional frames: sine of the largest principal angle."""
    s = np.linalg.svd(L0.T @ L1, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - min(1.0, s[-1]) ** 2)))


def common_isotropic(path, tol=None, max_rounds=200, return_trace=False, target=0.0):
    """Cofinite I ⊂ H with I x {0} clean against every Lagrangian of the path.

    Follows the finite-cover construction: near each parameter where the path
    approaches H_0 the near-kernel directions are removed from I.  An interval
    is accepted once the clean-intersection margin at both ends and the midpoint
    exceeds the gap travelled across it plus ``10*rank``, and also ``target``.
    Reduction amplifies motion by about 1/margin, so a positive target buys a
    cheaper reduced path at the price of a larger reduced space.

    Returns an (n, r) orthonormal basis of I (with r <= n - 1, so the reduced
    space is never zero-dimensional).
    """
    tol = _tol.resolve(tol)
    ts = list(np.asarray(path.grid, dtype=float))
    n = half_dim(path.frame(ts[0]))
    F = np.zeros((n, 0))
    floor = 10 * tol.rank
    cache = {}
    gaps = {}

    def frame(t):
        if t not in cache:
            cache[t] = path.frame(t)
        return cache[t]

    def travel(t0, t1, tm):
        # gap travelled across [t0, t1]; independent of I, so cached
        if (t0, t1) not in gaps:
            L0, L1 = frame(t0), frame(t1)
            d = _frame_gap(L0, L1)
            if path.func is not None:
                Lm = frame(tm)
                d = max(d, _frame_gap(L0, Lm), _frame_gap(Lm, L1))
            gaps[t0, t1] = d
        return gaps[t0, t1]

    rounds = 0
    while True:
        Ib = complement(F, n) if F.shape[1] else np.eye(n)
        if Ib.shape[1] == 0:
            break
        I0 = h_isotropic(Ib, n)
        marg = {}

        def margin(t):
            if t not in marg:
                marg[t] = transversality_margin(frame(t), I0)
            return marg[t]

        worst = None
        new_ts = []
        i = 0
        while i < len(ts) - 1:
            t0, t1 = ts[i], ts[i + 1]
            tm = 0.5 * (t0 + t1)
            d = travel(t0, t1, tm)
            margins = [margin(t0), margin(t1)]
            if path.func is not None:
                margins.append(margin(tm))
            need = max(d + floor, target)
            if min(margins) > need:
                i += 1
                continue
            # subdividing only helps while the margins are not themselves small
            if (d > tol.path / 4 and min(margins) > max(tol.path / 8, target) and path.func is not None
                    and t1 - t0 > 1e-9 * (1 + abs(t0))):
                ts.insert(i + 1, tm)
                continue
            k = int(np.argmin(margins))
            tw = (t0, t1, tm)[k]
            if worst is None or margins[k] < worst[0]:
                worst = (margins[k], tw, need)
            i += 1
        if worst is None:
            break
        rounds += 1
        if rounds > max_rounds:
            break
        _, tw, need = worst
        U = _near_h0_directions(frame(tw), Ib, max(4 * need, floor))
        F = orth(np.hstack([F, U]))
        if F.shape[1] >= n:
            F = np.eye(n)
            break
    if F.shape[1] == 0:
        # keep the reduced space nontrivial: drop one direction from I
        F = np.eye(n)[:, :1]
    Ib = complement(F, n) if F.shape[1] < n else np.zeros((n, 0))
    if return_trace:
        return Ib, {"F": F, "grid": ts, "rounds": rounds}
    return Ib


def reduced_path_context(Ibasis, n, tol=None):
    """Context for reducing modulo I x {0}; its reference Lagrangian is F x {0}."""
    return build_context(h_isotropic(Ibasis, n), tol=tol)


def require_nonempty(Ibasis):
    if np.asarray(Ibasis).shape[1] == 0:
        raise EmptyIsotropic("common isotropic subspace is {0}; reduction is trivial")
    return Ibasis


__all__ = [
    "ReductionContext",
    "build_context",
    "reduce_lagrangian",
    "reduce_via_sum",
    "extend_lagrangian",
    "compose_check",
    "common_isotropic",
    "h_isotropic",
    "reduced_path_context",
    "symplectic_gram_schmidt",
    "is_clean",
    "classify",
]
