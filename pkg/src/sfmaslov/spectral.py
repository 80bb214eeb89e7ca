"""
Spectral flow of paths of real symmetric matrices.

Four independent routes are provided:

* ``spectral_flow_morse``      difference of endpoint Morse indices;
* ``spectral_flow_crossings``  sum of crossing-form signatures;
* ``spectral_flow_maslov``     Maslov index of the reduced graph path;
* ``eigenvalue_tracking_oracle`` brute-force continuation of eigen-branches.

Sign convention: sf = μ(A_a) - μ(A_b), so an eigenvalue moving upward through
zero contributes +1.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _tol
from .exceptions import (
    BranchAmbiguity,
    DegenerateCrossing,
    NonIsolatedSingularity,
    SingularEndpoint,
    SingularOperator,
)
from .symlin import check_symmetric, graph_lagrangian, h0_frame, intersection_dim

GOLDEN = 0.3819660112501051


_CACHE_SIZE = 20000


class OperatorPath:
    """λ ↦ A(λ), a continuous path of symmetric matrices on [a, b].

    Parameters
    ----------
    func : callable
        Returns the (n, n) symmetric matrix at λ.  Must be a pure function.
    a, b : float
        Parameter interval.
    derivative : callable, optional
        dA/dλ.  When absent, central differences are used.
    grid : array_like, optional
        Initial sampling grid (defaults to 201 equispaced points).
    """

    def __init__(self, func, a, b, derivative=None, grid=None, n_grid=201, interpolation=None):
        self.func = func
        self.a = float(a)
        self.b = float(b)
        if not self.b > self.a:
            raise ValueError("path interval must satisfy a < b")
        self.derivative = derivative
        if grid is None:
            grid = np.linspace(self.a, self.b, n_grid)
        self.grid = np.asarray(grid, dtype=float)
        self.interpolation = interpolation
        self._cache = {}
        self.n = np.atleast_2d(self.func(self.a)).shape[0]

    @classmethod
    def from_samples(cls, grid, matrices):
        """Piecewise-linear interpolation of sampled matrices."""
        grid = np.asarray(grid, dtype=float)
        mats = np.array([check_symmetric(M) for M in matrices])
        if grid.ndim != 1 or len(grid) != len(mats) or len(grid) < 2:
            raise ValueError("grid and matrices must have the same length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")

        def seg(lam):
            j = int(np.clip(np.searchsorted(grid, lam, side="right") - 1, 0, len(grid) - 2))
            return j, (lam - grid[j]) / (grid[j + 1] - grid[j])

        def func(lam):
            j, s = seg(lam)
            return (1 - s) * mats[j] + s * mats[j + 1]

        def deriv(lam):
            j, _ = seg(lam)
            return (mats[j + 1] - mats[j]) / (grid[j + 1] - grid[j])

        fine = np.unique(np.concatenate([grid, np.linspace(grid[0], grid[-1], 201)]))
        return cls(func, grid[0], grid[-1], derivative=deriv, grid=fine,
                   interpolation="piecewise-linear")

    def __call__(self, lam):
        return self.matrix(lam)

    def matrix(self, lam):
        # func is pure, so evaluations are memoised (read-only, bounded)
        lam = float(lam)
        A = self._cache.get(lam)
        if A is None:
            A = check_symmetric(self.func(lam))
            A.setflags(write=False)
            if len(self._cache) >= _CACHE_SIZE:
                self._cache.clear()
            self._cache[lam] = A
        return A

    def dmatrix(self, lam, h=None):
        lam = float(lam)
        if self.derivative is not None:
            return check_symmetric(self.derivative(lam))
        return finite_difference_derivative(self.matrix, lam, h)

    def restricted(self, c, d):
        grid = self.grid[(self.grid > c) & (self.grid < d)]
        return OperatorPath(self.func, c, d, self.derivative,
                            grid=np.concatenate([[c], grid, [d]]))

    def reversed(self):
        a, b, f, g = self.a, self.b, self.func, self.derivative
        der = None if g is None else (lambda lam: -g(a + b - lam))
        return OperatorPath(lambda lam: f(a + b - lam), a, b, der, grid=(a + b - self.grid)[::-1])

    def perturbed(self, B, eps):
        """λ ↦ A(λ) + eps * B(λ); ``B`` may also be a constant symmetric matrix."""
        f = self.func
        Bf = B if callable(B) else (lambda lam, B=np.asarray(B, dtype=float): B)
        return OperatorPath(lambda lam: f(lam) + eps * Bf(lam), self.a, self.b, None, grid=self.grid)

    def scale(self):
        """Largest |eigenvalue| at the endpoints (sets the invertibility threshold)."""
        if getattr(self, "_scale", None) is None:
            self._scale = self._endpoint_scale()
        return self._scale

    def _endpoint_scale(self):
        return max(np.max(np.abs(np.linalg.eigvalsh(self.matrix(self.a)))),
                   np.max(np.abs(np.linalg.eigvalsh(self.matrix(self.b)))), 1e-300)


def finite_difference_derivative(f, lam, h=None):
    """Central difference with one Richardson extrapolation step."""
    if h is None:
        h = max(1e-6, 1e-6 * abs(lam))
    d1 = (f(lam + h) - f(lam - h)) / (2 * h)
    d2 = (f(lam + h / 2) - f(lam - h / 2)) / h
    D = (4 * d2 - d1) / 3
    return 0.5 * (D + D.T)


@dataclass
class CrossingReport:
    lam: float
    kernel_basis: np.ndarray
    form: np.ndarray
    signature: int
    nondegenerate: bool

    @property
    def kernel_dim(self):
        return self.kernel_basis.shape[1]

    def as_dict(self):
        return {
            "lambda": float(self.lam),
            "kernel_dim": int(self.kernel_dim),
            "crossing_form": np.asarray(self.form).tolist(),
            "signature": int(self.signature),
            "nondegenerate": bool(self.nondegenerate),
        }


@dataclass
class SpectralFlowResult:
    value: int
    method: str
    crossings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "value": int(self.value),
            "method": self.method,
            "crossings": [c.as_dict() for c in self.crossings],
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# Morse indices

def inv_threshold(path_or_scale, tol=None):
    tol = _tol.resolve(tol)
    s = path_or_scale.scale() if hasattr(path_or_scale, "scale") else float(path_or_scale)
    return tol.inv * s


def morse_index(A, tol=None, threshold=None):
    """Number of negative eigenvalues; :class:`SingularOperator` if any is ~0."""
    tol = _tol.resolve(tol)
    A = check_symmetric(A, tol)
    ev = np.linalg.eigvalsh(A)
    if threshold is None:
        threshold = tol.inv * max(1.0, float(np.max(np.abs(ev)))) if ev.size else 0.0
    if ev.size and np.min(np.abs(ev)) <= threshold:
        raise SingularOperator(f"eigenvalue {ev[np.argmin(np.abs(ev))]:.3e} within {threshold:.1e} of zero",
                               margin=float(np.min(np.abs(ev))))
    return int(np.sum(ev < 0))


def require_admissible(path, tol=None):
    tol = _tol.resolve(tol)
    thr = inv_threshold(path, tol)
    for lam in (path.a, path.b):
        ev = np.linalg.eigvalsh(path.matrix(lam))
        m = float(np.min(np.abs(ev)))
        if m <= thr:
            raise SingularEndpoint(f"A({lam}) is singular (min |eig| = {m:.3e})", where=lam, margin=m)
    return thr


def spectral_flow_morse(path, tol=None):
    tol = _tol.resolve(tol)
    thr = require_admissible(path, tol)
    ma = morse_index(path.matrix(path.a), tol, thr)
    mb = morse_index(path.matrix(path.b), tol, thr)
    return SpectralFlowResult(ma - mb, "morse", diagnostics={"morse_a": ma, "morse_b": mb})


def spectral_subspace(A, sign):
    ev, V = np.linalg.eigh(A)
    return V[:, ev < 0] if sign < 0 else V[:, ev > 0]


def relative_morse_index(Aa, Ab, tol=None):
    """dim(E-(Aa) ∩ E+(Ab)) - dim(E-(Ab) ∩ E+(Aa))."""
    tol = _tol.resolve(tol)
    Aa, Ab = check_symmetric(Aa, tol), check_symmetric(Ab, tol)
    morse_index(Aa, tol)
    morse_index(Ab, tol)
    d1 = intersection_dim(spectral_subspace(Aa, -1), spectral_subspace(Ab, +1), tol)
    d2 = intersection_dim(spectral_subspace(Ab, -1), spectral_subspace(Aa, +1), tol)
    return d1 - d2


# ---------------------------------------------------------------------------
# singular set and crossing forms

def _refine_grid(path, tol):
    """Grid fine enough that sorted eigenvalues change by less than a quarter
    of their distance to zero plus spacing between neighbours."""
    lams = list(path.grid)
    evs = [np.linalg.eigvalsh(path.matrix(x)) for x in lams]
    i = 0
    while i < len(lams) - 1:
        e0, e1 = evs[i], evs[i + 1]
        step = np.max(np.abs(e1 - e0))
        width = lams[i + 1] - lams[i]
        near = np.min(np.minimum(np.abs(e0), np.abs(e1)))
        if step > 0.25 * max(near, 1e-3 * path.scale()) and width > 1e-6 * (path.b - path.a):
            mid = 0.5 * (lams[i] + lams[i + 1])
            lams.insert(i + 1, mid)
            evs.insert(i + 1, np.linalg.eigvalsh(path.matrix(mid)))
            continue
        i += 1
    return np.array(lams), np.array(evs)


def _bisect_sorted(path, j, lo, hi, tol):
    slo = np.sign(np.linalg.eigvalsh(path.matrix(lo))[j])
    while hi - lo > tol.loc * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        em = np.linalg.eigvalsh(path.matrix(mid))[j]
        if em == 0.0:
            return mid
        if np.sign(em) == slo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_min(f, lo, hi, iters=80, width=0.0):
    a, b = lo, hi
    c = b - (b - a) * (1 - GOLDEN)
    d = a + (b - a) * (1 - GOLDEN)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= width:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * (1 - GOLDEN)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * (1 - GOLDEN)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def singular_set(path, tol=None, return_detail=False):
    """Parameters in (a, b) where A(λ) is singular.

    Each sorted eigenvalue branch is scanned for sign changes (then bisected to
    ``tol.loc``) and for tangential touches of zero (located by golden-section
    minimisation of its modulus).  Roots closer than ``10*tol.loc`` merge.
    """
    tol = _tol.resolve(tol)
    thr = require_admissible(path, tol)
    lams, evs = _refine_grid(path, tol)
    found = []  # (lambda, branch index)
    n = evs.shape[1]
    for j in range(n):
        e = evs[:, j]
        for i in range(len(lams) - 1):
            if e[i] == 0.0 and i > 0:
                found.append((lams[i], j))
                continue
            if np.sign(e[i]) * np.sign(e[i + 1]) < 0:
                found.append((_bisect_sorted(path, j, lams[i], lams[i + 1], tol), j))
        # tangential touches: interior local minima of |e| that are not sign changes
        ae = np.abs(e)
        for i in range(1, len(lams) - 1):
            if ae[i] <= ae[i - 1] and ae[i] <= ae[i + 1] and np.sign(e[i - 1]) == np.sign(e[i + 1]) == np.sign(e[i]):
                # a touch of zero needs a dip comparable to the neighbouring variation
                if ae[i] > thr + 4.0 * max(ae[i - 1] - ae[i], ae[i + 1] - ae[i]):
                    continue
                x, fx = _golden_min(lambda s: abs(np.linalg.eigvalsh(path.matrix(s))[j]),
                                    lams[i - 1], lams[i + 1], width=tol.loc * max(1.0, abs(lams[i])))
                if fx <= thr:
                    found.append((x, j))
    found.sort()
    merged = []
    for lam, j in found:
        if merged and lam - merged[-1][0][-1] <= 10 * tol.loc * max(1.0, abs(lam)):
            merged[-1][0].append(lam)
            merged[-1][1].add(j)
        else:
            merged.append(([lam], {j}))
    out = [(float(np.mean(ls)), sorted(js)) for ls, js in merged]
    # isolation: a singular interval shows up as a run of tiny eigenvalues on the grid
    small = np.min(np.abs(evs), axis=1) <= thr
    run = 0
    for flag in small:
        run = run + 1 if flag else 0
        if run >= 3:
            raise NonIsolatedSingularity("A(λ) is singular on a subinterval", margin=thr)
    out = [(lam, js) for lam, js in out if path.a + 10 * tol.loc < lam < path.b - 10 * tol.loc]
    if return_detail:
        return out
    return [lam for lam, _ in out]


def crossing_form(path, lam, tol=None, kernel_dim=None):
    """Crossing form Q(h) = <A'(λ*) h, h> on ker A(λ*)."""
    tol = _tol.resolve(tol)
    A = path.matrix(lam)
    ev, V = np.linalg.eigh(A)
    order = np.argsort(np.abs(ev))
    if kernel_dim is None:
        thr = max(inv_threshold(path, tol), 1e3 * tol.loc * np.linalg.norm(path.dmatrix(lam), 2))
        kernel_dim = max(1, int(np.sum(np.abs(ev) <= thr)))
    K = V[:, order[:kernel_dim]]
    Ad = path.dmatrix(lam)
    Q = K.T @ Ad @ K
    Q = 0.5 * (Q + Q.T)
    qe = np.linalg.eigvalsh(Q)
    scale = max(1.0, np.linalg.norm(Ad, 2))
    nondeg = bool(np.min(np.abs(qe)) > tol.nd * scale)
    sig = int(np.sum(qe > tol.nd * scale) - np.sum(qe < -tol.nd * scale))
    return CrossingReport(float(lam), K, Q, sig, nondeg)


def spectral_flow_crossings(path, tol=None):
    tol = _tol.resolve(tol)
    pts = singular_set(path, tol, return_detail=True)
    reports = [crossing_form(path, lam, tol, kernel_dim=len(js)) for lam, js in pts]
    for r in reports:
        if not r.nondegenerate:
            raise DegenerateCrossing(f"degenerate crossing at λ = {r.lam:.10g}", where=r.lam)
    return SpectralFlowResult(sum(r.signature for r in reports), "crossing", reports)


# ---------------------------------------------------------------------------
# Maslov route

def graph_path(path):
    from .grassmann import LagrangianPath

    return LagrangianPath(lambda lam: graph_lagrangian(path.matrix(lam)),
                          path.a, path.b, grid=_coarse(path.grid))


def spectral_flow_maslov(path, tol=None, isotropic=None):
    """Generalised Maslov index of the graph path relative to H_0.

    The graph path is reduced modulo I x {0}, I from :func:`common_isotropic`
    (or the supplied ``isotropic`` basis), and the relative Maslov index of the
    reduced path against F x {0} is returned.
    """
    from .grassmann import LagrangianPath, _lagrangian_gap, qr_frame, relative_maslov_index
    from .reduction import common_isotropic, h_isotropic, reduce_lagrangian, reduced_path_context
    from .symlin import transversality_margin

    tol = _tol.resolve(tol)
    require_admissible(path, tol)
    G = graph_path(path)
    n = path.n
    Ib = common_isotropic(G, tol, target=0.1) if isotropic is None else np.asarray(isotropic, dtype=float)
    ctx = reduced_path_context(Ib, n, tol)

    def reduced(lam):
        # the graph basis [I; A] needs no orthonormalisation before reduction
        return ctx.coords(reduce_lagrangian(ctx, qr_frame(np.vstack([np.eye(n), path.matrix(lam)])), tol))

    # ρ^I has Lipschitz constant ~ 1/margin(L, I x {0}); keeping the unreduced
    # travel of a step below margin/2 keeps the reduced travel below 1/2, so
    # the reduced line cannot turn through π unseen between samples
    I0 = h_isotropic(Ib, n)
    margins = {}

    def margin(t):
        if t not in margins:
            margins[t] = transversality_margin(G.frame(t), I0) if Ib.shape[1] else 1.0
        return margins[t]

    def step_ok(t0, t1):
        tm = 0.5 * (t0 + t1)
        mu = min(margin(t0), margin(tm), margin(t1))
        d = max(_lagrangian_gap(G.frame(t0), G.frame(tm)), _lagrangian_gap(G.frame(tm), G.frame(t1)))
        return d <= 0.5 * mu

    lp = LagrangianPath(reduced, path.a, path.b, grid=_coarse(path.grid))
    m = ctx.dim
    value = relative_maslov_index(lp, h0_frame(m), tol, step_ok=step_ok)
    return SpectralFlowResult(value, "maslov", diagnostics={"reduced_dim": int(m),
                                                             "isotropic_dim": int(Ib.shape[1])})


def _coarse(grid, k=41):
    if len(grid) <= k:
        return grid
    idx = np.unique(np.linspace(0, len(grid) - 1, k).round().astype(int))
    return grid[idx]


# ---------------------------------------------------------------------------
# brute-force oracle

def _clusters(ev, tol_abs):
    labels = np.zeros(len(ev), dtype=int)
    c = 0
    for i in range(1, len(ev)):
        if ev[i] - ev[i - 1] > tol_abs:
            c += 1
        labels[i] = c
    return labels


def _match(V0, e0, V1, e1, tol_abs):
    """Assignment of old branches to new eigenpairs and its confidence."""
    O = (V0.T @ V1) ** 2
    c0, c1 = _clusters(e0, tol_abs), _clusters(e1, tol_abs)
    S0 = np.eye(c0.max() + 1)[c0]          # eigenpair -> cluster indicator
    S1 = np.eye(c1.max() + 1)[c1]
    blocks = S0.T @ O @ S1 / np.minimum.outer(S0.sum(0), S1.sum(0))
    B = blocks[np.ix_(c0, c1)]
    rows, cols = linear_sum_assignment(-B)
    conf = float(np.min(B[rows, cols])) if len(rows) else 1.0
    perm = np.empty(len(cols), dtype=int)
    perm[rows] = cols
    return perm, conf


def eigenvalue_tracking_oracle(path, samples=400, tol=None, max_depth=14):
    """Signed count of zero crossings of continuously tracked eigen-branches."""
    tol = _tol.resolve(tol)
    require_admissible(path, tol)
    lams = np.linspace(path.a, path.b, int(samples))
    scale = path.scale()
    tol_abs = 1e-9 * scale

    def eig(x):
        return np.linalg.eigh(path.matrix(x))

    e_prev, V_prev = eig(lams[0])
    values = e_prev.copy()            # branch values, branch k lives at column perm_k
    sign_prev = np.sign(values)
    count = 0
    stack = []
    t_prev = lams[0]
    for t_next in lams[1:]:
        stack.append((t_next, 0))
        while stack:
            t1, depth = stack[-1]
            e1, V1 = eig(t1)
            gap = min(np.min(np.diff(e_prev), initial=np.inf), np.min(np.diff(e1), initial=np.inf))
            if np.max(np.abs(e1 - e_prev)) < 0.5 * gap:
                # Weyl: sorted order is the only consistent pairing
                perm, conf = np.arange(len(e1)), 1.0
            else:
                perm, conf = _match(V_prev, e_prev, V1, e1, tol_abs)
            if conf < 0.5:
                if depth >= max_depth:
                    raise BranchAmbiguity("eigen-branches cannot be matched", where=(t_prev, t1))
                stack.append((t_prev + GOLDEN * (t1 - t_prev), depth + 1))
                continue
            stack.pop()
            new_vals = e1[perm]
            s_new = np.sign(np.where(np.abs(new_vals) <= 1e-14 * scale, 0.0, new_vals))
            for k in range(len(new_vals)):
                if s_new[k] == 0:
                    continue
                if sign_prev[k] < 0 < s_new[k]:
                    count += 1
                elif sign_prev[k] > 0 > s_new[k]:
                    count -= 1
                sign_prev[k] = s_new[k]
            # reorder so column k of V_prev is branch k
            inv = perm
            e_prev, V_prev = e1[inv], V1[:, inv]
            # keep e_prev sorted-compatible for clustering
            order = np.argsort(e_prev, kind="stable")
            e_prev, V_prev = e_prev[order], V_prev[:, order]
            sign_prev = sign_prev[order]
            t_prev = t1
    return count
