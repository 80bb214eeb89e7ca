"""
Bifurcation from the trivial branch of f(λ, u) = A_λ u + F(λ, u) = 0.

Candidates are the singular points of the linearisation; a nondegenerate
crossing with nonzero signature is a certified bifurcation point, and the
spectral flow over the interval bounds the number of bifurcation points from
below.  :func:`branch_verify` produces a numerical witness: solutions with
prescribed small amplitude along the kernel, converging to (λ*, 0).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _tol
from .exceptions import DegenerateCrossing, NewtonDiverged
from .spectral import (
    OperatorPath,
    crossing_form,
    finite_difference_derivative,
    singular_set,
    spectral_flow_crossings,
    spectral_flow_maslov,
)


# ---------------------------------------------------------------------------
# nonlinearities

def named_nonlinearity(name, coef=1.0):
    """(F, D_uF, potential) for ``cubic`` (coef·u³), ``quintic`` (coef·u⁵) or ``none``."""
    if name == "cubic":
        return (lambda lam, u: coef * u ** 3,
                lambda lam, u: np.diag(3 * coef * u ** 2),
                lambda lam, u: coef * np.sum(u ** 4) / 4)
    if name == "quintic":
        return (lambda lam, u: coef * u ** 5,
                lambda lam, u: np.diag(5 * coef * u ** 4),
                lambda lam, u: coef * np.sum(u ** 6) / 6)
    if name == "none":
        return (lambda lam, u: np.zeros_like(u),
                lambda lam, u: np.zeros((u.size, u.size)),
                lambda lam, u: 0.0)
    raise ValueError(f"unknown nonlinearity {name!r}")


@dataclass
class VariationalFamily:
    """f(λ, u) = A_λ u + F(λ, u) with F(λ, 0) = 0 and D_uF(λ, 0) = 0.

    Parameters
    ----------
    linear_path : OperatorPath
        Linearisation along the trivial branch.
    nonlinearity : callable
        ``(λ, u) -> n-vector``.
    jacobian : callable, optional
        ``(λ, u) -> D_uF``; finite differences otherwise.
    potential : callable, optional
        ψ with ∇_u ψ = F.
    """

    linear_path: OperatorPath
    nonlinearity: Callable
    jacobian: Optional[Callable] = None
    potential: Optional[Callable] = None
    tag: str = "custom"

    @classmethod
    def named(cls, path, name="cubic", coef=1.0):
        F, DF, psi = named_nonlinearity(name, coef)
        return cls(path, F, DF, psi, tag=f"{name}:{coef:g}")

    @property
    def n(self):
        return self.linear_path.n

    def F(self, lam, u):
        return np.asarray(self.nonlinearity(lam, u), dtype=float)

    def DF(self, lam, u):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(lam, u), dtype=float)
        return _fd_jacobian(lambda v: self.F(lam, v), u)

    def residual(self, lam, u):
        return self.linear_path.matrix(lam) @ u + self.F(lam, u)

    def check_contract(self, rng=None, samples=20):
        """Spot-check F(λ,0) = 0, D_uF(λ,0) = 0 and the gradient structure.

        Returns a dict of the worst observed defects; raises ``ValueError``
        when a contract is violated.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        p = self.linear_path
        n = self.n
        worst = {"F0": 0.0, "DF0": 0.0, "gradient": 0.0, "hessian_symmetry": 0.0}
        for lam in rng.uniform(p.a, p.b, samples):
            z = np.zeros(n)
            worst["F0"] = max(worst["F0"], float(np.linalg.norm(self.F(lam, z))))
            D0 = _fd_jacobian(lambda v: self.F(lam, v), z)
            worst["DF0"] = max(worst["DF0"], float(np.linalg.norm(D0)))
            if self.potential is not None:
                u, v = rng.standard_normal(n) * 0.3, rng.standard_normal(n)
                h = 1e-5
                dpsi = (self.potential(lam, u + h * v) - self.potential(lam, u - h * v)) / (2 * h)
                worst["gradient"] = max(worst["gradient"], abs(dpsi - self.F(lam, u) @ v)
                                        / max(1.0, abs(dpsi)))
                Ju = _fd_jacobian(lambda w: self.F(lam, w), u)
                worst["hessian_symmetry"] = max(worst["hessian_symmetry"],
                                                float(np.max(np.abs(Ju - Ju.T))))
        if worst["F0"] >= 1e-12:
            raise ValueError(f"F(λ, 0) ≠ 0 (norm {worst['F0']:.2e})")
        if worst["DF0"] >= 1e-6:
            raise ValueError(f"D_uF(λ, 0) ≠ 0 (norm {worst['DF0']:.2e})")
        if self.potential is not None and (worst["gradient"] >= 1e-6 or worst["hessian_symmetry"] >= 1e-5):
            raise ValueError("nonlinearity is not the gradient of the declared potential")
        return worst


def _fd_jacobian(f, u, h=1e-7):
    n = u.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (f(u + e) - f(u - e)) / (2 * h)
    return J


# ---------------------------------------------------------------------------
# Sturm-Liouville

def sturm_liouville_matrix(N, length, potential=None):
    """Dirichlet 3-point discretisation of -u'' + V u on (0, length)."""
    if N < 3:
        raise ValueError("N must be at least 3")
    h = length / (N + 1)
    x = h * np.arange(1, N + 1)
    A = (2 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)) / h ** 2
    if potential is not None:
        A = A + np.diag(np.asarray(potential(x), dtype=float) * np.ones(N))
    return A, x


def discretize_sturm_liouville(N, length, potential=None, interval=(0.5, 9.5), n_grid=401):
    """OperatorPath λ ↦ A - λ Id for the discretised Sturm-Liouville operator."""
    A, x = sturm_liouville_matrix(N, length, potential)
    I = np.eye(N)
    path = OperatorPath(lambda lam: A - lam * I, interval[0], interval[1],
                        derivative=lambda lam: -I, n_grid=n_grid)
    path.base_matrix = A
    path.nodes = x
    return path


# ---------------------------------------------------------------------------
# candidates and counting bound

@dataclass
class Candidate:
    lam: float
    kernel_dim: int
    signature: int
    certified: bool
    kernel_basis: np.ndarray = field(repr=False, default=None)

    def as_dict(self):
        return {"lambda": float(self.lam), "kernel_dim": int(self.kernel_dim),
                "signature": int(self.signature), "certified": bool(self.certified)}


@dataclass
class BranchRecord:
    lam_star: float
    verified: bool
    samples: list = field(default_factory=list)       # (λ, ‖u‖, residual, ε)
    exponent: float = float("nan")
    reason: str = ""

    def as_dict(self):
        return {"lambda_star": float(self.lam_star), "verified": bool(self.verified),
                "samples": [{"lambda": float(l), "norm_u": float(nu), "residual": float(r),
                             "epsilon": float(e)} for l, nu, r, e in self.samples],
                "exponent": None if not np.isfinite(self.exponent) else float(self.exponent),
                "reason": self.reason}


@dataclass
class BifurcationReport:
    candidates: list
    total_sf: int
    sf_method: str
    guaranteed_count: int
    verified_branches: list = field(default_factory=list)

    @property
    def certified(self):
        return [c for c in self.candidates if c.certified]

    def as_dict(self):
        return {"candidates": [c.as_dict() for c in self.candidates],
                "total_sf": int(self.total_sf), "sf_method": self.sf_method,
                "guaranteed_count": int(self.guaranteed_count),
                "verified_branches": [b.as_dict() for b in self.verified_branches]}


def counting_bound(total_sf, max_kernel_dim):
    """floor(|sf| / m); zero when there are no singular points."""
    if max_kernel_dim <= 0:
        return 0
    return abs(int(total_sf)) // int(max_kernel_dim)


def detect_candidates(fam, tol=None):
    """Singular points with their crossing data, total sf and counting bound."""
    tol = _tol.resolve(tol)
    path = fam.linear_path
    pts = singular_set(path, tol, return_detail=True)
    cands = []
    for lam, js in pts:
        rep = crossing_form(path, lam, tol, kernel_dim=len(js))
        cert = rep.nondegenerate and rep.signature != 0
        cands.append(Candidate(lam, rep.kernel_dim, rep.signature, cert, rep.kernel_basis))
    try:
        res = spectral_flow_crossings(path, tol)
    except DegenerateCrossing:
        res = spectral_flow_maslov(path, tol)
    m = max((c.kernel_dim for c in cands), default=0)
    bound = counting_bound(res.value, m)
    if all(c.certified or c.signature == 0 for c in cands):
        # nondegenerate regime: each certified point is a bifurcation point
        assert len([c for c in cands if c.certified]) >= bound
    return BifurcationReport(cands, res.value, res.method, bound)


# ---------------------------------------------------------------------------
# branch verification

def refine_singular_point(path, lam, iters=8):
    """Newton on the eigenvalue of A_λ closest to zero."""
    for _ in range(iters):
        ev, V = np.linalg.eigh(path.matrix(lam))
        j = int(np.argmin(np.abs(ev)))
        v = V[:, j]
        slope = v @ path.dmatrix(lam) @ v
        if slope == 0:
            break
        step = ev[j] / slope
        lam = lam - step
        if abs(step) < 1e-15 * max(1.0, abs(lam)):
            break
    return lam


def _d_lambda(fam, lam, u):
    dA = fam.linear_path.dmatrix(lam)
    h = 1e-6 * max(1.0, abs(lam))
    dF = (fam.F(lam + h, u) - fam.F(lam - h, u)) / (2 * h)
    return dA @ u + dF


def _newton(fam, lam, u, phi, eps, max_iter, res_tol):
    n = u.size

    def G(lam, u):
        return np.concatenate([fam.residual(lam, u), [u @ phi - eps]])

    g = G(lam, u)
    for _ in range(max_iter):
        if np.linalg.norm(g[:n]) < res_tol and abs(g[n]) < res_tol:
            return lam, u
        Jm = np.zeros((n + 1, n + 1))
        Jm[:n, :n] = fam.linear_path.matrix(lam) + fam.DF(lam, u)
        Jm[:n, n] = _d_lambda(fam, lam, u)
        Jm[n, :n] = phi
        try:
            step = np.linalg.solve(Jm, -g)
        except np.linalg.LinAlgError:
            raise NewtonDiverged("singular bordered Jacobian", where=lam) from None
        t = 1.0
        g0 = np.linalg.norm(g)
        while True:
            lt, ut = lam + t * step[n], u + t * step[:n]
            gt = G(lt, ut)
            if np.linalg.norm(gt) <= (1 - 1e-4 * t) * g0 or t < 1e-8:
                break
            t *= 0.5
        if t < 1e-8:
            raise NewtonDiverged("line search failed", where=lam, margin=g0)
        lam, u, g = lt, ut, gt
    if np.linalg.norm(g[:n]) < res_tol and abs(g[n]) < res_tol:
        return lam, u
    raise NewtonDiverged("no convergence", where=lam, margin=float(np.linalg.norm(g)))


def branch_verify(fam, lam_star, kernel_dir, eps0=None, rungs=8, max_iter=50, res_tol=1e-10):
    """Numerical witness of a branch bifurcating from (λ*, 0).

    Solves f(λ, u) = 0, ⟨u, φ⟩ = ε_j for ε_j = ε₀ 2^{-j}, j = 0..rungs, by
    damped Newton seeded from the first-order predictor.  The branch is
    verified when every rung converges with a nonzero solution, |λ_j - λ*|
    decreases along the ladder and the last rung is close to λ*.
    """
    path = fam.linear_path
    phi = np.asarray(kernel_dir, dtype=float).ravel()
    phi = phi / np.linalg.norm(phi)
    if eps0 is None:
        eps0 = 0.1
    lam_star = float(lam_star)
    ev = np.linalg.eigvalsh(path.matrix(lam_star))
    if np.min(np.abs(ev)) > 1e-6 * max(1.0, float(np.max(np.abs(ev)))):
        # implicit function theorem regime: only u = 0 near (λ*, 0)
        return BranchRecord(lam_star, False, reason="A_λ* is invertible")
    lam_star = refine_singular_point(path, lam_star)
    Adot = phi @ path.dmatrix(lam_star) @ phi
    rec = BranchRecord(lam_star, False)
    dists = []
    for j in range(rungs + 1):
        eps = eps0 * 2.0 ** (-j)
        u0 = eps * phi
        lam0 = lam_star - (fam.F(lam_star, u0) @ phi) / (eps * Adot) if Adot != 0 else lam_star
        try:
            lam, u = _newton(fam, lam0, u0, phi, eps, max_iter, res_tol)
        except NewtonDiverged as exc:
            rec.reason = f"rung {j}: {exc}"
            return rec
        nu = float(np.linalg.norm(u))
        r = float(np.linalg.norm(fam.residual(lam, u)))
        rec.samples.append((lam, nu, r, eps))
        dists.append(abs(lam - lam_star))
        if nu == 0.0:
            rec.reason = f"rung {j}: trivial solution"
            return rec
    d = np.array(dists)
    if np.any(np.diff(d) >= 0):
        rec.reason = "λ_j does not approach λ* monotonically"
        return rec
    if d[-1] > 1e-3 * max(1.0, abs(lam_star)):
        rec.reason = "branch does not return to λ*"
        return rec
    nus = np.array([s[1] for s in rec.samples])
    if np.all(d > 0):
        rec.exponent = float(np.polyfit(np.log(d), np.log(nus), 1)[0])
    rec.verified = True
    return rec


def analyze(fam, tol=None, verify=True, **kw):
    """detect_candidates plus branch verification of simple certified points."""
    rep = detect_candidates(fam, tol)
    if verify:
        for c in rep.candidates:
            if c.certified and c.kernel_dim == 1:
                rep.verified_branches.append(branch_verify(fam, c.lam, c.kernel_basis[:, 0], **kw))
    return rep


def sturm_liouville_family(N=200, length=np.pi, interval=(0.5, 9.5), nonlinearity="cubic",
                           coef=1.0, potential=None):
    path = discretize_sturm_liouville(N, length, potential, interval)
    return VariationalFamily.named(path, nonlinearity, coef)


def discrete_dirichlet_eigenvalues(N, length):
    """Closed-form eigenvalues (2/h²)(1 - cos(kπ/(N+1))) of the discrete Laplacian."""
    h = length / (N + 1)
    k = np.arange(1, N + 1)
    return 2 / h ** 2 * (1 - np.cos(k * np.pi / (N + 1)))


__all__ = [
    "VariationalFamily", "BifurcationReport", "Candidate", "BranchRecord",
    "named_nonlinearity", "discretize_sturm_liouville", "sturm_liouville_matrix",
    "sturm_liouville_family", "discrete_dirichlet_eigenvalues", "detect_candidates",
    "counting_bound", "branch_verify", "refine_singular_point", "analyze",
    "finite_difference_derivative",
]
