import numpy as np
import pytest
from scipy.linalg import expm

from sfmaslov.spectral import OperatorPath


def sym(G):
    return 0.5 * (G + G.T)


def random_poly_path(rng, n, degree=2, a=-1.0, b=1.0, scale=1.0):
    """λ ↦ Σ λ^j C_j with GOE coefficients; C¹ with an analytic derivative."""
    C = [scale * sym(rng.standard_normal((n, n))) for _ in range(degree + 1)]

    def A(lam):
        return sum(Cj * lam ** j for j, Cj in enumerate(C))

    def dA(lam):
        return sum(j * Cj * lam ** (j - 1) for j, Cj in enumerate(C) if j)

    path = OperatorPath(A, a, b, derivative=dA)
    path.coefs = C
    return path


def admissible(path, margin=1e-3):
    for lam in (path.a, path.b):
        if np.min(np.abs(np.linalg.eigvalsh(path.matrix(lam)))) < margin:
            return False
    return True


def random_admissible_path(rng, n, degree=2):
    while True:
        p = random_poly_path(rng, n, degree)
        if admissible(p):
            return p


def morse_count(A):
    """Independent Morse index: plain eigenvalue count."""
    return int(np.sum(np.linalg.eigvalsh(A) < 0))


def single_crossing_path(rng, n, signs, spread=1.0):
    """Path with exactly one crossing at 0 whose crossing form is diag(signs·c).

    A(λ) = R(λ) B(λ) R(λ)ᵀ with R(λ) = exp(λS) Q, S skew.  Conjugation adds
    [B(0), S] to the derivative, which vanishes on ker B(0), so the crossing
    form is exactly the prescribed diagonal.
    """
    m = len(signs)
    c = rng.uniform(0.5, 2.0, size=m) * np.asarray(signs, dtype=float)
    rest = rng.choice([-1.0, 1.0], size=n - m) * rng.uniform(1.0, 3.0, size=n - m)
    S = rng.standard_normal((n, n))
    S = spread * (S - S.T) / 2
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))

    def B(lam):
        return np.diag(np.concatenate([c * lam, rest]))

    def A(lam):
        R = expm(lam * S) @ Q
        return sym(R @ B(lam) @ R.T)

    return OperatorPath(A, -0.5, 0.5), int(np.sum(np.sign(c)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
