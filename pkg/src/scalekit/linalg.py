"""Small Hermitian linear-algebra helpers shared by the operator code."""
from __future__ import annotations

import numpy as np

from .config import SingularMarginalError

EIG_FLOOR = 1e-14


def hermitize(X):
    X = np.asarray(X)
    return 0.5 * (X + X.conj().T)


def _eigh_checked(X, what, iteration=None):
    w, V = np.linalg.eigh(hermitize(X))
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] <= EIG_FLOOR * scale:
        raise SingularMarginalError(
            f"{what}: smallest eigenvalue {w[0]:.3e} is below the floor", iteration
        )
    return w, V


def herm_power(X, p, what="matrix", iteration=None):
    """X**p for a positive definite Hermitian X (eigenvalues are never clamped)."""
    w, V = _eigh_checked(X, what, iteration)
    return (V * w**p) @ V.conj().T


def herm_sqrt(X, what="matrix", iteration=None):
    return herm_power(X, 0.5, what, iteration)


def herm_inv_sqrt(X, what="matrix", iteration=None):
    return herm_power(X, -0.5, what, iteration)


def herm_inv(X, what="matrix", iteration=None):
    return herm_power(X, -1.0, what, iteration)


def herm_expm(H):
    w, V = np.linalg.eigh(hermitize(H))
    return (V * np.exp(w)) @ V.conj().T


def is_pd(X, tol=1e-12):
    w = np.linalg.eigvalsh(hermitize(X))
    return bool(w[0] > tol * max(1.0, abs(w[-1])))


def geometric_mean(A, B):
    """Matrix geometric mean A # B of two positive definite matrices."""
    a_half = herm_sqrt(A, "geometric mean")
    a_ihalf = herm_inv_sqrt(A, "geometric mean")
    return a_half @ herm_sqrt(a_ihalf @ B @ a_ihalf, "geometric mean") @ a_half


def haar_unitary(n, rng):
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_pd(n, rng, complex_=True):
    G = rng.standard_normal((n, n))
    if complex_:
        G = G + 1j * rng.standard_normal((n, n))
    return hermitize(G @ G.conj().T + 0.1 * np.eye(n))
