"""Hilbert's projective metric on the positive orthant and on the cone of
positive definite matrices, plus Birkhoff's contraction bound."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from .linalg import hermitize, random_pd

POS_TOL = 1e-12


class Cone(str, enum.Enum):
    ORTHANT = "orthant"
    PSD = "psd"


@dataclass(frozen=True)
class ConePoint:
    cone: Cone
    payload: np.ndarray

    @classmethod
    def orthant(cls, v):
        v = np.asarray(v, dtype=float).ravel()
        if np.any(v <= 0):
            raise ValueError("orthant points must be strictly positive")
        return cls(Cone.ORTHANT, v)

    @classmethod
    def psd(cls, M):
        M = hermitize(np.asarray(M))
        w = np.linalg.eigvalsh(M)
        if w[0] <= POS_TOL * max(1.0, abs(w[-1])):
            raise ValueError("PSD cone points must be positive definite")
        return cls(Cone.PSD, M)


def _as_point(p):
    if isinstance(p, ConePoint):
        return p.cone, p.payload
    p = np.asarray(p)
    return (Cone.ORTHANT if p.ndim == 1 else Cone.PSD), p


def _orthant_distance(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p <= 0) or np.any(q <= 0):
        return float("inf")
    ratio = np.log(p) - np.log(q)
    return float(ratio.max() - ratio.min())


def relative_spectrum(P, Q):
    """Eigenvalues of Q^{-1/2} P Q^{-1/2}, via the Cholesky factor of Q."""
    L = np.linalg.cholesky(hermitize(Q))
    X = solve_triangular(L, hermitize(P), lower=True)
    M = solve_triangular(L, X.conj().T, lower=True)
    return np.linalg.eigvalsh(hermitize(M))


def _psd_distance(P, Q):
    try:
        w = relative_spectrum(P, Q)
    except np.linalg.LinAlgError:
        return float("inf")
    if w[0] <= POS_TOL * max(1.0, abs(w[-1])):
        return float("inf")
    return float(np.log(w[-1]) - np.log(w[0]))


def hilbert_distance(p, q):
    """d_H(p, q) = ln(max(p/q) / min(p/q)); +inf on the cone boundary.

    Accepts ConePoints, 1-D arrays (orthant) or 2-D arrays (PSD cone).
    """
    cp, a = _as_point(p)
    cq, b = _as_point(q)
    if cp != cq:
        raise ValueError(f"cone mismatch: {cp.value} vs {cq.value}")
    if np.shape(a) != np.shape(b):
        raise ValueError("dimension mismatch")
    if cp == Cone.ORTHANT:
        return _orthant_distance(a, b)
    return _psd_distance(a, b)


def projective_diameter(A):
    """Delta(A) = max ln(A_ik A_jl / (A_jk A_il)); +inf if A has a zero."""
    A = np.asarray(A, dtype=float)
    if np.any(A <= 0):
        return float("inf")
    L = np.log(A)
    # for a row pair (i, j) the best column pair gives max - min of L_i - L_j
    diff = L[:, None, :] - L[None, :, :]
    return float((diff.max(axis=2) - diff.min(axis=2)).max())


class ContractionReport(NamedTuple):
    measured_sup_ratio: float
    birkhoff_bound: float
    delta: float


def _is_operator(f):
    return hasattr(f, "apply") and hasattr(f, "n")


def _sample_rank_one(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return np.outer(v, v.conj())


def sampled_operator_diameter(E, samples, rng, refine=4):
    """Lower estimate of sup d_H(E(P), E(Q)).

    The supremum is reached on rank-one P, Q, so pairs of random rank-one
    projectors are sampled and the best few are then polished by a local
    search over the two vectors.
    """
    n = E.n

    def dist(z):
        u = z[:n] + 1j * z[n:2 * n]
        v = z[2 * n:3 * n] + 1j * z[3 * n:]
        d = hilbert_distance(E.apply(np.outer(u, u.conj())), E.apply(np.outer(v, v.conj())))
        return d if np.isfinite(d) else 1e6

    scored = []
    for _ in range(samples):
        z = rng.standard_normal(4 * n)
        scored.append((dist(z), z))
    scored.sort(key=lambda t: -t[0])
    best = scored[0][0] if scored else 0.0
    for d0, z in scored[:refine]:
        res = minimize(lambda w: -dist(w), z, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = max(best, -res.fun)
    return best


def contraction_report(f, samples=1000, seed=0):
    """Largest observed d_H(f(x), f(y)) / d_H(x, y) next to tanh(Delta/4).

    ``f`` is a positive matrix (orthant) or a positive map exposing
    ``apply`` and ``n`` (PSD cone). For a matrix Delta is exact; for a map it
    is sampled and so only a lower estimate.
    """
    rng = np.random.default_rng(seed)
    ratio = 0.0
    if _is_operator(f):
        delta = sampled_operator_diameter(f, samples, rng)
        for _ in range(samples):
            X, Y = random_pd(f.n, rng), random_pd(f.n, rng)
            dxy = hilbert_distance(X, Y)
            if dxy > 0:
                ratio = max(ratio, hilbert_distance(f.apply(X), f.apply(Y)) / dxy)
    else:
        A = np.asarray(f, dtype=float)
        if np.any(A <= 0):
            raise ValueError("contraction report needs a strictly positive matrix")
        delta = projective_diameter(A)
        n = A.shape[1]
        for _ in range(samples):
            s = rng.uniform(0.05, 4.0)
            x = np.exp(s * rng.standard_normal(n))
            y = np.exp(s * rng.standard_normal(n))
            dxy = hilbert_distance(x, y)
            if dxy > 0:
                ratio = max(ratio, hilbert_distance(A @ x, A @ y) / dxy)
    return ContractionReport(ratio, float(np.tanh(delta / 4)), delta)
