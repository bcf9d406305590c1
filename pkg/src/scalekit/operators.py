"""Positive maps on n x n complex matrices and their scaling.

A map is stored as an action tensor T with E(X)_kl = sum_ij T[k,l,i,j] X_ij.
Flattening T gives the superoperator acting on row-major vec(X), which is
what the heavy lifting uses. Kraus operators and Choi matrices are converted
into this single representation.

Scaling convention: E'(Z) = Y E(X Z X^H) Y^H.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import DimensionError, SingularMarginalError, SolverConfig, Status
from .linalg import (geometric_mean, hermitize, herm_inv, herm_inv_sqrt, herm_sqrt,
                     is_pd, random_pd)


def as_hermitian(X, tol=1e-12):
    """Validate near-Hermitian input and return its Hermitian part."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    if np.abs(X - X.conj().T).max(initial=0.0) > tol * max(1.0, np.abs(X).max(initial=0.0)):
        raise ValueError("matrix is not Hermitian")
    return hermitize(X)


@dataclass(frozen=True)
class PositiveMapRep:
    tensor: np.ndarray
    provenance: str = "raw"

    @property
    def n(self):
        return self.tensor.shape[0]

    @property
    def superop(self):
        n = self.n
        return self.tensor.reshape(n * n, n * n)

    @classmethod
    def from_superop(cls, S, provenance="raw"):
        n = int(round(np.sqrt(S.shape[0])))
        return cls(np.asarray(S, dtype=complex).reshape(n, n, n, n), provenance)

    @classmethod
    def from_tensor(cls, T):
        T = np.asarray(T, dtype=complex)
        if T.ndim != 4 or len(set(T.shape)) != 1:
            raise DimensionError(f"action tensor must be n x n x n x n, got {T.shape}")
        return cls(T, "raw")

    @classmethod
    def from_kraus(cls, ops):
        K = np.asarray(ops, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[1] != K.shape[2]:
            raise DimensionError(f"Kraus operators must be square, got shape {K.shape}")
        T = np.einsum("aki,alj->klij", K, K.conj())
        return cls(T, "kraus")

    @classmethod
    def from_choi(cls, J):
        """Unnormalised Choi matrix J = sum_ij E_ij (x) E(E_ij)."""
        J = np.asarray(J, dtype=complex)
        n = int(round(np.sqrt(J.shape[0])))
        if J.ndim != 2 or J.shape != (n * n, n * n):
            raise DimensionError(f"Choi matrix must be n^2 x n^2, got {J.shape}")
        return cls(J.reshape(n, n, n, n).transpose(1, 3, 0, 2).copy(), "choi")

    @classmethod
    def identity(cls, n):
        return cls.from_kraus([np.eye(n)])

    @classmethod
    def depolarizing(cls, n):
        """E(X) = tr(X) I / n."""
        T = np.zeros((n, n, n, n), dtype=complex)
        for k in range(n):
            for i in range(n):
                T[k, k, i, i] = 1.0 / n
        return cls(T, "raw")

    def to_choi(self):
        n = self.n
        return self.tensor.transpose(2, 0, 3, 1).reshape(n * n, n * n)

    def choi_state(self):
        """(id (x) E)(omega) with omega the maximally entangled state."""
        return self.to_choi() / self.n

    def adjoint(self):
        return PositiveMapRep.from_superop(self.superop.conj().T)

    def apply(self, X):
        X = np.asarray(X)
        if X.shape != (self.n, self.n):
            raise DimensionError(f"input is {X.shape}, map acts on {self.n}x{self.n}")
        return (self.superop @ X.reshape(-1)).reshape(self.n, self.n)

    def apply_adjoint(self, Z):
        Z = np.asarray(Z)
        if Z.shape != (self.n, self.n):
            raise DimensionError(f"input is {Z.shape}, map acts on {self.n}x{self.n}")
        return (self.superop.conj().T @ Z.reshape(-1)).reshape(self.n, self.n)

    def scaled(self, X, Y):
        """Z -> Y E(X Z X^H) Y^H."""
        X = np.asarray(X, dtype=complex)
        Y = np.asarray(Y, dtype=complex)
        S = np.kron(Y, Y.conj()) @ self.superop @ np.kron(X, X.conj())
        return PositiveMapRep.from_superop(S)

    def is_hermiticity_preserving(self, tol=1e-12):
        T = self.tensor
        return bool(np.abs(T - T.transpose(1, 0, 3, 2).conj()).max() <= tol * max(1.0, np.abs(T).max()))


def apply_map(E, X, side="primal"):
    if side == "primal":
        return E.apply(X)
    if side == "adjoint":
        return E.apply_adjoint(X)
    raise ValueError(f"side must be 'primal' or 'adjoint', got {side!r}")


def superop_distance(E, F):
    """Operator 2-norm of the difference of the superoperators."""
    return float(np.linalg.norm(E.superop - F.superop, 2))


def ds_error(E):
    """tr((E(I) - I)^2) + tr((E*(I) - I)^2)."""
    I = np.eye(E.n)
    a = E.apply(I) - I
    b = E.apply_adjoint(I) - I
    return float(np.real(np.trace(a @ a) + np.trace(b @ b)))


@dataclass
class OperatorScalingResult:
    X: np.ndarray
    Y: np.ndarray
    E_scaled: PositiveMapRep
    ds_history: List[float]
    status: Status
    iterations: int
    base: PositiveMapRep
    notes: List[str] = field(default_factory=list)

    def canonical(self):
        """Same scaling with positive definite factors.

        Writing X = P U and Y = V |Y| (polar forms), the scaled map equals
        V E_pd(U . U^H) V^H with E_pd(Z) = |Y| E(P Z P) |Y|. E_pd is the
        gauge-free representative compared across solvers.
        """
        P = herm_sqrt(self.X @ self.X.conj().T, "X X^H")
        Q = herm_sqrt(self.Y.conj().T @ self.Y, "Y^H Y")
        return P, Q, self.base.scaled(P, Q)


def _check_marginals(E, iteration):
    I = np.eye(E.n)
    for what, M in (("E(I)", E.apply(I)), ("E*(I)", E.apply_adjoint(I))):
        if not is_pd(M):
            raise SingularMarginalError(
                f"{what} is singular at iteration {iteration}; the map is not rank non-decreasing",
                iteration)


def sinkhorn_steps(E):
    """Operator RAS. Yields (k, X, Y, rho, sigma) where rho = E_{k-1}(I) and
    sigma = E_k'^*(I) are the marginals normalised away in iteration k and
    the scaled map after it is E.scaled(X, Y). Inverse square roots make
    the odd steps unital and the even steps trace preserving."""
    n = E.n
    X = np.eye(n, dtype=complex)
    Y = np.eye(n, dtype=complex)
    I = np.eye(n)
    k = 0
    while True:
        k += 1
        rho = E.scaled(X, Y).apply(I)
        Y = herm_inv_sqrt(rho, "E(I)", k) @ Y
        sigma = E.scaled(X, Y).apply_adjoint(I)
        X = X @ herm_inv_sqrt(sigma, "E*(I)", k)
        yield k, X, Y, rho, sigma


def operator_sinkhorn(E, cfg=SolverConfig()):
    _check_marginals(E, 0)
    n = E.n
    X = np.eye(n, dtype=complex)
    Y = np.eye(n, dtype=complex)
    cur = E
    hist = [ds_error(E)]
    target = cfg.tol**2
    status = Status.CONVERGED if hist[0] <= target else Status.MAX_ITERS
    k = 0
    if status != Status.CONVERGED:
        for k, X, Y, _, _ in sinkhorn_steps(E):
            cur = E.scaled(X, Y)
            hist.append(ds_error(cur))
            if hist[-1] <= target:
                status = Status.CONVERGED
                break
            if k >= cfg.max_iters:
                break
    return OperatorScalingResult(X, Y, cur, hist, status, k, E)


def _probe_pd_preserving(E, rng, samples=8):
    I = np.eye(E.n)
    if not (is_pd(E.apply(I)) and is_pd(E.apply_adjoint(I))):
        return False
    return all(is_pd(E.apply(random_pd(E.n, rng))) for _ in range(samples))


def menon_pos_scale(E, cfg=SolverConfig(), seed=0):
    """Iterate rho <- T(rho) / tr T(rho) with T = inv o E* o inv o E from
    rho = I/n, then X = rho^{1/2}, Y = E(rho)^{-1/2}."""
    if not _probe_pd_preserving(E, np.random.default_rng(seed)):
        raise SingularMarginalError("E or E* does not map positive definite inputs to positive definite outputs", 0)
    n = E.n
    rho = np.eye(n, dtype=complex) / n
    target = cfg.tol**2
    hist = []
    status = Status.MAX_ITERS
    k = 0
    while True:
        sigma = E.apply(rho)
        X = herm_sqrt(rho, "rho", k)
        Y = herm_inv_sqrt(sigma, "E(rho)", k)
        cur = E.scaled(X, Y)
        hist.append(ds_error(cur))
        if hist[-1] <= target:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            break
        T = herm_inv(E.apply_adjoint(herm_inv(sigma, "E(rho)", k)), "E*(E(rho)^-1)", k)
        rho = hermitize(T / np.real(np.trace(T)))
        k += 1
    return OperatorScalingResult(X, Y, cur, hist, status, k, E)


def is_positivity_improving(E, samples=16, seed=0):
    """Probe: images of random rank-one projectors are positive definite."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        v = rng.standard_normal(E.n) + 1j * rng.standard_normal(E.n)
        if not is_pd(E.apply(np.outer(v, v.conj())), tol=1e-10):
            return False
    return True


def scale_with_marginals(E, V, W, cfg=SolverConfig(), seed=0):
    """Find X, Y with E'(V) = W and E'^*(I) = I.

    Eigenvector iteration for T = D1 o E* o D2 o E from rho = I/n, where
    D2(s) = (s^{-1} # W)^2 (the printed nested-root form of the same matrix)
    and D1(q) = q^{-1/2} V q^{-1/2}. Reconstruction from the current rho:
    sigma = E(rho), Y = sigma^{-1} # W (so Y sigma Y = W), X = E*(Y^2)^{-1/2}
    (so E'^*(I) = I), and the next rho is X V X, which makes E'(V) = W at a
    fixed point. No contraction argument is available, so non-convergence
    is reported through ``status``.
    """
    V = as_hermitian(V)
    W = as_hermitian(W)
    n = E.n
    if V.shape != (n, n) or W.shape != (n, n):
        raise DimensionError("V and W must match the map dimension")
    tv, tw = np.real(np.trace(V)), np.real(np.trace(W))
    if abs(tv - tw) > 1e-9 * max(abs(tv), abs(tw)):
        raise ValueError("tr V and tr W differ")
    if not (is_pd(V) and is_pd(W)):
        raise ValueError("V and W must be positive definite")
    notes = []
    if not is_positivity_improving(E, seed=seed):
        notes.append("map is not positivity improving; convergence is not expected")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    rho = np.eye(n, dtype=complex) / n
    I = np.eye(n)
    hist = []
    status = Status.MAX_ITERS
    k = 0
    X = Y = np.eye(n, dtype=complex)
    cur = E
    while True:
        sigma = E.apply(rho)
        try:
            Y = geometric_mean(herm_inv(sigma, "E(rho)", k), W)
            X = herm_inv_sqrt(E.apply_adjoint(Y @ Y), "E*(Y^2)", k)
        except SingularMarginalError as err:
            notes.append(f"iterate left the cone: {err}")
            break
        cur = E.scaled(X, Y)
        res = max(np.abs(cur.apply(V) - W).max(), np.abs(cur.apply_adjoint(I) - I).max())
        hist.append(float(res))
        if res <= cfg.tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            notes.append(f"no convergence after {k} iterations (residual {res:.3e})")
            break
        T = hermitize(X @ V @ X)
        rho = T / np.real(np.trace(T))
        k += 1
    return OperatorScalingResult(X, Y, cur, hist, status, k, E, notes)


def partial_trace(rho, d, keep):
    """Partial trace of a (d*d) x (d*d) state; keep=1 traces out the second
    factor, keep=2 the first."""
    R = np.asarray(rho).reshape(d, d, d, d)
    if keep == 1:
        return np.einsum("abcb->ac", R)
    if keep == 2:
        return np.einsum("abad->bd", R)
    raise ValueError("keep must be 1 or 2")


@dataclass
class FilterResult:
    X1: np.ndarray
    X2: np.ndarray
    rho: np.ndarray
    iterations: int
    status: Status


def filter_normal_form(rho, cfg=SolverConfig(tol=1e-10, max_iters=1000)):
    """Local filters X1 (x) X2 bringing both partial traces to I/d.

    Alternates X1 <- (d tr_2 rho)^{-1/2} on the first factor and the same on
    the second, renormalising to unit trace after each step.
    """
    rho = as_hermitian(rho)
    D = rho.shape[0]
    d = int(round(np.sqrt(D)))
    if d * d != D:
        raise DimensionError(f"state dimension {D} is not a perfect square")
    w = np.linalg.eigvalsh(rho)
    if w[0] < 1e-12:
        raise ValueError(f"state is on the boundary (smallest eigenvalue {w[0]:.3e})")
    rho0 = rho / np.real(np.trace(rho))
    I = np.eye(d)
    F1 = np.eye(d, dtype=complex)
    F2 = np.eye(d, dtype=complex)

    def gap(r):
        return max(np.abs(partial_trace(r, d, 1) - I / d).max(),
                   np.abs(partial_trace(r, d, 2) - I / d).max())

    cur = rho0
    status = Status.MAX_ITERS
    k = 0
    while True:
        if gap(cur) <= cfg.tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            break
        k += 1
        X1 = herm_inv_sqrt(d * partial_trace(cur, d, 1), "tr_2 rho", k)
        F1 = X1 @ F1
        G = np.kron(F1, F2)
        cur = G @ rho0 @ G.conj().T
        cur = hermitize(cur / np.real(np.trace(cur)))
        X2 = herm_inv_sqrt(d * partial_trace(cur, d, 2), "tr_1 rho", k)
        F2 = X2 @ F2
        G = np.kron(F1, F2)
        cur = G @ rho0 @ G.conj().T
        cur = hermitize(cur / np.real(np.trace(cur)))
    return FilterResult(F1, F2, cur, k, status)
