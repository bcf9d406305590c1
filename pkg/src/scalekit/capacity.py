"""Capacity of a positive map, mixed discriminants of decoherence tuples,
randomised rank probes and the Hilbert-metric convergence report."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize

from .config import DimensionError, SingularMarginalError, SolverConfig, Status
from .cones import contraction_report, hilbert_distance
from .linalg import haar_unitary, hermitize, herm_expm, herm_inv, herm_sqrt
from .operators import PositiveMapRep, is_positivity_improving, sinkhorn_steps, ds_error


class CapacityEstimate(NamedTuple):
    cap: float
    argmin: Optional[np.ndarray]
    iterations: int
    grad_norm: float
    fixed_point_residual: float


def _logdet(M):
    sign, val = np.linalg.slogdet(hermitize(M))
    if np.real(sign) <= 0:
        return -np.inf
    return float(val)


BOUNDARY_COND = 1e8


def capacity_estimate(E, cfg=None, max_outer=200, gtol=1e-9, fixed_point_tol=1e-6):
    """inf det E(X) over X > 0 with det X = 1.

    det E(X) / det X is invariant under X -> cX, so the constraint is
    dropped and ln det E(L L^H) - ln det(L L^H) is minimised over a full
    complex L by BFGS with the exact gradient 2 G L, where
    G = E*(E(X)^{-1}) - X^{-1}. The argmin (normalised to det C = 1) is
    returned only when the stationarity condition E*(E(C)^{-1}) = C^{-1}
    holds to fixed_point_tol and C stays well inside the cone; otherwise the
    infimum is approached at the boundary and only the value is reported.
    """
    if cfg is not None:
        max_outer = min(max_outer, cfg.max_iters)
    n = E.n
    if _logdet(E.apply(np.eye(n))) == -np.inf:
        return CapacityEstimate(0.0, None, 0, float("inf"), float("inf"))

    def unpack(z):
        return (z[:n * n] + 1j * z[n * n:]).reshape(n, n)

    def fun(z):
        L = unpack(z)
        X = L @ L.conj().T
        a, b = _logdet(E.apply(X)), _logdet(X)
        if not (np.isfinite(a) and np.isfinite(b)):
            return np.inf, np.zeros_like(z)
        G = E.apply_adjoint(np.linalg.inv(E.apply(X))) - np.linalg.inv(X)
        GL = 2 * hermitize(G) @ L
        return a - b, np.concatenate([GL.real.ravel(), GL.imag.ravel()])

    z0 = np.concatenate([np.eye(n).ravel(), np.zeros(n * n)])
    res = minimize(fun, z0, jac=True, method="BFGS",
                   options={"gtol": gtol, "maxiter": max_outer})
    L = unpack(res.x)
    X = hermitize(L @ L.conj().T)
    X = X / np.exp(_logdet(X) / n)
    val = _logdet(E.apply(X))
    if not np.isfinite(val):
        return CapacityEstimate(0.0, None, int(res.nit), float("inf"), float("inf"))
    gnorm = float(np.linalg.norm(res.jac))
    w = np.linalg.eigvalsh(X)
    try:
        lhs = E.apply_adjoint(herm_inv(E.apply(X)))
        Cinv = herm_inv(X)
        resid = float(np.linalg.norm(lhs - Cinv) / np.linalg.norm(Cinv))
    except SingularMarginalError:
        resid = float("inf")
    ok = resid <= fixed_point_tol and w[-1] / w[0] <= BOUNDARY_COND
    return CapacityEstimate(float(np.exp(val)), X if ok else None, int(res.nit), gnorm, resid)


def mixed_discriminant(mats):
    """Coefficient of x_1 ... x_n in det(sum x_i A_i), by inclusion-exclusion
    over subsets: sum_S (-1)^(n-|S|) det(sum_{i in S} A_i)."""
    mats = [np.asarray(M) for M in mats]
    n = len(mats)
    if n == 0 or any(M.shape != (n, n) for M in mats):
        raise DimensionError("mixed discriminant needs n matrices of size n x n")
    total = 0.0
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for S in itertools.combinations(range(n), size):
            total += sign * np.linalg.det(sum(mats[i] for i in S))
    return float(np.real(total))


def decoherence_tuple(E, U):
    """(E(u_1 u_1^H), ..., E(u_n u_n^H)) for the columns u_i of U."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (E.n, E.n):
        raise DimensionError("U must match the map dimension")
    if np.abs(U.conj().T @ U - np.eye(E.n)).max() > 1e-10:
        raise ValueError("U is not unitary")
    return [E.apply(np.outer(U[:, i], U[:, i].conj())) for i in range(E.n)]


def _rank(M, tol=1e-10):
    w = np.linalg.eigvalsh(hermitize(M))
    return int(np.sum(w > tol * max(1.0, np.abs(w).max())))


@dataclass
class ProbeResult:
    passed: bool
    kind: Optional[str] = None       # "projector" or "subset" or "mixed_discriminant"
    U: Optional[np.ndarray] = None
    subset: Optional[tuple] = None
    P: Optional[np.ndarray] = None

    @property
    def verdict(self):
        return "PassedProbes" if self.passed else "Violated"


def rank_nondecreasing_probe(E, unitary_samples=20, seed=0, psd_samples=20):
    """Randomised evidence that rank(E(P)) >= rank(P) for all P >= 0.

    Direct probes on random positive P of every rank come first, then for
    Haar-random U the subset condition rank(sum_S A_i) >= |S| on the
    decoherence tuple and positivity of its mixed discriminant. Passing is
    one-sided: it cannot certify the property.
    """
    n = E.n
    if n > 4:
        raise ValueError("probe limited to n <= 4")
    rng = np.random.default_rng(seed)
    for rank in range(1, n + 1):
        for _ in range(psd_samples):
            G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
            P = G @ G.conj().T
            if _rank(E.apply(P)) < rank:
                return ProbeResult(False, "projector", P=P)
    for _ in range(unitary_samples):
        U = haar_unitary(n, rng)
        A = decoherence_tuple(E, U)
        for size in range(1, n + 1):
            for S in itertools.combinations(range(n), size):
                if _rank(sum(A[i] for i in S)) < size:
                    return ProbeResult(False, "subset", U=U, subset=S)
        if mixed_discriminant(A) <= 1e-12:
            return ProbeResult(False, "mixed_discriminant", U=U)
    return ProbeResult(True)


def tuple_capacity(mats):
    """inf det(sum gamma_i A_i) over gamma > 0 with prod gamma = 1, in logs."""
    mats = [hermitize(np.asarray(M, dtype=complex)) for M in mats]
    n = len(mats)
    if _logdet(sum(mats)) == -np.inf:
        return 0.0

    def unpack(z):
        return np.append(z, -z.sum())

    def fun(z):
        g = np.exp(unpack(z))
        M = sum(gi * Ai for gi, Ai in zip(g, mats))
        val = _logdet(M)
        if not np.isfinite(val):
            return 1e300, np.zeros_like(z)
        Minv = np.linalg.inv(M)
        dg = np.array([gi * np.real(np.trace(Minv @ Ai)) for gi, Ai in zip(g, mats)])
        return val, dg[:-1] - dg[-1]

    res = minimize(fun, np.zeros(n - 1), jac=True, method="BFGS",
                   options={"gtol": 1e-12, "maxiter": 2000})
    return float(np.exp(min(res.fun, fun(np.zeros(n - 1))[0])))


class CapacityBounds(NamedTuple):
    mixed_discriminant: float
    capacity: float
    upper: float
    holds: bool


def capacity_bounds_check(E, U, slack=1e-6):
    """M(A) <= Cap(A) <= n^n / n! * M(A) for the decoherence tuple A."""
    n = E.n
    if n > 3:
        raise ValueError("capacity bounds check limited to n <= 3")
    A = decoherence_tuple(E, U)
    M = mixed_discriminant(A)
    cap = tuple_capacity(A)
    upper = n**n / math.factorial(n) * M
    tol = slack * max(1.0, abs(upper))
    return CapacityBounds(M, cap, upper, bool(M <= cap + tol and cap <= upper + tol))


@dataclass
class ConvergenceReport:
    status: Status
    iterations: int
    marginal_distance: List[float]     # d_H(rho_k, I) + d_H(sigma_k, I)
    decay_rate: float
    gamma: float
    measured_contraction: float
    map_distance: List[float]          # remaining distance to the limit
    bound: List[float]
    step_ok: bool
    bound_ok: bool


HEADROOM = 1.1


def operator_convergence_report(E, cfg=SolverConfig(tol=1e-8, max_iters=500), samples=400, seed=0):
    """Geometric convergence of operator Sinkhorn in Hilbert's metric.

    gamma is the product of the Birkhoff bounds of E and E*, each from a
    sampled (hence possibly low) projective diameter. Checks
    (with 10% headroom, since the diameter is only sampled): successive
    marginal distances shrink by at most gamma, and the remaining distance
    of iterate k to the limit is below gamma^k / (1 - gamma) times the
    first marginal distance.
    """
    n = E.n
    I = np.eye(n)
    if np.abs(E.apply_adjoint(I) - I).max() > 1e-8:
        raise ValueError("map must be trace preserving")
    if not is_positivity_improving(E, seed=seed):
        raise ValueError("map must be positivity improving")
    rep = contraction_report(E, samples=samples, seed=seed)
    rep_adj = contraction_report(E.adjoint(), samples=samples, seed=seed + 1)
    # one iteration normalises through E and through E*
    gamma = rep.birkhoff_bound * rep_adj.birkhoff_bound
    dists, Xs, Ys = [], [np.eye(n)], [np.eye(n)]
    status = Status.MAX_ITERS
    k = 0
    if ds_error(E) <= cfg.tol**2:
        status = Status.CONVERGED
    else:
        for k, X, Y, rho, sigma in sinkhorn_steps(E):
            dists.append(hilbert_distance(rho, I) + hilbert_distance(sigma, I))
            Xs.append(X)
            Ys.append(Y)
            if ds_error(E.scaled(X, Y)) <= cfg.tol**2:
                status = Status.CONVERGED
                break
            if k >= cfg.max_iters:
                break
    Xf, Yf = Xs[-1], Ys[-1]
    map_dist, bound = [], []
    for j in range(len(Xs)):
        Xr = np.linalg.solve(Xs[j], Xf)
        Yr = Yf @ np.linalg.inv(Ys[j])
        map_dist.append(0.5 * hilbert_distance(hermitize(Xr @ Xr.conj().T), I)
                        + 0.5 * hilbert_distance(hermitize(Yr.conj().T @ Yr), I))
        if dists and gamma < 1:
            bound.append(gamma**j / (1 - gamma) * dists[0])
    useful = [d for d in dists if d > 1e-12]
    if len(useful) >= 2:
        decay = float(np.exp(np.mean(np.diff(np.log(useful)))))
    else:
        decay = 0.0
    g = HEADROOM * gamma
    step_ok = all(b <= g * a + 1e-12 for a, b in zip(dists, dists[1:]) if a > 1e-12)
    bound_ok = all(dm <= HEADROOM * b + 1e-12 for dm, b in zip(map_dist, bound))
    return ConvergenceReport(status, k, dists, decay, gamma, rep.measured_sup_ratio,
                             map_dist, bound, step_ok, bound_ok)
