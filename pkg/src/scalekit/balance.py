"""Balancing D A D^{-1} (equal row and column sums) and symmetric D A D
scaling to prescribed row sums."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DimensionError, MarginError, NotScalableError, SolverConfig, Status
from .equivalence import ConvergenceTrace
from .feasibility import MarginSpec, Verdict, scalability
from .structure import analyze_structure, as_nonneg, strong_components


@dataclass
class BalanceResult:
    d: np.ndarray
    B: np.ndarray
    status: Status
    trace: ConvergenceTrace
    entropy_objective: float
    iterations: int = 0


def balance_objective(B, A):
    """sum over the support of B_ij ln(B_ij / A_ij) - B_ij."""
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    pos = B > 0
    if np.any(pos & (A <= 0)):
        return float("inf")
    return float(np.sum(B[pos] * np.log(B[pos] / A[pos]) - B[pos]))


def _imbalance(B):
    return B.sum(axis=1) - B.sum(axis=0)


def balance(A, cfg=SolverConfig()):
    """Single-index balancing.

    Each step takes the least index p with the largest |u_p - v_p| (row sum
    minus column sum) and scales row p by alpha, column p by 1/alpha, with
    alpha = sqrt(v_p / u_p) computed from off-diagonal sums. The diagonal
    entry is untouched by the similarity, so leaving it out makes the step
    balance index p exactly; on zero-diagonal input both readings coincide.
    """
    A = as_nonneg(A)
    n, n2 = A.shape
    if n != n2:
        raise DimensionError("balancing needs a square matrix")
    trace = ConvergenceTrace()
    d = np.ones(n)
    if not analyze_structure(A).completely_reducible:
        res = float(np.abs(_imbalance(A)).max())
        trace.append(0, res, res, 0.0, float(A[A > 0].min(initial=0.0)))
        return BalanceResult(d, A.copy(), Status.INFEASIBLE, trace, balance_objective(A, A), 0)
    mask = A > 0
    B = A.copy()
    diag = np.diag(A).copy()
    status = Status.MAX_ITERS
    k = 0
    while True:
        gap = _imbalance(B)
        res = float(np.abs(gap).max())
        trace.append(k, res, res, balance_objective(B, A), float(B[mask].min(initial=0.0)))
        if res <= cfg.tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            break
        p = int(np.argmax(np.abs(gap)))
        u = B[p].sum() - diag[p]
        v = B[:, p].sum() - diag[p]
        alpha = np.sqrt(v / u)
        B[p, :] *= alpha
        B[:, p] /= alpha
        B[p, p] = diag[p]
        d[p] *= alpha
        k += 1
    # gauge: geometric mean of d equal to 1 on every irreducible block
    _, labels = strong_components(mask)
    for lab in np.unique(labels):
        idx = labels == lab
        d[idx] /= np.exp(np.mean(np.log(d[idx])))
    B = d[:, None] * A / d[None, :]
    return BalanceResult(d, B, status, trace, balance_objective(B, A), k)


def balance_is_entropy_optimal(A, result, samples=100, seed=0, tol=1e-9):
    """Compare the objective of ``result.B`` against other balanced matrices
    with the same pattern: a fresh balance of A, balances of randomly
    reweighted copies of A, and positive multiples of those."""
    A = as_nonneg(A)
    rng = np.random.default_rng(seed)
    mine = balance_objective(result.B, A)
    candidates = [balance(A).B]
    for _ in range(samples):
        noisy = A * np.exp(0.5 * rng.standard_normal(A.shape))
        Bs = balance(noisy).B
        candidates.append(Bs * rng.uniform(0.5, 2.0))
    return all(mine <= balance_objective(C, A) + tol for C in candidates)


def sym_embed(A, m):
    """[[0, A], [A', 0]] with row targets (r, c)."""
    A = as_nonneg(A)
    m.check_against(A)
    p, q = A.shape
    S = np.zeros((p + q, p + q))
    S[:p, p:] = A
    S[p:, :p] = A.T
    return S, np.concatenate([m.r, m.c])


def dad_scale_sym(A, r, cfg=SolverConfig(), check=True):
    """Symmetric scaling diag(d) A diag(d) with row sums r.

    Iterates x <- sqrt(x * r / (Ax)) from x = e. The undamped map can
    oscillate on bipartite-like supports; the geometric-mean damping keeps
    the same fixed points. Returns (d, B, status).
    """
    A = as_nonneg(A)
    n, n2 = A.shape
    if n != n2 or not np.array_equal(A, A.T):
        raise ValueError("dad scaling needs a symmetric matrix")
    r = np.asarray(r, dtype=float).ravel()
    if r.size != n:
        raise DimensionError("target length does not match the matrix")
    if np.any(r <= 0):
        raise MarginError("targets must be positive")
    if check:
        verdict = scalability(A, MarginSpec(r, r)).verdict
        if verdict != Verdict.EXACT:
            raise NotScalableError(f"no symmetric scaling to these row sums ({verdict.value})")
    x = np.ones(n)
    status = Status.MAX_ITERS
    for _ in range(cfg.max_iters + 1):
        Ax = A @ x
        if float(np.abs(x * Ax - r).max()) <= cfg.tol:
            status = Status.CONVERGED
            break
        x = np.sqrt(x * r / Ax)
    # x_i x_j is commutative in floating point, so B is exactly symmetric
    B = A * np.outer(x, x)
    return x, B, status
