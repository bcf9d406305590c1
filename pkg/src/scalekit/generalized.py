"""Variants of equivalence scaling: multidimensional arrays, log-linear
models, p-norm margins and row/column products."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .config import DimensionError, DivergenceError, MarginError, SolverConfig, Status
from .equivalence import ConvergenceTrace, ScalingResult, normalize_gauge, ras_scale, rel_entropy
from .feasibility import MarginSpec
from .structure import as_nonneg, as_nonneg_tensor


@dataclass
class TensorScalingResult:
    T: np.ndarray
    factors: List[np.ndarray]
    status: Status
    trace: ConvergenceTrace
    iterations: int = 0


def _axis_sums(T, axis):
    other = tuple(a for a in range(T.ndim) if a != axis)
    return T.sum(axis=other)


def _broadcast(v, axis, ndim):
    shape = [1] * ndim
    shape[axis] = v.size
    return v.reshape(shape)


def nd_ras(T, margins: Sequence, schedule: Optional[Sequence[int]] = None, cfg=SolverConfig()):
    """Normalise fibres along one axis at a time, following ``schedule``.

    ``schedule`` is one period of axis indices and is repeated cyclically,
    so every axis listed is visited infinitely often; it must mention every
    axis. Convergence is checked after each full period. One iteration in
    the trace is one period.
    """
    T = as_nonneg_tensor(T)
    d = T.ndim
    margins = [np.asarray(v, dtype=float).ravel() for v in margins]
    if len(margins) != d:
        raise DimensionError(f"need {d} margin vectors, got {len(margins)}")
    for a, v in enumerate(margins):
        if v.size != T.shape[a]:
            raise DimensionError(f"margin {a} has length {v.size}, axis has {T.shape[a]}")
        if np.any(v <= 0):
            raise MarginError(f"margin {a} must be strictly positive")
    totals = np.array([v.sum() for v in margins])
    if np.ptp(totals) > 1e-9 * totals.max():
        raise MarginError("margin totals differ between axes")
    schedule = list(range(d)) if schedule is None else [int(a) for a in schedule]
    missing = set(range(d)) - set(schedule)
    if missing or any(a < 0 or a >= d for a in schedule):
        raise ValueError(f"schedule period must cover every axis; missing {sorted(missing)}")
    for a in range(d):
        if np.any(_axis_sums(T, a) == 0):
            raise ValueError(f"zero slice along axis {a}")

    X = T.copy()
    factors = [np.ones(n) for n in T.shape]
    trace = ConvergenceTrace()
    mask = T > 0
    status = Status.MAX_ITERS
    k = 0
    for k in range(1, cfg.max_iters + 1):
        for a in schedule:
            f = margins[a] / _axis_sums(X, a)
            X = X * _broadcast(f, a, d)
            factors[a] = factors[a] * f
        resid = max(float(np.abs(_axis_sums(X, a) - margins[a]).max()) for a in range(d))
        trace.append(k, resid, resid, rel_entropy(X.ravel()[None, :], T.ravel()[None, :]),
                     float(X[mask].min()))
        if resid <= cfg.tol:
            status = Status.CONVERGED
            break
    # gauge: geometric mean 1 for all factors but the last
    for a in range(d - 1):
        t = np.exp(np.mean(np.log(factors[a])))
        factors[a] = factors[a] / t
        factors[-1] = factors[-1] * t
    scale = np.ones(T.shape)
    for a in range(d):
        scale = scale * _broadcast(factors[a], a, d)
    return TensorScalingResult(T * scale, factors, status, trace, k)


def pnorm_scale(A, m, p, cfg=SolverConfig()):
    """Row p-norms r and column p-norms c: scale A**p to margins r**p, c**p
    and take p-th roots of the factors."""
    if not (np.isfinite(p) and p > 0):
        raise ValueError("p must be finite and positive")
    A = as_nonneg(A)
    if p == 1:
        return ras_scale(A, m, cfg)
    inner = ras_scale(A**p, MarginSpec(m.r**p, m.c**p), cfg)
    d1, d2 = normalize_gauge(inner.d1 ** (1 / p), inner.d2 ** (1 / p))
    work = np.where(inner.B > 0, A, 0.0)
    B = d1[:, None] * work * d2[None, :]
    return ScalingResult(d1, d2, B, inner.status, inner.trace, inner.iterations)


def product_scale(A, row_products, col_products, tol=1e-10):
    """Row and column products of D1 A D2 prescribed.

    In logs u = ln d1, v = ln d2 this is linear:
    n u_i + sum_j v_j + sum_j ln A_ij = ln r_i and
    m v_j + sum_i u_i + sum_i ln A_ij = ln c_j, rank m + n - 1.
    """
    A = as_nonneg(A)
    if np.any(A <= 0):
        raise ValueError("product scaling is implemented for positive matrices only")
    rp = np.asarray(row_products, dtype=float).ravel()
    cp = np.asarray(col_products, dtype=float).ravel()
    m, n = A.shape
    if rp.size != m or cp.size != n:
        raise DimensionError("product targets do not match the matrix shape")
    if np.any(rp <= 0) or np.any(cp <= 0):
        raise MarginError("product targets must be positive")
    L = np.log(A)
    M = np.zeros((m + n, m + n))
    M[:m, :m] = n * np.eye(m)
    M[:m, m:] = 1.0
    M[m:, :m] = 1.0
    M[m:, m:] = m * np.eye(n)
    rhs = np.concatenate([np.log(rp) - L.sum(axis=1), np.log(cp) - L.sum(axis=0)])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = float(np.abs(M @ sol - rhs).max())
    if resid > tol * max(1.0, np.abs(rhs).max()):
        raise MarginError(f"inconsistent product targets (log residual {resid:.3e})")
    d1, d2 = normalize_gauge(np.exp(sol[:m]), np.exp(sol[m:]))
    B = d1[:, None] * A * d2[None, :]
    trace = ConvergenceTrace()
    r_res = float(np.abs(np.log(B).sum(axis=1) - np.log(rp)).max())
    c_res = float(np.abs(np.log(B).sum(axis=0) - np.log(cp)).max())
    trace.append(0, r_res, c_res, rel_entropy(B, A), float(B.min()))
    return ScalingResult(d1, d2, B, Status.CONVERGED, trace, 0)


class LogLinearFit(NamedTuple):
    w: np.ndarray
    D: np.ndarray


LAMBDA_BLOWUP = 1e3


def loglinear_scale(x, C, b, cfg=SolverConfig(), return_iterations=False):
    """Fit w_j = x_j prod_s D_s^{C_sj} with C w = b.

    Minimises phi(lam) = sum_j x_j exp(-(C'lam)_j) + lam'b, whose gradient is
    b - C w, by gradient descent with step halving; D_s = exp(-lam_s). The
    minimiser of the entropy sum w ln(w/x) - w over {Cv = b, v >= 0} is the
    resulting w.
    """
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0):
        raise ValueError("x must be strictly positive")
    C = np.asarray(C, dtype=float)
    if C.size == 0:
        out = LogLinearFit(x.copy(), np.ones(0))
        return (out, 0) if return_iterations else out
    C = np.atleast_2d(C)
    b = np.asarray(b, dtype=float).ravel()
    if C.shape[1] != x.size or b.size != C.shape[0]:
        raise DimensionError(f"C is {C.shape}, x has {x.size} entries, b has {b.size}")

    def change(w, step):
        # phi(lam + step) - phi(lam), formed without cancellation
        return float(np.sum(w * np.expm1(-(C.T @ step))) + step @ b)

    lam = np.zeros(C.shape[0])
    w = x.copy()
    t_prev = 1.0
    for k in range(cfg.max_iters + 1):
        grad = b - C @ w
        if float(np.abs(grad).max()) <= cfg.tol:
            out = LogLinearFit(w, np.exp(-lam))
            return (out, k) if return_iterations else out
        if not np.all(np.isfinite(w)) or np.abs(lam).max() > LAMBDA_BLOWUP:
            raise DivergenceError("dual iterates diverge; the constraint set is empty or unbounded")
        gg = float(grad @ grad)
        t = 2 * t_prev
        while True:
            delta = change(w, -t * grad)
            if np.isfinite(delta) and delta <= -1e-4 * t * gg:
                break
            t *= 0.5
            if t < 1e-14:
                raise DivergenceError("line search failed")
        lam = lam - t * grad
        w = x * np.exp(-(C.T @ lam))
        t_prev = t
    raise DivergenceError(f"no convergence within {cfg.max_iters} iterations")
