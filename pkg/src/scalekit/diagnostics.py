"""Checks on finished scalings: margins, pattern, cross ratios,
stationarity of the log-barrier, and the observed convergence rate."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from .config import Status
from .equivalence import ConvergenceTrace, ScalingResult
from .potentials import log_barrier_grad
from .structure import as_nonneg


def cross_ratios(A, quadruple):
    """alpha_ijkl = A_ij A_kl / (A_il A_kj); unchanged by D1 A D2."""
    A = np.asarray(A, dtype=float)
    i, j, k, l = quadruple
    den = A[i, l] * A[k, j]
    if den <= 0:
        raise ZeroDivisionError(f"A[{i},{l}] * A[{k},{j}] is zero")
    return float(A[i, j] * A[k, l] / den)


def _log_quadruples(L):
    # log alpha_ijkl = L_ij + L_kl - L_il - L_kj, axes (i, j, k, l)
    with np.errstate(invalid="ignore"):
        return (L[:, :, None, None] + L[None, None, :, :]
                - L[:, None, None, :] - L.T[None, :, :, None])


def log_cross_ratios(A):
    """All log cross ratios as an (m, n, m, n) array indexed [i, j, k, l];
    non-finite where an entry vanishes."""
    with np.errstate(divide="ignore"):
        L = np.log(np.asarray(A, dtype=float))
    return _log_quadruples(L)


def cross_ratio_drift(A, B):
    """Max relative change of the cross ratios over quadruples where all four
    entries are positive in both matrices."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    keep = (A > 0) & (B > 0)
    diff = np.full(A.shape, np.nan)
    diff[keep] = np.log(B[keep]) - np.log(A[keep])
    q = _log_quadruples(diff)
    q = q[np.isfinite(q)]
    if q.size == 0:
        return 0.0
    return float(np.abs(np.expm1(q)).max())


@dataclass
class VerificationReport:
    row_resid: float
    col_resid: float
    margins_ok: bool
    pattern_equal: bool
    vanished: List[Tuple[int, int]]
    pattern_ok: bool
    cross_ratio_drift: float
    stationarity: float
    gp_residual: float
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return self.margins_ok and self.pattern_ok and self.cross_ratio_drift <= 1e-8


def verify_scaling(A, m, result: ScalingResult, tol=1e-8):
    """Recompute diag(d1) A diag(d2) and audit it.

    Entries reported as vanished in the trace are dropped before the
    recomputation, since the approximate-only limit has them at zero.
    """
    A = as_nonneg(A)
    d1, d2 = np.asarray(result.d1, float), np.asarray(result.d2, float)
    work = A.copy()
    for i, j in result.trace.vanished:
        work[i, j] = 0.0
    B = d1[:, None] * work * d2[None, :]
    row_resid = float(np.abs(B.sum(axis=1) - m.r).max())
    col_resid = float(np.abs(B.sum(axis=0) - m.c).max())
    margins_ok = row_resid <= tol and col_resid <= tol
    lost = (A > 0) & ~(B > 0)
    vanished = [tuple(map(int, ij)) for ij in np.argwhere(lost)]
    pattern_equal = not vanished
    pattern_ok = pattern_equal or (
        result.status == Status.APPROX_ONLY and sorted(vanished) == sorted(result.trace.vanished))
    drift = cross_ratio_drift(work, B)
    gx, gy = log_barrier_grad(work, m, d2, d1)
    stationarity = float(max(np.abs(gx * d2).max(), np.abs(gy * d1).max()))
    # geometric-program form: rescale so prod x^c = prod y^r = 1; the
    # Lagrange conditions then say diag(y) A x and diag(x) A'y are
    # proportional to r and c
    x = d2 * np.exp(-(m.c @ np.log(d2)) / m.c.sum())
    y = d1 * np.exp(-(m.r @ np.log(d1)) / m.r.sum())
    lam = y @ work @ x / m.r.sum()
    gp = max(np.abs(y * (work @ x) - lam * m.r).max(), np.abs(x * (work.T @ y) - lam * m.c).max())
    notes = []
    if not margins_ok:
        notes.append(f"margin residual {max(row_resid, col_resid):.3e} exceeds {tol:.1e}")
    if vanished:
        notes.append(f"{len(vanished)} entries vanished")
    return VerificationReport(row_resid, col_resid, margins_ok, pattern_equal, vanished,
                              pattern_ok, drift, stationarity, float(gp / lam), notes)


class RateEstimate(NamedTuple):
    measured_rate: float
    sigma2_squared: float
    degenerate: bool  # sigma_2 = 1: the limit decomposes, no linear rate


def rate_estimate(trace: ConvergenceTrace, B, window=50):
    """Geometric mean of successive residual ratios over the last ``window``
    records, next to the squared second singular value of the limit."""
    res = np.maximum(trace.column("row_resid"), trace.column("col_resid"))
    if res.size < window + 1:
        raise ValueError(f"trace has {res.size} records, need at least {window + 1}")
    tail = res[-(window + 1):]
    if np.any(tail <= 0):
        raise ValueError("trace tail contains exact zeros")
    measured = float(np.exp(np.mean(np.diff(np.log(tail)))))
    s = np.linalg.svd(np.asarray(B, dtype=float), compute_uv=False)
    sigma2 = float(s[1]) if s.size > 1 else 0.0
    return RateEstimate(measured, sigma2**2, bool(sigma2 >= 1 - 1e-9))
