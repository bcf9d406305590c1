"""Diagonal equivalence scaling D1 A D2 to prescribed row and column sums.

Three routes to the same answer:

* :func:`ras_scale` alternates exact row and column normalisation.
* :func:`menon_scale` iterates x -> c / (A'(r / (Ax))), which is one full
  RAS cycle written in terms of the column factor.
* :func:`gradient_scale` minimises the single-variable convex potential.

RAS and Menon crawl at a sublinear rate on inputs that can only be scaled
approximately. When a solve stalls (no convergence after ``rate_window``
iterations, or an entry parked below ``eps_pattern`` for 100 iterations) the
solvers ask the flow test for a verdict. On an approximate-only input they
zero the entries that vanish in every matrix with the target margins and
keep iterating; RAS on that restriction has the same limit and converges
linearly. The dropped entries are listed in ``trace.vanished``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from .config import MarginError, NotScalableError, SolverConfig, Status
from .feasibility import MarginSpec, Verdict, maximal_subpattern, scalability
from .potentials import single_potential_change, single_potential_grad
from .structure import as_nonneg

VANISH_STREAK = 100


class TraceRecord(NamedTuple):
    iter: int
    row_resid: float
    col_resid: float
    entropy: float
    min_entry: float


@dataclass
class ConvergenceTrace:
    records: List[TraceRecord] = field(default_factory=list)
    vanished: List[Tuple[int, int]] = field(default_factory=list)

    def append(self, *values):
        self.records.append(TraceRecord(*values))

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self):
        return len(self.records)


@dataclass
class ScalingResult:
    d1: np.ndarray
    d2: np.ndarray
    B: np.ndarray
    status: Status
    trace: ConvergenceTrace
    iterations: int = 0


def rel_entropy(B, A):
    """D(B||A) = sum B ln(B/A); 0 where B = 0, +inf where B > 0 = A."""
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    if B.shape != A.shape:
        raise ValueError(f"shape mismatch {B.shape} vs {A.shape}")
    pos = B > 0
    if np.any(pos & (A <= 0)):
        return float("inf")
    return float(np.sum(B[pos] * np.log(B[pos] / A[pos])))


def _project_rows(B, r):
    return B * (r / B.sum(axis=1))[:, None]


def _project_cols(B, c):
    return B * (c / B.sum(axis=0))[None, :]


def i_projection_step(A, m, axis):
    """I-projection of A onto the matrices with row sums r (axis="rows") or
    column sums c (axis="cols"). Identical to one RAS half-step."""
    A = as_nonneg(A)
    m.check_against(A)
    if axis in ("rows", 0):
        if np.any(A.sum(axis=1) == 0):
            raise ValueError("zero row")
        return _project_rows(A, m.r)
    if axis in ("cols", 1):
        if np.any(A.sum(axis=0) == 0):
            raise ValueError("zero column")
        return _project_cols(A, m.c)
    raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")


def ras_iterates(A, m):
    """Yield (B, d1, d2) after every full RAS cycle, row step first.
    Unnormalised cumulative factors; runs forever."""
    B = np.array(A, dtype=float)
    d1 = np.ones(B.shape[0])
    d2 = np.ones(B.shape[1])
    while True:
        f = m.r / B.sum(axis=1)
        B = B * f[:, None]
        d1 = d1 * f
        g = m.c / B.sum(axis=0)
        B = B * g[None, :]
        d2 = d2 * g
        yield B, d1, d2


def menon_map(A, m, x):
    return m.c / (A.T @ (m.r / (A @ x)))


def menon_iterates(A, m):
    """Yield x_0 = e, x_1 = T(x_0), ..."""
    x = np.ones(A.shape[1])
    while True:
        yield x
        x = menon_map(A, m, x)


def _check_inputs(A, m):
    A = as_nonneg(A)
    m.check_against(A)
    if not m.sums_match():
        raise MarginError(f"row total {m.r.sum()!r} differs from column total {m.c.sum()!r}")
    return A


def _residuals(B, m):
    return (float(np.abs(B.sum(axis=1) - m.r).max()),
            float(np.abs(B.sum(axis=0) - m.c).max()))


def _min_entry(B, mask):
    return float(B[mask].min()) if mask.any() else 0.0


def normalize_gauge(d1, d2):
    """Fix the scalar freedom: geometric mean of d1 equals 1."""
    t = np.exp(np.mean(np.log(d1)))
    return d1 / t, d2 * t


class _PatternWatch:
    """Detects approximate-only behaviour and decides when to restrict."""

    def __init__(self, A, m, cfg):
        self.A, self.m, self.cfg = A, m, cfg
        self.mask = A > 0
        self.streak = np.zeros(A.shape, dtype=int)
        self.prev = np.inf
        self.checked = False
        self.flagged = False

    def update(self, k, B, resid):
        """Returns None, ("restrict", keep_mask) or ("infeasible", None)."""
        small = self.mask & (B < self.cfg.eps_pattern)
        if resid < self.prev:
            self.streak = np.where(small, self.streak + 1, 0)
        else:
            self.streak[:] = 0
        self.prev = resid
        fired = bool(self.streak.max(initial=0) >= VANISH_STREAK)
        self.flagged |= fired
        if not self.cfg.pattern_check or self.checked:
            return None
        if not (fired or k >= self.cfg.rate_window):
            return None
        self.checked = True
        verdict = scalability(self.A, self.m).verdict
        if verdict == Verdict.INFEASIBLE:
            return ("infeasible", None)
        if verdict == Verdict.APPROX_ONLY:
            return ("restrict", maximal_subpattern(self.A, self.m).mask)
        return None


def _zero_line_result(A, m):
    trace = ConvergenceTrace()
    r_res, c_res = _residuals(A, m)
    trace.append(0, r_res, c_res, 0.0, _min_entry(A, A > 0))
    return ScalingResult(np.ones(A.shape[0]), np.ones(A.shape[1]), A.copy(),
                         Status.INFEASIBLE, trace, 0)


def _finish(A, work, d1, d2, status, trace, k):
    d1, d2 = normalize_gauge(d1, d2)
    B = d1[:, None] * work * d2[None, :]
    if status == Status.CONVERGED and not np.array_equal(work > 0, A > 0):
        status = Status.APPROX_ONLY
    return ScalingResult(d1, d2, B, status, trace, k)


def _has_zero_line(A):
    return np.any(A.sum(axis=1) == 0) or np.any(A.sum(axis=0) == 0)


def ras_scale(A, m, cfg=SolverConfig()):
    """Alternating row/column normalisation (row step first).

    Args:
        A: nonnegative matrix.
        m: target margins.
        cfg: solver settings.

    Returns:
        ScalingResult with B = diag(d1) A diag(d2) recomputed from the
        normalised factors.
    """
    A = _check_inputs(A, m)
    if _has_zero_line(A):
        return _zero_line_result(A, m)
    work = A
    mask = A > 0
    B = A.copy()
    d1 = np.ones(A.shape[0])
    d2 = np.ones(A.shape[1])
    trace = ConvergenceTrace()
    watch = _PatternWatch(A, m, cfg)
    status = Status.MAX_ITERS
    k = 0
    for k in range(1, cfg.max_iters + 1):
        f = m.r / B.sum(axis=1)
        B = B * f[:, None]
        d1 = d1 * f
        g = m.c / B.sum(axis=0)
        B = B * g[None, :]
        d2 = d2 * g
        r_res, c_res = _residuals(B, m)
        trace.append(k, r_res, c_res, rel_entropy(B, A), _min_entry(B, mask))
        if r_res <= cfg.tol and c_res <= cfg.tol:
            status = Status.CONVERGED
            break
        action = watch.update(k, B, max(r_res, c_res))
        if action is None:
            continue
        if action[0] == "infeasible":
            status = Status.INFEASIBLE
            break
        keep = action[1]
        trace.vanished = [tuple(map(int, ij)) for ij in np.argwhere(mask & ~keep)]
        work = np.where(keep, A, 0.0)
        B = np.where(keep, B, 0.0)
    if status == Status.MAX_ITERS and watch.flagged:
        status = Status.APPROX_ONLY
    return _finish(A, work, d1, d2, status, trace, k)


def menon_scale(A, m, cfg=SolverConfig()):
    """Fixed-point iteration x <- c / (A'(r / (Ax))) from x = e, with
    y = r / (Ax). Checks the starting point before the first application."""
    A = _check_inputs(A, m)
    if _has_zero_line(A):
        return _zero_line_result(A, m)
    work = A
    mask = A > 0
    x = np.ones(A.shape[1])
    trace = ConvergenceTrace()
    watch = _PatternWatch(A, m, cfg)
    status = Status.MAX_ITERS
    k = 0
    while True:
        y = m.r / (work @ x)
        B = y[:, None] * work * x[None, :]
        r_res, c_res = _residuals(B, m)
        trace.append(k, r_res, c_res, rel_entropy(B, A), _min_entry(B, mask))
        if r_res <= cfg.tol and c_res <= cfg.tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            break
        action = watch.update(k, B, max(r_res, c_res))
        if action is not None:
            if action[0] == "infeasible":
                status = Status.INFEASIBLE
                break
            keep = action[1]
            trace.vanished = [tuple(map(int, ij)) for ij in np.argwhere(mask & ~keep)]
            work = np.where(keep, A, 0.0)
        x = menon_map(work, m, x)
        k += 1
    if status == Status.MAX_ITERS and watch.flagged:
        status = Status.APPROX_ONLY
    return _finish(A, work, y, x, status, trace, k)


ARMIJO_C = 1e-4


def gradient_scale(A, m, cfg=SolverConfig()):
    """Gradient descent on f(xi) with Armijo backtracking (halving from a
    unit step). d2 = exp(xi), d1 = r / (A d2)."""
    A = _check_inputs(A, m)
    verdict = scalability(A, m).verdict
    if verdict != Verdict.EXACT:
        raise NotScalableError(f"gradient route needs an exactly scalable input, got {verdict.value}")
    mask = A > 0
    xi = np.zeros(A.shape[1])
    trace = ConvergenceTrace()
    status = Status.MAX_ITERS
    k = 0
    while True:
        grad = single_potential_grad(A, m, xi)
        d2 = np.exp(xi - xi.max())
        d1 = m.r / (A @ d2)
        B = d1[:, None] * A * d2[None, :]
        r_res, c_res = _residuals(B, m)
        trace.append(k, r_res, c_res, rel_entropy(B, A), _min_entry(B, mask))
        if float(np.abs(grad).max()) <= cfg.tol and r_res <= cfg.tol:
            status = Status.CONVERGED
            break
        if k >= cfg.max_iters:
            break
        gg = float(grad @ grad)
        t = 1.0
        while True:
            change = single_potential_change(A, m, xi, -t * grad)
            if change <= -ARMIJO_C * t * gg or t < 1e-12:
                break
            t *= 0.5
        xi = xi - t * grad
        k += 1
    return _finish(A, A, d1, d2, status, trace, k)
