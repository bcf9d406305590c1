"""Potential functions whose minimisers are the diagonal scalings.

Conventions used throughout: ``x`` is indexed by columns (the future d2) and
``y`` by rows (the future d1), so that B = diag(y) A diag(x). In log
coordinates xi = ln x and eta = ln y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .structure import as_nonneg


@dataclass(frozen=True)
class PotentialValues:
    g: float          # log-barrier
    k: float          # homogeneous potential (min of g along rays)
    f_xi_eta: float   # g written in log coordinates
    f_single: float   # single-variable convex potential in xi


def _positive(v, name):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be strictly positive")
    return v


def log_barrier(A, m, x, y):
    """g(x, y) = y'Ax - sum c ln x - sum r ln y."""
    return float(y @ A @ x - m.c @ np.log(x) - m.r @ np.log(y))


def log_barrier_grad(A, m, x, y):
    """Gradient of g: zero exactly at a scaling, where (Ax)_i = r_i / y_i
    and (A'y)_j = c_j / x_j."""
    return A.T @ y - m.c / x, A @ x - m.r / y


def homogeneous_potential(A, m, x, y):
    """k(x, y) = min over t > 0 of g(tx, ty).

    With total mass tau = sum(r) = sum(c) this is
    tau ln(y'Ax) - sum c ln x - sum r ln y + tau - tau ln tau,
    which is n ln(y'Ax) - ... + n - n ln n for unit margins.
    """
    tau = m.r.sum()
    s = y @ A @ x
    return float(tau * np.log(s) - m.c @ np.log(x) - m.r @ np.log(y) + tau - tau * np.log(tau))


def convex_potential(A, m, xi, eta):
    """g in log coordinates: sum A_ij exp(eta_i + xi_j) - c.xi - r.eta.
    Jointly convex in (xi, eta)."""
    return float(np.exp(eta) @ A @ np.exp(xi) - m.c @ xi - m.r @ eta)


def single_potential(A, m, xi):
    """f(xi) = sum_i r_i ln(sum_j A_ij exp(xi_j)) - sum_j c_j xi_j.

    Rows carry r and columns carry c. With d2 = exp(xi) and d1 = r / (A d2)
    the gradient is the column-margin residual of diag(d1) A diag(d2).
    """
    with np.errstate(divide="ignore"):
        logA = np.log(A)
    row_lse = logsumexp(logA + xi[None, :], axis=1)
    return float(m.r @ row_lse - m.c @ xi)


def single_potential_grad(A, m, xi):
    d2 = np.exp(xi - xi.max())
    d1 = m.r / (A @ d2)
    return d2 * (A.T @ d1) - m.c


def single_potential_change(A, m, xi, step):
    """f(xi + step) - f(xi) without subtracting two large values.

    Each row term is ln sum_j P_ij exp(step_j) with P the row-normalized
    weights A_ij exp(xi_j), written as log1p(P expm1(step)).
    """
    W = A * np.exp(xi - xi.max())[None, :]
    P = W / W.sum(axis=1, keepdims=True)
    return float(m.r @ np.log1p(P @ np.expm1(step)) - m.c @ step)


def product_potential(A, m, x):
    """prod_i (Ax)_i^{r_i} / prod_j x_j^{c_j}; its logarithm is f(ln x)."""
    return float(np.exp(m.r @ np.log(A @ x) - m.c @ np.log(x)))


def evaluate_potentials(A, m, x, y):
    A = as_nonneg(A)
    m.check_against(A)
    x = _positive(x, "x")
    y = _positive(y, "y")
    xi, eta = np.log(x), np.log(y)
    return PotentialValues(
        g=log_barrier(A, m, x, y),
        k=homogeneous_potential(A, m, x, y),
        f_xi_eta=convex_potential(A, m, xi, eta),
        f_single=single_potential(A, m, xi),
    )
