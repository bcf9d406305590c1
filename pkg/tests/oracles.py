"""Independent reference computations for the test suite.

Nothing here imports from scalekit: permutation enumeration, closed forms
and finite differences stand in for the matching, flow and solver code.
"""
import itertools
import math

import numpy as np


def diagonals(mask):
    """All permutations whose diagonal lies in the support."""
    mask = np.asarray(mask, dtype=bool)
    n = mask.shape[0]
    return [p for p in itertools.permutations(range(n)) if all(mask[i, p[i]] for i in range(n))]


def has_support(mask):
    return bool(diagonals(mask))


def has_total_support(mask):
    mask = np.asarray(mask, dtype=bool)
    covered = np.zeros_like(mask)
    for p in diagonals(mask):
        for i, j in enumerate(p):
            covered[i, j] = True
    return bool(mask.any()) and np.array_equal(covered, mask)


def union_of_diagonals(mask):
    """Largest subpattern carrying a doubly stochastic matrix."""
    mask = np.asarray(mask, dtype=bool)
    covered = np.zeros_like(mask)
    for p in diagonals(mask):
        for i, j in enumerate(p):
            covered[i, j] = True
    return covered


def uniform_verdict(mask):
    """Square 0/1 pattern with unit margins: exact iff total support,
    approximate iff support, else infeasible."""
    if not has_support(mask):
        return "infeasible"
    return "exact" if has_total_support(mask) else "approx_only"


def brute_subset_violation(A, r, c):
    """First (I, J) with A[I^c, J] = 0 and sum r_I < sum c_J, or with
    equality but A[I, J^c] != 0. Enumerates every pair of index sets."""
    A = np.asarray(A)
    m, n = A.shape
    kinds = []
    for I in itertools.product([0, 1], repeat=m):
        I = np.array(I, dtype=bool)
        for J in itertools.product([0, 1], repeat=n):
            J = np.array(J, dtype=bool)
            if np.any(A[np.ix_(~I, J)] > 0):
                continue
            lhs, rhs = r[I].sum(), c[J].sum()
            if lhs < rhs - 1e-12:
                return "strict"
            if abs(lhs - rhs) <= 1e-12 and np.any(A[np.ix_(I, ~J)] > 0):
                kinds.append("equality")
    return kinds[0] if kinds else None


def closed_form_2x2(A):
    """Doubly stochastic scaling of a positive 2x2: diagonal entry
    sqrt(ad) / (sqrt(ad) + sqrt(bc))."""
    (a, b), (c, d) = np.asarray(A, dtype=float)
    x = math.sqrt(a * d) / (math.sqrt(a * d) + math.sqrt(b * c))
    return np.array([[x, 1 - x], [1 - x, x]])


def central_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def mixed_discriminant_fd(mats, h=0.5):
    """Coefficient of x_1...x_n in det(sum x_i A_i) from the central stencil
    sum_s (prod s_i) p(h s) / (2h)^n over s in {-1, 1}^n, which is exact for
    a homogeneous polynomial of degree n."""
    n = len(mats)
    total = 0.0
    for s in itertools.product([-1, 1], repeat=n):
        M = sum(si * h * Ai for si, Ai in zip(s, mats))
        total += np.prod(s) * np.real(np.linalg.det(M))
    return total / (2 * h) ** n


def kl(B, A):
    """sum B ln(B / A) with 0 ln 0 = 0 and +inf off the support of A."""
    B = np.asarray(B, dtype=float)
    A = np.asarray(A, dtype=float)
    total = 0.0
    for b, a in zip(B.ravel(), A.ravel()):
        if b == 0:
            continue
        if a == 0:
            return math.inf
        total += b * math.log(b / a)
    return total


def birkhoff_mixture(mask, rng, terms=4):
    """Random convex combination of permutation matrices inside the mask."""
    diags = diagonals(mask)
    n = np.asarray(mask).shape[0]
    picks = rng.choice(len(diags), size=terms)
    w = rng.dirichlet(np.ones(terms))
    Q = np.zeros((n, n))
    for wt, k in zip(w, picks):
        Q[np.arange(n), list(diags[k])] += wt
    return Q


def random_unitary(n, rng):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_kraus(n, k, rng):
    return rng.standard_normal((k, n, n)) + 1j * rng.standard_normal((k, n, n))


def kraus_apply(K, X):
    return sum(k @ X @ k.conj().T for k in K)


def kraus_apply_adjoint(K, Z):
    return sum(k.conj().T @ Z @ k for k in K)


def psd_power(X, p):
    w, V = np.linalg.eigh((X + X.conj().T) / 2)
    return (V * w**p) @ V.conj().T


def proportionality_error(A, B):
    """min over scalars t of |A - t B| relative to |A|."""
    t = np.vdot(B, A) / np.vdot(B, B)
    return float(np.abs(A - t * B).max() / np.abs(A).max())
