"""Exact / approximate / no scalability for prescribed margins.

The decision procedure is a max-flow on the transportation graph with
integer capacities. Exactness needs a second flow with a positive lower
bound on every pattern edge, handled by the usual lower-bound reduction.
The subset enumeration in :func:`subset_witness` is an independent,
exponential oracle for small inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .config import DimensionError, MarginError
from .structure import Pattern, _bipartite_components, as_nonneg

SUM_RTOL = 1e-9


class Verdict(str, enum.Enum):
    EXACT = "exact"
    APPROX_ONLY = "approx_only"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class MarginSpec:
    """Target row sums ``r`` and column sums ``c``."""

    r: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).ravel()
        c = np.array(self.c, dtype=float).ravel()
        for name, v in (("r", r), ("c", c)):
            if v.size == 0 or not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise MarginError(f"margin {name} must be finite and strictly positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)

    @classmethod
    def uniform(cls, m, n=None, total=None):
        n = m if n is None else n
        total = float(m) if total is None else total
        return cls(np.full(m, total / m), np.full(n, total / n))

    @property
    def shape(self):
        return (self.r.size, self.c.size)

    def sums_match(self, rtol=SUM_RTOL):
        a, b = self.r.sum(), self.c.sum()
        return abs(a - b) <= rtol * max(a, b)

    def check_against(self, A):
        if A.shape != self.shape:
            raise DimensionError(f"margins {self.shape} do not fit a {A.shape} matrix")


@dataclass
class FlowNetwork:
    """Directed capacitated graph. Node 0 is the source, nodes 1..m are rows,
    m+1..m+n are columns and m+n+1 is the sink."""

    n_nodes: int
    edges: List[Tuple[int, int, object]]
    source: int
    sink: int
    scale: int = 1
    infinity: object = math.inf

    def to_networkx(self):
        G = nx.DiGraph()
        G.add_nodes_from(range(self.n_nodes))
        for u, v, cap in self.edges:
            G.add_edge(u, v, capacity=cap)
        return G


@dataclass
class SubsetWitness:
    rows: frozenset
    cols: frozenset
    kind: str  # "strict" (inequality fails) or "equality" (equality clause fails)


@dataclass
class Feasibility:
    verdict: Verdict
    witness_matrix: Optional[np.ndarray] = None
    witness_sets: Optional[Tuple[frozenset, frozenset]] = None
    flow_value: float = 0.0
    caveat: Optional[str] = field(default=None)


def _rationalize(v):
    """Margins as fractions: small denominators when they fit to 1e-12,
    otherwise the value rounded to a 1e-12 grid."""
    out, inexact = [], False
    for x in v:
        f = Fraction(float(x)).limit_denominator(10**6)
        if abs(float(f) - x) > 1e-12 * max(1.0, abs(x)):
            f = Fraction(round(x * 10**12), 10**12)
            inexact = True
        out.append(f)
    return out, inexact


def integer_margins(m, mask=None):
    """Common-denominator rescaling: returns (hr, hc, h, caveat) with integer
    vectors whose totals agree.

    Float margins that balance only to rounding error are reconciled by
    moving the integer difference onto the largest column target. With a
    support ``mask`` this is done per connected block of the bipartite
    support graph, since each block must balance on its own; blocks whose
    totals differ by more than the sum tolerance are left alone.
    """
    fr, ex_r = _rationalize(m.r)
    fc, ex_c = _rationalize(m.c)
    h = 1
    for f in fr + fc:
        h = h * f.denominator // math.gcd(h, f.denominator)
    hr = [int(f * h) for f in fr]
    hc = [int(f * h) for f in fc]
    caveat = None
    if ex_r or ex_c:
        caveat = "margins rounded to 1e-12 before integer rescaling"
    if mask is None:
        groups = [(tuple(range(len(hr))), tuple(range(len(hc))))]
    else:
        groups = [b for b in _bipartite_components(np.asarray(mask, dtype=bool)) if b[0] and b[1]]
    scale = SUM_RTOL * max(sum(hr), sum(hc))
    for rows, cols in groups:
        diff = sum(hr[i] for i in rows) - sum(hc[j] for j in cols)
        if diff and abs(diff) <= scale:
            k = max(cols, key=lambda j: hc[j])
            hc[k] += diff
            caveat = "margin totals adjusted by rounding before integer rescaling"
    return hr, hc, h, caveat


def build_transportation_graph(A, m, integer=False):
    """Source -> row i (r_i), row i -> column j (infinite, when A_ij > 0),
    column j -> sink (c_j). With ``integer=True`` the margins are rescaled
    by their common denominator and infinity is sum(h*r) + 1."""
    A = as_nonneg(A)
    m.check_against(A)
    rows, cols = A.shape
    src, sink = 0, rows + cols + 1
    if integer:
        hr, hc, h, _ = integer_margins(m, A > 0)
        inf = sum(hr) + 1
    else:
        hr, hc, h, inf = list(m.r), list(m.c), 1, math.inf
    edges = [(src, 1 + i, hr[i]) for i in range(rows)]
    edges += [(1 + i, 1 + rows + j, inf) for i, j in np.argwhere(A > 0)]
    edges += [(1 + rows + j, sink, hc[j]) for j in range(cols)]
    edges = [(int(u), int(v), cap) for u, v, cap in edges]
    return FlowNetwork(rows + cols + 2, edges, src, sink, scale=h, infinity=inf)


def _max_flow(G, s, t):
    return nx.maximum_flow(G, s, t, flow_func=nx.algorithms.flow.edmonds_karp)


def _flow_with_lower_bounds(mask, hr, hc, lower):
    """Feasible flow that saturates every margin and puts at least
    ``lower[i, j]`` on pattern edge (i, j). Integer data throughout.
    Returns the row/column flow matrix or None."""
    rows, cols = mask.shape
    s, t, ss, tt = "s", "t", "S*", "T*"
    inf = sum(hr) + 1
    excess = {}

    def bump(node, amount):
        excess[node] = excess.get(node, 0) + amount

    G = nx.DiGraph()
    # margin edges have lower bound = capacity, so only their demands remain
    for i in range(rows):
        bump(("r", i), hr[i])
        bump(s, -hr[i])
    for j in range(cols):
        bump(t, hc[j])
        bump(("c", j), -hc[j])
    for i, j in np.argwhere(mask):
        lo = int(lower[i, j])
        G.add_edge(("r", int(i)), ("c", int(j)), capacity=inf - lo)
        bump(("c", int(j)), lo)
        bump(("r", int(i)), -lo)
    G.add_edge(t, s, capacity=inf)
    need = 0
    for node, ex in excess.items():
        if ex > 0:
            G.add_edge(ss, node, capacity=ex)
            need += ex
        elif ex < 0:
            G.add_edge(node, tt, capacity=-ex)
    if need == 0:
        value, flow = 0, {}
    else:
        value, flow = _max_flow(G, ss, tt)
    if value != need:
        return None
    F = np.zeros((rows, cols))
    for i, j in np.argwhere(mask):
        u, v = ("r", int(i)), ("c", int(j))
        F[i, j] = flow.get(u, {}).get(v, 0) + int(lower[i, j])
    return F


def scalability(A, m):
    """Decide whether D1*A*D2 can reach margins m exactly, only in the limit,
    or not at all."""
    A = as_nonneg(A)
    m.check_against(A)
    if not m.sums_match():
        return Feasibility(Verdict.INFEASIBLE, caveat="row and column totals differ")
    mask = A > 0
    rows, cols = A.shape
    hr, hc, h, caveat = integer_margins(m, mask)
    net = build_transportation_graph(A, m, integer=True)
    G = net.to_networkx()
    value, flow = _max_flow(G, net.source, net.sink)
    total = sum(hr)
    if value < total:
        _, (reach, _) = nx.minimum_cut(G, net.source, net.sink,
                                       flow_func=nx.algorithms.flow.edmonds_karp)
        # rows outside the source side and columns outside it form (I, J)
        I = frozenset(i for i in range(rows) if 1 + i not in reach)
        J = frozenset(j for j in range(cols) if 1 + rows + j not in reach)
        return Feasibility(Verdict.INFEASIBLE, witness_sets=(I, J),
                           flow_value=value / h, caveat=caveat)
    n_edges = int(mask.sum())
    L = 2 * n_edges
    B = _flow_with_lower_bounds(mask, [L * x for x in hr], [L * x for x in hc],
                                np.ones(mask.shape, dtype=int))
    if B is not None:
        return Feasibility(Verdict.EXACT, witness_matrix=B / (L * h),
                           flow_value=value / h, caveat=caveat)
    F = np.zeros(A.shape)
    for i, j in np.argwhere(mask):
        F[i, j] = flow[1 + int(i)].get(1 + rows + int(j), 0)
    return Feasibility(Verdict.APPROX_ONLY, witness_matrix=F / h,
                       flow_value=value / h, caveat=caveat)


def maximal_subpattern(A, m):
    """Union of the patterns of all B < A with margins m (None if there is no
    such B). An edge belongs iff a flow can route at least one unit through
    it at integer margins, since the transportation polytope has integral
    vertices."""
    A = as_nonneg(A)
    m.check_against(A)
    mask = A > 0
    hr, hc, _, _ = integer_margins(m, A > 0)
    zero = np.zeros(mask.shape, dtype=int)
    if _flow_with_lower_bounds(mask, hr, hc, zero) is None:
        return None
    keep = np.zeros_like(mask)
    for i, j in np.argwhere(mask):
        if keep[i, j]:
            continue
        lower = zero.copy()
        lower[i, j] = 1
        F = _flow_with_lower_bounds(mask, hr, hc, lower)
        if F is not None:
            keep |= F > 0
    return Pattern(keep)


def subset_witness(A, m, limit=16):
    """Enumerate index sets for a violated subset condition.

    For every pair (I, J) with A[I^c, J] = 0 we need sum r_I >= sum c_J, and
    equality is allowed only when A[I, J^c] = 0 as well. Only the tightest
    partner of each enumerated set needs checking, so the search is
    2**min(rows, cols). Strict violations are preferred over equality ones.
    """
    A = as_nonneg(A)
    m.check_against(A)
    mask = A > 0
    rows, cols = mask.shape
    if min(rows, cols) > limit:
        raise ValueError(f"subset enumeration limited to min dimension {limit}")
    r, c = m.r, m.c
    tol = SUM_RTOL * max(r.sum(), c.sum())
    equality_hit = None
    by_cols = cols <= rows
    k = cols if by_cols else rows
    for bits in range(1 << k):
        S = np.array([(bits >> q) & 1 for q in range(k)], dtype=bool)
        if by_cols:
            J = S
            I = mask[:, J].any(axis=1)
        else:
            I = S
            J = ~mask[~I, :].any(axis=0)
        lhs, rhs = r[I].sum(), c[J].sum()
        found = None
        if lhs < rhs - tol:
            found = "strict"
        elif abs(lhs - rhs) <= tol and mask[np.ix_(I, ~J)].any():
            found = "equality"
        if found is None:
            continue
        w = SubsetWitness(frozenset(np.flatnonzero(I).tolist()),
                          frozenset(np.flatnonzero(J).tolist()), found)
        if found == "strict":
            return w
        if equality_hit is None:
            equality_hit = w
    return equality_hit


def subset_verdict(A, m):
    if not m.sums_match():
        return Verdict.INFEASIBLE
    w = subset_witness(A, m)
    if w is None:
        return Verdict.EXACT
    return Verdict.INFEASIBLE if w.kind == "strict" else Verdict.APPROX_ONLY


def psd_scalability(S, eq_tol=1e-9):
    """True iff {Sx = 0, sum(x) = 1, x >= 0} has no solution (phase-1 LP)."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError("S must be square")
    if not np.allclose(S, S.T, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise ValueError("S must be symmetric")
    S = 0.5 * (S + S.T)
    norm = np.linalg.norm(S, 2)
    if np.linalg.eigvalsh(S)[0] < -1e-9 * norm:
        raise ValueError("S is not positive semidefinite")
    n = S.shape[0]
    # variables: x (n), s+ (n), s- (n); minimise the total slack
    A_eq = np.zeros((n + 1, 3 * n))
    A_eq[:n, :n] = S
    A_eq[:n, n:2 * n] = np.eye(n)
    A_eq[:n, 2 * n:] = -np.eye(n)
    A_eq[n, :n] = 1.0
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    cost = np.concatenate([np.zeros(n), np.ones(2 * n)])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"phase-1 LP failed: {res.message}")
    return bool(res.fun > eq_tol * max(1.0, norm))


class Copositivity(str, enum.Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


def is_strictly_copositive(S, resolution=64, max_cells=200000):
    """Decide x'Sx > 0 on the probability simplex by bisecting simplices.

    On a cell with vertices v_a, any point is sum(l_a v_a) with l on the
    simplex, so x'Sx >= min_ab v_a'Sv_b. A cell with a positive bound is
    certified; a nonpositive vertex value is a counterexample; cells whose
    longest edge drops below 1/resolution stay unresolved.
    """
    S = np.array(S, dtype=float)
    n = S.shape[0]
    if S.ndim != 2 or S.shape != (n, n):
        raise DimensionError("S must be square")
    if n > 6:
        raise ValueError("copositivity test is limited to n <= 6")
    S = 0.5 * (S + S.T)
    min_edge = 1.0 / resolution
    stack = [np.eye(n)]
    unresolved = False
    cells = 0
    while stack:
        V = stack.pop()
        cells += 1
        if cells > max_cells:
            return Copositivity.INCONCLUSIVE
        Q = V @ S @ V.T
        if np.diag(Q).min() <= 0:
            return Copositivity.NO
        if Q.min() > 0:
            continue
        diffs = V[:, None, :] - V[None, :, :]
        lengths = np.sqrt((diffs**2).sum(axis=2))
        a, b = np.unravel_index(np.argmax(lengths), lengths.shape)
        if lengths[a, b] < min_edge:
            unresolved = True
            continue
        mid = 0.5 * (V[a] + V[b])
        if mid @ S @ mid <= 0:
            return Copositivity.NO
        left, right = V.copy(), V.copy()
        left[b] = mid
        right[a] = mid
        stack.extend([left, right])
    return Copositivity.INCONCLUSIVE if unresolved else Copositivity.YES
