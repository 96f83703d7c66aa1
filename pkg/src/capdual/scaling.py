"""Matrix scaling and generalized permanents.

The (r,c)-scaling instance of the capacity duality: Sinkhorn iteration toward
prescribed margins, the (r,c)-capacity via the torus solver on the weight
system {e_i + e_j}, exact contingency-table permanents, and the report that
compares (k! perm_{kr,kc})^{1/k} against cap^2 together with the classic
permanent sandwich for uniform margins.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .capacity import CapacityResult, theta_capacity
from .core import (ConvergenceReport, LogValue, WeightVector, WeightedVector,
                   as_fraction, fraction_log, rational_vector)

__all__ = [
    "ScalingState",
    "SinkhornResult",
    "sinkhorn_scale",
    "rc_capacity",
    "rc_capacity_result",
    "rc_weighted_vector",
    "PermExact",
    "perm_rc_exact",
    "perm_dual_report",
    "matrix_from_json",
    "matrix_from_csv",
]

TABLE_BUDGET = 10**7
DEFAULT_MAX_ITER = 200_000_000


@dataclass(frozen=True)
class ScalingState:
    """A nonnegative matrix with target margins and the current scaling.

    The scaled matrix is diag(x) M diag(y); r and c are exact rationals
    summing to one on each side.
    """

    M: np.ndarray
    r: tuple[Fraction, ...]
    c: tuple[Fraction, ...]
    x: np.ndarray = field(default=None)  # type: ignore[assignment]
    y: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.size == 0:
            raise ValueError("M must be a nonempty 2-d matrix")
        if np.any(M < 0) or not np.all(np.isfinite(M)):
            raise ValueError("M entries must be finite and nonnegative")
        n, m = M.shape
        r = tuple(as_fraction(t) for t in self.r)
        c = tuple(as_fraction(t) for t in self.c)
        if len(r) != n or len(c) != m:
            raise ValueError("margin lengths must match the matrix shape")
        if any(t < 0 for t in r + c):
            raise ValueError("margins must be nonnegative")
        if sum(r) != 1 or sum(c) != 1:
            raise ValueError("row and column margins must each sum to 1")
        x = np.ones(n) if self.x is None else np.array(self.x, dtype=float)
        y = np.ones(m) if self.y is None else np.array(self.y, dtype=float)
        if x.shape != (n,) or y.shape != (m,) or np.any(x < 0) or np.any(y < 0):
            raise ValueError("x, y must be nonnegative vectors of matching shape")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def scaled(self) -> np.ndarray:
        return self.x[:, None] * self.M * self.y[None, :]

    def marginal_error(self) -> float:
        S = self.scaled
        r = np.array([float(t) for t in self.r])
        c = np.array([float(t) for t in self.c])
        return float(np.abs(S.sum(axis=1) - r).sum() + np.abs(S.sum(axis=0) - c).sum())


@dataclass(frozen=True)
class SinkhornResult:
    state: ScalingState
    status: str  # converged | max_iter | certified-unscalable
    iterations: int
    marginal_error: float
    certificate: dict | None = None


# ---------------------------------------------------------------------------
# Exact feasibility of the support pattern: the margins (r,c) are achievable
# by a nonnegative matrix supported on supp(M) iff the bipartite max flow
# equals 1. Edmonds-Karp over Fractions is exact and polynomial.

def _support_flow(pattern: np.ndarray, r: Sequence[Fraction],
                  c: Sequence[Fraction]) -> tuple[Fraction, set[int]]:
    n, m = pattern.shape
    src, snk = n + m, n + m + 1
    cap: dict[tuple[int, int], Fraction] = {}
    adj: dict[int, list[int]] = {u: [] for u in range(n + m + 2)}

    def add(u: int, v: int, w: Fraction) -> None:
        cap[(u, v)] = cap.get((u, v), Fraction(0)) + w
        cap.setdefault((v, u), Fraction(0))
        if v not in adj[u]:
            adj[u].append(v)
        if u not in adj[v]:
            adj[v].append(u)

    big = Fraction(2)  # exceeds the total supply of 1
    for i in range(n):
        add(src, i, Fraction(r[i]))
    for j in range(m):
        add(n + j, snk, Fraction(c[j]))
    for i in range(n):
        for j in range(m):
            if pattern[i, j]:
                add(i, n + j, big)

    flow = Fraction(0)
    while True:
        prev = {src: src}
        queue = deque([src])
        while queue and snk not in prev:
            u = queue.popleft()
            for v in adj[u]:
                if v not in prev and cap[(u, v)] > 0:
                    prev[v] = u
                    queue.append(v)
        if snk not in prev:
            return flow, set(prev)
        bottleneck = big
        v = snk
        while v != src:
            u = prev[v]
            bottleneck = min(bottleneck, cap[(u, v)])
            v = u
        v = snk
        while v != src:
            u = prev[v]
            cap[(u, v)] -= bottleneck
            cap[(v, u)] += bottleneck
            v = u
        flow += bottleneck


def _unscalable_certificate(state: ScalingState) -> dict | None:
    """None when the margins are achievable on supp(M); otherwise a Hall-type
    blocking set of rows whose mass exceeds that of every column they meet."""
    pattern = state.M > 0
    flow, reach = _support_flow(pattern, state.r, state.c)
    if flow == 1:
        return None
    n = state.M.shape[0]
    rows = sorted(u for u in reach if u < n)
    cols = sorted(u - n for u in reach if n <= u < n + state.M.shape[1])
    row_mass = sum((state.r[i] for i in rows), Fraction(0))
    col_mass = sum((state.c[j] for j in cols), Fraction(0))
    assert row_mass > col_mass  # min cut of a flow strictly below 1
    return {
        "rows": rows,
        "cols": cols,
        "row_mass": row_mass,
        "col_mass": col_mass,
        "deficiency": 1 - flow,
    }


# ---------------------------------------------------------------------------
# Sinkhorn kernel. The boundary instances of interest converge at rate 1/t,
# so reaching a 1e-8 marginal error can take ~1e8 iterations; the loop is
# written flat so numba can compile it, with a plain-python fallback.

def _sinkhorn_loop(M, r, c, x, y, tol, max_iter):  # pragma: no cover - jit
    n, m = M.shape
    err = math.inf
    it = 0
    while it < max_iter:
        it += 1
        for i in range(n):
            s = 0.0
            for j in range(m):
                s += M[i, j] * y[j]
            x[i] = r[i] / s if s > 0 else 0.0
        for j in range(m):
            s = 0.0
            for i in range(n):
                s += M[i, j] * x[i]
            y[j] = c[j] / s if s > 0 else 0.0
        err = 0.0
        for i in range(n):
            s = 0.0
            for j in range(m):
                s += M[i, j] * y[j]
            err += abs(x[i] * s - r[i])
        for j in range(m):
            s = 0.0
            for i in range(n):
                s += M[i, j] * x[i]
            err += abs(y[j] * s - c[j])
        if err <= tol:
            break
    return x, y, it, err


try:
    from numba import njit

    _sinkhorn_kernel = njit(cache=True)(_sinkhorn_loop)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _sinkhorn_kernel = _sinkhorn_loop


def sinkhorn_scale(state: ScalingState, tol: float = 1e-8,
                   max_iter: int = DEFAULT_MAX_ITER) -> SinkhornResult:
    """Alternate row/column normalization of diag(x) M diag(y) toward (r,c).

    Stops when the combined l1 marginal error drops to tol. Margins that are
    unachievable on the support are detected exactly up front and returned as
    certified-unscalable with the blocking row set.
    """
    if not np.any(state.M > 0):
        raise ValueError("cannot scale the zero matrix")
    cert = _unscalable_certificate(state)
    if cert is not None:
        return SinkhornResult(state, "certified-unscalable", 0,
                              state.marginal_error(), cert)
    r = np.array([float(t) for t in state.r])
    c = np.array([float(t) for t in state.c])
    x, y, it, err = _sinkhorn_kernel(state.M.copy(), r, c,
                                     state.x.copy(), state.y.copy(),
                                     float(tol), int(max_iter))
    out = ScalingState(state.M, state.r, state.c, x, y)
    status = "converged" if err <= tol else "max_iter"
    return SinkhornResult(out, status, int(it), float(err))


# ---------------------------------------------------------------------------
# (r,c)-capacity through the torus solver: the matrix becomes the weighted
# vector sum_ij sqrt(M_ij) e_{i,j} with weight e_i + e_j in Z^{n+m} and the
# target theta = (r, c).

def rc_weighted_vector(M: np.ndarray) -> WeightedVector:
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    terms = {}
    for i in range(n):
        for j in range(m):
            if M[i, j] > 0:
                coords = [0] * (n + m)
                coords[i] = 1
                coords[n + j] = 1
                terms[WeightVector(tuple(coords))] = math.sqrt(M[i, j])
    return WeightedVector.from_terms(n + m, terms)


def rc_capacity_result(M, r, c) -> CapacityResult:
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    r = rational_vector(r, n)
    c = rational_vector(c, m)
    if sum(r) != 1 or sum(c) != 1:
        raise ValueError("row and column margins must each sum to 1")
    return theta_capacity(rc_weighted_vector(M), r + c)


def rc_capacity(M, r, c) -> LogValue:
    """cap^2 = inf_{x,y>0} sum_ij M_ij x_i y_j / (prod x_i^{r_i} prod y_j^{c_j}).

    Zero (sign 0) exactly when (r,c) lies outside the support polytope.
    """
    return rc_capacity_result(M, r, c).log_cap ** 2


# ---------------------------------------------------------------------------
# Exact generalized permanents: perm_{r,c}(M) = sum over contingency tables
# with the given integer margins of prod M_ij^{B_ij} / B_ij!.

@dataclass(frozen=True)
class PermExact:
    value: Fraction
    log_value: LogValue
    table_count: int


def _compositions(total: int, bounds: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    if len(bounds) == 1:
        if total <= bounds[0]:
            yield (total,)
        return
    for first in range(min(total, bounds[0]) + 1):
        for rest in _compositions(total - first, bounds[1:]):
            yield (first, *rest)


def perm_rc_exact(M, r: Sequence[int], c: Sequence[int],
                  budget: int = TABLE_BUDGET) -> PermExact:
    """Exact rational perm_{r,c}(M) with margins r (rows) and c (columns).

    The number of contingency tables is counted first by a memoized DP over
    remaining column sums; enumeration only starts when it fits the budget.
    The outer sum runs over first-row compositions in lexicographic order,
    the natural axis for parallel evaluation, reduced deterministically.
    """
    rows = [list(map(as_fraction, row)) for row in M]
    n = len(rows)
    m = len(rows[0]) if n else 0
    if any(len(row) != m for row in rows):
        raise ValueError("M must be rectangular")
    if any(v < 0 for row in rows for v in row):
        raise ValueError("M entries must be nonnegative")
    r = tuple(int(t) for t in r)
    c = tuple(int(t) for t in c)
    if len(r) != n or len(c) != m or any(t < 0 for t in r + c):
        raise ValueError("margins must be nonnegative integers matching M")
    if sum(r) != sum(c):
        raise ValueError(f"margin sums differ: {sum(r)} != {sum(c)}")

    def count_tables() -> int:
        # forward DP over remaining column sums; every partial fill extends
        # to a full table (margins rebalance row by row), so the partial
        # count is a lower bound on the table count and aborting once it
        # passes the budget is sound
        layer: dict[tuple[int, ...], int] = {c: 1}
        for i in range(n):
            nxt: dict[tuple[int, ...], int] = {}
            partials = 0
            for rem, ways in layer.items():
                for comp in _compositions(r[i], rem):
                    partials += ways
                    if partials > budget:
                        raise RuntimeError(
                            "contingency-table enumeration needs more than "
                            f"{budget} tables, budget is {budget}")
                    key = tuple(a - b for a, b in zip(rem, comp))
                    nxt[key] = nxt.get(key, 0) + ways
            layer = nxt
        return layer.get((0,) * m, 0)

    total_tables = count_tables()

    def row_weight(i: int, comp: tuple[int, ...]) -> Fraction:
        w = Fraction(1)
        for j, b in enumerate(comp):
            if b:
                if rows[i][j] == 0:
                    return Fraction(0)
                w *= rows[i][j] ** b / math.factorial(b)
        return w

    def branch(i: int, rem: tuple[int, ...]) -> Fraction:
        if i == n:
            return Fraction(1) if not any(rem) else Fraction(0)
        acc = Fraction(0)
        for comp in _compositions(r[i], rem):
            w = row_weight(i, comp)
            if w:
                sub = branch(i + 1, tuple(a - b for a, b in zip(rem, comp)))
                if sub:
                    acc += w * sub
        return acc

    value = branch(0, c)
    lv = fraction_log(value) if value else LogValue.zero()
    return PermExact(value, lv, total_tables)


def perm_dual_report(M, r, c, k_max: int,
                     budget: int = TABLE_BUDGET) -> ConvergenceReport:
    """Rows of (k! perm_{kr,kc}(M))^{1/k} against cap^2 for k with integral
    scaled margins; the gap column is log cap^2 minus the k-th root in log
    scale and is nonnegative up to round-off.

    For square M with uniform r = c the metadata carries the permanent
    sandwich cap^{2n} n!/n^{2n} <= perm(M) <= cap^{2n}/n! evaluated exactly.
    """
    Mq = [[as_fraction(v) for v in row] for row in M]
    Mf = np.array([[float(v) for v in row] for row in Mq])
    n, m = Mf.shape
    r = rational_vector(r, n)
    c = rational_vector(c, m)
    cap = rc_capacity_result(Mf, r, c)
    log_cap_sq = 2.0 * cap.log_cap.log_mag if cap.log_cap.sign else -math.inf
    ell = math.lcm(*(t.denominator for t in r + c))

    rows = []
    for k in range(ell, k_max + 1, ell):
        rint = [int(t * k) for t in r]
        cint = [int(t * k) for t in c]
        pk = perm_rc_exact(Mq, rint, cint, budget=budget)
        scaled = math.factorial(k) * pk.value
        if scaled:
            log_val = fraction_log(scaled).log_mag
            root = math.exp(log_val / k)
            gap = log_cap_sq - log_val / k
        else:
            log_val, root, gap = -math.inf, 0.0, math.nan
        rows.append((k, log_val, root, log_cap_sq, gap))

    metadata: dict = {"r": r, "c": c, "period": ell, "capacity": cap}
    uniform = (n == m and set(r) == {Fraction(1, n)} and set(c) == {Fraction(1, n)})
    if uniform and cap.log_cap.sign:
        perm = perm_rc_exact(Mq, [1] * n, [1] * n, budget=budget).value
        cap_2n = math.exp(n * log_cap_sq)
        lower = cap_2n * math.factorial(n) / n ** (2 * n)
        upper = cap_2n / math.factorial(n)
        slack = 1e-9
        metadata["sandwich"] = {
            "lower": lower,
            "perm": perm,
            "upper": upper,
            "lower_holds": lower <= float(perm) * (1 + slack) + slack,
            "upper_holds": float(perm) <= upper * (1 + slack) + slack,
        }
    return ConvergenceReport(
        columns=("k", "log_kfact_perm", "root_value", "log_cap_sq", "gap"),
        rows=rows,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Matrix input: row-major CSV or JSON, rationals as "p/q" strings.

def matrix_from_json(text: str) -> list[list[Fraction]]:
    data = json.loads(text)
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise ValueError("expected a JSON array of row arrays")
    mat = [[as_fraction(v) for v in row] for row in data]
    if len({len(row) for row in mat}) != 1:
        raise ValueError("rows have unequal lengths")
    return mat


def matrix_from_csv(text: str) -> list[list[Fraction]]:
    reader = csv.reader(io.StringIO(text.strip()))
    mat = [[as_fraction(cell.strip()) for cell in row] for row in reader if row]
    if not mat:
        raise ValueError("empty CSV matrix")
    if len({len(row) for row in mat}) != 1:
        raise ValueError("rows have unequal lengths")
    return mat
