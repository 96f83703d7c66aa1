"""Spectrum estimation and tensor-multiplicity large deviations.

Two worked families. First, spectrum estimation: the Schur-Weyl measure
P(lambda) = f^lambda s_lambda(q) on partitions of k, its rate function
(sorted relative entropy), and the full-state rate through principal minors.
Second, rank-1 tensor powers: exact multiplicities n_{k,lambda} and the
Legendre-transform rate of the associated dimension-weighted measure.

Schur polynomials are evaluated in exact integer arithmetic: q is cleared to
integers by its common denominator and the Jacobi-Trudi determinant is taken
over big-integer complete homogeneous values. Floating-point determinants
cancel catastrophically here (for separated q the two Jacobi-Trudi products
agree to a relative 2^{-50} already around k = 400), so exactness is load
bearing, not a luxury.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import LogValue, Partition, ProbVector, ConvergenceReport, as_fraction, fraction_log
from .haarmc import sample_haar_unitary

__all__ = [
    "HermitianState",
    "SchurWeylRow",
    "SU2MultTable",
    "SchurWeylFamily",
    "DuffieldFamily",
    "partitions_bounded",
    "hook_length_count",
    "schur_weyl_measure",
    "keyl_rate",
    "kw_rate",
    "kw_minimization_check",
    "su2_multiplicities",
    "su2_mult_tables",
    "rank1_multiplicities",
    "duffield_rate",
    "ldp_report",
]

SCHUR_K_MAX = 400
SCHUR_N_MAX = 4
SU2_K_MAX = 10**3


# ---------------------------------------------------------------------------
# Partitions and exact Schur-Weyl weights.

def partitions_bounded(k: int, max_parts: int,
                       bound: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of k into at most max_parts parts, each at most bound,
    in descending lexicographic order (a linear extension of dominance)."""
    if bound is None:
        bound = k
    if k == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(k, bound), 0, -1):
        if first * max_parts < k:
            break
        for rest in partitions_bounded(k - first, max_parts - 1, first):
            yield (first, *rest)


def hook_length_count(lam: Partition | Sequence[int]) -> int:
    """Number of standard Young tableaux of shape lam, by hook lengths."""
    parts = lam.parts if isinstance(lam, Partition) else Partition(tuple(lam)).parts
    k = sum(parts)
    conj = [sum(1 for p in parts if p > j) for j in range(parts[0])] if parts else []
    hooks = 1
    for i, p in enumerate(parts):
        for j in range(p):
            hooks *= p - j + conj[j] - i - 1
    return math.factorial(k) // hooks


def _homogeneous_table(a: Sequence[int], m_max: int) -> list[int]:
    """h_m(a_1..a_n) for m = 0..m_max, exact, by the one-variable-at-a-time
    recurrence h^{(l)}_m = h^{(l-1)}_m + a_l h^{(l)}_{m-1}."""
    h = [1] + [0] * m_max
    for av in a:
        for m in range(1, m_max + 1):
            h[m] += av * h[m - 1]
    return h


def _schur_int(lam: Sequence[int], a: Sequence[int],
               h: list[int] | None = None) -> int:
    """s_lam(a_1..a_n) for integer a, exact Jacobi-Trudi determinant."""
    n = len(a)
    parts = list(lam) + [0] * (n - len(lam))
    if len(lam) > n:
        return 0 if any(p > 0 for p in lam[n:]) else _schur_int(lam[:n], a, h)
    if h is None:
        h = _homogeneous_table(a, (parts[0] if parts else 0) + n)

    def entry(i: int, j: int) -> int:
        m = parts[i] - i + j
        return h[m] if 0 <= m < len(h) else 0

    det = 0
    for perm in permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = sign
        for i in range(n):
            prod *= entry(i, perm[i])
        det += prod
    return det


def _cleared_spectrum(q: Sequence) -> tuple[list[int], int]:
    """(integer weights a, denominator D) with q_i = a_i/D exactly and
    sum(a) = D; float inputs are rationalized at tolerance 1e-9."""
    qs = [as_fraction(t) for t in q]
    if any(t < 0 for t in qs):
        raise ValueError("spectrum entries must be nonnegative")
    total = sum(qs)
    if total == 0:
        raise ValueError("spectrum must have positive mass")
    qs = [t / total for t in qs]
    D = math.lcm(*(t.denominator for t in qs))
    return [int(t * D) for t in qs], D


@dataclass(frozen=True)
class SchurWeylRow:
    lam: Partition
    f_lambda: int
    s_lambda: LogValue
    prob: LogValue


def schur_weyl_measure(q, k: int) -> list[SchurWeylRow]:
    """The measure P(lambda) = f^lambda s_lambda(q) over partitions of k with
    at most len(q) parts, rows in descending lexicographic order.

    q must be sorted nonincreasing. The normalization sum_lambda P = 1 is
    asserted exactly in integer arithmetic before returning.
    """
    q = list(q.entries) if isinstance(q, ProbVector) else list(q)
    if len(q) > SCHUR_N_MAX:
        raise ValueError(f"spectrum length {len(q)} exceeds {SCHUR_N_MAX}")
    if any(q[i] < q[i + 1] for i in range(len(q) - 1)):
        raise ValueError("spectrum must be sorted nonincreasing")
    if abs(sum(float(t) for t in q) - 1.0) > 1e-9:
        raise ValueError(f"spectrum sums to {sum(float(t) for t in q)}, not 1")
    if not 1 <= k <= SCHUR_K_MAX:
        raise ValueError(f"k must be in 1..{SCHUR_K_MAX}")
    a, D = _cleared_spectrum(q)
    nz = [v for v in a if v > 0]
    h = _homogeneous_table(nz, k + len(nz))
    denom = D**k
    rows = []
    check = 0
    for lam in partitions_bounded(k, len(q)):
        f = hook_length_count(lam)
        s_int = _schur_int(lam, nz, h) if len(lam) <= len(nz) else 0
        check += f * s_int
        s_lv = fraction_log(Fraction(s_int, denom)) if s_int else LogValue.zero()
        p_lv = fraction_log(Fraction(f * s_int, denom)) if s_int else LogValue.zero()
        rows.append(SchurWeylRow(Partition(lam), f, s_lv, p_lv))
    assert check == denom, "Schur-Weyl weights failed the exact normalization"
    return rows


# ---------------------------------------------------------------------------
# States and rate functions.

class HermitianState:
    """A positive semidefinite Hermitian matrix of unit trace."""

    def __init__(self, mat) -> None:
        m = np.array(mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("state must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("state must be Hermitian")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -1e-12:
            raise ValueError(f"state must be positive semidefinite, min eig {eigs.min()}")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("state must have unit trace")
        self.mat = m
        self.mat.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def spectrum(self) -> np.ndarray:
        """Eigenvalues sorted nonincreasing."""
        return np.linalg.eigvalsh(self.mat)[::-1]

    @classmethod
    def from_json(cls, text: str) -> "HermitianState":
        import json
        data = json.loads(text) if isinstance(text, str) else text
        rows = [[complex(re, im) for re, im in row] for row in data]
        return cls(rows)

    def to_json(self) -> str:
        import json
        return json.dumps([[[v.real, v.imag] for v in row] for row in self.mat.tolist()])


def _as_state(s) -> HermitianState:
    return s if isinstance(s, HermitianState) else HermitianState(s)


def keyl_rate(rho, sigma) -> float:
    """Full state-estimation rate I(rho || sigma).

    With rho = u diag(p) u*, p sorted nonincreasing and p_{n+1} = 0:
    I = sum_k p_k log p_k - sum_k (p_k - p_{k+1}) log prim_k(u* sigma u),
    prim_k the k-th leading principal minor. Infinite when a minor carrying
    positive coefficient vanishes (support incompatibility).
    """
    rho = _as_state(rho)
    sigma = _as_state(sigma)
    if rho.n != sigma.n:
        raise ValueError("states must have matching dimension")
    eigs, vecs = np.linalg.eigh(rho.mat)
    p = eigs[::-1]
    u = vecs[:, ::-1]
    B = u.conj().T @ sigma.mat @ u
    n = rho.n
    total = float(sum(pk * math.log(pk) for pk in p if pk > 1e-300))
    for k in range(1, n + 1):
        coeff = float(p[k - 1] - (p[k] if k < n else 0.0))
        if coeff <= 1e-15:
            continue
        sign, logdet = np.linalg.slogdet(B[:k, :k])
        if sign.real <= 0 or not math.isfinite(logdet):
            return math.inf
        total -= coeff * logdet
    return max(total, 0.0)


def _sorted_prob(p) -> np.ndarray:
    arr = np.array(p.entries if isinstance(p, ProbVector) else p, dtype=float)
    if np.any(arr[:-1] < arr[1:] - 1e-15):
        raise ValueError("probability vector must be sorted nonincreasing")
    return arr


def kw_rate(p, q) -> float:
    """Spectrum-estimation rate: relative entropy D(p||q) of the sorted
    spectra, infinite when supp p is not inside supp q."""
    p = _sorted_prob(p)
    q = _sorted_prob(q)
    if p.shape != q.shape:
        raise ValueError("vectors must have matching length")
    total = 0.0
    for pk, qk in zip(p, q):
        if pk <= 1e-300:
            continue
        if qk <= 1e-300:
            return math.inf
        total += pk * math.log(pk / qk)
    return max(total, 0.0)


def kw_minimization_check(p, sigma, samples: int = 1000,
                          seed: int = 7) -> tuple[float, float]:
    """(min over sampled bases of I(u diag(p) u* || sigma), D(p || spec sigma)).

    The analytic minimizer (sigma's own eigenbasis, by Cauchy interlacing) is
    always included in the minimization, so the first component is at most
    the second up to round-off; sampling can only confirm, not beat it.
    """
    sigma = _as_state(sigma)
    if sigma.n > 3:
        raise ValueError("sampling check supports n <= 3")
    p = _sorted_prob(p)
    if len(p) != sigma.n:
        raise ValueError("p must match the state dimension")
    analytic = kw_rate(p, sigma.spectrum())
    _, vecs = np.linalg.eigh(sigma.mat)
    w = vecs[:, ::-1]
    best = keyl_rate(HermitianState(w @ np.diag(p) @ w.conj().T), sigma)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        u = sample_haar_unitary(sigma.n, rng)
        rho = HermitianState(u @ np.diag(p) @ u.conj().T)
        best = min(best, keyl_rate(rho, sigma))
    return best, analytic


# ---------------------------------------------------------------------------
# Rank-1 tensor-power multiplicities.

class SU2MultTable:
    """Exact multiplicities n_{k,lambda} of V_lambda inside V_1^{tensor k}."""

    def __init__(self, k: int, entries: dict[int, int]) -> None:
        self.k = k
        self.entries = {lam: n for lam, n in sorted(entries.items()) if n}
        dim = sum((lam + 1) * n for lam, n in self.entries.items())
        if dim != 2**k:
            raise ValueError(f"multiplicity table violates the dimension count at k={k}")

    def __getitem__(self, lam: int) -> int:
        return self.entries.get(lam, 0)

    def items(self):
        return self.entries.items()


def su2_mult_tables(k_max: int) -> Iterator[SU2MultTable]:
    """Tables for k = 1..k_max by the Clebsch-Gordan recursion
    n_{k+1,l} = n_{k,l-1} + n_{k,l+1}."""
    if not 1 <= k_max <= SU2_K_MAX:
        raise ValueError(f"k_max must be in 1..{SU2_K_MAX}")
    row = {1: 1}
    yield SU2MultTable(1, row)
    for k in range(2, k_max + 1):
        row = {lam: row.get(lam - 1, 0) + row.get(lam + 1, 0)
               for lam in range(k % 2, k + 1, 2)}
        yield SU2MultTable(k, row)


def su2_multiplicities(k: int) -> SU2MultTable:
    for table in su2_mult_tables(k):
        if table.k == k:
            return table
    raise AssertionError("unreachable")


def rank1_multiplicities(weights: Sequence[int], k: int) -> dict[int, int]:
    """n_{k,lambda} for the k-th tensor power of the rank-1 representation
    with the given weight multiset, via weight counts w and
    n_lambda = w_lambda - w_{lambda+2}.

    Raises when some difference is negative: the multiset is then not the
    weight system of a genuine representation of the rank-1 group.
    """
    ws = [int(w) for w in weights]
    if not ws:
        raise ValueError("weight multiset must be nonempty")
    counts = {0: 1}
    for _ in range(k):
        nxt: dict[int, int] = {}
        for s, cnt in counts.items():
            for w in ws:
                nxt[s + w] = nxt.get(s + w, 0) + cnt
        counts = nxt
    mult = {}
    for lam in range(0, max(abs(s) for s in counts) + 1):
        n = counts.get(lam, 0) - counts.get(lam + 2, 0)
        if n < 0:
            raise ValueError("weight multiset is not a character of the group")
        if n:
            mult[lam] = n
    return mult


def duffield_rate(weights: Sequence[int], theta: float) -> float:
    """Legendre-transform rate I(theta) = sup_{h>=0} (theta h - log(chi(e^h)/d))
    for the rank-1 representation with character chi(e^h) = sum_w e^{w h}.

    theta above the largest weight gives +inf; at the largest weight the
    supremum is log(d / multiplicity of that weight); below the mean weight
    it is 0.
    """
    ws = sorted(int(w) for w in weights)
    if not ws:
        raise ValueError("weight multiset must be nonempty")
    theta = float(theta)
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    d = len(ws)
    wmax = ws[-1]
    if theta > wmax:
        return math.inf
    if theta == wmax:
        return math.log(d / ws.count(wmax))

    def moments(h: float) -> tuple[float, float, float]:
        # log-partition shifted by wmax for overflow safety
        es = [math.exp((w - wmax) * h) for w in ws]
        z = sum(es)
        g = wmax * h + math.log(z) - math.log(d)
        mean = sum(w * e for w, e in zip(ws, es)) / z
        var = sum(w * w * e for w, e in zip(ws, es)) / z - mean * mean
        return g, mean, var

    _, mean0, _ = moments(0.0)
    if theta <= mean0:
        return 0.0

    lo, hi = 0.0, 1.0
    while moments(hi)[1] < theta:
        lo = hi
        hi *= 2
        if hi > 1e6:
            return math.inf  # theta numerically indistinguishable from wmax
    h = 0.5 * (lo + hi)
    for _ in range(200):
        g, mean, var = moments(h)
        if mean < theta:
            lo = h
        else:
            hi = h
        if var <= 0:
            break
        step = (theta - mean) / var
        nh = h + step
        h = nh if lo < nh < hi else 0.5 * (lo + hi)
        if abs(mean - theta) <= 1e-14 * max(1.0, abs(theta)):
            break
    g, _, _ = moments(h)
    return max(theta * h - g, 0.0)


# ---------------------------------------------------------------------------
# Large-deviation reports.

@dataclass(frozen=True)
class SchurWeylFamily:
    """Spectrum estimation for a state with spectrum q (sorted nonincreasing)."""
    q: tuple[float, ...]


@dataclass(frozen=True)
class DuffieldFamily:
    """Rank-1 tensor powers of the representation with the given weights."""
    weights: tuple[int, ...]


def _round_partition(theta: Sequence[float], k: int) -> tuple[int, ...]:
    """Nearest partition of k to k*theta: round each coordinate half-up, then
    absorb the remaining defect into the first part."""
    parts = [math.floor(k * t + 0.5) for t in theta]
    parts[0] += k - sum(parts)
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)) or parts[-1] < 0:
        raise ValueError(f"k*theta does not round to a partition at k={k}")
    return tuple(p for p in parts)


def ldp_report(family, theta, k_max: int) -> ConvergenceReport:
    """Empirical decay rates -(1/k) log P(lambda_k = round(k theta)) against
    the analytic rate, one row per k.

    Columns: k, log_prob, empirical_rate, analytic_rate, difference.
    """
    rows = []
    if isinstance(family, SchurWeylFamily):
        if k_max > SCHUR_K_MAX:
            raise ValueError(f"k_max must be at most {SCHUR_K_MAX}")
        th = [float(as_fraction(t)) for t in (theta if isinstance(theta, Iterable) else [theta])]
        if len(th) != len(family.q):
            raise ValueError("theta must match the spectrum length")
        analytic = kw_rate(sorted(th, reverse=True), family.q)
        a, D = _cleared_spectrum(family.q)
        nz = [v for v in a if v > 0]
        for k in range(1, k_max + 1):
            lam = _round_partition(th, k)
            f = hook_length_count(lam)
            s_int = _schur_int(lam, nz) if len([p for p in lam if p]) <= len(nz) else 0
            if s_int:
                log_p = fraction_log(Fraction(f * s_int, D**k)).log_mag
            else:
                log_p = -math.inf
            emp = -log_p / k
            rows.append((k, log_p, emp, analytic, abs(emp - analytic)))
        meta = {"family": family, "theta": tuple(th), "analytic_rate": analytic}
    elif isinstance(family, DuffieldFamily):
        if k_max > SU2_K_MAX:
            raise ValueError(f"k_max must be at most {SU2_K_MAX}")
        th = float(as_fraction(theta))
        analytic = duffield_rate(family.weights, th)
        d = len(family.weights)
        ws = [int(w) for w in family.weights]
        counts = {0: 1}
        for k in range(1, k_max + 1):
            nxt: dict[int, int] = {}
            for s, cnt in counts.items():
                for w in ws:
                    nxt[s + w] = nxt.get(s + w, 0) + cnt
            counts = nxt
            mult = {}
            top = max(abs(s) for s in counts)
            for lam in range(0, top + 1):
                n = counts.get(lam, 0) - counts.get(lam + 2, 0)
                if n < 0:
                    raise ValueError("weight multiset is not a character of the group")
                if n:
                    mult[lam] = n
            target = k * th
            lam_k = min(mult, key=lambda l: (abs(l - target), -l))
            log_p = fraction_log(Fraction((lam_k + 1) * mult[lam_k], d**k)).log_mag
            emp = -log_p / k
            rows.append((k, log_p, emp, analytic, abs(emp - analytic)))
        meta = {"family": family, "theta": th, "analytic_rate": analytic}
    else:
        raise TypeError(f"unsupported family {type(family).__name__}")
    return ConvergenceReport(
        columns=("k", "log_prob", "empirical_rate", "analytic_rate", "difference"),
        rows=rows,
        metadata=meta,
    )
