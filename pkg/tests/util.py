"""Shared oracles and generators for the test suite.

Everything here is deliberately independent of the library internals:
projection norms by direct tensor-power expansion, Schur polynomials by
tableau enumeration, feasible directions by explicit rational convex
combinations. Slow is fine; these run at small sizes.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from capdual.core import WeightVector, WeightedVector


def brute_projection_norm(v: WeightedVector, k: int, lam) -> float:
    """|Pi_{k,lam} v^{tensor k}|^2 by expanding all len(terms)^k products."""
    lam = tuple(lam)
    terms = [(w.coords, c) for w, c in v.terms]
    total = 0.0
    for combo in itertools.product(terms, repeat=k):
        weight = tuple(sum(cs) for cs in zip(*(w for w, _ in combo)))
        if weight == lam:
            amp = 1.0 + 0.0j
            for _, c in combo:
                amp *= c
            total += abs(amp) ** 2
    return total


def brute_invariant_norms(v: WeightedVector, k: int) -> dict[tuple, float]:
    """All weight-component norms of v^{tensor k} at once."""
    terms = [(w.coords, c) for w, c in v.terms]
    out: dict[tuple, complex] = {}
    for combo in itertools.product(terms, repeat=k):
        weight = tuple(sum(cs) for cs in zip(*(w for w, _ in combo)))
        amp = 1.0 + 0.0j
        for _, c in combo:
            amp *= c
        out[weight] = out.get(weight, 0.0) + abs(amp) ** 2
    return {w: float(x.real if isinstance(x, complex) else x)
            for w, x in out.items()}


def _ssyt_rows(shape, max_entry, prev_row=None):
    """Yield semistandard fillings row by row: weakly increasing rows,
    strictly increasing down columns."""
    if not shape:
        yield []
        return
    width = shape[0]

    def fill(row, col):
        if col == width:
            for rest in _ssyt_rows(shape[1:], max_entry, row):
                yield [tuple(row)] + rest
            return
        lo = row[col - 1] if col else 1
        if prev_row is not None and col < len(prev_row):
            lo = max(lo, prev_row[col] + 1)
        for val in range(lo, max_entry + 1):
            row.append(val)
            yield from fill(row, col + 1)
            row.pop()

    yield from fill([], 0)


def ssyt_schur(lam, xs) -> Fraction:
    """Schur polynomial s_lam(xs) as a sum over semistandard tableaux.

    Exact when xs are Fractions. Only viable for |lam| <= 10 or so.
    """
    lam = tuple(p for p in lam if p)
    if not lam:
        return Fraction(1)
    n = len(xs)
    if len(lam) > n:
        return Fraction(0)
    total = Fraction(0)
    for tableau in _ssyt_rows(lam, n):
        term = Fraction(1)
        for row in tableau:
            for entry in row:
                term *= xs[entry - 1]
        total += term
    return total


def ssyt_count(lam, n: int) -> int:
    """Number of semistandard tableaux of the given shape with entries <= n,
    i.e. s_lam(1, ..., 1)."""
    return sum(1 for _ in _ssyt_rows(tuple(p for p in lam if p), n))


def random_weighted_vector(rng: np.random.Generator, n: int = 2,
                           n_terms: int = 3, box: int = 3,
                           complex_amps: bool = True) -> WeightedVector:
    """Random vector with distinct integer weights in [-box, box]^n."""
    weights: set[tuple] = set()
    while len(weights) < n_terms:
        weights.add(tuple(int(x) for x in rng.integers(-box, box + 1, size=n)))
    terms = {}
    for w in weights:
        if complex_amps:
            amp = complex(rng.normal(), rng.normal())
        else:
            amp = float(rng.normal())
        while abs(amp) < 1e-3:
            amp = complex(rng.normal(), rng.normal()) if complex_amps else float(rng.normal())
        terms[WeightVector(w)] = amp
    return WeightedVector.from_terms(n, terms)


def random_feasible_theta(rng: np.random.Generator, v: WeightedVector,
                          denominator_bound: int = 8):
    """A rational point of the weight polytope: an explicit convex combination
    with small positive integer coefficients over a random support subset."""
    weights = [w.coords for w, _ in v.terms]
    m = len(weights)
    size = int(rng.integers(1, m + 1))
    idx = rng.choice(m, size=size, replace=False)
    coeffs = [int(rng.integers(1, denominator_bound)) for _ in idx]
    denom = sum(coeffs)
    theta = [Fraction(0)] * v.n
    for i, c in zip(idx, coeffs):
        for j, wj in enumerate(weights[int(i)]):
            theta[j] += Fraction(c * wj, denom)
    return tuple(theta)


def normalized(v: WeightedVector) -> WeightedVector:
    return v.normalized()


def kl_divergence(p, q) -> float:
    """D(p||q) in nats with the usual 0 log 0 = 0 convention."""
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0:
            if qi <= 0:
                return math.inf
            total += pi * math.log(pi / qi)
    return total


def quantum_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """tr rho (log rho - log sigma), +inf when rho leaves sigma's support."""
    pe, pv = np.linalg.eigh(rho)
    qe, qv = np.linalg.eigh(sigma)
    support = sum(np.outer(v, v.conj()) for x, v in zip(pe, pv.T) if x > 1e-12)
    sig_supp = sum(np.outer(v, v.conj()) for x, v in zip(qe, qv.T) if x > 1e-12)
    leak = support @ (np.eye(len(pe)) - sig_supp)
    if np.linalg.norm(leak) > 1e-9:
        return math.inf
    log_r = sum(math.log(x) * np.outer(v, v.conj())
                for x, v in zip(pe, pv.T) if x > 1e-12)
    log_s = sum(math.log(x) * np.outer(v, v.conj())
                for x, v in zip(qe, qv.T) if x > 1e-12)
    return float(np.trace(rho @ (log_r - log_s)).real)


def random_density_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real
