"""Capacities of torus orbits via geodesically convex optimization.

For a vector v = sum_w c_w e_w and a rational target theta, the theta-capacity
is the infimum of exp(F(x)/2) over x in R^n, where

    F(x) = -2 <theta, x> + log sum_w |c_w|^2 exp(2 <w, x>).

The infimum is positive exactly when theta lies in the moment polytope, i.e.
the convex hull of the occupied weights; membership is decided by an exact
rational LP which also produces a certificate either way. When theta sits on
a proper face of the polytope the minimization is restricted to the weights
of the minimal face containing theta (the infimum is then attained there but
not on the original orbit, which the `diverging` flag records).

An independent cross-check solves the equivalent relative-entropy program

    -log cap_theta(v)^2 = min { D(p || q) : sum_w p_w w = theta }

with q the squared amplitudes, by a damped Newton method in the probability
simplex rather than in the torus variable x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (LogValue, WeightVector, WeightedVector, as_fraction,
                   rational_vector)
from .exactlp import simplex_max

__all__ = [
    "MembershipCertificate",
    "CapacityResult",
    "moment_map",
    "moment_polytope_contains",
    "theta_capacity",
    "capacity_kl_form",
]

GRAD_TOL = 1e-10
MAX_ITER = 500


@dataclass(frozen=True)
class MembershipCertificate:
    """Outcome of an exact moment-polytope membership test.

    For inside points, coefficients is a convex combination of support
    weights equal to theta. For outside points, separator = (a, offset) is a
    rational functional with <a, w> <= offset on the support but
    <a, theta> > offset.
    """

    inside: bool
    coefficients: tuple[tuple[WeightVector, Fraction], ...] | None = None
    separator: tuple[tuple[Fraction, ...], Fraction] | None = None

    def __bool__(self) -> bool:
        return self.inside


@dataclass(frozen=True)
class CapacityResult:
    log_cap: LogValue
    minimizer_x: np.ndarray | None
    diverging: bool
    iterations: int
    gradient_norm: float
    certificate: MembershipCertificate


def moment_map(v: WeightedVector) -> np.ndarray:
    """The Born-weighted average of the occupied weights, mu(v)."""
    if v.is_zero:
        raise ValueError("moment map of the zero vector is undefined")
    born = v.born()
    mu = np.zeros(v.n)
    for w, p in born.items():
        mu += p * np.array(w.coords, dtype=float)
    return mu


def _membership_lp(support: Sequence[WeightVector],
                   theta: tuple[Fraction, ...]) -> MembershipCertificate:
    n = len(theta)
    s = len(support)
    A = [[Fraction(w.coords[i]) for w in support] for i in range(n)]
    A.append([Fraction(1)] * s)
    b = [*theta, Fraction(1)]
    res = simplex_max([Fraction(0)] * s, A, b)
    if res.status == "optimal":
        coeffs = tuple((w, p) for w, p in zip(support, res.x) if p != 0)
        return MembershipCertificate(inside=True, coefficients=coeffs)
    y = res.farkas
    a = tuple(y[:n])
    offset = -y[n]
    return MembershipCertificate(inside=False, separator=(a, offset))


def moment_polytope_contains(v: WeightedVector, theta) -> MembershipCertificate:
    """Exact test of whether theta lies in conv{w : c_w != 0}, with certificate."""
    v = v.pruned()
    if v.is_zero:
        raise ValueError("the zero vector has an empty moment polytope")
    th = rational_vector(theta, v.n)
    return _membership_lp(v.support, th)


def _minimal_face(support: Sequence[WeightVector], theta: tuple[Fraction, ...]
                  ) -> tuple[list[int], list[Fraction]]:
    """Indices of weights on the minimal face containing theta, plus a point
    of the feasible set that is strictly positive on that face."""
    n = len(theta)
    s = len(support)
    A = [[Fraction(w.coords[i]) for w in support] for i in range(n)]
    A.append([Fraction(1)] * s)
    b = [*theta, Fraction(1)]
    face: list[int] = []
    combos: list[list[Fraction]] = []
    for j in range(s):
        c = [Fraction(0)] * s
        c[j] = Fraction(1)
        res = simplex_max(c, A, b)
        if res.status != "optimal":
            raise ValueError("face query on an infeasible target")
        if res.objective > 0:
            face.append(j)
            combos.append(res.x)
    interior = [sum(x[j] for x in combos) / len(combos) for j in range(s)]
    assert all(interior[j] > 0 for j in face)
    assert all(interior[j] == 0 for j in range(s) if j not in face)
    return face, interior


def _newton_logsumexp(W: np.ndarray, logq: np.ndarray, theta: np.ndarray,
                      grad_tol: float, max_iter: int) -> tuple[np.ndarray, float, float, int]:
    """Damped Newton minimization of F(x) = -2 theta.x + LSE(logq + 2 W x)."""

    def fgh(x):
        a = logq + 2.0 * (W @ x)
        amax = a.max()
        e = np.exp(a - amax)
        z = e.sum()
        logz = amax + math.log(z)
        p = e / z
        wp = W.T @ p
        f = -2.0 * float(theta @ x) + logz
        g = -2.0 * theta + 2.0 * wp
        h = 4.0 * ((W.T * p) @ W - np.outer(wp, wp))
        return f, g, h

    x = np.zeros(W.shape[1])
    f, g, h = fgh(x)
    iters = 0
    while np.max(np.abs(g)) > grad_tol and iters < max_iter:
        iters += 1
        try:
            d = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(h, -g, rcond=None)[0]
        if not np.all(np.isfinite(d)) or float(g @ d) >= 0:
            d = -g
        slope = float(g @ d)
        step = 1.0
        for _ in range(60):
            xn = x + step * d
            fn, gn, hn = fgh(xn)
            if fn <= f + 0.25 * step * slope:
                break
            step *= 0.5
        x, f, g, h = xn, fn, gn, hn
    return x, f, float(np.max(np.abs(g))), iters


def theta_capacity(v: WeightedVector, theta, *, grad_tol: float = GRAD_TOL,
                   max_iter: int = MAX_ITER) -> CapacityResult:
    """Capacity of v relative to a rational target theta.

    Returns a CapacityResult whose log_cap has sign 0 exactly when theta lies
    outside the moment polytope (the unstable case), in which case the
    certificate carries a separating functional. Otherwise log_cap encodes
    cap > 0 and the reported gradient norm refers to the minimization
    restricted to the minimal face of the polytope containing theta.
    """
    v = v.pruned()
    if v.is_zero:
        raise ValueError("capacity of the zero vector is undefined")
    th = rational_vector(theta, v.n)
    cert = _membership_lp(v.support, th)
    if not cert.inside:
        return CapacityResult(LogValue.zero(), None, True, 0, math.inf, cert)

    qs = v.amplitudes_sq()
    support = v.support
    face, _ = _minimal_face(support, th)
    W = np.array([support[j].coords for j in face], dtype=float)
    logq = np.array([math.log(qs[support[j]]) for j in face])
    theta_f = np.array([float(t) for t in th])
    if len(face) == 1:
        # theta is a vertex; F is constant on the face, log q is the value.
        return CapacityResult(LogValue(1, 0.5 * float(logq[0])), np.zeros(v.n),
                              len(face) < len(support), 0, 0.0, cert)
    x, fstar, gnorm, iters = _newton_logsumexp(W, logq, theta_f, grad_tol, max_iter)
    return CapacityResult(LogValue(1, 0.5 * fstar), x,
                          len(face) < len(support), iters, gnorm, cert)


def _min_kl(q: np.ndarray, W: np.ndarray, theta: np.ndarray,
            p0: np.ndarray, grad_tol: float = 1e-11, max_iter: int = 200) -> float:
    """Minimize D(p || q) over {p >= 0, sum p = 1, W^T p = theta} by Newton
    steps inside the affine feasible set, starting from interior point p0."""
    s = len(q)
    A = np.vstack([W.T, np.ones(s)])
    # Orthonormal basis of the null space of the constraint matrix.
    u, sv, vh = np.linalg.svd(A)
    rank = int(np.sum(sv > sv.max() * max(A.shape) * np.finfo(float).eps)) if len(sv) else 0
    N = vh[rank:].T
    p = p0.copy()

    def kl(p):
        return float(np.sum(p * (np.log(p) - np.log(q))))

    if N.shape[1] == 0:
        return kl(p)
    f = kl(p)
    for _ in range(max_iter):
        g = N.T @ (np.log(p / q) + 1.0)
        if np.max(np.abs(g)) <= grad_tol:
            break
        h = N.T @ (N / p[:, None])
        try:
            d = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(h, -g, rcond=None)[0]
        slope = float(g @ d)
        if slope >= 0:
            d = -g
            slope = float(g @ d)
        dp = N @ d
        neg = dp < 0
        step = 1.0
        if np.any(neg):
            step = min(1.0, 0.99 * float(np.min(-p[neg] / dp[neg])))
        for _ in range(60):
            pn = p + step * dp
            if np.all(pn > 0):
                fn = kl(pn)
                if fn <= f + 0.25 * step * slope:
                    break
            step *= 0.5
        p, f = pn, fn
    return f


def capacity_kl_form(v: WeightedVector, theta) -> LogValue:
    """log cap_theta(v)^2 computed through the relative-entropy program.

    Requires a unit vector; returns the zero LogValue when theta is outside
    the moment polytope. This path shares no optimization code with
    theta_capacity and serves as an independent cross-check of it.
    """
    v = v.pruned()
    if v.is_zero:
        raise ValueError("capacity of the zero vector is undefined")
    if abs(v.norm_sq - 1.0) > 1e-10:
        raise ValueError(f"capacity_kl_form expects a unit vector, norm^2 = {v.norm_sq}")
    th = rational_vector(theta, v.n)
    cert = _membership_lp(v.support, th)
    if not cert.inside:
        return LogValue.zero()
    face, interior = _minimal_face(v.support, th)
    qs = v.amplitudes_sq()
    support = v.support
    q = np.array([qs[support[j]] for j in face])
    W = np.array([support[j].coords for j in face], dtype=float)
    theta_f = np.array([float(t) for t in th])
    p0 = np.array([float(interior[j]) for j in face])
    val = _min_kl(q, W, theta_f, p0)
    return LogValue(1, -val)
