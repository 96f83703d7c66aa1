"""Monte Carlo oracle for the Haar-integral form of projection norms.

The invariant part of v^{tensor k} has squared norm equal to the Haar average
of <v, u v>^k; multiplying the integrand by d_lambda times the conjugate
character picks out one isotypic component instead. This module estimates
both by plain Monte Carlo for the torus U(1)^n, SU(2), and U(2), as an
independent check on the exact dynamic-programming and Schur-Weyl values.

Sampling is counter-based: block b of a run with seed s draws from a
generator keyed by (s, b), so estimates are bit-identical for a given seed
regardless of how blocks are scheduled. CAPDUAL_THREADS > 1 evaluates blocks
in a thread pool; the reduction is ordered by block index either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Partition, WeightedVector

__all__ = [
    "McEstimate",
    "UnitaryOrbitVector",
    "sample_haar_unitary",
    "mc_invariant_norm",
    "mc_isotypic_norm",
]

BLOCK = 1 << 16
MAX_K = 8
MAX_SAMPLES = 10**7
MAX_DIM = 8


@dataclass(frozen=True)
class McEstimate:
    mean: complex
    stderr: float
    samples: int
    seed: int


@dataclass(frozen=True)
class UnitaryOrbitVector:
    """A unit vector in the defining representation of SU(2) ("su2", a pair
    of amplitudes) or in 2x2 matrices under left multiplication by U(2)
    ("u2", a matrix of unit Frobenius norm)."""

    group: str
    data: tuple

    def __post_init__(self) -> None:
        if self.group == "su2":
            v = np.array(self.data, dtype=complex)
            if v.shape != (2,):
                raise ValueError("su2 vector must have 2 components")
            if abs(np.vdot(v, v).real - 1.0) > 1e-10:
                raise ValueError("su2 vector must be unit norm")
            object.__setattr__(self, "data", tuple(complex(t) for t in v))
        elif self.group == "u2":
            a = np.array(self.data, dtype=complex)
            if a.shape != (2, 2):
                raise ValueError("u2 datum must be a 2x2 matrix")
            if abs(np.sum(np.abs(a) ** 2) - 1.0) > 1e-10:
                raise ValueError("u2 matrix must have unit Frobenius norm")
            object.__setattr__(self, "data",
                               tuple(tuple(complex(t) for t in row) for row in a))
        else:
            raise ValueError(f"unsupported group tag {self.group!r}")

    def matrix(self) -> np.ndarray:
        return np.array(self.data, dtype=complex)


def sample_haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-distributed n x n unitary: complex Ginibre, QR, and the
    R-diagonal phase folded into Q so the factorization is unique."""
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"n must be in 1..{MAX_DIM}")
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, block]))


# ---------------------------------------------------------------------------
# Per-block integrand evaluation. Each returns the complex array of
# d_lambda * conj(chi_lambda(u)) * <v, u v>^k over the block's samples.

def _torus_block(v: WeightedVector, k: int, lam, rng, size: int) -> np.ndarray:
    W = np.array([w.coords for w in v.support], dtype=float)
    qs = v.amplitudes_sq()
    q = np.array([qs[w] for w in v.support])
    x = rng.uniform(0.0, 2.0 * math.pi, (size, v.n))
    f = np.exp(1j * (x @ W.T)) @ q
    z = f**k
    if lam is not None:
        z = z * np.exp(-1j * (x @ np.array(lam, dtype=float)))
    return z


def _su2_samples(rng, size: int) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) of Haar SU(2) elements [[a, b], [-conj b, conj a]],
    uniform on the unit quaternions."""
    g = rng.standard_normal((size, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]


def _su2_block(v: np.ndarray, k: int, m: int | None, rng, size: int) -> np.ndarray:
    a, b = _su2_samples(rng, size)
    v0, v1 = v
    f = (np.conj(v0) * (a * v0 + b * v1)
         + np.conj(v1) * (-np.conj(b) * v0 + np.conj(a) * v1))
    z = f**k
    if m is not None:
        # chi_m at eigenphases exp(+-i phi), cos phi = Re alpha
        cosphi = np.clip(a.real, -1.0, 1.0)
        sinphi = np.sqrt(np.clip(1.0 - cosphi**2, 0.0, None))
        phi = np.arccos(cosphi)
        safe = sinphi > 1e-8
        chi = np.where(safe, np.sin((m + 1) * phi) / np.where(safe, sinphi, 1.0),
                       (m + 1.0) * np.sign(cosphi) ** m)
        z = z * ((m + 1) * chi)
    return z


def _u2_haar(rng, size: int) -> np.ndarray:
    """Batch of Haar 2x2 unitaries by Gram-Schmidt on Ginibre columns; the
    triangular diagonal comes out real positive, which is exactly the phase
    convention that makes Q Haar."""
    g = (rng.standard_normal((size, 2, 2)) + 1j * rng.standard_normal((size, 2, 2)))
    c0 = g[:, :, 0]
    q0 = c0 / np.linalg.norm(c0, axis=1, keepdims=True)
    r01 = np.sum(np.conj(q0) * g[:, :, 1], axis=1, keepdims=True)
    c1 = g[:, :, 1] - q0 * r01
    q1 = c1 / np.linalg.norm(c1, axis=1, keepdims=True)
    return np.stack([q0, q1], axis=2)


def _u2_block(A: np.ndarray, k: int, lam, rng, size: int) -> np.ndarray:
    sigma = A @ A.conj().T
    u = _u2_haar(rng, size)
    f = np.einsum("bij,ji->b", u, sigma)
    z = f**k
    if lam is not None:
        l1, l2 = lam
        t = u[:, 0, 0] + u[:, 1, 1]
        dt = u[:, 0, 0] * u[:, 1, 1] - u[:, 0, 1] * u[:, 1, 0]
        disc = np.sqrt(t * t - 4.0 * dt + 0j)
        z1 = (t + disc) / 2.0
        z2 = (t - disc) / 2.0
        dlam = l1 - l2 + 1
        gap = z1 - z2
        safe = np.abs(gap) > 1e-8
        num = z1 ** (l1 + 1) * z2**l2 - z2 ** (l1 + 1) * z1**l2
        chi = np.where(safe, num / np.where(safe, gap, 1.0),
                       dlam * ((z1 + z2) / 2.0) ** (l1 + l2))
        z = z * (dlam * np.conj(chi))
    return z


def _run_blocks(block_fn: Callable[[np.random.Generator, int], np.ndarray],
                samples: int, seed: int) -> McEstimate:
    if not 1 <= samples <= MAX_SAMPLES:
        raise ValueError(f"samples must be in 1..{MAX_SAMPLES}")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    sizes = [BLOCK] * (samples // BLOCK)
    if samples % BLOCK:
        sizes.append(samples % BLOCK)

    def one(block: int) -> tuple[float, float, float]:
        z = block_fn(_block_rng(seed, block), sizes[block])
        return (float(z.real.sum()), float(z.imag.sum()),
                float((np.abs(z) ** 2).sum()))

    threads = int(os.environ.get("CAPDUAL_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]
    mean = complex(math.fsum(p[0] for p in parts) / samples,
                   math.fsum(p[1] for p in parts) / samples)
    msq = math.fsum(p[2] for p in parts) / samples
    var = max(msq - abs(mean) ** 2, 0.0)
    return McEstimate(mean, math.sqrt(var / samples), samples, seed)


def _dispatch(instance, k: int, lam) -> Callable[[np.random.Generator, int], np.ndarray]:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in 1..{MAX_K}")
    if isinstance(instance, WeightedVector):
        v = instance.pruned()
        if v.is_zero:
            raise ValueError("zero vector has no Haar estimate")
        coords = None
        if lam is not None:
            coords = tuple(lam.coords) if hasattr(lam, "coords") else tuple(lam)
            if len(coords) != v.n:
                raise ValueError("lambda must match the torus rank")
        return lambda rng, size: _torus_block(v, k, coords, rng, size)
    if isinstance(instance, UnitaryOrbitVector):
        if instance.group == "su2":
            m = None
            if lam is not None:
                parts = lam.parts if isinstance(lam, Partition) else (
                    tuple(lam) if isinstance(lam, (tuple, list)) else (int(lam),))
                if len(parts) > 2:
                    raise ValueError("su2 label needs at most 2 parts")
                m = parts[0] - (parts[1] if len(parts) > 1 else 0)
            v = np.array(instance.data, dtype=complex)
            return lambda rng, size: _su2_block(v, k, m, rng, size)
        pair = None
        if lam is not None:
            parts = lam.parts if isinstance(lam, Partition) else tuple(lam)
            if len(parts) > 2:
                raise ValueError("u2 label needs at most 2 parts")
            pair = (parts[0], parts[1] if len(parts) > 1 else 0)
        A = instance.matrix()
        return lambda rng, size: _u2_block(A, k, pair, rng, size)
    raise TypeError(f"unsupported instance {type(instance).__name__}")


def mc_invariant_norm(instance, k: int, samples: int = 10**6,
                      seed: int = 0) -> McEstimate:
    """Monte Carlo estimate of the squared norm of the invariant part of
    v^{tensor k}, the Haar average of <v, u v>^k."""
    return _run_blocks(_dispatch(instance, k, None), samples, seed)


def mc_isotypic_norm(instance, k: int, lam, samples: int = 10**6,
                     seed: int = 0) -> McEstimate:
    """Monte Carlo estimate of the squared norm of the lambda-isotypic part
    of v^{tensor k}: the Haar average of d_lambda conj(chi_lambda) <v,u v>^k."""
    return _run_blocks(_dispatch(instance, k, lam), samples, seed)
