"""Shared domain types: weight vectors, log-domain scalars, partitions, reports.

Quantities that decay or grow exponentially in the tensor power k are carried
as LogValue (a sign together with the natural log of the magnitude) so that
runs with k up to 10^4 neither underflow nor overflow IEEE doubles. All types
here are immutable value types and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Sequence, Union

__all__ = [
    "BigNat",
    "MAX_WEIGHT_COORD",
    "AMPLITUDE_SQ_FLOOR",
    "LogValue",
    "log_sum_exp",
    "log_binomial",
    "WeightVector",
    "WeightedVector",
    "Partition",
    "ProbVector",
    "ConvergenceReport",
    "as_fraction",
    "rational_vector",
    "fraction_log",
]

# Exact nonnegative integers are plain Python ints, which are arbitrary
# precision already; the alias documents intent at API boundaries.
BigNat = int

# Largest admissible absolute value of a weight coordinate.
MAX_WEIGHT_COORD = 10**6

# Squared amplitudes below this floor are treated as exact zeros when pruning.
AMPLITUDE_SQ_FLOOR = 1e-30


def _lse(xs: Sequence[float]) -> float:
    """Plain log-sum-exp of finite-or-(-inf) log magnitudes."""
    if not xs:
        return -math.inf
    m = max(xs)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _log1mexp(d: float) -> float:
    """log(1 - e^d) for d <= 0, accurate near both endpoints."""
    if d == -math.inf:
        return 0.0
    if d > -math.log(2.0):
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


@dataclass(frozen=True)
class LogValue:
    """A real number stored as (sign, log magnitude).

    sign is -1, 0 or +1; for sign 0 the magnitude is fixed to -inf so that
    zero has a single representation.
    """

    sign: int
    log_mag: float

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if self.sign == 0 and self.log_mag != -math.inf:
            object.__setattr__(self, "log_mag", -math.inf)
        if math.isnan(self.log_mag):
            raise ValueError("log magnitude must not be NaN")

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(0, -math.inf)

    @staticmethod
    def one() -> "LogValue":
        return LogValue(1, 0.0)

    @staticmethod
    def from_float(x: float) -> "LogValue":
        if x == 0:
            return LogValue.zero()
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent {x} as a LogValue")
        return LogValue(1 if x > 0 else -1, math.log(abs(x)))

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_mag)
        except OverflowError:
            return self.sign * math.inf

    def __mul__(self, other: "LogValue") -> "LogValue":
        s = self.sign * other.sign
        if s == 0:
            return LogValue.zero()
        return LogValue(s, self.log_mag + other.log_mag)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        s = self.sign * other.sign
        if s == 0:
            return LogValue.zero()
        return LogValue(s, self.log_mag - other.log_mag)

    def __pow__(self, k: int) -> "LogValue":
        if not isinstance(k, int):
            raise TypeError("LogValue exponents must be integers")
        if self.sign == 0:
            if k <= 0:
                raise ZeroDivisionError("zero LogValue to a nonpositive power")
            return LogValue.zero()
        s = 1 if (self.sign > 0 or k % 2 == 0) else -1
        return LogValue(s, self.log_mag * k)

    def __neg__(self) -> "LogValue":
        return LogValue(-self.sign, self.log_mag)

    def __abs__(self) -> "LogValue":
        return LogValue(abs(self.sign), self.log_mag)

    def __add__(self, other: "LogValue") -> "LogValue":
        return log_sum_exp((self, other))

    def __sub__(self, other: "LogValue") -> "LogValue":
        return log_sum_exp((self, -other))

    def isclose(self, other: "LogValue", rel_tol: float = 1e-12) -> bool:
        if self.sign != other.sign:
            return self.sign == other.sign == 0
        if self.sign == 0:
            return True
        return math.isclose(self.log_mag, other.log_mag, rel_tol=rel_tol, abs_tol=rel_tol)


def log_sum_exp(values: Iterable[LogValue]) -> LogValue:
    """Exact-sign signed sum of LogValues via two-sided log-sum-exp.

    Positive and negative contributions are each collapsed with the max-shift
    trick and the smaller side is subtracted in log space. An empty iterable
    sums to zero, and exactly cancelling sides return the zero LogValue.
    """
    pos: list[float] = []
    neg: list[float] = []
    for v in values:
        if v.sign > 0:
            pos.append(v.log_mag)
        elif v.sign < 0:
            neg.append(v.log_mag)
    lp = _lse(pos)
    ln = _lse(neg)
    if lp == ln:
        return LogValue.zero()
    if lp > ln:
        return LogValue(1, lp + _log1mexp(ln - lp))
    return LogValue(-1, ln + _log1mexp(lp - ln))


def log_binomial(k: int, j: int) -> float:
    """log C(k, j) via lgamma; raises ValueError outside 0 <= j <= k."""
    if not isinstance(k, int) or not isinstance(j, int):
        raise TypeError("log_binomial takes integer arguments")
    if j < 0 or j > k:
        raise ValueError(f"binomial index out of range: C({k}, {j})")
    return math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1)


def fraction_log(x: Union[Fraction, int]) -> LogValue:
    """Exact-rational to LogValue; math.log handles huge integers directly."""
    fr = Fraction(x)
    if fr == 0:
        return LogValue.zero()
    sign = 1 if fr > 0 else -1
    return LogValue(sign, math.log(abs(fr.numerator)) - math.log(fr.denominator))


RationalLike = Union[Rational, int, float, str]


def as_fraction(x: RationalLike, tol: float = 1e-9) -> Fraction:
    """Coerce a rational-like input (Fraction, int, "p/q" string, float) to Fraction.

    Floats are rationalized to the nearest fraction with denominator at most
    10^6 and rejected if that approximation is farther than tol.
    """
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot rationalize {x}")
        fr = Fraction(x).limit_denominator(10**6)
        if abs(fr - Fraction(x)) > tol:
            raise ValueError(f"{x} is not within {tol} of a small rational")
        return fr
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def rational_vector(xs: Sequence[RationalLike], n: int | None = None,
                    tol: float = 1e-9) -> tuple[Fraction, ...]:
    vec = tuple(as_fraction(x, tol) for x in xs)
    if n is not None and len(vec) != n:
        raise ValueError(f"expected a vector of length {n}, got {len(vec)}")
    return vec


@dataclass(frozen=True, order=True)
class WeightVector:
    """An integer weight of the torus, i.e. a point of the character lattice."""

    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 1:
            raise ValueError("weight vectors must have at least one coordinate")
        for c in coords:
            if abs(c) > MAX_WEIGHT_COORD:
                raise ValueError(f"weight coordinate {c} exceeds bound {MAX_WEIGHT_COORD}")

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[int]:
        return iter(self.coords)

    def __add__(self, other: "WeightVector") -> "WeightVector":
        return WeightVector(tuple(a + b for a, b in zip(self.coords, other.coords, strict=True)))

    def __sub__(self, other: "WeightVector") -> "WeightVector":
        return WeightVector(tuple(a - b for a, b in zip(self.coords, other.coords, strict=True)))

    def __neg__(self) -> "WeightVector":
        return WeightVector(tuple(-a for a in self.coords))

    def dot(self, x: Sequence[float]) -> float:
        return sum(a * b for a, b in zip(self.coords, x, strict=True))


WeightLike = Union[WeightVector, Sequence[int], int]


def _as_weight(w: WeightLike, n: int) -> WeightVector:
    if isinstance(w, WeightVector):
        wv = w
    elif isinstance(w, int):
        wv = WeightVector((w,))
    else:
        wv = WeightVector(tuple(w))
    if len(wv) != n:
        raise ValueError(f"weight {wv.coords} does not live in Z^{n}")
    return wv


@dataclass(frozen=True)
class WeightedVector:
    """A vector in a torus representation, stored by weight components.

    terms maps each occupied weight to its complex amplitude. Weights are
    pairwise distinct and canonically sorted; exact-zero amplitudes are
    dropped at construction, so an empty term list is the zero vector.
    """

    n: int
    terms: tuple[tuple[WeightVector, complex], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for w, amp in self.terms:
            wv = _as_weight(w, self.n)
            c = complex(amp)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite amplitude {c} at weight {wv.coords}")
            if c != 0:
                cleaned.append((wv, c))
        cleaned.sort(key=lambda t: t[0].coords)
        seen = set()
        for wv, _ in cleaned:
            if wv.coords in seen:
                raise ValueError(f"duplicate weight {wv.coords}")
            seen.add(wv.coords)
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def from_terms(cls, n: int, terms: Mapping[WeightLike, complex] | Iterable[tuple[WeightLike, complex]]) -> "WeightedVector":
        items = terms.items() if isinstance(terms, Mapping) else terms
        return cls(n, tuple((w, a) for w, a in items))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def support(self) -> tuple[WeightVector, ...]:
        return tuple(w for w, _ in self.terms)

    @property
    def norm_sq(self) -> float:
        return sum(abs(c) ** 2 for _, c in self.terms)

    def amplitudes_sq(self) -> dict[WeightVector, float]:
        return {w: abs(c) ** 2 for w, c in self.terms}

    def born(self) -> dict[WeightVector, float]:
        """Normalized squared amplitudes (a probability over the support)."""
        ns = self.norm_sq
        if ns == 0:
            raise ValueError("the zero vector carries no Born distribution")
        return {w: abs(c) ** 2 / ns for w, c in self.terms}

    def pruned(self, floor: float = AMPLITUDE_SQ_FLOOR) -> "WeightedVector":
        """Drop components with squared amplitude below floor (treated as exact zeros)."""
        return WeightedVector(self.n, tuple((w, c) for w, c in self.terms if abs(c) ** 2 >= floor))

    def normalized(self) -> "WeightedVector":
        ns = self.norm_sq
        if ns == 0:
            raise ValueError("cannot normalize the zero vector")
        s = 1.0 / math.sqrt(ns)
        return WeightedVector(self.n, tuple((w, c * s) for w, c in self.terms))

    def scaled_by_character(self, x0: Sequence[float]) -> "WeightedVector":
        """Multiply each component by e^{<w, x0>} (a positive Borel rescaling)."""
        return WeightedVector(
            self.n, tuple((w, c * math.exp(w.dot(x0))) for w, c in self.terms))


@dataclass(frozen=True, order=True)
class Partition:
    """An integer partition; trailing zeros are stripped to a canonical form."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts)
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be non-increasing, got {parts}")
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def padded(self, n: int) -> tuple[int, ...]:
        if len(self.parts) > n:
            raise ValueError(f"partition {self.parts} has more than {n} parts")
        return self.parts + (0,) * (n - len(self.parts))


@dataclass(frozen=True)
class ProbVector:
    """A probability vector validated to machine accuracy."""

    entries: tuple[float, ...]

    def __post_init__(self) -> None:
        entries = tuple(float(p) for p in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("probability vector must be nonempty")
        if any(p < 0 for p in entries):
            raise ValueError(f"negative probability in {entries}")
        if abs(sum(entries) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {sum(entries)}, not 1")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[float]:
        return iter(self.entries)

    @property
    def sorted_desc(self) -> bool:
        return all(self.entries[i] >= self.entries[i + 1] for i in range(len(self.entries) - 1))


@dataclass
class ConvergenceReport:
    """A tabular per-k report with named columns and free-form metadata.

    Producers document their column names; every log-scale column uses
    natural logarithms. The conventional duality gap column is nonnegative
    up to round-off whenever weak duality applies.
    """

    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def check_weak_duality(self, gap_column: str = "gap", tol: float = 1e-10) -> bool:
        return all(g >= -tol for g in self.column(gap_column) if not math.isnan(g))
