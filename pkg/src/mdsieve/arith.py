"""Prime generation, factorization and the basic multiplicative functions.

Everything downstream consumes primes through :func:`is_prime_mask` (a
segmented sieve of Eratosthenes over ``[lo, hi)``) or through
:func:`factorize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError

SEGMENT_LENGTH = 1 << 20
# Largest hi accepted by the sieve.  Anything beyond this is a resource error.
MAX_SIEVE_HI = 10**11
# Largest span hi - lo materialized at once as a boolean mask.
MAX_MASK_SPAN = 1 << 28


@dataclass(frozen=True)
class PrimeTable:
    """The primes in ``[lo, hi)`` in increasing order."""

    lo: int
    hi: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __contains__(self, n: int) -> bool:
        i = np.searchsorted(self.primes, n)
        return bool(i < len(self.primes) and self.primes[i] == n)

    def tolist(self) -> list[int]:
        return [int(p) for p in self.primes]


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def value(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


@lru_cache(maxsize=8)
def _simple_sieve(limit: int) -> np.ndarray:
    """Primes ``<= limit`` by a plain (unsegmented) sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    out = np.flatnonzero(flags).astype(np.int64)
    out.setflags(write=False)
    return out


def small_primes(limit: int) -> np.ndarray:
    """Primes ``p <= limit`` as a read-only int64 array."""
    return _simple_sieve(max(int(limit), 1))


def _check_range(lo: int, hi: int) -> None:
    if lo < 0 or hi < lo:
        raise DomainError(f"need 0 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi > MAX_SIEVE_HI:
        raise ResourceError(f"hi={hi} exceeds the sieve budget {MAX_SIEVE_HI}")


def is_prime_mask(lo: int, hi: int, segment: int = SEGMENT_LENGTH) -> np.ndarray:
    """Boolean array ``m`` with ``m[i]`` true iff ``lo + i`` is prime."""
    lo, hi = int(lo), int(hi)
    _check_range(lo, hi)
    if hi - lo > MAX_MASK_SPAN:
        raise ResourceError(f"span {hi - lo} exceeds mask budget {MAX_MASK_SPAN}")
    out = np.zeros(hi - lo, dtype=bool)
    if hi <= 2:
        return out
    base = small_primes(math.isqrt(hi - 1) + 1)
    for s in range(lo, hi, segment):
        e = min(s + segment, hi)
        seg = out[s - lo : e - lo]
        seg[:] = True
        for p in base:
            p = int(p)
            if p * p >= e:
                break
            start = max(p * p, -(-s // p) * p)
            seg[start - s :: p] = False
        # 0 and 1 are not prime
        if s < 2:
            seg[: 2 - s] = False
    return out


def iter_prime_segments(lo: int, hi: int, segment: int = SEGMENT_LENGTH):
    """Yield arrays of primes in ``[lo, hi)``, one per segment, in order."""
    _check_range(lo, hi)
    for s in range(lo, hi, segment):
        e = min(s + segment, hi)
        mask = is_prime_mask(s, e, segment=segment)
        yield np.flatnonzero(mask).astype(np.int64) + s


def sieve_primes(lo: int, hi: int, segment: int = SEGMENT_LENGTH) -> PrimeTable:
    """All primes in ``[lo, hi)``, ascending."""
    lo, hi = int(lo), int(hi)
    parts = list(iter_prime_segments(lo, hi, segment))
    primes = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return PrimeTable(lo, hi, primes)


def prime_count(hi: int) -> int:
    """pi(hi - 1), i.e. the number of primes ``< hi``."""
    return sum(len(seg) for seg in iter_prime_segments(0, int(hi)))


@dataclass(frozen=True)
class SpfTable:
    """Smallest prime factor of every ``2 <= n <= limit``."""

    limit: int
    spf: np.ndarray

    @classmethod
    def build(cls, limit: int) -> SpfTable:
        limit = int(limit)
        if limit > MAX_MASK_SPAN:
            raise ResourceError(f"SPF table limit {limit} exceeds budget")
        spf = np.zeros(limit + 1, dtype=np.int64)
        for p in small_primes(math.isqrt(limit) if limit >= 4 else 1):
            p = int(p)
            view = spf[p * p :: p]
            view[view == 0] = p
        rest = np.flatnonzero(spf == 0)
        spf[rest] = rest
        spf[:2] = 0
        spf.setflags(write=False)
        return cls(limit, spf)

    def __call__(self, n: int) -> int:
        return int(self.spf[n])


def _trial_division(n: int) -> list[tuple[int, int]]:
    out = []
    for p in (2, 3, 5):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    # 2*3*5 wheel
    steps = (4, 2, 4, 2, 4, 6, 2, 6)
    p, i = 7, 0
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += steps[i]
        i = (i + 1) & 7
    if n > 1:
        out.append((n, 1))
    return out


def factorize(n: int, table: SpfTable | None = None) -> Factorization:
    """Complete factorization of ``n >= 1``.

    Uses the SPF table when ``n <= table.limit`` and trial division over a
    2*3*5 wheel otherwise.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    if table is not None and n <= table.limit:
        out: list[tuple[int, int]] = []
        m = n
        while m > 1:
            p = int(table.spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return Factorization(n, tuple(out))
    return Factorization(n, tuple(_trial_division(n)))


def moebius(n: int, table: SpfTable | None = None) -> int:
    f = factorize(n, table)
    if not f.is_squarefree():
        return 0
    return -1 if len(f.factors) % 2 else 1


def euler_phi(n: int, table: SpfTable | None = None) -> int:
    out = 1
    for p, e in factorize(n, table).factors:
        out *= (p - 1) * p ** (e - 1)
    return out


def prime_divisors(n: int, table: SpfTable | None = None) -> tuple[int, ...]:
    """Distinct primes dividing ``|n|``; empty for ``n`` in {-1, 0, 1}."""
    n = abs(int(n))
    if n <= 1:
        return ()
    return factorize(n, table).primes


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    f = factorize(n)
    return f.factors == ((n, 1),)


def squarefree_divisors(primes) -> list[int]:
    """All products of subsets of the given distinct primes."""
    divs = [1]
    for p in primes:
        divs += [d * p for d in divs]
    return divs
