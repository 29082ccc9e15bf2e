"""Direct scans for dense prime clusters and congruent strings of
consecutive primes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .arith import SEGMENT_LENGTH, is_prime_mask, iter_prime_segments
from .errors import DomainError


@dataclass(frozen=True)
class ClusterHit:
    x0: int
    y: int
    count: int
    primes: tuple[int, ...]


@dataclass(frozen=True)
class StringHit:
    p_n: int
    m: int
    q: int
    a: int
    gap: int
    primes: tuple[int, ...]


def scan_dense_intervals(lo: int, hi: int, y: int, threshold: int) -> list[ClusterHit]:
    """Every x0 in [lo, hi] with at least ``threshold`` primes in [x0, x0 + y]."""
    lo, hi, y = int(lo), int(hi), int(y)
    if y < 0 or hi < lo:
        raise DomainError("need y >= 0 and lo <= hi")
    span_hi = hi + y + 1
    mask = is_prime_mask(lo, span_hi)
    cum = np.concatenate([[0], np.cumsum(mask, dtype=np.int64)])
    starts = np.arange(hi - lo + 1)
    counts = cum[starts + y + 1] - cum[starts]
    primes = np.flatnonzero(mask) + lo
    hits = []
    for i in np.flatnonzero(counts >= threshold):
        x0 = lo + int(i)
        a = np.searchsorted(primes, x0)
        b = np.searchsorted(primes, x0 + y, side="right")
        hits.append(ClusterHit(x0, y, int(counts[i]), tuple(int(p) for p in primes[a:b])))
    return hits


def scan_congruent_strings(
    x_hi: int, q: int, a: int, m: int, epsilon: float = math.inf, segment: int = SEGMENT_LENGTH
) -> tuple[list[StringHit], int]:
    """Runs p_n, ..., p_{n+m} of consecutive primes below x_hi, all = a mod q,
    with p_{n+m} - p_n <= epsilon * log p_n.  Returns (hits, count)."""
    q, a, m = int(q), int(a), int(m)
    if q < 1 or math.gcd(a, q) != 1:
        raise DomainError(f"need q >= 1 and gcd(a, q) = 1, got a={a}, q={q}")
    if m < 0:
        raise DomainError("m must be >= 0")
    hits: list[StringHit] = []
    carry = np.zeros(0, dtype=np.int64)
    for seg in iter_prime_segments(2, int(x_hi), segment):
        ps = np.concatenate([carry, seg])
        if len(ps) <= m:
            carry = ps
            continue
        good = (ps - a) % q == 0
        # run[i] true iff ps[i .. i+m] all good
        window = np.lib.stride_tricks.sliding_window_view(good, m + 1).all(axis=1)
        gaps = ps[m:] - ps[: len(ps) - m]
        ok = window & (gaps <= epsilon * np.log(ps[: len(ps) - m].astype(np.float64)))
        for i in np.flatnonzero(ok):
            hits.append(StringHit(int(ps[i]), m, q, a, int(gaps[i]), tuple(int(p) for p in ps[i : i + m + 1])))
        carry = ps[len(ps) - m :] if m else ps[:0]
    return hits, len(hits)


def intervals_csv(hits: list[ClusterHit]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x0", "count"])
    for h in hits:
        w.writerow([h.x0, h.count])
    return buf.getvalue()


def strings_csv(hits: list[StringHit]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p_n", "gap"])
    for h in hits:
        w.writerow([h.p_n, h.gap])
    return buf.getvalue()
