"""Integer sets, prime subsets, progression counts and equidistribution scans."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .arith import euler_phi, factorize, is_prime_mask, prime_count, small_primes
from .errors import DomainError
from .tuples import LinearFunction


@dataclass(frozen=True)
class IntegerSetSpec:
    """``interval`` is [x, 2x), ``short`` is [x, x + y), ``explicit`` a list."""

    kind: str
    x: int = 0
    y: int = 0
    values: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("interval", "short", "explicit"):
            raise DomainError(f"unknown integer set kind {self.kind!r}")
        if self.kind == "explicit":
            object.__setattr__(self, "values", tuple(sorted({int(v) for v in self.values})))

    @classmethod
    def interval(cls, x: int) -> IntegerSetSpec:
        return cls("interval", int(x))

    @classmethod
    def short(cls, x: int, y: int) -> IntegerSetSpec:
        return cls("short", int(x), int(y))

    @classmethod
    def explicit(cls, values) -> IntegerSetSpec:
        return cls("explicit", values=tuple(values))

    def bounds(self) -> tuple[int, int]:
        """Smallest half-open range containing the set."""
        if self.kind == "interval":
            return self.x, 2 * self.x
        if self.kind == "short":
            return self.x, self.x + self.y
        if not self.values:
            return 0, 0
        return self.values[0], self.values[-1] + 1

    def mask(self, lo: int, hi: int) -> np.ndarray:
        """Membership of ``lo..hi-1``."""
        out = np.zeros(hi - lo, dtype=bool)
        if self.kind == "explicit":
            v = np.asarray(self.values, dtype=np.int64)
            v = v[(v >= lo) & (v < hi)]
            out[v - lo] = True
        else:
            a, b = self.bounds()
            out[max(a, lo) - lo : max(min(b, hi), lo) - lo] = True
        return out

    def __contains__(self, n: int) -> bool:
        if self.kind == "explicit":
            i = np.searchsorted(self.values, n)
            return i < len(self.values) and self.values[i] == n
        a, b = self.bounds()
        return a <= n < b


def count_A(spec: IntegerSetSpec, q: int = 1, a: int = 0) -> int:
    """#{n in A : n = a mod q}."""
    q = int(q)
    if q < 1:
        raise DomainError("q must be >= 1")
    if spec.kind == "explicit":
        return sum(1 for v in spec.values if (v - a) % q == 0)
    lo, hi = spec.bounds()
    if hi <= lo:
        return 0
    # number of n in [lo, hi) with n = a mod q
    return (hi - 1 - a) // q - (lo - 1 - a) // q


def phi_L(L: LinearFunction, q: int) -> int:
    """phi(|a| q) / phi(|a|)."""
    q = int(q)
    if q < 1:
        raise DomainError("q must be >= 1")
    a = abs(L.a)
    return euler_phi(a * q) // euler_phi(a)


@dataclass(frozen=True)
class PrimeSubsetSpec:
    """``all``, ``progression`` (p = a mod q), ``even-index`` (p_2, p_4, ...
    counting p_1 = 2) or ``explicit``."""

    kind: str = "all"
    q: int = 1
    a: int = 0
    values: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("all", "progression", "even-index", "explicit"):
            raise DomainError(f"unknown prime subset kind {self.kind!r}")
        if self.kind == "progression" and self.q < 1:
            raise DomainError("q must be >= 1")
        if self.kind == "explicit":
            object.__setattr__(self, "values", tuple(sorted({int(v) for v in self.values})))

    def mask_values(self, values: np.ndarray) -> np.ndarray:
        """Membership of each entry of ``values`` (any order, any sign)."""
        values = np.asarray(values, dtype=np.int64)
        out = np.zeros(values.shape, dtype=bool)
        if values.size == 0:
            return out
        if self.kind == "explicit":
            return np.isin(values, np.asarray(self.values, dtype=np.int64))
        pos = values >= 2
        if not pos.any():
            return out
        lo, hi = int(values[pos].min()), int(values[pos].max()) + 1
        pm = is_prime_mask(lo, hi)
        if self.kind == "even-index":
            # global index of each prime: pi(lo - 1) + running count
            idx = np.cumsum(pm) + prime_count(lo)
            pm = pm & (idx % 2 == 0)
        elif self.kind == "progression":
            pm = pm & (((np.arange(lo, hi) - self.a) % self.q) == 0)
        out[pos] = pm[values[pos] - lo]
        return out

    def __contains__(self, n: int) -> bool:
        return bool(self.mask_values(np.array([n]))[0])


def L_values(L: LinearFunction, lo: int, hi: int) -> np.ndarray:
    return L.values(lo, hi)


def count_P(spec_P: PrimeSubsetSpec, L: LinearFunction, spec_A: IntegerSetSpec, q: int = 1, a: int = 0) -> int:
    """#{n in A : n = a mod q, L(n) in P}."""
    q = int(q)
    if q < 1:
        raise DomainError("q must be >= 1")
    lo, hi = spec_A.bounds()
    if hi <= lo:
        return 0
    n = np.arange(lo, hi, dtype=np.int64)
    sel = spec_A.mask(lo, hi) & ((n - a) % q == 0)
    vals = L.values(lo, hi)[sel]
    return int(spec_P.mask_values(vals).sum())


@dataclass
class BVReport:
    kind: str
    x: int
    Q_max: int
    B: int
    errors: dict[int, float]
    total: float
    normalization: int
    normalized_total: float
    concentration: float | None
    warnings: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "E_q"])
        for q, e in self.errors.items():
            w.writerow([q, repr(e)])
        return buf.getvalue()

    def to_json(self) -> str:
        d = asdict(self)
        d["errors"] = {str(q): e for q, e in self.errors.items()}
        return json.dumps(d, sort_keys=True, indent=2)


def bv_scan(
    kind: str,
    spec_A: IntegerSetSpec,
    Q_max: int,
    B: int = 1,
    spec_P: PrimeSubsetSpec | None = None,
    L: LinearFunction | None = None,
    theta: float = 1 / 3,
) -> BVReport:
    """Worst-residue progression errors E_q for q <= Q_max.

    Kind ``A`` measures #A(x; q, a) against #A(x)/q; kind ``P`` measures
    #P_{L,A}(x; q, a) against #P_{L,A}(x)/phi_L(q) over residues with
    (L(a), q) = 1 and moduli with (q, B) = 1.
    """
    if kind not in ("A", "P"):
        raise DomainError(f"kind must be 'A' or 'P', got {kind!r}")
    if Q_max < 1:
        raise DomainError("Q_max must be >= 1")
    lo, hi = spec_A.bounds()
    n = np.arange(lo, hi, dtype=np.int64)
    in_A = spec_A.mask(lo, hi)
    warnings = []
    if lo > 1 and Q_max > lo**theta:
        warnings.append(f"Q_max={Q_max} exceeds x^theta={lo**theta:.6g}")
    if kind == "A":
        members = n[in_A]
    else:
        if L is None:
            L = LinearFunction(1, 0)
        spec_P = spec_P or PrimeSubsetSpec()
        vals = L.values(lo, hi)
        members = n[in_A & spec_P.mask_values(vals)]
    total_count = len(members)
    concentration = None
    errors: dict[int, float] = {}
    for q in range(1, Q_max + 1):
        if kind == "P" and math.gcd(q, B) != 1:
            continue
        counts = np.bincount(members % q, minlength=q)
        if kind == "A":
            expected = total_count / q
            dev = np.abs(counts - expected)
            errors[q] = float(dev.max())
            top = counts.max() * q / total_count if total_count else 0.0
            concentration = top if concentration is None else max(concentration, top)
        else:
            ok = np.gcd(L.a * np.arange(q, dtype=np.int64) + L.b, q) == 1
            expected = total_count / phi_L(L, q)
            dev = np.abs(counts[ok] - expected)
            errors[q] = float(dev.max()) if dev.size else 0.0
    total = math.fsum(errors.values())
    if total_count == 0:
        warnings.append("empty set: normalized total undefined")
    return BVReport(
        kind,
        lo,
        int(Q_max),
        int(B),
        errors,
        total,
        total_count,
        total / total_count if total_count else float("nan"),
        concentration,
        warnings,
    )


def rough_indicator(n: int, xi: float, D: int, x: float) -> bool:
    """True iff every prime factor of n exceeds x^xi or divides D."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    bound = float(x) ** float(xi)
    return all(p > bound or D % p == 0 for p in (factorize(n).primes if n > 1 else ()))


def rough_mask(L: LinearFunction, lo: int, hi: int, bound: float, D: int = 1) -> np.ndarray:
    """For lo <= n < hi: no prime p <= bound with p not | D divides L(n)."""
    keep = np.ones(hi - lo, dtype=bool)
    vals_max = max(abs(L(lo)), abs(L(hi - 1))) if hi > lo else 0
    top = int(min(math.floor(bound), vals_max))
    for p in small_primes(top) if top >= 2 else ():
        p = int(p)
        if D % p == 0:
            continue
        root = L.root_mod(p)
        if root is not None:
            keep[(root - lo) % p :: p] = False
    return keep
