"""Sieve weights: the cutoff psi, the function F and its companions, y_r,
lambda_d and w_n.

Index vectors are tuples of k positive integers.  A vector ``r`` is in the
support D_k when prod r_i is squarefree and coprime to WB and every prime
dividing r_j has j as its chosen index (see :class:`~mdsieve.tuples.ResidueData`).
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .arith import SpfTable, factorize, small_primes
from .errors import DomainError, ResourceError
from .multfunc import DEFAULT_P0, phi_omega, singular_series
from .tuples import SieveSetup, in_support

# Full lambda tables are built by exhaustive enumeration; refuse beyond this.
MAX_TABLE_ENTRIES = 2_000_000


def smoothstep(u):
    """6u^5 - 15u^4 + 10u^3 clipped to [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


@dataclass(frozen=True)
class SmoothCutoff:
    """Non-increasing C^2 cutoff: 1 up to ``knot``, 0 from 1 on."""

    knot: float = 0.9

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = smoothstep((1.0 - t) / (1.0 - self.knot))
        return float(out) if out.ndim == 0 else out


PSI = SmoothCutoff()


def psi(t):
    return PSI(t)


@dataclass(frozen=True)
class WeightParams:
    setup: SieveSetup
    R: float
    cutoff: SmoothCutoff = PSI
    P0: int = DEFAULT_P0

    def __post_init__(self):
        if not self.R >= 2:
            raise DomainError(f"R must be >= 2, got {self.R}")

    @property
    def k(self) -> int:
        return self.setup.k

    @property
    def T(self) -> float:
        return self.k * math.log(self.k)

    @property
    def U(self) -> float:
        return self.k**-0.5

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    @cached_property
    def normalization(self) -> float:
        """N = (WB / phi(WB))^k * S_{WB}; y_r = N F(...) on the support."""
        s = self.setup
        wb_ratio = math.prod(p / (p - 1) for p in factorize(s.WB).primes) if s.WB > 1 else 1.0
        ss = singular_series(s, D=s.WB, P0=max(self.P0, 2 * s.k * s.k, *s.tuple.ramified_primes(), 2))
        return wb_ratio**s.k * ss.value


def g_factor(params: WeightParams, t):
    """psi(t/U) / (1 + T t)."""
    t = np.asarray(t, dtype=np.float64)
    return params.cutoff(t / params.U) / (1.0 + params.T * t)


def h_factor(params: WeightParams, t):
    """psi(t/2) / (1 + T t), the relaxed factor of F2."""
    t = np.asarray(t, dtype=np.float64)
    return params.cutoff(t / 2.0) / (1.0 + params.T * t)


def F_eval(params: WeightParams, t: Sequence[float], variant: str = "F") -> float:
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (params.k,):
        raise DomainError(f"expected {params.k} coordinates, got shape {t.shape}")
    if np.any(t < 0):
        raise DomainError("coordinates must be >= 0")
    g = g_factor(params, t)
    if variant == "F":
        return float(params.cutoff(t.sum()) * np.prod(g))
    if variant == "F1":
        return float(np.prod(g))
    if variant == "F2":
        h = h_factor(params, t)
        terms = [h[j] * np.prod(np.delete(g, j)) for j in range(params.k)]
        return math.fsum(terms)
    raise DomainError(f"unknown variant {variant!r}")


def _coords(params: WeightParams, r: Sequence[int]) -> np.ndarray:
    return np.log(np.asarray(r, dtype=np.float64)) / params.log_R


def y_r(params: WeightParams, r: Sequence[int]) -> float:
    if not in_support(params.setup, r):
        return 0.0
    return params.normalization * F_eval(params, _coords(params, r))


def support_primes(setup: SieveSetup, limit: float) -> list[int]:
    """Primes p < limit that can occur in a supported vector."""
    hi = int(math.ceil(limit)) - 1
    return [int(p) for p in small_primes(max(hi, 2)) if p < limit and setup.WB % int(p) and setup.allowed_indices(int(p))]


def iter_multiples(
    setup: SieveSetup,
    base: Sequence[int],
    limit: float,
    primes: Sequence[int] | None = None,
):
    """Yield ``(r, prod r, phi_omega(r / base))`` for supported ``r``,
    componentwise multiples of ``base`` with prod r < ``limit``.

    ``base`` itself must be supported; it is yielded first.
    """
    base = tuple(int(x) for x in base)
    start = math.prod(base)
    if start >= limit:
        return
    if primes is None:
        primes = support_primes(setup, limit / start)
    used = set(factorize(start).primes) if start > 1 else set()
    stack = [(0, base, start, 1)]
    while stack:
        i, vec, prod, phw = stack.pop()
        yield vec, prod, phw
        children = []
        for j in range(i, len(primes)):
            p = primes[j]
            if prod * p >= limit:
                break
            if p in used:
                continue
            for idx in setup.allowed_indices(p):
                v = list(vec)
                v[idx] *= p
                children.append((j + 1, tuple(v), prod * p, phw * (p - setup.omega(p))))
        stack.extend(reversed(children))


def lambda_d(params: WeightParams, d: Sequence[int]) -> float:
    """mu(d) d sum_{d | r} y_r / phi_omega(r), by direct enumeration of multiples."""
    setup = params.setup
    if len(d) != setup.k:
        raise DomainError(f"vector length {len(d)} != k = {setup.k}")
    if not in_support(setup, d):
        return 0.0
    dd = math.prod(int(x) for x in d)
    if dd >= params.R:
        return 0.0
    base_phi = phi_omega(setup, dd)
    parts = []
    for vec, _, phw in iter_multiples(setup, d, params.R):
        y = params.normalization * F_eval(params, _coords(params, vec))
        if y:
            parts.append(y / (base_phi * phw))
    mu = -1 if len(factorize(dd).factors) % 2 else 1
    return mu * dd * math.fsum(parts)


def _mu_sqfree(n: int) -> int:
    return -1 if len(factorize(n).factors) % 2 else 1


@dataclass
class LambdaTable:
    """Full y_r and lambda_d tables for one parameter set."""

    params: WeightParams
    y: dict[tuple[int, ...], float]
    phi: dict[tuple[int, ...], int]
    lam: dict[tuple[int, ...], float]
    _residues: list | None = field(default=None, repr=False)

    @classmethod
    def build(cls, params: WeightParams) -> LambdaTable:
        setup = params.setup
        y: dict[tuple[int, ...], float] = {}
        phi: dict[tuple[int, ...], int] = {}
        for vec, _, phw in iter_multiples(setup, (1,) * setup.k, params.R):
            val = params.normalization * F_eval(params, _coords(params, vec))
            if val:
                y[vec] = val
                phi[vec] = phw
            if len(y) > MAX_TABLE_ENTRIES:
                raise ResourceError(f"more than {MAX_TABLE_ENTRIES} support vectors below R={params.R}")
        acc: dict[tuple[int, ...], list[float]] = {}
        for vec, val in y.items():
            share = val / phi[vec]
            for sub in _divisor_vectors(vec):
                acc.setdefault(sub, []).append(share)
        lam = {}
        for d in sorted(acc, key=lambda v: (math.prod(v), v)):
            dd = math.prod(d)
            lam[d] = _mu_sqfree(dd) * dd * math.fsum(acc[d])
        return cls(params, dict(sorted(y.items(), key=lambda kv: (math.prod(kv[0]), kv[0]))), phi, lam)

    @property
    def k(self) -> int:
        return self.params.k

    def __len__(self) -> int:
        return len(self.lam)

    def get(self, d: Sequence[int]) -> float:
        return self.lam.get(tuple(int(x) for x in d), 0.0)

    def size_diagnostic(self) -> float:
        """max |lambda_d| * k^k / (log R)^k."""
        k = self.k
        top = max((abs(v) for v in self.lam.values()), default=0.0)
        return top * k**k / self.params.log_R**k

    def main_term_density(self) -> float:
        """sum_r y_r^2 / phi_omega(r) * phi_omega(W) / W.

        Multiplied by #A this is the exact value of the main term of the
        expanded sum of w_n before any integral approximation.
        """
        s = self.params.setup
        phw = math.prod(p - s.omega(p) for p in factorize(s.W).primes) if s.W > 1 else 1
        return math.fsum(v * v / self.phi[r] for r, v in self.y.items()) * phw / s.W

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"d_{i + 1}" for i in range(self.k)] + ["lambda"])
        for d, v in self.lam.items():
            w.writerow([*d, f"{v:.17g}"])
        return buf.getvalue() if fh is None else ""

    def residue_classes(self) -> list[tuple[int, int, float]]:
        """``(modulus, residue, lambda_d)`` with n = residue mod prod d the
        condition d_i | L_i(n) for all i."""
        if self._residues is None:
            tup = self.params.setup.tuple
            out = []
            for d, v in self.lam.items():
                if v == 0.0:
                    continue
                mod, res = 1, 0
                for i, di in enumerate(d):
                    for p in factorize(di).primes if di > 1 else ():
                        root = tup[i].root_mod(p)
                        res = _crt(res, mod, root, p)
                        mod *= p
                out.append((mod, res, v))
            self._residues = out
        return self._residues


def _divisor_vectors(vec: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    options = []
    for x in vec:
        ps = factorize(x).primes if x > 1 else ()
        divs = [1]
        for p in ps:
            divs += [q * p for q in divs]
        options.append(divs)
    out = [()]
    for divs in options:
        out = [o + (q,) for o in out for q in divs]
    return out


def _crt(r1: int, m1: int, r2: int, m2: int) -> int:
    """Solution mod m1*m2 of x = r1 (m1), x = r2 (m2), coprime moduli."""
    t = ((r2 - r1) * pow(m1, -1, m2)) % m2
    return r1 + m1 * t


def small_prime_mask(setup: SieveSetup, lo: int, hi: int) -> np.ndarray:
    """True where no prime p <= 2k^2 with p not | B divides prod L_i(n)."""
    keep = np.ones(hi - lo, dtype=bool)
    for p in small_primes(setup.small_prime_bound):
        p = int(p)
        if setup.B % p == 0:
            continue
        for root in setup.residue_data(p).roots:
            keep[(root - lo) % p :: p] = False
    return keep


def weights_range(table: LambdaTable, lo: int, hi: int) -> np.ndarray:
    """w_n for ``lo <= n < hi`` as a float array."""
    lo, hi = int(lo), int(hi)
    if hi < lo:
        raise DomainError("need lo <= hi")
    acc = np.zeros(hi - lo, dtype=np.float64)
    for mod, res, v in table.residue_classes():
        acc[(res - lo) % mod :: mod] += v
    acc *= small_prime_mask(table.params.setup, lo, hi)
    return acc * acc


def weight_w(table: LambdaTable, n: int, spf: SpfTable | None = None) -> float:
    """w_n from the factorizations of the L_i(n)."""
    params = table.params
    setup = params.setup
    n = int(n)
    values = [f(n) for f in setup.tuple]
    if any(v == 0 for v in values):
        raise DomainError(f"L_i({n}) = 0 for some i")
    for p in small_primes(setup.small_prime_bound):
        p = int(p)
        if setup.B % p and any(v % p == 0 for v in values):
            return 0.0
    per_index = []
    for i, v in enumerate(values):
        ps = [p for p in factorize(abs(v), spf).primes if setup.WB % p and p < params.R and i in setup.allowed_indices(p)]
        divs = [1]
        for p in ps:
            divs += [q * p for q in divs if q * p < params.R]
        per_index.append(divs)
    vecs = [((), 1)]
    for divs in per_index:
        vecs = [(v + (q,), prod * q) for v, prod in vecs for q in divs if prod * q < params.R]
    total = math.fsum(table.get(v) for v, _ in vecs)
    return total * total


def roundtrip_check(table: LambdaTable) -> float:
    """Max relative error of y_r = mu(r) phi_omega(r) sum_{r | d} lambda_d / d."""
    acc: dict[tuple[int, ...], list[float]] = {}
    for d, v in table.lam.items():
        share = v / math.prod(d)
        for sub in _divisor_vectors(d):
            acc.setdefault(sub, []).append(share)
    worst = 0.0
    for r, y in table.y.items():
        rr = math.prod(r)
        back = _mu_sqfree(rr) * table.phi[r] * math.fsum(acc.get(r, ()))
        worst = max(worst, abs(back - y) / abs(y))
    return worst
