"""Linear functions, admissible tuples and their per-prime residue data.

Indices into a tuple are 0-based throughout the library: ``funcs[0]`` is the
first function, and the "chosen index" for a root mod ``p`` is a 0-based
position.
"""

from __future__ import annotations

import math
import threading
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .arith import factorize, small_primes
from .errors import CapacityError, DomainError, ParseError

INT64_LIMIT = 2**63 - 1
# Direct residue enumeration below this bound, modular inversion above it.
ENUMERATION_LIMIT = 10**5
MAX_K = 12


@dataclass(frozen=True)
class LinearFunction:
    """``L(n) = a*n + b`` with ``a != 0``."""

    a: int
    b: int

    def __post_init__(self):
        if int(self.a) == 0:
            raise DomainError("linear function needs a != 0")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))

    @property
    def content(self) -> int:
        return math.gcd(abs(self.a), abs(self.b))

    def __call__(self, n: int) -> int:
        return self.a * int(n) + self.b

    def values(self, lo: int, hi: int) -> np.ndarray:
        """``L(n)`` for ``lo <= n < hi`` as int64, refusing on overflow."""
        worst = max(abs(self.a * lo + self.b), abs(self.a * (hi - 1) + self.b)) if hi > lo else 0
        if worst > INT64_LIMIT:
            raise OverflowError(f"{self} overflows int64 on [{lo}, {hi})")
        n = np.arange(lo, hi, dtype=np.int64)
        return self.a * n + self.b

    def root_mod(self, p: int) -> int | None:
        """The unique ``n mod p`` with ``p | L(n)``; None if there is none.

        Raises DomainError when ``p`` divides both coefficients (every
        residue is a root).
        """
        a, b = self.a % p, self.b % p
        if a == 0:
            if b == 0:
                raise DomainError(f"{p} divides every value of {self}")
            return None
        return (-b * pow(a, -1, p)) % p

    def __str__(self) -> str:
        sign = "+" if self.b >= 0 else "-"
        return f"{self.a}n {sign} {abs(self.b)}"


@dataclass(frozen=True)
class AdmissibleTuple:
    funcs: tuple[LinearFunction, ...]
    admissible: bool

    @property
    def k(self) -> int:
        return len(self.funcs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> AdmissibleTuple:
        funcs = tuple(LinearFunction(int(a), int(b)) for a, b in pairs)
        if not funcs:
            raise DomainError("a tuple needs at least one function")
        if len(set(funcs)) != len(funcs):
            raise DomainError("functions in a tuple must be distinct")
        return cls(funcs, _admissible(funcs))

    def pairs(self) -> list[tuple[int, int]]:
        return [(f.a, f.b) for f in self.funcs]

    def __iter__(self):
        return iter(self.funcs)

    def __len__(self) -> int:
        return len(self.funcs)

    def __getitem__(self, i: int) -> LinearFunction:
        return self.funcs[i]

    def ramified_primes(self) -> tuple[int, ...]:
        """Primes dividing prod a_i * prod_{i<j} (a_i b_j - a_j b_i).

        Outside this set omega(p) = k exactly.
        """
        ps: set[int] = set()
        for f in self.funcs:
            ps.update(factorize(abs(f.a)).primes)
        for i, f in enumerate(self.funcs):
            for g in self.funcs[i + 1 :]:
                cross = abs(f.a * g.b - g.a * f.b)
                if cross:
                    ps.update(factorize(cross).primes)
        return tuple(sorted(ps))

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.funcs) + "}"


def parse_tuple_text(text: str) -> AdmissibleTuple:
    """Parse the tuple file format: one ``a b`` pair per line, ``#`` comments."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'a b', got {raw!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    if not pairs:
        raise ParseError("tuple text contains no functions")
    try:
        return AdmissibleTuple.from_pairs(pairs)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def parse_inline_tuple(spec: str) -> AdmissibleTuple:
    """Parse ``"a b;a b;..."``."""
    return parse_tuple_text("\n".join(spec.split(";")))


def omega_p(tup: AdmissibleTuple, p: int) -> int:
    """Number of residues ``n mod p`` at which ``prod L_i(n)`` vanishes.

    This is the raw count; the convention omega(p) = 0 for ``p | B`` is
    applied by callers.
    """
    p = int(p)
    if p <= ENUMERATION_LIMIT:
        n = np.arange(p, dtype=np.int64)
        hit = np.zeros(p, dtype=bool)
        for f in tup.funcs:
            hit |= ((f.a % p) * n + (f.b % p)) % p == 0
        return int(hit.sum())
    roots = set()
    for f in tup.funcs:
        if f.a % p == 0:
            if f.b % p == 0:
                return p
            continue
        roots.add(f.root_mod(p))
    return len(roots)


def _admissible(funcs: Sequence[LinearFunction]) -> bool:
    if any(f.content != 1 for f in funcs):
        return False
    probe = AdmissibleTuple(tuple(funcs), False)
    for p in small_primes(len(funcs)):
        if omega_p(probe, int(p)) >= p:
            return False
    return True


def is_admissible(tup: AdmissibleTuple) -> bool:
    """True iff every gcd(a_i, b_i) = 1 and omega(p) < p for all p <= k.

    For p > k each coprime function has at most one root, so omega(p) <= k < p
    and nothing more needs checking.
    """
    return _admissible(tup.funcs)


@dataclass(frozen=True)
class ResidueData:
    """Roots of ``prod L_i`` mod ``p`` with the smallest-index choice.

    ``chosen[i]`` is the smallest (0-based) function index vanishing at
    ``roots[i]``.
    """

    p: int
    omega_p: int
    roots: tuple[int, ...]
    chosen: tuple[int, ...]

    def index_for_root(self, r: int) -> int | None:
        r %= self.p
        for root, j in zip(self.roots, self.chosen):
            if root == r:
                return j
        return None


def compute_residue_data(tup: AdmissibleTuple, p: int) -> ResidueData:
    p = int(p)
    first: dict[int, int] = {}
    if p <= ENUMERATION_LIMIT:
        n = np.arange(p, dtype=np.int64)
        for j, f in enumerate(tup.funcs):
            hits = np.flatnonzero(((f.a % p) * n + (f.b % p)) % p == 0)
            if len(hits) == p:
                raise DomainError(f"{p} divides every value of {f}")
            for r in hits:
                first.setdefault(int(r), j)
    else:
        for j, f in enumerate(tup.funcs):
            r = f.root_mod(p)
            if r is not None:
                first.setdefault(r, j)
    roots = tuple(sorted(first))
    return ResidueData(p, len(roots), roots, tuple(first[r] for r in roots))


@dataclass
class SieveSetup:
    """A tuple together with B and W = prod_{p <= 2k^2, p not | B} p.

    Residue data is computed lazily per prime and cached.
    """

    tuple: AdmissibleTuple
    B: int = 1
    W: int = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.B < 1:
            raise DomainError(f"B must be >= 1, got {self.B}")
        self.W = 1
        for p in small_primes(2 * self.k * self.k):
            if self.B % int(p):
                self.W *= int(p)
        self.WB = self.W * self.B
        if not self.tuple.admissible:
            raise DomainError(f"tuple {self.tuple} is not admissible")

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def k(self) -> int:
        return self.tuple.k

    @property
    def small_prime_bound(self) -> int:
        return 2 * self.k * self.k

    def residue_data(self, p: int) -> ResidueData:
        p = int(p)
        data = self._cache.get(p)
        if data is None:
            with self._lock:
                data = self._cache.get(p)
                if data is None:
                    data = compute_residue_data(self.tuple, p)
                    self._cache[p] = data
        return data

    def omega(self, p: int) -> int:
        """omega(p) with the convention omega(p) = 0 for p | B."""
        if self.B % p == 0:
            return 0
        return self.residue_data(p).omega_p

    def allowed_indices(self, p: int) -> tuple[int, ...]:
        """Indices j with (p, W_j) = 1, i.e. the chosen indices mod p."""
        if self.WB % p == 0:
            return ()
        return self.residue_data(p).chosen

    def in_support(self, d: Sequence[int]) -> bool:
        return in_support(self, d)


def residue_data(setup: SieveSetup, p: int) -> ResidueData:
    return setup.residue_data(p)


def in_support(setup: SieveSetup, d: Sequence[int]) -> bool:
    """Membership of the index vector ``d`` in the weight support D_k."""
    if len(d) != setup.k:
        raise DomainError(f"vector length {len(d)} != k = {setup.k}")
    if any(int(x) < 1 for x in d):
        raise DomainError("components must be >= 1")
    prod = math.prod(int(x) for x in d)
    if math.gcd(prod, setup.WB) != 1:
        return False
    seen: set[int] = set()
    for j, dj in enumerate(d):
        for p, e in factorize(int(dj)).factors:
            if e > 1 or p in seen:
                return False
            seen.add(p)
            if j not in setup.allowed_indices(p):
                return False
    return True


@dataclass(frozen=True)
class GreedyResult:
    tuple: AdmissibleTuple
    shifts: tuple[int, ...]
    survivors: tuple[int, ...]
    q: int
    a: int
    interval_length: int


def greedy_admissible(k: int, interval_length: int, q: int = 1, a: int = 0) -> GreedyResult:
    """Build ``{q n + a + q b_i}`` by sieving shifts ``0 <= b < interval_length``.

    For each prime ``p <= k`` in turn the residue class of ``b mod p`` with the
    fewest survivors is removed (smallest residue on ties); the first ``k``
    survivors become the shifts.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if q < 1 or math.gcd(a, q) != 1:
        raise DomainError(f"need q >= 1 and gcd(a, q) = 1, got a={a}, q={q}")
    survivors = list(range(int(interval_length)))
    for p in small_primes(k):
        p = int(p)
        counts = [0] * p
        for b in survivors:
            counts[b % p] += 1
        worst = min(range(p), key=lambda r: (counts[r], r))
        survivors = [b for b in survivors if b % p != worst]
    if len(survivors) < k:
        raise CapacityError(
            f"only {len(survivors)} shifts survive in an interval of length "
            f"{interval_length}; need k = {k}"
        )
    shifts = tuple(survivors[:k])
    tup = AdmissibleTuple.from_pairs((q, a + q * b) for b in shifts)
    return GreedyResult(tup, shifts, tuple(survivors), q, a, int(interval_length))
