"""Empirical weighted sums against their predicted main terms, the
pigeonhole extraction, and exact checks of the local sums S_p.

All n-range work is split into fixed shards; partial sums are combined in
shard order with ``math.fsum`` so the result does not depend on ``jobs``.
"""

from __future__ import annotations

import itertools
import math
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .arith import euler_phi, factorize, is_prime, small_primes
from .dist import IntegerSetSpec, PrimeSubsetSpec, count_A, count_P, phi_L, rough_mask
from .errors import DomainError, PreconditionError
from .integrals import DEFAULT_GRID_STEP, integral_IJ
from .multfunc import DEFAULT_P0, delta_L, phi_omega, singular_series
from .tuples import LinearFunction, SieveSetup, in_support
from .weights import LambdaTable, WeightParams, weights_range

SHARD = 1 << 21
# Upper-bound style reports flag empirical/bound above this.
BOUND_RATIO_FLAG = 100.0
MAX_D = 10**6


@dataclass(frozen=True)
class SieveConfig:
    setup: SieveSetup
    A: IntegerSetSpec
    P: PrimeSubsetSpec = PrimeSubsetSpec()
    r_exp: float = 0.1
    theta: float = 1 / 3
    P0: int = DEFAULT_P0
    grid_step: float = DEFAULT_GRID_STEP
    jobs: int = 1

    @property
    def x(self) -> int:
        return self.A.bounds()[0] if self.A.kind != "explicit" else max(self.A.bounds()[0], 2)

    @property
    def k(self) -> int:
        return self.setup.k

    @property
    def R(self) -> float:
        return max(float(self.x) ** self.r_exp, 2.0)

    def describe(self) -> dict:
        return {
            "tuple": [list(p) for p in self.setup.tuple.pairs()],
            "B": self.setup.B,
            "W": self.setup.W,
            "A": {"kind": self.A.kind, "x": self.A.x, "y": self.A.y, "values": list(self.A.values)},
            "P": {"kind": self.P.kind, "q": self.P.q, "a": self.P.a, "values": list(self.P.values)},
            "x": self.x,
            "k": self.k,
            "R": self.R,
            "r_exp": self.r_exp,
            "theta": self.theta,
            "P0": self.P0,
            "grid_step": self.grid_step,
        }


class SieveContext:
    """Lazily built tables and constants shared by the sums."""

    def __init__(self, config: SieveConfig):
        self.config = config

    @cached_property
    def params(self) -> WeightParams:
        return WeightParams(self.config.setup, self.config.R, P0=self.config.P0)

    @cached_property
    def table(self) -> LambdaTable:
        return LambdaTable.build(self.params)

    @cached_property
    def singular_B(self) -> float:
        s = self.config.setup
        P0 = max(self.config.P0, 2 * s.k * s.k, *s.tuple.ramified_primes(), *factorize(s.B).primes, 2)
        return singular_series(s, D=s.B, P0=P0).value

    @cached_property
    def I_k(self) -> float:
        return integral_IJ(self.config.k, "I", grid_step=self.config.grid_step).value

    @cached_property
    def J_k(self) -> float:
        return integral_IJ(self.config.k, "J", grid_step=self.config.grid_step).value

    @cached_property
    def count_A(self) -> int:
        return count_A(self.config.A)

    @property
    def B_ratio(self) -> float:
        B = self.config.setup.B
        return B / euler_phi(B)

    def policy_warnings(self) -> list[str]:
        c = self.config
        out = []
        lo, hi = c.x ** (c.theta / 10), c.x ** (c.theta / 3)
        if not lo <= c.R <= hi:
            out.append(f"R={c.R:.6g} outside [x^(theta/10), x^(theta/3)] = [{lo:.6g}, {hi:.6g}]")
        return out


@dataclass
class PropReport:
    which: str
    empirical: float
    predicted: float
    ratio: float | None
    parameters: dict
    runtime: float | None
    warnings: list[str] = field(default_factory=list)
    exact_main_term: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _shards(lo: int, hi: int) -> list[tuple[int, int]]:
    return [(s, min(s + SHARD, hi)) for s in range(lo, hi, SHARD)]


def _shard_sum(job) -> float:
    table, A, P, kind, extra, lo, hi = job
    w = weights_range(table, lo, hi) * A.mask(lo, hi)
    tup = table.params.setup.tuple
    if kind == "S1":
        f = w
    elif kind == "S2":
        m = extra
        f = w * P.mask_values(tup[m].values(lo, hi))
    elif kind == "S3":
        L0, bound, D = extra
        f = w * rough_mask(L0, lo, hi, bound, D)
    elif kind == "S4":
        m, bound, B = extra
        f = w * _small_divisor_counts(tup[m], lo, hi, bound, B)
    else:
        raise DomainError(kind)
    return math.fsum(f)


def _small_divisor_counts(L: LinearFunction, lo: int, hi: int, bound: float, B: int) -> np.ndarray:
    """#{p | L(n) : p < bound, p not | B} for lo <= n < hi."""
    cnt = np.zeros(hi - lo, dtype=np.int64)
    top = math.ceil(bound) - 1
    for p in small_primes(top) if top >= 2 else ():
        p = int(p)
        if p >= bound or B % p == 0:
            continue
        root = L.root_mod(p)
        if root is not None:
            cnt[(root - lo) % p :: p] += 1
    return cnt


def _run(ctx: SieveContext, kind: str, extra) -> float:
    c = ctx.config
    lo, hi = c.A.bounds()
    if hi <= lo:
        return 0.0
    jobs = [(ctx.table, c.A, c.P, kind, extra, a, b) for a, b in _shards(lo, hi)]
    if c.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=c.jobs) as pool:
            parts = list(pool.map(_shard_sum, jobs))
    else:
        parts = [_shard_sum(j) for j in jobs]
    return math.fsum(parts)


def _report(which, empirical, predicted, ctx, extra_params, started, warnings, exact=None) -> PropReport:
    params = ctx.config.describe()
    params.update(extra_params)
    ratio = empirical / predicted if predicted else None
    return PropReport(which, empirical, predicted, ratio, params, time.perf_counter() - started, warnings, exact)


def _as_context(obj) -> SieveContext:
    return obj if isinstance(obj, SieveContext) else SieveContext(obj)


def sum_S1(config) -> PropReport:
    """sum_{n in A} w_n against (B/phi(B))^k S_B #A (log R)^k I_k."""
    started = time.perf_counter()
    ctx = _as_context(config)
    c = ctx.config
    warnings = ctx.policy_warnings()
    nA = ctx.count_A
    if nA == 0:
        warnings.append("A is empty")
    emp = _run(ctx, "S1", None)
    logR = math.log(c.R)
    pred = ctx.B_ratio**c.k * ctx.singular_B * nA * logR**c.k * ctx.I_k
    exact = nA * ctx.table.main_term_density()
    return _report("S1", emp, pred, ctx, {"I_k": ctx.I_k, "singular_series_B": ctx.singular_B}, started, warnings, exact)


def _check_index(c: SieveConfig, m: int) -> None:
    if not 0 <= m < c.k:
        raise DomainError(f"m_index={m} out of range for k={c.k} (0-based)")


def sum_S2(config, m_index: int) -> PropReport:
    """sum 1_P(L_m(n)) w_n against the J_k main term."""
    started = time.perf_counter()
    ctx = _as_context(config)
    c = ctx.config
    _check_index(c, m_index)
    L = c.setup.tuple[m_index]
    lo, hi = c.A.bounds()
    if hi > lo and min(L(lo), L(hi - 1)) <= c.R:
        raise PreconditionError(f"L(n) = {L} must exceed R = {c.R:.6g} on the range")
    warnings = ctx.policy_warnings()
    nP = count_P(c.P, L, c.A)
    if nP == 0:
        warnings.append("P_{L,A} is empty")
    emp = _run(ctx, "S2", m_index)
    B = c.setup.B
    corr = math.prod((p - 1) / p for p in factorize(abs(L.a)).primes if B % p) if abs(L.a) > 1 else 1.0
    logR = math.log(c.R)
    pred = ctx.B_ratio ** (c.k - 1) * ctx.singular_B * corr * nP * logR ** (c.k + 1) * ctx.J_k
    extra = {"m_index": m_index, "J_k": ctx.J_k, "count_P": nP, "a_m_factor": corr, "singular_series_B": ctx.singular_B}
    return _report("S2", emp, pred, ctx, extra, started, warnings)


def _window_warnings(c: SieveConfig, name: str, value: float) -> list[str]:
    lx = math.log(c.x)
    floor = c.k * math.log(lx) ** 2 / lx if lx > 1 else float("inf")
    if value < floor:
        return [f"{name}={value:g} below k (log log x)^2 / log x = {floor:.6g}"]
    return []


def sum_S3(config, L0: LinearFunction, xi: float, D: int = 1) -> PropReport:
    """sum 1_{S(xi; D)}(L0(n)) w_n against its upper-bound shape."""
    started = time.perf_counter()
    ctx = _as_context(config)
    c = ctx.config
    if L0 in set(c.setup.tuple.funcs):
        raise DomainError(f"L0 = {L0} belongs to the tuple")
    dv = delta_L(c.setup.tuple, L0)
    if dv.degenerate:
        raise DomainError(f"Delta_L = 0 for L0 = {L0}")
    if not 1 <= D <= MAX_D:
        raise DomainError(f"D must lie in [1, {MAX_D}]")
    if xi <= 0:
        raise DomainError("xi must be positive")
    warnings = ctx.policy_warnings() + _window_warnings(c, "xi", xi)
    bound = float(c.x) ** xi
    emp = _run(ctx, "S3", (L0, bound, int(D)))
    logR = math.log(c.R)
    delta_ratio = dv.delta / euler_phi(dv.delta)
    pred = (
        (1 / xi) * delta_ratio * (D / euler_phi(D)) * ctx.B_ratio**c.k * ctx.singular_B * ctx.count_A
        * logR ** (c.k - 1) * ctx.I_k
    )
    rep = _report("S3", emp, pred, ctx, {"L0": [L0.a, L0.b], "xi": xi, "D": D, "Delta_L": dv.delta}, started, warnings)
    if rep.ratio is not None and rep.ratio > BOUND_RATIO_FLAG:
        rep.warnings.append(f"empirical/bound = {rep.ratio:.6g} exceeds {BOUND_RATIO_FLAG}")
    return rep


def sum_S4(config, m_index: int, rho: float) -> PropReport:
    """sum #{p | L_m(n): p < x^rho, p not | B} w_n against its bound shape."""
    started = time.perf_counter()
    ctx = _as_context(config)
    c = ctx.config
    _check_index(c, m_index)
    if rho <= 0:
        raise DomainError("rho must be positive")
    warnings = ctx.policy_warnings() + _window_warnings(c, "rho", rho)
    if rho > c.theta / 10:
        warnings.append(f"rho={rho:g} exceeds theta/10 = {c.theta / 10:.6g}")
    bound = float(c.x) ** rho
    emp = _run(ctx, "S4", (m_index, bound, c.setup.B))
    k = c.k
    logR = math.log(c.R)
    pred = rho**2 * k**4 * math.log(k) ** 2 * ctx.singular_B * ctx.count_A * logR**k * ctx.I_k * ctx.B_ratio**k
    rep = _report("S4", emp, pred, ctx, {"m_index": m_index, "rho": rho}, started, warnings)
    if rep.ratio is not None and rep.ratio > BOUND_RATIO_FLAG:
        rep.warnings.append(f"empirical/bound = {rep.ratio:.6g} exceeds {BOUND_RATIO_FLAG}")
    return rep


# --- pigeonhole extraction ----------------------------------------------


@dataclass
class ExtractionResult:
    m: int
    mode: str
    extracted: list[tuple[int, int]]
    violations: int
    S: float
    positive_zero_weight: int
    parameters: dict
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["extracted"] = [list(e) for e in self.extracted]
        return d


def combined_extract(config, m: int, rho: float, mode: str = "basic", eta: float = 1.0) -> ExtractionResult:
    """Evaluate the bracket of the pigeonhole sum at every n in A and keep
    the n where it is positive and w_n != 0."""
    ctx = _as_context(config)
    c = ctx.config
    if m < 1:
        raise DomainError("m must be >= 1")
    if mode not in ("basic", "consecutive"):
        raise DomainError(f"unknown mode {mode!r}")
    tup = c.setup.tuple
    k = c.k
    warnings = ctx.policy_warnings()
    if rho > c.theta / 10:
        warnings.append(f"rho={rho:g} exceeds theta/10 = {c.theta / 10:.6g}")
    shifts: list[int] = []
    if mode == "consecutive":
        a = tup[0].a
        if any(f.a != a for f in tup):
            raise PreconditionError("consecutive mode needs a shared lead coefficient")
        bmax = int(math.floor(eta * math.log(c.x)))
        members = {f.b for f in tup}
        shifts = [b for b in range(bmax + 1) if b not in members]
    lo, hi = c.A.bounds()
    extracted: list[tuple[int, int]] = []
    parts = []
    zero_weight = 0
    small_bound = float(c.x) ** rho
    rough_bound = float(c.x) ** (c.theta / 10)
    for s, e in _shards(lo, hi):
        w = weights_range(ctx.table, s, e) * c.A.mask(s, e)
        hits = np.zeros(e - s, dtype=np.int64)
        smalls = np.zeros(e - s, dtype=np.int64)
        for f in tup:
            hits += c.P.mask_values(f.values(s, e))
            smalls += _small_divisor_counts(f, s, e, small_bound, c.setup.B)
        bracket = hits - m - k * smalls
        for b in shifts:
            bracket -= k * rough_mask(LinearFunction(tup[0].a, b), s, e, rough_bound, 1)
        parts.append(math.fsum(bracket * w))
        pos = (bracket > 0) & c.A.mask(s, e)
        zero_weight += int(np.count_nonzero(pos & (w == 0)))
        for i in np.flatnonzero(pos & (w != 0)):
            extracted.append((s + int(i), int(hits[i])))
    violations = 0
    for n, _ in extracted:
        vals = [f(n) for f in tup]
        inP = sum(1 for v in vals if (is_prime(v) if c.P.kind == "all" else v in c.P))
        if inP < m + 1:
            violations += 1
            continue
        if mode == "consecutive" and any(is_prime(tup[0].a * n + b) for b in shifts):
            violations += 1
    params = c.describe()
    params.update({"m": m, "rho": rho, "mode": mode, "eta": eta if mode == "consecutive" else None})
    return ExtractionResult(m, mode, extracted, violations, math.fsum(parts), zero_weight, params, warnings)


# --- local sums ------------------------------------------------------------


def _vectors(k: int, p: int):
    """All k-vectors with each component in {1, p}."""
    return itertools.product((1, p), repeat=k)


def _mu(n: int) -> int:
    if n == 1:
        return 1
    f = factorize(n)
    return 0 if not f.is_squarefree() else (-1) ** len(f.factors)


def _coprime_across(d, e) -> bool:
    k = len(d)
    return all(math.gcd(d[i] * e[i], d[j] * e[j]) == 1 for i in range(k) for j in range(k) if i != j)


def local_sum(
    variant: str,
    p: int,
    r: Sequence[int],
    s: Sequence[int],
    m: int | None = None,
    p_divides_am: bool = False,
    w_case: str = "generic",
) -> Fraction:
    """Brute-force value of a local sum at the prime p.

    ``Sp``: sum' mu(d) mu(e) d e / [d, e] over d | r, e | s with d_i, e_i | p.
    ``Sp_m``: the same with d_m = e_m = 1 and phi_L in place of the identity.
    ``Sp_m_prime``: sum of mu(d) d / phi_L(d) over d | s with d_m = 1 and d in
    the restricted support; here ``r`` is the quotient e / r and ``w_case``
    says whether p divides a_m (``"a_m"``), W'_j / W_j (``"W'"``) or
    neither (``"generic"``).
    """
    k = len(r)

    def phiL(n: int) -> int:
        # phi_L at a divisor of p^k made of copies of p
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e == 0:
            return 1
        return (p if p_divides_am else p - 1) * p ** (e - 1)

    total = Fraction(0)
    if variant == "Sp_m_prime":
        for d in _vectors(k, p):
            if any(di > 1 and r[i] % di for i, di in enumerate(d)):
                continue
            if m is not None and d[m] != 1:
                continue
            if any(di > 1 and w_case == "W'" for di in d):
                continue
            dd = math.prod(d)
            total += Fraction(_mu(dd) * dd, phiL(dd))
        return total
    for d in _vectors(k, p):
        if any(r[i] % d[i] for i in range(k)):
            continue
        for e in _vectors(k, p):
            if any(s[i] % e[i] for i in range(k)):
                continue
            if not _coprime_across(d, e):
                continue
            if variant == "Sp_m" and (d[m] != 1 or e[m] != 1):
                continue
            dd, ee = math.prod(d), math.prod(e)
            lcm = math.prod(math.lcm(a, b) for a, b in zip(d, e))
            mu = _mu(dd) * _mu(ee)
            if not mu:
                continue
            if variant == "Sp":
                total += Fraction(mu * dd * ee, lcm)
            else:
                total += Fraction(mu * phiL(dd) * phiL(ee), phiL(lcm))
    return total


def local_sum_closed(
    variant: str,
    p: int,
    r: Sequence[int],
    s: Sequence[int],
    p_divides_am: bool = False,
    w_case: str = "generic",
) -> Fraction:
    if variant == "Sp_m_prime":
        if w_case == "W'":
            return Fraction(1)
        if p_divides_am:
            return Fraction(0)
        return Fraction(-1, p - 1)
    pr = [i for i, v in enumerate(r) if v % p == 0]
    ps = [i for i, v in enumerate(s) if v % p == 0]
    if bool(pr) != bool(ps):
        return Fraction(0)
    if pr == ps:
        if variant == "Sp":
            return Fraction(p - 1)
        return Fraction(p - 1 if p_divides_am else p - 2)
    return Fraction(-1)


@dataclass
class IdentityReport:
    variant: str
    k: int
    p: int
    cases: int
    mismatches: list[dict]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def _unit(k: int, i: int | None, p: int) -> tuple[int, ...]:
    return tuple(p if j == i else 1 for j in range(k))


def sp_identity_check(k: int, p: int, variant: str) -> IdentityReport:
    """Compare brute-force local sums with their closed forms over every
    placement of p in r and s (and every m and side condition)."""
    if variant not in ("Sp", "Sp_m", "Sp_m_prime"):
        raise DomainError(f"unknown variant {variant!r}")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    mismatches = []
    cases = 0
    positions: list[int | None] = [None, *range(k)]
    if variant == "Sp":
        for i, j in itertools.product(positions, repeat=2):
            if i is None and j is None:
                continue
            r, s = _unit(k, i, p), _unit(k, j, p)
            got, want = local_sum("Sp", p, r, s), local_sum_closed("Sp", p, r, s)
            cases += 1
            if got != want:
                mismatches.append({"r": r, "s": s, "brute": str(got), "closed": str(want)})
    elif variant == "Sp_m":
        for m, flag in itertools.product(range(k), (False, True)):
            pos = [None, *[j for j in range(k) if j != m]]
            for i, j in itertools.product(pos, repeat=2):
                if i is None and j is None:
                    continue
                r, s = _unit(k, i, p), _unit(k, j, p)
                got = local_sum("Sp_m", p, r, s, m=m, p_divides_am=flag)
                want = local_sum_closed("Sp_m", p, r, s, p_divides_am=flag)
                cases += 1
                if got != want:
                    mismatches.append({"m": m, "p_divides_am": flag, "r": r, "s": s, "brute": str(got), "closed": str(want)})
    else:
        for m in range(k):
            for j in range(k):
                if j == m:
                    continue
                quotient = _unit(k, j, p)
                for w_case in ("generic", "a_m", "W'"):
                    flag = w_case == "a_m"
                    got = local_sum("Sp_m_prime", p, quotient, quotient, m=m, p_divides_am=flag, w_case=w_case)
                    want = local_sum_closed("Sp_m_prime", p, quotient, quotient, p_divides_am=flag, w_case=w_case)
                    cases += 1
                    if got != want:
                        mismatches.append({"m": m, "j": j, "case": w_case, "brute": str(got), "closed": str(want)})
    return IdentityReport(variant, k, p, cases, mismatches)


# --- delta and y^(m) -----------------------------------------------------------


def delta_estimate(config) -> float:
    """(1/k)(phi(B)/B) sum_i (phi(|a_i|)/|a_i|) #P_{L_i,A} / (#A / log x)."""
    ctx = _as_context(config)
    c = ctx.config
    nA = ctx.count_A
    if nA == 0:
        raise DomainError("A is empty")
    terms = [euler_phi(abs(f.a)) / abs(f.a) * count_P(c.P, f, c.A) for f in c.setup.tuple]
    return (1 / c.k) * (1 / ctx.B_ratio) * math.fsum(terms) / (nA / math.log(c.x))


def in_restricted_support(setup: SieveSetup, d: Sequence[int], m: int) -> bool:
    """d in D'_k: supported, and (d_j, a_j b_m - a_m b_j) = 1 for all j."""
    if not in_support(setup, d):
        return False
    Lm = setup.tuple[m]
    for j, dj in enumerate(d):
        f = setup.tuple[j]
        if math.gcd(int(dj), abs(f.a * Lm.b - Lm.a * f.b)) != 1:
            return False
    return True


def ym_direct(table: LambdaTable, r: Sequence[int], m_index: int, restricted: bool = True) -> float:
    """mu(r) phi_omega(r) sum_{r | d, d_m = 1} lambda'_d / phi_L(d).

    With ``restricted=False`` lambda_d is used without the D'_k restriction.
    """
    setup = table.params.setup
    r = tuple(int(x) for x in r)
    if len(r) != setup.k:
        raise DomainError(f"vector length {len(r)} != k = {setup.k}")
    if not 0 <= m_index < setup.k:
        raise DomainError(f"m_index={m_index} out of range (0-based)")
    if r[m_index] != 1:
        return 0.0
    if not (in_restricted_support(setup, r, m_index) if restricted else setup.in_support(r)):
        return 0.0
    L = setup.tuple[m_index]
    parts = []
    for d, v in table.lam.items():
        if d[m_index] != 1 or any(di % ri for di, ri in zip(d, r)):
            continue
        if restricted and not in_restricted_support(setup, d, m_index):
            continue
        parts.append(v / phi_L(L, math.prod(d)))
    rr = math.prod(r)
    return _mu(rr) * phi_omega(setup, rr) * math.fsum(parts)
