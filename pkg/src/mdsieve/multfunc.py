"""Multiplicative quantities attached to a tuple.

Contains phi_omega, the singular series with a certified truncation
bound, Delta_L and the two numerical diagnostics for local-density sums.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .arith import euler_phi, factorize, iter_prime_segments, small_primes
from .errors import DomainError, PreconditionError
from .tuples import AdmissibleTuple, LinearFunction, SieveSetup

DEFAULT_P0 = 10**6


def phi_omega(setup: SieveSetup, d: int) -> int:
    """prod_{p | d} (p - omega(p)) for squarefree ``d``."""
    d = int(d)
    if d < 1:
        raise DomainError("d must be >= 1")
    out = 1
    for p, e in factorize(d).factors:
        if e > 1:
            raise DomainError(f"d={d} is not squarefree")
        out *= p - setup.omega(p)
    return out


@dataclass(frozen=True)
class SingularSeriesValue:
    value: float
    truncation_prime: int
    tail_log_bound: float
    log_value: float
    D: int

    @property
    def interval(self) -> tuple[float, float]:
        """Certified enclosure of the full Euler product."""
        return (
            math.exp(self.log_value - self.tail_log_bound),
            math.exp(self.log_value + self.tail_log_bound),
        )


def tail_log_bound(k: int, P0: int) -> float:
    """Bound on |sum_{p > P0} log[(1 - k/p)(1 - 1/p)^{-k}]|.

    With t = 1/p the log-factor f(t) = log(1 - kt) - k log(1 - t) has
    f(0) = 0 and |f'(t)| = k(k-1)t / ((1-kt)(1-t)), hence
    |f| <= k(k-1) / (2 p^2 (1 - k/P0)(1 - 1/P0)); and sum_{p > P0} p^-2 < 1/P0.
    """
    if k <= 1:
        return 0.0
    if P0 <= k:
        raise PreconditionError(f"P0={P0} must exceed k={k}")
    c = k * (k - 1) / (2.0 * (1.0 - k / P0) * (1.0 - 1.0 / P0))
    return c / P0


def _log_factors(k: int, primes: np.ndarray, omega: np.ndarray) -> np.ndarray:
    p = primes.astype(np.float64)
    return np.log1p(-omega / p) - k * np.log1p(-1.0 / p)


def singular_series(setup: SieveSetup, D: int = 1, P0: int = DEFAULT_P0) -> SingularSeriesValue:
    """Truncated Euler product over ``p <= P0, p not | D`` plus a tail bound.

    omega(p) is taken as 0 for ``p | B``.
    """
    tup = setup.tuple
    k = tup.k
    if not tup.admissible:
        raise DomainError("singular series of an inadmissible tuple")
    D = int(D)
    special = set(tup.ramified_primes())
    special.update(factorize(D).primes if D > 1 else ())
    special.update(factorize(setup.B).primes if setup.B > 1 else ())
    need = max([2 * k * k, *special]) if special else 2 * k * k
    if P0 < need:
        raise PreconditionError(f"P0={P0} must be >= {need} (2k^2, ramified primes, primes of D and B)")
    exact = {int(p) for p in small_primes(2 * k * k)} | special
    logs = []
    for seg in iter_prime_segments(2, int(P0) + 1):
        omega = np.full(len(seg), float(k))
        keep = np.ones(len(seg), dtype=bool)
        lo, hi = int(seg[0]) if len(seg) else 0, int(seg[-1]) if len(seg) else -1
        for p in exact:
            if lo <= p <= hi:
                i = int(np.searchsorted(seg, p))
                omega[i] = setup.omega(p)
                if D % p == 0:
                    keep[i] = False
        logs.append(_log_factors(k, seg[keep], omega[keep]))
    total = math.fsum(np.concatenate(logs)) if logs else 0.0
    return SingularSeriesValue(math.exp(total), int(P0), tail_log_bound(k, int(P0)), total, D)


@dataclass(frozen=True)
class DeltaValue:
    L0: LinearFunction
    delta: int

    @property
    def degenerate(self) -> bool:
        return self.delta == 0


def delta_L(tup: AdmissibleTuple, L0: LinearFunction) -> DeltaValue:
    """|a_0| prod_j |a_j b_0 - a_0 b_j|; zero iff L0 is proportional to some L_j."""
    out = abs(L0.a)
    for f in tup.funcs:
        out *= abs(f.a * L0.b - L0.a * f.b)
    return DeltaValue(L0, out)


@dataclass(frozen=True)
class DeltaSumReport:
    value: float
    terms: int
    skipped_degenerate: int
    bound_shape: float
    ratio: float | None


def delta_ratio_sum(
    tup: AdmissibleTuple, a: int, shift_bound: int, symmetric: bool = False
) -> DeltaSumReport:
    """Sum of Delta_L / phi(Delta_L) over ``L = a n + b`` outside the tuple.

    ``b`` runs over ``0..shift_bound`` (or ``-shift_bound..shift_bound`` when
    ``symmetric``).  Terms with Delta_L = 0 are skipped.  ``bound_shape`` is
    shift_bound * log k, the shape of the expected upper bound.
    """
    if any(f.a != a for f in tup.funcs):
        raise DomainError("all functions must share the lead coefficient a")
    members = set(tup.funcs)
    lo = -shift_bound if symmetric else 0
    parts = []
    skipped = 0
    for b in range(lo, shift_bound + 1):
        L0 = LinearFunction(a, b)
        if L0 in members:
            continue
        dv = delta_L(tup, L0)
        if dv.degenerate:
            skipped += 1
            continue
        parts.append(dv.delta / euler_phi(dv.delta))
    value = math.fsum(parts)
    shape = shift_bound * math.log(tup.k) if tup.k > 1 else 0.0
    return DeltaSumReport(value, len(parts), skipped, shape, value / shape if shape > 0 else None)


@dataclass(frozen=True)
class PartialSummationReport:
    empirical: float
    main_term: float
    ratio: float | None
    c_gamma: float
    degenerate: bool
    warnings: tuple[str, ...] = field(default=())


def partial_summation_check(
    gamma: Callable[[int], float],
    G: Callable[[np.ndarray], np.ndarray],
    z: int,
    euler_cutoff: int = 10**6,
) -> PartialSummationReport:
    """Compare sum_{d<z} mu^2(d) g(d) G(log d/log z) with c_gamma log z int_0^1 G.

    ``g`` is multiplicative with g(p) = gamma(p) / (p - gamma(p)); ``c_gamma``
    is the Euler product truncated at ``euler_cutoff``.  A diagnostic: nothing
    is asserted beyond finiteness.
    """
    z = int(z)
    notes = []
    if z < 100:
        notes.append(f"z={z} is small; the asymptotic has not converged")
    g = np.ones(z, dtype=np.float64)
    g[0] = 0.0
    all_zero = True
    for p in small_primes(max(z - 1, 2)):
        p = int(p)
        if p >= z:
            break
        gp = float(gamma(p))
        if gp == p:
            raise DomainError(f"gamma({p}) = {p} makes g({p}) infinite")
        all_zero &= gp == 0.0
        g[p::p] *= gp / (p - gp)
        g[p * p :: p * p] = 0.0
    d = np.arange(z, dtype=np.float64)
    with np.errstate(divide="ignore"):
        u = np.where(d >= 1, np.log(np.maximum(d, 1.0)) / math.log(z), 0.0)
    empirical = math.fsum(g[1:] * G(u[1:]))

    logs = []
    for seg in iter_prime_segments(2, euler_cutoff + 1):
        gam = np.fromiter((float(gamma(int(p))) for p in seg), dtype=np.float64, count=len(seg))
        pf = seg.astype(np.float64)
        logs.append(-np.log1p(-gam / pf) + np.log1p(-1.0 / pf))
    c_gamma = math.exp(math.fsum(np.concatenate(logs)))
    integral = integrate.quad(lambda t: float(G(np.array([t]))[0]), 0.0, 1.0, limit=200)[0]
    main = c_gamma * math.log(z) * integral
    if all_zero:
        notes.append("gamma vanishes identically: main term degenerates to 0")
        return PartialSummationReport(empirical, 0.0, None, c_gamma, True, tuple(notes))
    return PartialSummationReport(empirical, main, empirical / main, c_gamma, False, tuple(notes))
