"""Slow, obviously-correct re-implementations used as test oracles."""

import math

from mdsieve.arith import factorize


def cutoff(t):
    if t <= 0.9:
        return 1.0
    if t >= 1.0:
        return 0.0
    u = (1.0 - t) / 0.1
    return 10 * u**3 - 15 * u**4 + 6 * u**5


def F_oracle(k, ts):
    T, U = k * math.log(k), k**-0.5
    out = cutoff(sum(ts))
    for t in ts:
        out *= cutoff(t / U) / (1 + T * t)
    return out


def roots(f, p):
    return {n for n in range(p) if f(n) % p == 0}


def supported(pairs, r):
    funcs = [lambda n, a=a, b=b: a * n + b for a, b in pairs]
    k = len(pairs)
    prod = math.prod(r)
    if math.gcd(prod, math.prod(p for p in range(2, 2 * k * k + 1) if all(p % q for q in range(2, p)))) != 1:
        return False
    seen = set()
    for j, rj in enumerate(r):
        for p, e in factorize(rj).factors:
            if e > 1 or p in seen:
                return False
            seen.add(p)
            # j must be the smallest index vanishing at some root of L_j
            if not any(min(i for i in range(k) if funcs[i](n) % p == 0) == j for n in roots(funcs[j], p)):
                return False
    return True


def phi_omega_oracle(pairs, n):
    out = 1
    for p, _ in factorize(n).factors if n > 1 else ():
        omega = sum(1 for m in range(p) if math.prod(a * m + b for a, b in pairs) % p == 0)
        out *= p - omega
    return out


def mu(n):
    f = factorize(n)
    return 0 if not f.is_squarefree() else (-1) ** len(f.factors)





def lambda_oracle(params, pairs, d):
    """Direct sum over every vector r with prod r < R."""
    R = params.R
    k = len(pairs)
    dd = math.prod(d)
    total = []

    def vectors(prefix, prod):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for v in range(1, int(R / prod) + 1):
            if prod * v < R:
                yield from vectors(prefix + [v], prod * v)

    for r in vectors([], 1):
        if any(ri % di for ri, di in zip(r, d)):
            continue
        if not supported(pairs, r):
            continue
        rr = math.prod(r)
        y = params.normalization * F_oracle(k, [math.log(x) / math.log(R) for x in r])
        total.append(y / phi_omega_oracle(pairs, rr))
    return mu(dd) * dd * math.fsum(total)


