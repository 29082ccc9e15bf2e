import math

import numpy as np
import pytest
from conftest import trial_division_is_prime
from hypothesis import given, settings
from hypothesis import strategies as st

from mdsieve.dist import (
    IntegerSetSpec,
    PrimeSubsetSpec,
    bv_scan,
    count_A,
    count_P,
    phi_L,
    rough_indicator,
    rough_mask,
)
from mdsieve.errors import DomainError
from mdsieve.tuples import LinearFunction


def test_count_P_examples():
    allp = PrimeSubsetSpec()
    assert count_P(allp, LinearFunction(1, 0), IntegerSetSpec.short(10, 10)) == 4
    assert count_P(allp, LinearFunction(2, 1), IntegerSetSpec.short(5, 5)) == 4
    one_mod_4 = PrimeSubsetSpec("progression", q=4, a=1)
    assert count_P(one_mod_4, LinearFunction(1, 0), IntegerSetSpec.short(10, 20)) == 3


def test_phi_L_examples():
    assert phi_L(LinearFunction(2, 1), 3) == 2
    assert phi_L(LinearFunction(1, 1), 5) == 4
    assert phi_L(LinearFunction(7, 3), 1) == 1


def test_integer_sets():
    iv = IntegerSetSpec.interval(100)
    assert iv.bounds() == (100, 200) and 150 in iv and 200 not in iv
    ex = IntegerSetSpec.explicit([5, 3, 3, 9])
    assert ex.values == (3, 5, 9) and 5 in ex and 4 not in ex
    assert ex.mask(2, 10).tolist() == [False, True, False, True, False, False, False, True]
    with pytest.raises(DomainError):
        IntegerSetSpec("ball")


@given(st.integers(1, 10**6), st.integers(0, 500), st.integers(1, 50), st.integers(-100, 100))
def test_count_A_matches_enumeration(x, y, q, a):
    spec = IntegerSetSpec.short(x, y)
    assert count_A(spec, q, a) == sum(1 for n in range(x, x + y) if (n - a) % q == 0)


def test_even_index_primes():
    spec = PrimeSubsetSpec("even-index")
    primes = [p for p in range(2, 3000) if trial_division_is_prime(p)]
    even = {p for i, p in enumerate(primes, start=1) if i % 2 == 0}
    vals = np.arange(1000, 3000)
    got = set(vals[spec.mask_values(vals)].tolist())
    assert got == {p for p in even if p >= 1000}
    assert 3 in spec and 2 not in spec


def test_explicit_prime_subset():
    spec = PrimeSubsetSpec("explicit", values=(11, 7))
    assert spec.mask_values(np.array([7, 8, 11, -7])).tolist() == [True, False, True, False]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10**5), st.integers(1, 2000), st.integers(1, 12), st.integers(0, 11))
def test_count_P_at_most_count_A(x, y, q, a):
    spec = IntegerSetSpec.short(x, y)
    L = LinearFunction(2, 1)
    assert count_P(PrimeSubsetSpec(), L, spec, q, a) <= count_A(spec, q, a)


def test_bv_interval_errors_bounded():
    rep = bv_scan("A", IntegerSetSpec.interval(10**5), 60)
    assert rep.errors[1] == 0
    assert max(rep.errors.values()) <= 1
    assert rep.concentration <= 1 + 60 / 10**5


def test_bv_primes_report():
    rep = bv_scan("P", IntegerSetSpec.interval(10**5), 30)
    assert math.isfinite(rep.normalized_total) and rep.normalized_total > 0
    assert rep.normalization == sum(1 for n in range(10**5, 2 * 10**5) if trial_division_is_prime(n))
    assert sorted(rep.errors) == list(range(1, 31))
    assert rep.to_csv().splitlines()[0] == "q,E_q"
    assert rep.to_json() == bv_scan("P", IntegerSetSpec.interval(10**5), 30).to_json()


def test_bv_excludes_moduli_sharing_B():
    rep = bv_scan("P", IntegerSetSpec.interval(10**4), 12, B=6)
    assert sorted(rep.errors) == [1, 5, 7, 11]


def test_bv_P_error_by_hand():
    x = 10**4
    primes = [n for n in range(x, 2 * x) if trial_division_is_prime(n)]
    rep = bv_scan("P", IntegerSetSpec.interval(x), 10)
    for q in (3, 4, 10):
        classes = [a for a in range(q) if math.gcd(a, q) == 1]
        expected = len(primes) / sum(1 for _ in classes)
        worst = max(abs(sum(1 for p in primes if p % q == a) - expected) for a in classes)
        assert rep.errors[q] == pytest.approx(worst, abs=1e-9)


def test_bv_warns_above_level():
    rep = bv_scan("A", IntegerSetSpec.interval(1000), 50, theta=1 / 3)
    assert rep.warnings


def test_rough_indicator_examples():
    assert not rough_indicator(77, 1.0, 1, 10)
    assert rough_indicator(121, 1.0, 1, 10)
    assert not rough_indicator(70, 1.0, 14, 10)
    assert rough_indicator(1, 0.5, 1, 100)


def test_rough_mask_matches_indicator():
    L = LinearFunction(1, 1)
    lo, hi = 1000, 3000
    mask = rough_mask(L, lo, hi, 30.0, D=6)
    want = [rough_indicator(L(n), 1.0, 6, 30) for n in range(lo, hi)]
    assert mask.tolist() == want
