import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdsieve.arith import prime_count, sieve_primes
from mdsieve.cluster import (
    intervals_csv,
    scan_congruent_strings,
    scan_dense_intervals,
    strings_csv,
)
from mdsieve.dist import IntegerSetSpec
from mdsieve.errors import DomainError
from mdsieve.tuples import AdmissibleTuple, SieveSetup
from mdsieve.verifier import SieveConfig, combined_extract


def test_dense_window_example():
    hits = scan_dense_intervals(90, 120, 14, 5)
    assert any(h.primes == (101, 103, 107, 109, 113) for h in hits)
    for h in hits:
        assert h.count == len(h.primes) >= 5
        assert all(h.x0 <= p <= h.x0 + h.y for p in h.primes)


def test_dense_window_edge_cases():
    assert scan_dense_intervals(100, 10**4, 10, 7) == []
    hits = scan_dense_intervals(0, 100, 0, 1)
    assert [h.x0 for h in hits] == sieve_primes(0, 101).tolist()
    with pytest.raises(DomainError):
        scan_dense_intervals(10, 5, 3, 1)


def test_strings_examples():
    hits, count = scan_congruent_strings(10**5, 4, 1, 2)
    assert count > 0
    assert hits[0].primes == (89, 97, 101)
    _, pairs = scan_congruent_strings(10**5, 2, 1, 1)
    assert pairs == prime_count(10**5) - 2
    _, singles = scan_congruent_strings(1000, 4, 3, 0)
    assert singles == sum(1 for p in sieve_primes(3, 1000).tolist() if p % 4 == 3)
    with pytest.raises(DomainError):
        scan_congruent_strings(100, 4, 2, 1)


def test_strings_against_direct_scan():
    primes = sieve_primes(0, 30000).tolist()
    want = [
        primes[i]
        for i in range(len(primes) - 2)
        if all(p % 3 == 2 for p in primes[i : i + 3]) and primes[i + 2] - primes[i] <= 3 * math.log(primes[i])
    ]
    hits, _ = scan_congruent_strings(30000, 3, 2, 2, epsilon=3.0, segment=1 << 10)
    assert [h.p_n for h in hits] == want


@settings(max_examples=25, deadline=None)
@given(st.integers(100, 20000), st.integers(0, 5000), st.floats(0.5, 10))
def test_strings_monotone(x, extra, eps):
    a = scan_congruent_strings(x, 4, 1, 1, epsilon=eps)[1]
    assert scan_congruent_strings(x + extra, 4, 1, 1, epsilon=eps)[1] >= a
    assert scan_congruent_strings(x, 4, 1, 1, epsilon=eps * 2)[1] >= a


def test_csv_output():
    assert intervals_csv(scan_dense_intervals(99, 101, 14, 5)).splitlines()[0] == "x0,count"
    text = strings_csv(scan_congruent_strings(200, 4, 1, 2)[0])
    assert text.splitlines()[:2] == ["p_n,gap", "89,12"]


def test_extraction_windows_are_dense():
    setup = SieveSetup(AdmissibleTuple.from_pairs([(1, 0), (1, 2)]))
    res = combined_extract(SieveConfig(setup, IntegerSetSpec.interval(10**4)), 1, 0.03)
    found = {h.x0 for h in scan_dense_intervals(10**4, 2 * 10**4, 2, 2)}
    assert res.extracted
    assert all(n in found for n, _ in res.extracted)
