import math

import numpy as np
import pytest

from src.exceptions import PreconditionError, ResourceCapError
from src.exponent_sets.exponent_set import ExponentSet, PerPrimeFamily, parse_exponent_set
from src.factor_sieve.powerful import enumerate_powerful
from src.factor_sieve.sieve import (
    build_sieve,
    count_family_members_many,
    count_members,
    count_members_many,
    count_squarefree_coprime,
    coprime_squarefree_prefix_counts,
    factorize,
    first_primes,
    is_member,
    membership_prefix_counts,
    primes_up_to,
    squarefree_prime_factors,
)

# Exact counts of S-numbers <= x, x = 10 .. 10^7
EXPECTED_COUNTS = {
    "finite:1": [7, 61, 608, 6083, 60794, 607926, 6079291],
    "finite:1,2": [9, 85, 833, 8319, 83190, 831910, 8319081],
    "geq:2": [4, 14, 54, 185, 619, 2027, 6553],
    "exclude:2": [8, 75, 752, 7498, 74876, 748581, 7485487],
    "squarefree": [10, 96, 957, 9560, 95592, 955923, 9559240],
    "upto:4": [10, 97, 965, 9645, 96440, 964388, 9643874],
    "finite:1,2,5": [9, 87, 851, 8496, 84943, 849452, 8494471],
}
POWERS_OF_TEN = [10**k for k in range(1, 8)]


def _trial_factor(n: int) -> list[tuple[int, int]]:
    parts = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            parts.append((d, e))
        d += 1
    if n > 1:
        parts.append((n, 1))
    return parts


def test_primes_up_to():
    assert primes_up_to(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert primes_up_to(1).size == 0
    assert primes_up_to(10**6).size == 78498


def test_first_primes():
    assert first_primes(1).tolist() == [2]
    assert first_primes(6).tolist() == [2, 3, 5, 7, 11, 13]
    assert first_primes(10).tolist()[-1] == 29
    assert first_primes(1000)[-1] == 7919


class TestBuildSieve:
    def test_limits(self):
        with pytest.raises(PreconditionError):
            build_sieve(1)
        with pytest.raises(ResourceCapError) as excinfo:
            build_sieve(1000, cap=100)
        assert excinfo.value.exit_code == 4

    def test_spf_matches_trial_division(self):
        sieve = build_sieve(2000)
        for n in range(2, 2001):
            assert sieve.spf[n] == _trial_factor(n)[0][0]
        assert sieve.primes.tolist() == primes_up_to(2000).tolist()

    def test_tables_are_read_only(self):
        sieve = build_sieve(100)
        with pytest.raises(ValueError):
            sieve.spf[10] = 3
        with pytest.raises(ValueError):
            sieve.squarefree_mask[10] = False


class TestCounting:
    def setup_class(self):
        self.sieve = build_sieve(10**6, block_size=1 << 16)

    def test_factorize(self):
        factorization = factorize(self.sieve, 360)
        assert factorization.parts == ((2, 3), (3, 2), (5, 1))
        assert factorization.radical == 30
        assert factorization.value() == 360
        assert factorize(self.sieve, 1).parts == ()
        with pytest.raises(PreconditionError):
            factorize(self.sieve, 0)
        with pytest.raises(PreconditionError):
            factorize(self.sieve, 10**6 + 1)

    def test_is_member(self):
        fin12 = ExponentSet.finite(1, 2)
        assert is_member(self.sieve, 1, fin12) == 1
        assert is_member(self.sieve, 36, fin12) == 1
        assert is_member(self.sieve, 8, fin12) == 0

    @pytest.mark.parametrize("text", list(EXPECTED_COUNTS))
    def test_counts_match_table(self, text):
        exponent_set = parse_exponent_set(text)
        xs = POWERS_OF_TEN[:6]
        assert count_members_many(self.sieve, xs, exponent_set) == EXPECTED_COUNTS[text][:6]
        assert count_members(self.sieve, 1000, exponent_set) == EXPECTED_COUNTS[text][2]

    @pytest.mark.parametrize("text", list(EXPECTED_COUNTS))
    def test_sweep_matches_pointwise_membership(self, text):
        exponent_set = parse_exponent_set(text)
        expected = np.cumsum([0] + [is_member(self.sieve, n, exponent_set) for n in range(1, 501)])
        assert membership_prefix_counts(self.sieve, 500, exponent_set).tolist() == expected.tolist()

    def test_count_at_one(self):
        assert count_members(self.sieve, 1, ExponentSet.up_to(1)) == 1
        assert count_members(self.sieve, 1, ExponentSet.at_least(2)) == 1

    def test_count_many_keeps_input_order(self):
        fin1 = ExponentSet.finite(1)
        assert count_members_many(self.sieve, [1000, 10, 1000], fin1) == [608, 7, 608]
        assert count_members_many(self.sieve, [], fin1) == []

    def test_constant_family_matches_set(self):
        for text in ["finite:1", "squarefree", "geq:2"]:
            exponent_set = parse_exponent_set(text)
            family = PerPrimeFamily.constant(exponent_set)
            xs = [100, 10**4, 10**5]
            assert count_family_members_many(self.sieve, xs, family) == count_members_many(self.sieve, xs, exponent_set)

    def test_prefix_family_count(self):
        # S_1 = {1} and S_2 = {1, 2}: below 100 that rules out 4 | n and 27 | n
        assert count_family_members_many(self.sieve, [100], PerPrimeFamily.prefix()) == [72]


class TestSquarefreeCoprime:
    def setup_class(self):
        self.sieve = build_sieve(10**5)

    def test_small_values(self):
        assert count_squarefree_coprime(self.sieve, 10, 1) == 7
        assert count_squarefree_coprime(self.sieve, 10, 2) == 4
        assert count_squarefree_coprime(self.sieve, 10, 6) == 3
        assert count_squarefree_coprime(self.sieve, 0, 1) == 0
        assert count_squarefree_coprime(self.sieve, 1, 30) == 1

    def test_matches_gcd_definition(self):
        mask = self.sieve.squarefree_mask
        for r in [1, 2, 15, 210, 2310]:
            expected = sum(1 for n in range(1, 3001) if mask[n] and math.gcd(n, r) == 1)
            assert count_squarefree_coprime(self.sieve, 3000, r) == expected

    def test_prefix_counts(self):
        table = coprime_squarefree_prefix_counts(self.sieve, 1000, 6)
        assert table[0] == 0
        for y in [1, 10, 99, 1000]:
            assert table[y] == count_squarefree_coprime(self.sieve, y, 6)

    def test_squarefree_prime_factors(self):
        assert squarefree_prime_factors(1) == []
        assert squarefree_prime_factors(30, self.sieve) == [2, 3, 5]
        # beyond the sieve: trial division
        assert squarefree_prime_factors(6469693230) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        with pytest.raises(PreconditionError):
            squarefree_prime_factors(4, self.sieve)
        with pytest.raises(PreconditionError):
            squarefree_prime_factors(0)


class TestInvariants:
    def setup_class(self):
        self.sieve = build_sieve(10**6)
        self.powerful_counts = np.searchsorted(enumerate_powerful(10**6), np.arange(10**6 + 1), side="right")

    def test_squarefree_exponents_match_mobius_square(self):
        squarefree = ExponentSet.squarefree()
        mask = self.sieve.squarefree_mask
        for n in range(1, 10**4 + 1):
            assert squarefree.u(n) == int(mask[n])

    def test_factorize_recombines(self):
        for n in range(1, 10**5 + 1):
            factorization = factorize(self.sieve, n)
            primes = [p for p, _ in factorization.parts]
            assert factorization.value() == n
            assert primes == sorted(set(primes))
            assert all(self.sieve.spf[p] == p for p in primes)

    def test_squarefree_count_matches_coprime_count(self):
        direct = membership_prefix_counts(self.sieve, 10**5, ExponentSet.finite(1))
        coprime = coprime_squarefree_prefix_counts(self.sieve, 10**5, 1)
        assert np.array_equal(direct, coprime)
        for x in [1, 2, 3, 4, 97, 1000, 65536]:
            assert count_members(self.sieve, x, ExponentSet.finite(1)) == count_squarefree_coprime(self.sieve, x, 1)

    def test_powerful_count_matches_enumeration(self):
        counts = membership_prefix_counts(self.sieve, 10**6, ExponentSet.at_least(2))
        assert np.array_equal(counts, self.powerful_counts)

    @pytest.mark.parametrize("text", ["finite:2,3", "geq:3", "exclude:1", "finite:2"])
    def test_sets_without_one_stay_powerful(self, text):
        exponent_set = parse_exponent_set(text)
        counts = membership_prefix_counts(self.sieve, 10**6, exponent_set)
        assert (counts <= self.powerful_counts).all()

    def test_counts_monotone_in_subset_order(self):
        texts = ["finite:1", "finite:1,2", "finite:1,2,5", "upto:4", "exclude:2", "squarefree", "finite:2,3", "geq:2", "all"]
        sets = {text: parse_exponent_set(text) for text in texts}
        counts = {text: membership_prefix_counts(self.sieve, 10**5, s) for text, s in sets.items()}
        checked = 0
        for a in texts:
            for b in texts:
                if a != b and sets[a].issubset(sets[b]):
                    assert (counts[a] <= counts[b]).all(), (a, b)
                    checked += 1
        assert checked >= 10


@pytest.mark.slow
class TestTenMillion:
    def setup_class(self):
        self.sieve = build_sieve(10**7)

    @pytest.mark.parametrize("text", list(EXPECTED_COUNTS))
    def test_counts(self, text):
        assert count_members_many(self.sieve, POWERS_OF_TEN, parse_exponent_set(text)) == EXPECTED_COUNTS[text]
