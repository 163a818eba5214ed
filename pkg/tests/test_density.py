import math

import mpmath
import numpy as np
import pytest

from config import settings
from src.density.euler_product import (
    density_auto,
    density_eq4,
    density_eq11,
    density_per_prime,
    density_zero_branch,
    gap_interval,
)
from src.density.models import DensityRoute
from src.density.sum_form import density_eq8_sum_form, radical_class_sum, validate_powerful_tail_bound
from src.exceptions import BoundValidationError, PreconditionError
from src.exponent_sets.exponent_set import ExponentSet, PerPrimeFamily, parse_exponent_set, parse_family
from src.factor_sieve.constants import SIX_OVER_PI_SQUARED
from src.factor_sieve.sieve import build_sieve

ROUTE_SETS = ["finite:1", "finite:1,2", "finite:1,2,5", "exclude:2", "squarefree", "upto:4"]

# Truncated products at P = 10^6, eps = 1e-9
DENSITIES = {
    "finite:1": 0.607927143057,
    "finite:1,2": 0.831907372581,
    "finite:1,2,5": 0.849445907871,
    "exclude:2": 0.748535310415,
    "squarefree": 0.955923015862,
    "upto:4": 0.964387340429,
}


def _inverse_zeta_3() -> float:
    with mpmath.workdps(30):
        return float(1 / mpmath.zeta(3))


class TestEq4:
    def test_squarefree_density(self):
        result = density_eq4(ExponentSet.finite(1), prime_limit=10**5)
        assert result.route == DensityRoute.EQ4
        assert abs(result.value - SIX_OVER_PI_SQUARED) <= result.error_bound
        assert result.error_bound <= 2e-5

    def test_cubefree_density(self):
        result = density_eq4(ExponentSet.finite(1, 2), prime_limit=10**6)
        assert abs(result.value - _inverse_zeta_3()) <= result.error_bound
        assert abs(result.value - _inverse_zeta_3()) <= 1e-6

    @pytest.mark.parametrize("text", ROUTE_SETS)
    def test_values_at_million(self, text):
        result = density_eq4(parse_exponent_set(text), prime_limit=10**6, eps=1e-9)
        assert result.value == pytest.approx(DENSITIES[text], abs=1e-9)
        assert result.prime_limit == 10**6

    def test_all_is_one(self):
        result = density_eq4(ExponentSet.all_exponents(), prime_limit=1000)
        assert result.value == 1.0
        assert result.error_bound < 1e-12

    def test_single_prime(self):
        assert density_eq4(ExponentSet.excluding(2), prime_limit=2).value == pytest.approx(0.875)
        assert density_eq4(ExponentSet.finite(1, 2), prime_limit=2).value == pytest.approx(0.875)
        result = density_eq4(ExponentSet.finite(1), prime_limit=2)
        assert result.value == pytest.approx(0.75)
        assert result.error_bound < 1.0

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            density_eq4(ExponentSet.at_least(2), prime_limit=100)
        with pytest.raises(PreconditionError):
            density_eq4(ExponentSet.finite(1), prime_limit=1)
        with pytest.raises(PreconditionError):
            density_eq4(ExponentSet.finite(1), prime_limit=100, eps=0.0)

    def test_backends_agree(self):
        fin125 = ExponentSet.finite(1, 2, 5)
        fast = density_eq4(fin125, prime_limit=10**4, backend="longdouble")
        exact = density_eq4(fin125, prime_limit=10**4, backend="mpmath")
        assert fast.value == pytest.approx(exact.value, rel=1e-14)

    def test_log_space_accumulation(self, monkeypatch):
        sqfe = ExponentSet.squarefree()
        direct = density_eq4(sqfe, prime_limit=10**4)
        monkeypatch.setattr(settings, "log_product_threshold", 10)
        logged = density_eq4(sqfe, prime_limit=10**4)
        assert logged.value == pytest.approx(direct.value, rel=1e-14)

    def test_deterministic(self):
        first = density_eq4(ExponentSet.squarefree(), prime_limit=10**5)
        second = density_eq4(ExponentSet.squarefree(), prime_limit=10**5)
        assert first == second

    def test_unknown_backend(self):
        with pytest.raises(PreconditionError):
            density_eq4(ExponentSet.finite(1), prime_limit=100, backend="quad")

    def test_late_first_change(self):
        result = density_eq4(parse_exponent_set("exclude:60"), prime_limit=10**6)
        assert result.value == pytest.approx(1.0, abs=1e-15)
        assert result.error_bound < 1e-12

    def test_huge_excluded_exponent(self):
        result = density_eq4(ExponentSet.excluding(20_000_000), prime_limit=100)
        assert result.value == pytest.approx(1.0, abs=1e-15)
        assert result.exponent_depth <= 200


class TestEq11:
    def test_squarefree_is_prefactor(self):
        result = density_eq11(ExponentSet.finite(1), prime_limit=10**4)
        assert result.value == pytest.approx(SIX_OVER_PI_SQUARED, rel=1e-15)
        assert result.route == DensityRoute.EQ11

    def test_agrees_with_eq4(self):
        fin12 = ExponentSet.finite(1, 2)
        assert density_eq11(fin12, prime_limit=10**6).intersects(density_eq4(fin12, prime_limit=10**6))

    def test_cofinite_two(self):
        # truncation leaves Eq11 below the density and Eq4 above it
        cof2 = ExponentSet.excluding(2)
        lower = density_eq11(cof2, prime_limit=10**6)
        upper = density_eq4(cof2, prime_limit=10**6)
        assert lower.value <= upper.value
        assert lower.intersects(upper)
        assert lower.value == pytest.approx(0.7485, abs=1e-4)

    def test_late_smallest_exponent(self):
        result = density_eq11(parse_exponent_set("finite:1,60"), prime_limit=10**6)
        assert result.value == pytest.approx(SIX_OVER_PI_SQUARED, rel=1e-14)
        assert result.intersects(density_eq4(parse_exponent_set("finite:1,60"), prime_limit=10**6))

    def test_huge_listed_exponent(self):
        result = density_eq11(ExponentSet.finite(1, 20_000_000), prime_limit=100)
        assert result.value == pytest.approx(SIX_OVER_PI_SQUARED, rel=1e-14)


class TestZeroBranch:
    def test_zero(self):
        for text in ["geq:2", "finite:2,3"]:
            result = density_zero_branch(parse_exponent_set(text))
            assert result.value == 0.0
            assert result.error_bound == 0.0

    def test_wrong_branch(self):
        with pytest.raises(PreconditionError):
            density_zero_branch(ExponentSet.finite(1))

    def test_auto_dispatch(self):
        assert density_auto(ExponentSet.at_least(2)).value == 0.0
        assert density_auto(ExponentSet.finite(1), prime_limit=1000).route == DensityRoute.EQ4
        assert density_auto(ExponentSet.finite(1), route="eq11", prime_limit=1000).route == DensityRoute.EQ11
        with pytest.raises(PreconditionError):
            density_auto(ExponentSet.finite(1), route="eq99")
        with pytest.raises(PreconditionError):
            density_auto(ExponentSet.at_least(2), route="eq4")


class TestSumForm:
    def test_tail_bound_validates(self):
        assert validate_powerful_tail_bound(10**6) == 5.0
        with pytest.raises(BoundValidationError):
            validate_powerful_tail_bound(10**6, 1.0)

    def test_squarefree_only_one_term(self):
        result = density_eq8_sum_form(ExponentSet.finite(1), a_limit=10**6)
        assert result.value == pytest.approx(SIX_OVER_PI_SQUARED, rel=1e-15)
        assert result.error_bound < 1e-14
        assert result.route == DensityRoute.EQ8
        assert result.sum_limit == 10**6
        assert result.prime_limit == 0
        assert result.exponent_depth == 0

    def test_cubefree_within_bound(self):
        result = density_eq8_sum_form(ExponentSet.finite(1, 2), a_limit=10**6)
        assert result.value <= _inverse_zeta_3()
        assert abs(result.value - _inverse_zeta_3()) <= result.error_bound

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            density_eq8_sum_form(ExponentSet.at_least(2), a_limit=100)
        with pytest.raises(PreconditionError):
            density_eq8_sum_form(ExponentSet.finite(1), a_limit=0)


class TestRadicalClassSum:
    def test_examples(self):
        fin12 = ExponentSet.finite(1, 2)
        assert radical_class_sum(fin12, 1, 10).value == 1.0
        assert radical_class_sum(fin12, 2, 10).value == 0.25
        assert radical_class_sum(fin12, 6, 10).value == pytest.approx(1 / 36)
        assert radical_class_sum(fin12, 6, 10).tail_bound == 0.0

    def test_geometric_tail(self):
        result = radical_class_sum(ExponentSet.all_exponents(), 2, 10)
        assert result.value == pytest.approx(0.5 - 2.0**-10)
        assert result.tail_bound == pytest.approx(2.0**-10)

    def test_multiplicative(self):
        sqfe = ExponentSet.squarefree()
        for a, b in [(2, 3), (5, 6), (7, 30), (11, 91)]:
            whole = radical_class_sum(sqfe, a * b, 40)
            product = radical_class_sum(sqfe, a, 40).value * radical_class_sum(sqfe, b, 40).value
            assert whole.value == pytest.approx(product, rel=1e-14, abs=whole.tail_bound)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            radical_class_sum(ExponentSet.finite(1, 2), 4, 10)
        with pytest.raises(PreconditionError):
            radical_class_sum(ExponentSet.finite(1, 2), 6, 1)

    def test_regrouped_sum_matches_sum_form(self):
        # for S = {1, 2} the powerful members up to 10^6 are exactly l^2 with l <= 1000 squarefree
        fin12 = ExponentSet.finite(1, 2)
        mask = build_sieve(1000).squarefree_mask
        total = 0.0
        for l in np.flatnonzero(mask).tolist():
            weight = math.prod(p / (p + 1) for p in _prime_factors(l))
            total += weight * radical_class_sum(fin12, l, 10).value
        regrouped = SIX_OVER_PI_SQUARED * total
        assert regrouped == pytest.approx(density_eq8_sum_form(fin12, a_limit=10**6).value, rel=1e-12)


def _prime_factors(n: int) -> list[int]:
    primes, d = [], 2
    while d * d <= n:
        if n % d == 0:
            primes.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        primes.append(n)
    return primes


class TestRouteEquivalence:
    def setup_class(self):
        self.results = {}
        for text in ROUTE_SETS:
            exponent_set = parse_exponent_set(text)
            self.results[text] = [
                density_eq4(exponent_set, prime_limit=10**5),
                density_eq11(exponent_set, prime_limit=10**5),
                density_eq8_sum_form(exponent_set, a_limit=10**6),
            ]

    @pytest.mark.parametrize("text", ROUTE_SETS)
    def test_intervals_intersect(self, text):
        eq4, eq11, eq8 = self.results[text]
        assert eq4.intersects(eq11)
        assert eq4.intersects(eq8)
        assert eq11.intersects(eq8)

    @pytest.mark.parametrize("text", ROUTE_SETS)
    def test_range_law(self, text):
        eq4 = self.results[text][0]
        assert SIX_OVER_PI_SQUARED - eq4.error_bound <= eq4.value <= 1.0 + eq4.error_bound

    def test_monotone_in_subset_order(self):
        sets = {text: parse_exponent_set(text) for text in ROUTE_SETS}
        checked = 0
        for a in ROUTE_SETS:
            for b in ROUTE_SETS:
                if a != b and sets[a].issubset(sets[b]):
                    low, high = self.results[a][0], self.results[b][0]
                    assert low.value <= high.value + low.error_bound + high.error_bound
                    checked += 1
        assert checked >= 4


class TestPerPrime:
    def test_prefix_product(self):
        result = density_per_prime(PerPrimeFamily.prefix(), 50)
        assert abs(result.value - 0.7210233) <= 5e-7
        assert result.value == pytest.approx(0.721023345312, abs=1e-10)
        assert result.error_bound < 1e-7
        assert result.route == DensityRoute.EQ13
        assert result.term_limit == 50

    def test_single_term(self):
        result = density_per_prime(PerPrimeFamily.prefix(), 1)
        assert result.value == pytest.approx(0.75)
        assert result.error_bound < 1.0
        assert result.prime_limit == 2

    def test_list_rule(self):
        result = density_per_prime(parse_family("list:finite:1:default:all"), 10)
        assert result.value == pytest.approx(0.75)
        assert result.error_bound < 1e-12

    def test_default_with_late_change(self):
        family = PerPrimeFamily.from_list([ExponentSet.finite(1)], ExponentSet.excluding(60))
        result = density_per_prime(family, 10)
        assert result.value == pytest.approx(0.75, abs=1e-12)
        assert result.error_bound < 1e-9

    def test_constant_families(self):
        squarefree = density_per_prime(PerPrimeFamily.constant(ExponentSet.finite(1)), 1000)
        assert abs(squarefree.value - SIX_OVER_PI_SQUARED) <= squarefree.error_bound
        assert squarefree.value == pytest.approx(density_eq4(ExponentSet.finite(1), prime_limit=7919).value, rel=1e-14)
        assert density_per_prime(PerPrimeFamily.constant(ExponentSet.all_exponents()), 100).value == 1.0

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            density_per_prime(PerPrimeFamily.prefix(), 0)
        with pytest.raises(PreconditionError):
            density_per_prime(parse_family("list:finite:1;geq:2:default:all"), 10)

    def test_mpmath_backend(self):
        fast = density_per_prime(PerPrimeFamily.prefix(), 50, backend="longdouble")
        exact = density_per_prime(PerPrimeFamily.prefix(), 50, backend="mpmath")
        assert fast.value == pytest.approx(exact.value, rel=1e-14)


class TestGap:
    def test_certified_at_million(self):
        gap = gap_interval(10**6)
        assert gap.certified
        assert gap.upper_no2 == pytest.approx(DENSITIES["exclude:2"], abs=1e-6)
        assert gap.lower_with2 == pytest.approx(_inverse_zeta_3(), abs=1e-6)
        assert gap.upper_no2 + gap.upper_no2_error < gap.lower_with2 - gap.lower_with2_error

    def test_certified_at_thousand(self):
        assert gap_interval(1000).certified

    def test_not_certified_at_two(self):
        gap = gap_interval(2)
        assert not gap.certified
        assert gap.upper_no2 == pytest.approx(0.875)
        assert gap.lower_with2 == pytest.approx(0.875)

    def test_sets_fall_on_their_side(self):
        gap = gap_interval(10**5)
        slack = gap.upper_no2_error + gap.lower_with2_error
        for text in ["finite:1,2,5", "upto:4", "squarefree"]:
            result = density_eq4(parse_exponent_set(text), prime_limit=10**5)
            assert result.value >= gap.lower_with2 - slack - result.error_bound
        for text in ["finite:1", "finite:1,3", "exclude:2"]:
            result = density_eq4(parse_exponent_set(text), prime_limit=10**5)
            assert result.value <= gap.upper_no2 + slack + result.error_bound

    def test_rejects_small_limit(self):
        with pytest.raises(PreconditionError):
            gap_interval(1)
