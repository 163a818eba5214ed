"""
Truncated Euler products for the density of exponentially S-numbers.

Every product is taken over primes p <= P with per-prime inner sums cut at a
depth I(p); the reported error_bound covers the inner tails, the primes above P
and accumulated rounding. Factors are combined in increasing order of p so a
given (S, P, eps, backend) always yields the same value.
"""

import logging
import math

import mpmath
import numpy as np

from config import settings
from src.density.models import DensityResult, DensityRoute, GapInterval
from src.exceptions import PreconditionError
from src.exponent_sets.exponent_set import ExponentSet, PerPrimeFamily
from src.factor_sieve.sieve import first_primes, primes_up_to

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Inner sums never go deeper than this; the tail bound covers whatever is left.
MAX_INNER_DEPTH = 200

BACKENDS = ("auto", "longdouble", "mpmath")


def _resolve_backend(backend: str | None = None) -> str:
    backend = backend or settings.precision_backend
    if backend not in BACKENDS:
        raise PreconditionError(f"unknown precision backend {backend!r}; expected one of {BACKENDS}", rule="backend")
    if backend == "auto":
        return "longdouble" if np.finfo(np.longdouble).nmant >= 60 else "mpmath"
    return backend


def _precision_bits(backend: str) -> int:
    if backend == "longdouble":
        return int(np.finfo(np.longdouble).nmant) + 1
    return settings.working_precision_bits


def _check_prime_limit(prime_limit: int):
    if prime_limit < 2:
        raise PreconditionError(f"prime_limit must be >= 2, got {prime_limit}", rule="prime_limit>=2")


def _check_eps(eps: float):
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}", rule="eps>0")


def _inner_depths(primes: np.ndarray, eps: float, cap: int | None = None) -> np.ndarray:
    """I(p) = max(2, ceil(log(2 pi(P) / eps) / log p)), so p^-I(p) <= eps / (2 pi(P)); non-increasing in p."""
    target = math.log(2 * primes.size / eps)
    depths = np.ceil(target / np.log(primes.astype(np.float64))).astype(np.int64)
    depths = np.clip(depths, 2, MAX_INNER_DEPTH)
    if cap is not None:
        depths = np.minimum(depths, max(cap, 2))
    return depths


def _inner_tails(primes: np.ndarray, depths: np.ndarray, exact_from: int | None) -> np.ndarray:
    """Bound p^-I / (p - 1) on the dropped part of each inner sum; 0 where nothing is dropped."""
    p = primes.astype(np.float64)
    tails = np.exp(-depths * np.log(p)) / (p - 1.0)
    if exact_from is not None:
        tails[depths >= exact_from] = 0.0
    return tails


def _inner_sums_longdouble(primes: np.ndarray, depths: np.ndarray, coefficients: list[int]) -> np.ndarray:
    """sum_{i=2..I(p)} coefficients[i] p^-i for every prime, one exponent column at a time."""
    inverse = np.longdouble(1) / primes.astype(np.longdouble)
    power = inverse.copy()
    sums = np.zeros(primes.size, dtype=np.longdouble)
    negated = -depths
    for i in range(2, int(depths[0]) + 1):
        # depths are non-increasing, so the primes still active form a prefix
        active = int(np.searchsorted(negated, -i, side="right"))
        if active == 0:
            break
        power[:active] *= inverse[:active]
        if coefficients[i]:
            sums[:active] += coefficients[i] * power[:active]
    return sums


def _inner_sum_mpmath(p: int, depth: int, coefficients: list[int]) -> mpmath.mpf:
    total = mpmath.mpf(0)
    power = mpmath.mpf(1) / p
    for i in range(2, depth + 1):
        power /= p
        if coefficients[i]:
            total += coefficients[i] * power
    return total


def _combine_longdouble(terms: np.ndarray) -> np.longdouble:
    """prod(1 + terms) in increasing order of p, in log space above the configured factor count."""
    if terms.size == 0:
        return np.longdouble(1)
    if terms.size > settings.log_product_threshold:
        return np.exp(np.cumsum(np.log1p(terms))[-1])
    return np.cumprod(np.longdouble(1) + terms)[-1]


def _combine_mpmath(terms: list) -> mpmath.mpf:
    if len(terms) > settings.log_product_threshold:
        total = mpmath.mpf(0)
        for t in terms:
            total += mpmath.log1p(t)
        return mpmath.exp(total)
    product = mpmath.mpf(1)
    for t in terms:
        product *= 1 + t
    return product


def _outer_log_tail(first_exponent: int | None, prime_limit: int) -> float:
    """
    Bound on sum_{p > P} |log(factor_p)| when |factor_p - 1| <= p^-m p^2 / (p^2 - 1).

    m = 2 gives sum_{n > P} 1/(n^2 - 1) <= 1/P; for m >= 3 the sum is at most
    2 / ((m - 1) P^(m - 1)). No tail at all when m is None.
    """
    if first_exponent is None:
        return 0.0
    generic = 1.0 / prime_limit
    if first_exponent == 2:
        return generic
    m = first_exponent
    # log space; underflows to 0 for large m
    return min(generic, math.exp(math.log(2.0 / (m - 1)) - (m - 1) * math.log(prime_limit)))


def _inner_log_error(sums: np.ndarray, tails: np.ndarray) -> float:
    # |log(1 + t) - log(1 + t_hat)| <= tail / (1 + t_hat - tail)
    if not tails.any():
        return 0.0
    base = 1.0 + sums.astype(np.float64) - tails
    return float(np.sum(tails / base))


def _rounding_allowance(factor_count: int, bits: int) -> float:
    # the last term covers the final conversions to float64
    return (factor_count + 1) * 2.0 ** (2 - bits) + 2.0**-50


def _certified_error(value: float, log_error: float) -> float:
    return min(value * math.expm1(log_error), 1.0 - 2.0**-52)


def _product_of_factors(
    primes: np.ndarray,
    depths: np.ndarray,
    coefficients: list[int] | list[list[int]],
    backend: str,
    radical_weight: bool = False,
) -> tuple[float, np.ndarray]:
    """
    Evaluate prod_p (1 + w_p sum_i coefficients[i] p^-i), w_p = p/(p+1) with radical_weight, else 1.

    `coefficients` is either shared by all primes or given per prime. Returns the
    product as a float and the float64 inner sums (weighted) for the error estimate.
    """
    shared = not coefficients or not isinstance(coefficients[0], list)

    if backend == "longdouble":
        if shared:
            sums = _inner_sums_longdouble(primes, depths, coefficients)
        else:
            sums = np.array(
                [_inner_sums_longdouble(primes[k : k + 1], depths[k : k + 1], c)[0] for k, c in enumerate(coefficients)],
                dtype=np.longdouble,
            )
        if radical_weight:
            p = primes.astype(np.longdouble)
            sums = sums * (p / (p + 1))
        return float(_combine_longdouble(sums)), sums.astype(np.float64)

    with mpmath.workprec(settings.working_precision_bits):
        terms = []
        for k, p in enumerate(primes.tolist()):
            t = _inner_sum_mpmath(p, int(depths[k]), coefficients if shared else coefficients[k])
            if radical_weight:
                t *= mpmath.mpf(p) / (p + 1)
            terms.append(t)
        value = _combine_mpmath(terms)
        return float(value), np.array([float(t) for t in terms], dtype=np.float64)


def _change_coefficients(exponent_set: ExponentSet, depth: int) -> list[int]:
    """[0, 0, u(2) - u(1), ..., u(depth) - u(depth - 1)]"""
    return [0, 0] + [exponent_set.u(i) - exponent_set.u(i - 1) for i in range(2, depth + 1)]


def _require_one(exponent_set: ExponentSet):
    if not exponent_set.contains_one():
        raise PreconditionError(
            f"{exponent_set} does not contain 1; its density is 0, use the zero branch",
            rule="1 in S",
        )


def density_eq4(
    exponent_set: ExponentSet,
    prime_limit: int | None = None,
    eps: float | None = None,
    backend: str | None = None,
) -> DensityResult:
    """
    h(E(S)) = prod_p (1 + sum_{i>=2} (u(i) - u(i-1)) p^-i), truncated at p <= prime_limit.

    Raises:
        PreconditionError: 1 not in S, prime_limit < 2 or eps <= 0
    """
    prime_limit = settings.default_prime_limit if prime_limit is None else prime_limit
    eps = settings.default_eps if eps is None else eps
    _require_one(exponent_set)
    _check_prime_limit(prime_limit)
    _check_eps(eps)

    backend = _resolve_backend(backend)
    primes = primes_up_to(prime_limit)
    stable = exponent_set.stable_from()
    depths = _inner_depths(primes, eps, cap=stable)
    coefficients = _change_coefficients(exponent_set, int(depths[0]))

    logger.info(f"Eq4 product for {exponent_set} over {primes.size} primes <= {prime_limit} ({backend})")
    value, sums = _product_of_factors(primes, depths, coefficients, backend)

    tails = _inner_tails(primes, depths, stable)
    log_error = (
        _inner_log_error(sums, tails)
        + _outer_log_tail(exponent_set.first_change_index(), prime_limit)
        + _rounding_allowance(primes.size, _precision_bits(backend))
    )

    return DensityResult(
        value=value,
        error_bound=_certified_error(value, log_error),
        prime_limit=prime_limit,
        exponent_depth=int(depths[0]),
        route=DensityRoute.EQ4,
    )


def density_eq11(
    exponent_set: ExponentSet,
    prime_limit: int | None = None,
    eps: float | None = None,
    backend: str | None = None,
) -> DensityResult:
    """
    h(E(S)) = (6/pi^2) prod_p (1 + (p/(p+1)) sum_{j in S, j>=2} p^-j), truncated at p <= prime_limit.

    Every factor is >= 1, so the truncated value never exceeds the true density.
    """
    prime_limit = settings.default_prime_limit if prime_limit is None else prime_limit
    eps = settings.default_eps if eps is None else eps
    _require_one(exponent_set)
    _check_prime_limit(prime_limit)
    _check_eps(eps)

    backend = _resolve_backend(backend)
    primes = primes_up_to(prime_limit)
    largest = exponent_set.largest_element()
    depths = _inner_depths(primes, eps, cap=largest)
    depth = int(depths[0])
    coefficients = [0, 0] + [exponent_set.u(j) for j in range(2, depth + 1)]

    logger.info(f"Eq11 product for {exponent_set} over {primes.size} primes <= {prime_limit} ({backend})")
    product, sums = _product_of_factors(primes, depths, coefficients, backend, radical_weight=True)
    with mpmath.workprec(settings.working_precision_bits):
        value = float(6 / mpmath.pi**2 * mpmath.mpf(product))

    # nothing is dropped once the depth reaches the largest element
    tails = _inner_tails(primes, depths, largest)
    log_error = (
        _inner_log_error(sums, tails)
        + _outer_log_tail(exponent_set.smallest_exponent_above_one(), prime_limit)
        + _rounding_allowance(primes.size, _precision_bits(backend))
    )

    return DensityResult(
        value=min(value, 1.0),
        error_bound=_certified_error(value, log_error),
        prime_limit=prime_limit,
        exponent_depth=depth,
        route=DensityRoute.EQ11,
    )


def density_zero_branch(exponent_set: ExponentSet) -> DensityResult:
    """Density of E(S) when 1 is not in S: exactly 0."""
    if exponent_set.contains_one():
        raise PreconditionError(f"{exponent_set} contains 1; use a product route", rule="1 not in S")
    return DensityResult(value=0.0, error_bound=0.0, prime_limit=0, exponent_depth=0, route=DensityRoute.EQ4)


def _family_outer_log_tail(family: PerPrimeFamily, term_limit: int, last_prime: int) -> float:
    generic = 1.0 / last_prime
    if family.rule == "prefix":
        # |log(1 - p_j^-(j+1))| <= 2^-j
        return min(generic, 2.0**-term_limit)
    if term_limit >= len(family.sets):
        return min(generic, _outer_log_tail(family.default.first_change_index(), last_prime))
    return generic


def density_per_prime(
    family: PerPrimeFamily,
    term_limit: int,
    eps: float | None = None,
    backend: str | None = None,
) -> DensityResult:
    """
    h(E(A)) = prod_{n>=1} (1 + sum_{i>=2} (u_n(i) - u_n(i-1)) p_n^-i), first term_limit factors.

    Raises:
        PreconditionError: term_limit < 1 or some S_n without 1
    """
    eps = settings.default_eps if eps is None else eps
    if term_limit < 1:
        raise PreconditionError(f"term_limit must be >= 1, got {term_limit}", rule="term_limit>=1")
    _check_eps(eps)
    missing = family.first_missing_one()
    if missing is not None:
        raise PreconditionError(f"S_{missing} of {family} does not contain 1", rule="1 in S_n")

    backend = _resolve_backend(backend)
    primes = first_primes(term_limit)
    depths = _inner_depths(primes, eps)
    log_error = _family_outer_log_tail(family, term_limit, int(primes[-1]))
    logger.info(f"Eq13 product for {family} over the first {term_limit} primes ({backend})")

    if family.rule == "prefix":
        # S_n = {1..n}: the only change is u_n(n+1) - u_n(n) = -1, so every factor is exact
        indices = np.arange(1, term_limit + 1)
        if backend == "longdouble":
            terms = -np.power(primes.astype(np.longdouble), -(indices + 1).astype(np.longdouble))
            value = float(_combine_longdouble(terms))
        else:
            with mpmath.workprec(settings.working_precision_bits):
                value = float(_combine_mpmath([-mpmath.mpf(int(p)) ** -(n + 1) for n, p in zip(indices.tolist(), primes.tolist())]))
        depth = term_limit + 1
    else:
        sets = [family.set_for(n) for n in range(1, term_limit + 1)]
        stables = [s.stable_from() for s in sets]
        for k, stable in enumerate(stables):
            if stable is not None:
                depths[k] = min(depths[k], max(stable, 2))
        coefficients = [_change_coefficients(s, int(d)) for s, d in zip(sets, depths)]
        value, sums = _product_of_factors(primes, depths, coefficients, backend)

        tails = _inner_tails(primes, depths, None)
        for k, stable in enumerate(stables):
            if stable is not None and depths[k] >= stable:
                tails[k] = 0.0
        log_error += _inner_log_error(sums, tails)
        depth = int(depths.max())

    log_error += _rounding_allowance(term_limit, _precision_bits(backend))
    return DensityResult(
        value=value,
        error_bound=_certified_error(value, log_error),
        prime_limit=int(primes[-1]),
        exponent_depth=depth,
        route=DensityRoute.EQ13,
        term_limit=term_limit,
    )


def gap_interval(prime_limit: int | None = None, eps: float | None = None, backend: str | None = None) -> GapInterval:
    """
    The densities of E(Cofinite{2}) and E(Finite{1,2}): every S with 1 in S and 2 not in S
    lies at or below the first, every S containing {1, 2} at or above the second.
    """
    prime_limit = settings.default_prime_limit if prime_limit is None else prime_limit
    _check_prime_limit(prime_limit)

    no2 = density_eq4(ExponentSet.excluding(2), prime_limit, eps, backend)
    with2 = density_eq4(ExponentSet.finite(1, 2), prime_limit, eps, backend)
    certified = no2.upper < with2.lower
    if certified:
        logger.info(f"Gap certified at P={prime_limit}: ({no2.upper:.9f}, {with2.lower:.9f})")
    else:
        logger.warning(f"Gap not certified at P={prime_limit}: bounds overlap")

    return GapInterval(
        upper_no2=no2.value,
        upper_no2_error=no2.error_bound,
        lower_with2=with2.value,
        lower_with2_error=with2.error_bound,
        prime_limit=prime_limit,
        certified=certified,
        no2=no2,
        with2=with2,
    )


def density_auto(
    exponent_set: ExponentSet,
    route: str = "auto",
    prime_limit: int | None = None,
    eps: float | None = None,
    a_limit: int | None = None,
) -> DensityResult:
    """Dispatch on route; "auto" takes Eq4 when 1 is in S and the zero branch otherwise."""
    from src.density.sum_form import density_eq8_sum_form

    match route:
        case "auto":
            if exponent_set.contains_one():
                return density_eq4(exponent_set, prime_limit, eps)
            return density_zero_branch(exponent_set)
        case "eq4":
            return density_eq4(exponent_set, prime_limit, eps)
        case "eq11":
            return density_eq11(exponent_set, prime_limit, eps)
        case "eq8":
            return density_eq8_sum_form(exponent_set, a_limit)
        case _:
            raise PreconditionError(f"unknown route {route!r}", rule="route")
