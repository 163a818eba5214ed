import logging
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from config import settings
from src.density.models import BoundedValue, DensityResult, DensityRoute
from src.exceptions import BoundValidationError, PreconditionError
from src.exponent_sets.exponent_set import ExponentSet
from src.factor_sieve.constants import POWERFUL_RECIPROCAL_SUM, SIX_OVER_PI_SQUARED
from src.factor_sieve.powerful import enumerate_powerful, powerful_members
from src.factor_sieve.sieve import squarefree_prime_factors

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def validate_powerful_tail_bound(limit: int | None = None, constant: float | None = None) -> float:
    """
    Check sum_{a > A, a powerful} 1/a <= constant / sqrt(A) for every A <= limit.

    The tail past a_k is the full sum zeta(2) zeta(3) / zeta(6) minus the partial
    sum through a_k; it must sit below constant / sqrt(a_{k+1}), its value just
    before the next powerful number. Returns the constant once it passes.

    Raises:
        BoundValidationError: some partial tail exceeds the bound
    """
    limit = settings.tail_validation_limit if limit is None else limit
    constant = settings.powerful_tail_constant if constant is None else constant

    logger.info(f"Validating powerful reciprocal tail <= {constant}/sqrt(A) up to A={limit}...")
    values = np.array(enumerate_powerful(limit), dtype=np.float64)
    tails = POWERFUL_RECIPROCAL_SUM - np.cumsum(1.0 / values)

    bounds = constant / np.sqrt(np.append(values[1:], float(limit)))
    failed = np.flatnonzero(tails > bounds)
    if failed.size:
        k = int(failed[0])
        raise BoundValidationError(
            f"powerful reciprocal tail {tails[k]:.3e} beyond a={int(values[k])} exceeds {constant}/sqrt(A)"
        )

    logger.info(f"Tail bound holds at all {values.size} powerful numbers <= {limit}")
    return constant


def _radical_weight(primes: tuple[int, ...]) -> float:
    return math.prod(p / (p + 1) for p in primes)


def density_eq8_sum_form(exponent_set: ExponentSet, a_limit: int | None = None) -> DensityResult:
    """
    h(E(S)) = (6/pi^2) sum over powerful S-numbers a of prod_{p | a} p/(p+1) / a, for a <= a_limit.

    All terms are positive, so the truncated sum is a lower bound and the
    reciprocal tail of the powerful numbers bounds what is missing.

    Raises:
        PreconditionError: 1 not in S or a_limit < 1
    """
    a_limit = settings.sum_form_a_limit if a_limit is None else a_limit
    if not exponent_set.contains_one():
        raise PreconditionError(f"{exponent_set} does not contain 1; use the zero branch", rule="1 in S")
    if a_limit < 1:
        raise PreconditionError(f"a_limit must be >= 1, got {a_limit}", rule="a_limit>=1")

    members = powerful_members(a_limit, exponent_set)
    logger.info(f"Eq8 sum for {exponent_set} over {len(members)} powerful members <= {a_limit}")
    total = math.fsum(_radical_weight(m.primes) / m.value for m in members)
    value = SIX_OVER_PI_SQUARED * total

    if exponent_set.smallest_exponent_above_one() is None:
        # only a = 1 qualifies
        tail = 0.0
    else:
        constant = validate_powerful_tail_bound()
        tail = SIX_OVER_PI_SQUARED * constant / math.sqrt(a_limit)
    # every term and 6/pi^2 carry a few ulps
    rounding = (len(members) + 4) * 2.0**-52 * value

    # the density never exceeds 1
    error_bound = min(tail + rounding, 1.0 - value) if value < 1.0 else rounding

    return DensityResult(
        value=value,
        error_bound=error_bound,
        prime_limit=0,
        exponent_depth=0,
        route=DensityRoute.EQ8,
        sum_limit=a_limit,
    )


def _prime_class_sum(exponent_set: ExponentSet, p: int, depth: int) -> tuple[Fraction, Fraction]:
    exponents = [e for e in exponent_set.elements(depth) if e >= 2]
    value = sum((Fraction(1, p**e) for e in exponents), Fraction(0))
    if exponent_set.has_elements_above(depth):
        tail = Fraction(1, p**depth * (p - 1))
    else:
        tail = Fraction(0)
    return value, tail


def radical_class_sum(exponent_set: ExponentSet, radical: int, depth: int) -> BoundedValue:
    """
    A(l): the sum of 1/a over powerful S-numbers a with radical l.

    A is multiplicative; for a prime p, A(p) = sum of p^-j over j in S with j >= 2,
    truncated at j <= depth. Evaluated exactly in rationals.

    Raises:
        PreconditionError: l not squarefree or depth < 2
    """
    if depth < 2:
        raise PreconditionError(f"depth must be >= 2, got {depth}", rule="depth>=2")
    primes = squarefree_prime_factors(radical)

    value, upper = Fraction(1), Fraction(1)
    for p in primes:
        v, t = _prime_class_sum(exponent_set, p, depth)
        value *= v
        upper *= v + t
    return BoundedValue(value=float(value), tail_bound=float(upper - value))
