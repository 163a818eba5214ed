"""
Checks that tie exact counts of exponentially S-numbers to their computed densities.
"""

import logging
import math
from collections import defaultdict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from config import settings
from src.density.euler_product import density_eq4, density_per_prime, density_zero_branch
from src.density.models import DensityResult
from src.exceptions import PreconditionError
from src.exponent_sets.exponent_set import ExponentSet, PerPrimeFamily
from src.factor_sieve.constants import LEMMA_CONSTANTS
from src.factor_sieve.lemma import LemmaCheckRow, check_lemma1_bound
from src.factor_sieve.powerful import enumerate_powerful, powerful_main_term, powerful_members
from src.factor_sieve.sieve import (
    FactorSieve,
    coprime_squarefree_prefix_counts,
    count_family_members_many,
    count_members_many,
    count_squarefree_coprime,
)

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# log log 16 > 1, so the envelope is positive from here on; it dips before x = 100 and rises after
MIN_REPORT_X = 16


def remainder_envelope(x: float) -> float:
    """sqrt(x) log x exp(c sqrt(log x) / log log x), natural logarithms."""
    if x < MIN_REPORT_X:
        raise PreconditionError(f"envelope needs x >= {MIN_REPORT_X}, got {x}", rule=f"x>={MIN_REPORT_X}")
    log_x = math.log(x)
    return math.sqrt(x) * log_x * math.exp(LEMMA_CONSTANTS.c * math.sqrt(log_x) / math.log(log_x))


class CountReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: int = Field(ge=MIN_REPORT_X)
    exact_count: int = Field(ge=0)
    density: DensityResult

    @computed_field
    @property
    def main_term(self) -> float:
        return self.density.value * self.x

    @computed_field
    @property
    def residual(self) -> float:
        return self.exact_count - self.main_term

    @computed_field
    @property
    def envelope(self) -> float:
        return remainder_envelope(self.x)

    @computed_field
    @property
    def normalized_residual(self) -> float:
        return abs(self.residual) / self.envelope


class PowerfulCheckRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: int
    count: int
    main_term: float
    residual: float
    ratio: float
    ok: bool


def _check_xs(sieve: FactorSieve, xs: list[int]):
    for x in xs:
        if x < MIN_REPORT_X:
            raise PreconditionError(f"report x must be >= {MIN_REPORT_X}, got {x}", rule=f"x>={MIN_REPORT_X}")
        sieve.check_range(x, "x")


def verify_density(
    sieve: FactorSieve,
    exponent_set: ExponentSet,
    xs: list[int],
    prime_limit: int | None = None,
) -> list[CountReport]:
    """One CountReport per x, all counts from a single sweep and one density evaluation."""
    _check_xs(sieve, xs)
    if exponent_set.contains_one():
        prime_limit = settings.verify_prime_limit if prime_limit is None else prime_limit
        density = density_eq4(exponent_set, prime_limit=prime_limit)
        if density.error_bound > settings.verify_max_error:
            logger.warning(f"Density error {density.error_bound:.2e} above {settings.verify_max_error:.0e}")
    else:
        density = density_zero_branch(exponent_set)

    counts = count_members_many(sieve, xs, exponent_set)
    reports = [CountReport(x=x, exact_count=count, density=density) for x, count in zip(xs, counts)]
    for report in reports:
        logger.info(f"{exponent_set} x={report.x}: count={report.exact_count} residual={report.residual:.3f}")
    return reports


def _require_one(exponent_set: ExponentSet):
    if not exponent_set.contains_one():
        raise PreconditionError(f"{exponent_set} does not contain 1", rule="1 in S")


def count_via_decomposition(sieve: FactorSieve, x: int, exponent_set: ExponentSet) -> int:
    """
    Count S-numbers <= x as b_1(x) + sum over powerful S-numbers a >= 4 of b_{r(a)}(x // a).

    Every S-number factors uniquely as a * m with a a powerful S-number and m
    squarefree and coprime to a, so this is an exact identity.
    """
    _require_one(exponent_set)
    sieve.check_range(x, "x")

    total = 0
    for member in powerful_members(x, exponent_set):
        total += count_squarefree_coprime(sieve, x // member.value, member.radical)
    return total


def decomposition_prefix_counts(sieve: FactorSieve, x: int, exponent_set: ExponentSet) -> np.ndarray:
    """The decomposition count at every y <= x; counts[y] for 0 <= y <= x."""
    _require_one(exponent_set)
    sieve.check_range(x, "x")

    by_radical = defaultdict(list)
    for member in powerful_members(x, exponent_set):
        by_radical[member.radical].append(member.value)

    y = np.arange(x + 1, dtype=np.int64)
    counts = np.zeros(x + 1, dtype=np.int64)
    for radical, values in sorted(by_radical.items()):
        table = coprime_squarefree_prefix_counts(sieve, x // min(values), radical)
        for a in values:
            counts += table[y // a]
    return counts


def audit_lemma1(sieve: FactorSieve, rs: list[int], xs: list[int]) -> list[LemmaCheckRow]:
    """The full (r, x) grid of Lemma 1 checks, ordered by r then x as given."""
    rows = [check_lemma1_bound(sieve, x, r) for r in rs for x in xs]
    failed = [row for row in rows if not row.ok]
    if failed:
        logger.warning(f"{len(failed)} of {len(rows)} Lemma 1 cells exceed their bound")
    else:
        logger.info(f"All {len(rows)} Lemma 1 cells within bound")
    return rows


def verify_powerful_asymptotic(xs: list[int], envelope_constant: float | None = None) -> list[PowerfulCheckRow]:
    """Powerful counts against C1 sqrt(x) + C2 x^(1/3), with |residual| / x^(1/6) reported."""
    if envelope_constant is None:
        envelope_constant = settings.powerful_envelope_constant
    if not xs:
        raise PreconditionError("xs must be nonempty", rule="xs nonempty")
    for x in xs:
        if x < 1:
            raise PreconditionError(f"x must be >= 1, got {x}", rule="x>=1")

    values = np.array(enumerate_powerful(max(xs)), dtype=np.int64)
    rows = []
    for x in xs:
        count = int(np.searchsorted(values, x, side="right"))
        main_term = powerful_main_term(x)
        residual = count - main_term
        ratio = abs(residual) / x ** (1.0 / 6.0)
        rows.append(
            PowerfulCheckRow(
                x=x,
                count=count,
                main_term=main_term,
                residual=residual,
                ratio=ratio,
                ok=ratio <= envelope_constant,
            )
        )
    return rows


def count_family_members(sieve: FactorSieve, x: int, family: PerPrimeFamily) -> int:
    """Exact number of n <= x with every p_k^e || n satisfying e in S_k."""
    return count_family_members_many(sieve, [x], family)[0]


def verify_family(
    sieve: FactorSieve,
    family: PerPrimeFamily,
    xs: list[int],
    term_limit: int,
) -> list[CountReport]:
    _check_xs(sieve, xs)
    density = density_per_prime(family, term_limit)
    counts = count_family_members_many(sieve, xs, family)
    return [CountReport(x=x, exact_count=count, density=density) for x, count in zip(xs, counts)]
