import math

from pydantic import BaseModel, ConfigDict

from src.exceptions import PreconditionError
from src.factor_sieve.constants import LEMMA_CONSTANTS, SIX_OVER_PI_SQUARED
from src.factor_sieve.sieve import FactorSieve, count_squarefree_coprime, squarefree_prime_factors


class LemmaCheckRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: int
    x: int
    count: int
    main_term: float
    residual: float
    bound: float
    ok: bool


def br_main_term(x: float, r: int, sieve: FactorSieve | None = None) -> float:
    """(6/pi^2) x prod_{p|r} p/(p+1), the main term of b_r(x)."""
    factor = SIX_OVER_PI_SQUARED
    for p in squarefree_prime_factors(r, sieve):
        factor *= p / (p + 1)
    return factor * x


def lemma1_bound(x: float, r: int) -> float:
    """Explicit bound on |b_r(x) - main term|: k sqrt(x) for r <= N, inflated beyond N; k = 3.5 at r = 1."""
    constants = LEMMA_CONSTANTS
    k = constants.k1 if r == 1 else constants.k
    if r <= constants.N:
        return k * math.sqrt(x)

    # r > N >= 16, so log log r > 1
    log_r = math.log(r)
    return k * math.exp(constants.c * math.sqrt(log_r) / math.log(log_r)) * math.sqrt(x)


def check_lemma1_bound(sieve: FactorSieve, x: int, r: int) -> LemmaCheckRow:
    if x < 1:
        raise PreconditionError(f"x must be >= 1, got {x}", rule="x>=1")

    count = count_squarefree_coprime(sieve, x, r)
    main_term = br_main_term(x, r, sieve)
    residual = abs(count - main_term)
    bound = lemma1_bound(x, r)
    return LemmaCheckRow(
        r=r,
        x=x,
        count=count,
        main_term=main_term,
        residual=residual,
        bound=bound,
        ok=residual <= bound,
    )
