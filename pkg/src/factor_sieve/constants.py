"""
Embedded analytic constants and the explicit constants of the b_r(x) lemma.

The zeta values were obtained by Euler-Maclaurin summation at 45 significant
digits (N = 30, ten Bernoulli corrections) and are stored to 25 digits.
zeta(2/3) is negative.
"""

import hashlib
import logging
import math

from pydantic import BaseModel, ConfigDict

from src.exceptions import ConstantsMismatchError

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

ZETA_3_2 = "2.612375348685488343348568"
ZETA_3 = "1.202056903159594285399738"
ZETA_2_3 = "-2.447580736233658231090996"
ZETA_2 = "1.644934066848226436472415"
ZETA_6 = "1.017343061984449139714518"

# Bateman-Grosswald coefficients C1 = zeta(3/2)/zeta(3), C2 = zeta(2/3)/zeta(2)
POWERFUL_C1 = 2.173254312519554138
POWERFUL_C2 = -1.487950663532272632

# Sum of 1/a over all powerful a: zeta(2) zeta(3) / zeta(6)
POWERFUL_RECIPROCAL_SUM = 1.943596436820759205

SIX_OVER_PI_SQUARED = 6.0 / math.pi**2

# Primorial 29# minus one
LEMMA_N = 6469693229
LEMMA_K_PRINTED = 57.682607
LEMMA_C_PRINTED = 7.443083


class LemmaConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: float
    c: float
    N: int
    k1: float


def compute_lemma_constants() -> LemmaConstants:
    """
    Recompute k = 3.5 * prod_{2<=p<=23} (1 + 1/sqrt(p)) and c = 4 sqrt(2.4 / log 2).

    Raises:
        ConstantsMismatchError: if either value disagrees with the printed digits
    """
    k = 3.5
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23):
        k *= 1.0 + 1.0 / math.sqrt(p)
    c = 4.0 * math.sqrt(2.4 / math.log(2.0))

    if not 57.6826 <= k <= 57.6827:
        raise ConstantsMismatchError(f"recomputed k = {k!r} does not match {LEMMA_K_PRINTED}")
    if not 7.443083 <= c <= 7.443084:
        raise ConstantsMismatchError(f"recomputed c = {c!r} does not match {LEMMA_C_PRINTED}")

    return LemmaConstants(k=k, c=c, N=LEMMA_N, k1=3.5)


LEMMA_CONSTANTS = compute_lemma_constants()


def embedded_constants() -> dict[str, str]:
    return {
        "zeta(3/2)": ZETA_3_2,
        "zeta(3)": ZETA_3,
        "zeta(2/3)": ZETA_2_3,
        "zeta(2)": ZETA_2,
        "zeta(6)": ZETA_6,
        "C1": repr(POWERFUL_C1),
        "C2": repr(POWERFUL_C2),
        "powerful_reciprocal_sum": repr(POWERFUL_RECIPROCAL_SUM),
        "lemma_k": repr(LEMMA_CONSTANTS.k),
        "lemma_c": repr(LEMMA_CONSTANTS.c),
        "lemma_N": str(LEMMA_CONSTANTS.N),
        "lemma_k1": repr(LEMMA_CONSTANTS.k1),
    }


def constants_fingerprint() -> str:
    digest = hashlib.sha256()
    for name, value in sorted(embedded_constants().items()):
        digest.update(f"{name}={value}\n".encode())
    return digest.hexdigest()
