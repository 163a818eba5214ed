import logging
import math
from typing import NamedTuple

from src.exceptions import PreconditionError
from src.exponent_sets.exponent_set import EXPONENT_TABLE_SIZE, ExponentSet, is_squarefree
from src.factor_sieve.constants import POWERFUL_C1, POWERFUL_C2
from src.factor_sieve.sieve import primes_up_to

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


class PowerfulMember(NamedTuple):
    value: int
    radical: int
    primes: tuple[int, ...]


def enumerate_powerful(limit: int) -> list[int]:
    """
    All powerful numbers <= limit (1 included), in increasing order.

    Every powerful number is a^2 b^3 for exactly one pair with b squarefree,
    so walking those pairs produces each value once.
    """
    if limit < 1:
        raise PreconditionError(f"limit must be >= 1, got {limit}", rule="limit>=1")

    values = []
    b = 1
    while b**3 <= limit:
        if is_squarefree(b):
            cube = b**3
            values.extend(a * a * cube for a in range(1, math.isqrt(limit // cube) + 1))
        b += 1
    values.sort()
    return values


def powerful_main_term(x: float) -> float:
    """Two-term main term C1 x^(1/2) + C2 x^(1/3) of the powerful counting function."""
    if x < 1:
        raise PreconditionError(f"x must be >= 1, got {x}", rule="x>=1")
    return POWERFUL_C1 * math.sqrt(x) + POWERFUL_C2 * x ** (1.0 / 3.0)


def powerful_members(limit: int, exponent_set: ExponentSet) -> list[PowerfulMember]:
    """
    The powerful S-numbers a <= limit (every exponent >= 2 and in S), sorted by value.

    Built by depth-first search over primes <= sqrt(limit), so each member comes
    with its radical and prime support; a = 1 is always included.
    """
    if limit < 1:
        raise PreconditionError(f"limit must be >= 1, got {limit}", rule="limit>=1")

    exponents = [e for e in range(2, EXPONENT_TABLE_SIZE) if exponent_set.u(e)]
    members = [PowerfulMember(1, 1, ())]
    if not exponents or limit < 4:
        return members

    primes = [int(p) for p in primes_up_to(math.isqrt(limit))]
    smallest = exponents[0]

    def walk(start: int, value: int, support: tuple[int, ...]):
        for i in range(start, len(primes)):
            p = primes[i]
            if p**smallest > limit // value:
                break
            for e in exponents:
                power = p**e
                if power > limit // value:
                    break
                extended = (*support, p)
                members.append(PowerfulMember(value * power, math.prod(extended), extended))
                walk(i + 1, value * power, extended)

    walk(0, 1, ())
    members.sort()
    logger.debug(f"{len(members)} powerful members of {exponent_set} up to {limit}")
    return members
