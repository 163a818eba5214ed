import logging
import math
from collections.abc import Callable, Iterable
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict

from config import settings
from src.exceptions import PreconditionError, ResourceCapError
from src.exponent_sets.exponent_set import ExponentSet, PerPrimeFamily

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# accept(primes, exponents) -> bool mask, evaluated on one prime power per integer
ExponentPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


def primes_up_to(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (sieve of Eratosthenes)."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p : limit + 1 : p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def first_primes(count: int) -> np.ndarray:
    """The first `count` primes p_1 = 2, p_2 = 3, ..."""
    if count < 1:
        return np.array([], dtype=np.int64)
    # p_n < n (log n + log log n) for n >= 6
    bound = 13 if count < 6 else int(count * (math.log(count) + math.log(math.log(count)))) + 1
    return primes_up_to(bound)[:count]


class Factorization(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    parts: tuple[tuple[int, int], ...]

    @property
    def radical(self) -> int:
        return math.prod(p for p, _ in self.parts)

    @property
    def exponents(self) -> list[int]:
        return [e for _, e in self.parts]

    def value(self) -> int:
        return math.prod(p**e for p, e in self.parts)


class FactorSieve:
    """
    Smallest-prime-factor table for 1..limit.

    spf[n] is the least prime dividing n for n >= 2 (spf[0] = 0, spf[1] = 1);
    `primes` lists the fixed points of spf in increasing order. Both arrays are
    read-only once built.
    """

    def __init__(self, limit: int, spf: np.ndarray, primes: np.ndarray, block_size: int | None = None):
        self.limit = limit
        self.spf = spf
        self.primes = primes
        self.block_size = block_size or settings.sieve_block_size
        self.spf.flags.writeable = False
        self.primes.flags.writeable = False

    def __repr__(self) -> str:
        return f"FactorSieve(limit={self.limit}, primes={self.primes.size})"

    @cached_property
    def squarefree_mask(self) -> np.ndarray:
        """mask[n] is True iff n is squarefree (mask[0] is False); independent of spf."""
        mask = np.ones(self.limit + 1, dtype=bool)
        mask[0] = False
        for p in self.primes:
            square = int(p) * int(p)
            if square > self.limit:
                break
            mask[square::square] = False
        mask.flags.writeable = False
        return mask

    def check_range(self, n: int, name: str = "n", lowest: int = 1):
        if not lowest <= n <= self.limit:
            raise PreconditionError(
                f"{name}={n} is outside the sieve range [{lowest}, {self.limit}]",
                rule=f"{lowest}<={name}<=sieve.limit",
            )

    def prime_index(self, primes: np.ndarray) -> np.ndarray:
        """n with p = p_n, for an array of primes covered by the sieve."""
        return np.searchsorted(self.primes, primes) + 1

    def sweep_block(self, lo: int, hi: int, accept: ExponentPredicate) -> np.ndarray:
        """
        Membership mask for lo <= n < hi: True when accept() holds for every prime power of n.

        Integers are peeled one smallest prime at a time, all in the block at once;
        an integer leaves the active set when fully factored or rejected.
        """
        rem = np.arange(lo, hi, dtype=np.int64)
        ok = np.ones(rem.size, dtype=bool)
        active = np.flatnonzero(rem > 1)

        while active.size:
            r = rem[active]
            p = self.spf[r].astype(np.int64)
            r = r // p
            e = np.ones(r.size, dtype=np.int64)
            divisible = r % p == 0
            while divisible.any():
                r[divisible] //= p[divisible]
                e[divisible] += 1
                divisible = r % p == 0

            ok[active] &= accept(p, e)
            rem[active] = r
            active = active[(r > 1) & ok[active]]

        return ok

    def iter_blocks(self, x: int, accept: ExponentPredicate) -> Iterable[tuple[int, np.ndarray]]:
        for lo in range(1, x + 1, self.block_size):
            hi = min(lo + self.block_size, x + 1)
            logger.debug(f"Sweeping block [{lo}, {hi})")
            yield lo, self.sweep_block(lo, hi, accept)


def build_sieve(limit: int, cap: int | None = None, block_size: int | None = None) -> FactorSieve:
    """
    Build the smallest-prime-factor table up to `limit`.

    Raises:
        PreconditionError: limit < 2
        ResourceCapError: limit above the configured sieve cap
    """
    cap = settings.sieve_cap if cap is None else cap
    if limit < 2:
        raise PreconditionError(f"sieve limit must be >= 2, got {limit}", rule="limit>=2")
    if limit > cap:
        raise ResourceCapError(f"sieve limit {limit} exceeds the cap {cap}; raise --sieve-cap or EXPO_SIEVE_CAP")

    logger.info(f"Building smallest-prime-factor sieve up to {limit}...")
    dtype = np.int32 if limit < 2**31 else np.int64
    spf = np.zeros(limit + 1, dtype=dtype)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            multiples = spf[p * p :: p]
            multiples[multiples == 0] = p

    primes = np.flatnonzero(spf == 0)
    primes = primes[primes >= 2].astype(np.int64)
    spf[primes] = primes
    spf[1] = 1

    logger.info(f"Sieve ready: {primes.size} primes <= {limit}")
    return FactorSieve(limit, spf, primes, block_size=block_size)


def factorize(sieve: FactorSieve, n: int) -> Factorization:
    sieve.check_range(n)
    parts = []
    m = n
    while m > 1:
        p = int(sieve.spf[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        parts.append((p, e))
    return Factorization(n=n, parts=tuple(parts))


def is_member(sieve: FactorSieve, n: int, exponent_set: ExponentSet) -> int:
    factorization = factorize(sieve, n)
    return int(all(exponent_set.u(e) for e in factorization.exponents))


def set_predicate(exponent_set: ExponentSet) -> ExponentPredicate:
    table = exponent_set.indicator_table()
    return lambda primes, exponents: table[exponents]


def family_predicate(sieve: FactorSieve, family: PerPrimeFamily) -> ExponentPredicate:
    return lambda primes, exponents: family.exponent_mask(sieve.prime_index(primes), exponents)


def count_members(sieve: FactorSieve, x: int, exponent_set: ExponentSet) -> int:
    """Exact number of n <= x whose exponents all lie in S, in one streamed sweep."""
    sieve.check_range(x, "x")
    accept = set_predicate(exponent_set)
    return sum(int(mask.sum()) for _, mask in sieve.iter_blocks(x, accept))


def _counts_at(sieve: FactorSieve, xs: list[int], accept: ExponentPredicate) -> list[int]:
    if not xs:
        return []
    for x in xs:
        sieve.check_range(x, "x")

    targets = sorted(set(xs))
    found = {}
    running = 0
    position = 0
    for lo, mask in sieve.iter_blocks(targets[-1], accept):
        cumulative = np.cumsum(mask, dtype=np.int64)
        hi = lo + mask.size
        while position < len(targets) and targets[position] < hi:
            found[targets[position]] = running + int(cumulative[targets[position] - lo])
            position += 1
        running += int(cumulative[-1])
    return [found[x] for x in xs]


def count_members_many(sieve: FactorSieve, xs: list[int], exponent_set: ExponentSet) -> list[int]:
    """count_members at every x in xs from a single sweep up to max(xs); input order is kept."""
    return _counts_at(sieve, list(xs), set_predicate(exponent_set))


def count_family_members_many(sieve: FactorSieve, xs: list[int], family: PerPrimeFamily) -> list[int]:
    return _counts_at(sieve, list(xs), family_predicate(sieve, family))


def membership_prefix_counts(sieve: FactorSieve, x: int, exponent_set: ExponentSet) -> np.ndarray:
    """counts[y] = number of members <= y for 0 <= y <= x."""
    sieve.check_range(x, "x")
    counts = np.zeros(x + 1, dtype=np.int64)
    accept = set_predicate(exponent_set)
    running = 0
    for lo, mask in sieve.iter_blocks(x, accept):
        cumulative = np.cumsum(mask, dtype=np.int64) + running
        counts[lo : lo + mask.size] = cumulative
        running = int(cumulative[-1])
    return counts


def squarefree_prime_factors(n: int, sieve: FactorSieve | None = None) -> list[int]:
    """
    Prime factors of a squarefree n, via the sieve when n is in range and trial division otherwise.

    Raises:
        PreconditionError: n < 1 or n not squarefree
    """
    if n < 1:
        raise PreconditionError(f"r must be a positive squarefree integer, got {n}", rule="r squarefree")

    if sieve is not None and n <= sieve.limit:
        parts = factorize(sieve, n).parts
    else:
        parts = []
        m, d = n, 2
        while d * d <= m:
            if m % d == 0:
                e = 0
                while m % d == 0:
                    m //= d
                    e += 1
                parts.append((d, e))
            d += 1
        if m > 1:
            parts.append((m, 1))

    if any(e > 1 for _, e in parts):
        raise PreconditionError(f"r={n} is not squarefree", rule="r squarefree")
    return [p for p, _ in parts]


def _coprime_squarefree_mask(sieve: FactorSieve, x: int, r: int) -> np.ndarray:
    mask = sieve.squarefree_mask[: x + 1].copy()
    for q in squarefree_prime_factors(r, sieve):
        if q <= x:
            mask[q::q] = False
    return mask


def count_squarefree_coprime(sieve: FactorSieve, x: int, r: int) -> int:
    """b_r(x): squarefree n <= x with gcd(n, r) = 1."""
    sieve.check_range(x, "x", lowest=0)
    return int(_coprime_squarefree_mask(sieve, x, r).sum())


def coprime_squarefree_prefix_counts(sieve: FactorSieve, x: int, r: int) -> np.ndarray:
    """counts[y] = b_r(y) for 0 <= y <= x."""
    sieve.check_range(x, "x", lowest=0)
    return np.cumsum(_coprime_squarefree_mask(sieve, x, r), dtype=np.int64)
