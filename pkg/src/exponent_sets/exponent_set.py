from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.exceptions import ExponentSetParseError, PreconditionError

# Exponents of integers below 2**63 never exceed 62.
EXPONENT_TABLE_SIZE = 64


class ExponentSetKind(str, Enum):
    FINITE = "Finite"
    COFINITE = "Cofinite"
    UP_TO = "UpTo"
    ALL = "All"
    GEQ_THRESHOLD = "GeqThreshold"
    SQUAREFREE_EXPONENTS = "SquarefreeExponents"


_KEYWORDS = {
    "finite": ExponentSetKind.FINITE,
    "exclude": ExponentSetKind.COFINITE,
    "upto": ExponentSetKind.UP_TO,
    "all": ExponentSetKind.ALL,
    "geq": ExponentSetKind.GEQ_THRESHOLD,
    "squarefree": ExponentSetKind.SQUAREFREE_EXPONENTS,
}
_KIND_KEYWORDS = {kind: keyword for keyword, kind in _KEYWORDS.items()}


def is_squarefree(n: int) -> bool:
    """Trial division by d^2; meant for exponents and other small n."""
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def _run_end(values: tuple[int, ...]) -> int:
    """Last integer of the consecutive run starting at values[0]."""
    end = values[0]
    for v in values[1:]:
        if v != end + 1:
            break
        end = v
    return end


class ExponentSet(BaseModel):
    """
    A set S of allowed prime exponents, restricted to six finitely describable kinds.

    `values` holds the listed integers for Finite (members) and Cofinite (excluded
    members); `threshold` holds k for UpTo ({1..k}) and GeqThreshold ({k, k+1, ...}).
    """

    model_config = ConfigDict(frozen=True)

    kind: ExponentSetKind
    values: tuple[int, ...] = ()
    threshold: int | None = None

    @model_validator(mode="after")
    def _check_shape(self) -> "ExponentSet":
        listed = self.kind in (ExponentSetKind.FINITE, ExponentSetKind.COFINITE)
        bounded = self.kind in (ExponentSetKind.UP_TO, ExponentSetKind.GEQ_THRESHOLD)

        if listed:
            if not self.values:
                raise ValueError(f"{self.kind.value} set needs at least one integer")
            if any(v < 1 for v in self.values):
                raise ValueError("exponents must be positive integers")
            if any(a >= b for a, b in zip(self.values, self.values[1:])):
                raise ValueError("listed exponents must be strictly increasing")
        elif self.values:
            raise ValueError(f"{self.kind.value} set takes no integer list")

        if bounded:
            if self.threshold is None:
                raise ValueError(f"{self.kind.value} set needs a threshold")
            if self.kind == ExponentSetKind.UP_TO and self.threshold < 1:
                raise ValueError("upto threshold must be >= 1")
            if self.kind == ExponentSetKind.GEQ_THRESHOLD and self.threshold < 2:
                raise ValueError("geq threshold must be >= 2 (geq:1 is the set of all exponents)")
        elif self.threshold is not None:
            raise ValueError(f"{self.kind.value} set takes no threshold")
        return self

    @classmethod
    def finite(cls, *values: int) -> "ExponentSet":
        return cls(kind=ExponentSetKind.FINITE, values=tuple(sorted(set(values))))

    @classmethod
    def excluding(cls, *values: int) -> "ExponentSet":
        return cls(kind=ExponentSetKind.COFINITE, values=tuple(sorted(set(values))))

    @classmethod
    def up_to(cls, k: int) -> "ExponentSet":
        return cls(kind=ExponentSetKind.UP_TO, threshold=k)

    @classmethod
    def all_exponents(cls) -> "ExponentSet":
        return cls(kind=ExponentSetKind.ALL)

    @classmethod
    def at_least(cls, k: int) -> "ExponentSet":
        if k == 1:
            return cls.all_exponents()
        return cls(kind=ExponentSetKind.GEQ_THRESHOLD, threshold=k)

    @classmethod
    def squarefree(cls) -> "ExponentSet":
        return cls(kind=ExponentSetKind.SQUAREFREE_EXPONENTS)

    def u(self, n: int) -> int:
        if n < 1:
            raise PreconditionError(f"characteristic function is defined for n >= 1, got {n}", rule="n>=1")

        match self.kind:
            case ExponentSetKind.FINITE:
                return int(n in self.values)
            case ExponentSetKind.COFINITE:
                return int(n not in self.values)
            case ExponentSetKind.UP_TO:
                return int(n <= self.threshold)
            case ExponentSetKind.ALL:
                return 1
            case ExponentSetKind.GEQ_THRESHOLD:
                return int(n >= self.threshold)
            case ExponentSetKind.SQUAREFREE_EXPONENTS:
                return int(is_squarefree(n))

    def contains_one(self) -> bool:
        return self.u(1) == 1

    def stable_from(self) -> int | None:
        """Least n0 with u constant on [n0, oo); None for SquarefreeExponents, which never settles."""
        match self.kind:
            case ExponentSetKind.FINITE | ExponentSetKind.COFINITE:
                return self.values[-1] + 1
            case ExponentSetKind.UP_TO:
                return self.threshold + 1
            case ExponentSetKind.GEQ_THRESHOLD:
                return self.threshold
            case ExponentSetKind.SQUAREFREE_EXPONENTS:
                return None
            case _:
                return 1

    def _breakpoints(self) -> set[int]:
        """Points where u may change; u is constant from each one up to the next."""
        points = {1}
        for v in self.values:
            points.update((v, v + 1))
        if self.threshold is not None:
            points.update((self.threshold, self.threshold + 1))
        return points

    def first_change_index(self) -> int | None:
        """Least i >= 2 with u(i) != u(i-1); None when u never changes (S = All)."""
        match self.kind:
            case ExponentSetKind.FINITE | ExponentSetKind.COFINITE:
                if self.values[0] > 1:
                    return self.values[0]
                return _run_end(self.values) + 1
            case ExponentSetKind.UP_TO:
                return self.threshold + 1
            case ExponentSetKind.GEQ_THRESHOLD:
                return self.threshold
            case ExponentSetKind.SQUAREFREE_EXPONENTS:
                return 4
            case _:
                return None

    def smallest_exponent_above_one(self) -> int | None:
        """s(2) when 1 is in S, in general the least element >= 2; None if there is none."""
        match self.kind:
            case ExponentSetKind.FINITE:
                return next((v for v in self.values if v >= 2), None)
            case ExponentSetKind.COFINITE:
                candidate = 2
                for v in self.values:
                    if v > candidate:
                        break
                    if v == candidate:
                        candidate += 1
                return candidate
            case ExponentSetKind.UP_TO:
                return 2 if self.threshold >= 2 else None
            case ExponentSetKind.GEQ_THRESHOLD:
                return self.threshold
            case _:
                return 2

    def elements(self, bound: int) -> list[int]:
        return [n for n in range(1, bound + 1) if self.u(n)]

    def largest_element(self) -> int | None:
        """None when S is infinite."""
        match self.kind:
            case ExponentSetKind.FINITE:
                return self.values[-1]
            case ExponentSetKind.UP_TO:
                return self.threshold
            case _:
                return None

    def has_elements_above(self, bound: int) -> bool:
        largest = self.largest_element()
        return largest is None or largest > bound

    def indicator_table(self, size: int = EXPONENT_TABLE_SIZE) -> np.ndarray:
        table = np.zeros(size, dtype=bool)
        for e in range(1, size):
            table[e] = bool(self.u(e))
        return table

    def issubset(self, other: "ExponentSet") -> bool:
        squarefree = ExponentSetKind.SQUAREFREE_EXPONENTS
        if self.kind == squarefree:
            match other.kind:
                case ExponentSetKind.SQUAREFREE_EXPONENTS | ExponentSetKind.ALL:
                    return True
                case ExponentSetKind.COFINITE:
                    return not any(is_squarefree(v) for v in other.values)
                case _:
                    return False
        if other.kind == squarefree:
            match self.kind:
                case ExponentSetKind.FINITE:
                    return all(is_squarefree(v) for v in self.values)
                case ExponentSetKind.UP_TO:
                    return self.threshold <= 3
                case _:
                    return False
        # both sides are constant between consecutive breakpoints and beyond the last one
        points = self._breakpoints() | other._breakpoints()
        return all(self.u(n) <= other.u(n) for n in points)

    def __str__(self) -> str:
        return format_exponent_set(self)


class PerPrimeFamily(BaseModel):
    """
    An assignment n -> S_n of exponent sets to the n-th prime p_n.

    rule "prefix" is S_n = {1, ..., n}; rule "list" takes S_1..S_L from `sets`
    and `default` for every n > L.
    """

    model_config = ConfigDict(frozen=True)

    rule: Literal["prefix", "list"]
    sets: tuple[ExponentSet, ...] = ()
    default: ExponentSet | None = None

    @model_validator(mode="after")
    def _check_rule(self) -> "PerPrimeFamily":
        if self.rule == "list":
            if not self.sets:
                raise ValueError("list rule needs at least one set")
            if self.default is None:
                raise ValueError("list rule needs a default tail set")
        elif self.sets or self.default is not None:
            raise ValueError("prefix rule takes no explicit sets")
        return self

    @classmethod
    def prefix(cls) -> "PerPrimeFamily":
        return cls(rule="prefix")

    @classmethod
    def from_list(cls, sets: list[ExponentSet], default: ExponentSet) -> "PerPrimeFamily":
        return cls(rule="list", sets=tuple(sets), default=default)

    @classmethod
    def constant(cls, exponent_set: ExponentSet) -> "PerPrimeFamily":
        return cls(rule="list", sets=(exponent_set,), default=exponent_set)

    def set_for(self, n: int) -> ExponentSet:
        if n < 1:
            raise PreconditionError(f"prime index must be >= 1, got {n}", rule="n>=1")
        if self.rule == "prefix":
            return ExponentSet.up_to(n)
        if n <= len(self.sets):
            return self.sets[n - 1]
        return self.default

    def first_missing_one(self) -> int | None:
        """Index n of the first S_n without 1, or None when every S_n contains 1."""
        if self.rule == "prefix":
            return None
        for n, exponent_set in enumerate(self.sets, start=1):
            if not exponent_set.contains_one():
                return n
        if not self.default.contains_one():
            return len(self.sets) + 1
        return None

    def exponent_mask(self, prime_indices: np.ndarray, exponents: np.ndarray) -> np.ndarray:
        """Vectorized u_n(e) for paired arrays of prime indices n and exponents e."""
        if self.rule == "prefix":
            return exponents <= prime_indices

        table = np.stack([s.indicator_table() for s in (*self.sets, self.default)])
        rows = np.minimum(prime_indices, len(self.sets) + 1) - 1
        return table[rows, exponents]

    def __str__(self) -> str:
        return format_family(self)


def u(exponent_set: ExponentSet, n: int) -> int:
    return exponent_set.u(n)


def family_set(family: PerPrimeFamily, n: int) -> ExponentSet:
    return family.set_for(n)


def _parse_ints(body: str, offset: int, text: str, kind: str) -> list[int]:
    if body == "":
        if kind == "finite":
            raise ExponentSetParseError("empty finite list", offset, text)
        raise ExponentSetParseError("expected a positive integer", offset, text)

    numbers = []
    position = offset
    for item in body.split(","):
        if not item.isascii() or not item.isdigit():
            raise ExponentSetParseError(f"expected a positive integer, found {item!r}", position, text)
        value = int(item)
        if value < 1:
            if kind in ("geq", "upto"):
                raise ExponentSetParseError(f"threshold must be >= 1, found {value}", position, text)
            raise ExponentSetParseError(f"exponents must be positive, found {value}", position, text)
        numbers.append(value)
        position += len(item) + 1
    return numbers


def _parse_set(text: str, offset: int, full_text: str) -> ExponentSet:
    keyword, sep, body = text.partition(":")
    if keyword not in _KEYWORDS:
        raise ExponentSetParseError(f"unknown set kind {keyword!r}", offset, full_text)

    kind = _KEYWORDS[keyword]
    if kind in (ExponentSetKind.ALL, ExponentSetKind.SQUAREFREE_EXPONENTS):
        if sep:
            raise ExponentSetParseError(f"{keyword!r} takes no arguments", offset + len(keyword), full_text)
        return ExponentSet(kind=kind)

    if not sep:
        raise ExponentSetParseError(f"expected ':' after {keyword!r}", offset + len(keyword), full_text)

    body_offset = offset + len(keyword) + 1
    numbers = _parse_ints(body, body_offset, full_text, keyword)

    if kind == ExponentSetKind.FINITE:
        return ExponentSet.finite(*numbers)
    if kind == ExponentSetKind.COFINITE:
        return ExponentSet.excluding(*numbers)

    if len(numbers) != 1:
        raise ExponentSetParseError(f"{keyword!r} takes exactly one integer", body_offset, full_text)
    if kind == ExponentSetKind.UP_TO:
        return ExponentSet.up_to(numbers[0])
    return ExponentSet.at_least(numbers[0])


def parse_exponent_set(text: str) -> ExponentSet:
    """
    Parse the textual form of an exponent set.

    Grammar: finite:ints | exclude:ints | upto:k | all | geq:k | squarefree,
    with ints a comma-separated list of positive base-10 integers.

    Raises:
        ExponentSetParseError: with the 0-based position of the offending character
    """
    return _parse_set(text, 0, text)


def format_exponent_set(exponent_set: ExponentSet) -> str:
    keyword = _KIND_KEYWORDS[exponent_set.kind]
    if exponent_set.values:
        return f"{keyword}:{','.join(str(v) for v in exponent_set.values)}"
    if exponent_set.threshold is not None:
        return f"{keyword}:{exponent_set.threshold}"
    return keyword


_DEFAULT_MARKER = ":default:"


def parse_family(text: str) -> PerPrimeFamily:
    """Parse "prefix" or "list:<set>;<set>...:default:<set>"."""
    if text == "prefix":
        return PerPrimeFamily.prefix()
    if not text.startswith("list:"):
        raise ExponentSetParseError("expected 'prefix' or 'list:'", 0, text)

    body_offset = len("list:")
    body = text[body_offset:]
    marker = body.rfind(_DEFAULT_MARKER)
    if marker < 0:
        raise ExponentSetParseError("list rule needs ':default:<set>'", len(text), text)

    sets = []
    position = body_offset
    for fragment in body[:marker].split(";"):
        sets.append(_parse_set(fragment, position, text))
        position += len(fragment) + 1

    default_offset = body_offset + marker + len(_DEFAULT_MARKER)
    default = _parse_set(text[default_offset:], default_offset, text)
    return PerPrimeFamily.from_list(sets, default)


def format_family(family: PerPrimeFamily) -> str:
    if family.rule == "prefix":
        return "prefix"
    listed = ";".join(format_exponent_set(s) for s in family.sets)
    return f"list:{listed}{_DEFAULT_MARKER}{format_exponent_set(family.default)}"
